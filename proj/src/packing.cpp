#include "csdet/packing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csdet {

// ---------------------------------------------------------------------------
// Cubic spline
// ---------------------------------------------------------------------------

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    if (n < 2 || y_.size() != x_.size())
        throw std::invalid_argument("CubicSpline: need >= 2 matching knots");
    for (int i = 1; i < n; ++i)
        if (x_[i] <= x_[i - 1]) throw std::invalid_argument("CubicSpline: x not increasing");
    m_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    for (int i = 1; i < n - 1; ++i) {
        const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        a[i] = h0;
        b[i] = 2.0 * (h0 + h1);
        c[i] = h1;
        d[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (int i = 2; i < n - 1; ++i) {
        const double f = a[i] / b[i - 1];
        b[i] -= f * c[i - 1];
        d[i] -= f * d[i - 1];
    }
    for (int i = n - 2; i >= 1; --i) m_[i] = (d[i] - c[i] * (i + 1 < n - 1 ? m_[i + 1] : 0.0)) / b[i];
}

double CubicSpline::operator()(double x) const {
    const int n = static_cast<int>(x_.size());
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    int i = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    i = std::clamp(i, 0, n - 2);
    const double h = x_[i + 1] - x_[i];
    const double t = x - x_[i];
    const double u = x_[i + 1] - x;
    return (m_[i] * u * u * u + m_[i + 1] * t * t * t) / (6.0 * h) +
           (y_[i] / h - m_[i] * h / 6.0) * u + (y_[i + 1] / h - m_[i + 1] * h / 6.0) * t;
}

// ---------------------------------------------------------------------------
// Fixed point
// ---------------------------------------------------------------------------

FixedPointResult ebn0_fixed_point(const std::function<double(double)>& i_of_esn0, double lo,
                                  double hi, double ebn0_linear) {
    FixedPointResult res;
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    auto f = [&](double x) { return x - i_of_esn0(x) * ebn0_linear; };

    double x = std::clamp(i_of_esn0(hi) * ebn0_linear, lo, hi);
    const double tol_db = 1e-6;
    for (int it = 0; it < 200; ++it) {
        const double target = i_of_esn0(x) * ebn0_linear;
        const double next = std::clamp(0.5 * x + 0.5 * target, lo, hi);
        ++res.iterations;
        if (next > 0.0 && x > 0.0 &&
            std::abs(10.0 * std::log10(next / x)) < tol_db) {
            // Converged only if it is a genuine interior fixed point.
            if (std::abs(f(next)) <= 1e-9 * std::max(1.0, next) ||
                (next > lo * (1.0 + 1e-12) && next < hi * (1.0 - 1e-12))) {
                res.esn0 = next;
                res.i_r = i_of_esn0(next);
                res.ok = true;
                return res;
            }
        }
        x = next;
    }
    // Bisection fallback on f over [lo, hi].
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa * fb > 0.0) {
        res.ok = false;
        return res;
    }
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = f(mid);
        if (fa * fm <= 0.0) {
            b = mid;
            fb = fm;
        } else {
            a = mid;
            fa = fm;
        }
    }
    res.esn0 = 0.5 * (a + b);
    res.i_r = i_of_esn0(res.esn0);
    res.ok = true;
    return res;
}

// ---------------------------------------------------------------------------
// MMSE equalizer
// ---------------------------------------------------------------------------

MmseEqualizer design_mmse_equalizer(const AutocorrTaps& g, double n0, int n_taps) {
    if (n_taps < 1 || n_taps > 22)
        throw std::invalid_argument("design_mmse_equalizer: tap budget must be 1..22");
    const int nu = g.memory();

    // rho_d = sum_i g_i conj(g_{i-d}) : signal part of the MF-output covariance.
    auto rho = [&](int d) {
        cplx acc(0.0, 0.0);
        for (int i = -nu; i <= nu; ++i) acc += g.at(i) * std::conj(g.at(i - d));
        return acc;
    };

    MmseEqualizer best;
    best.mse = 1e300;
    for (int delay = -nu; delay <= n_taps + nu; ++delay) {
        Eigen::MatrixXcd r(n_taps, n_taps);
        for (int j = 0; j < n_taps; ++j)
            for (int m = 0; m < n_taps; ++m) r(j, m) = rho(j - m) + n0 * g.at(j - m);
        Eigen::VectorXcd p(n_taps);
        for (int j = 0; j < n_taps; ++j) p(j) = std::conj(g.at(delay - j));
        const Eigen::LDLT<Eigen::MatrixXcd> ldlt(r);
        if (ldlt.info() != Eigen::Success) continue;
        const Eigen::VectorXcd a = ldlt.solve(p);
        const double mse = 1.0 - std::real(p.dot(a));
        if (mse < best.mse) {
            best.mse = mse;
            best.delay = delay;
            best.taps.assign(n_taps, cplx(0.0, 0.0));
            for (int m = 0; m < n_taps; ++m) best.taps[m] = a(m);
            best.min_lag = -delay;
        }
    }
    if (best.mse > 1e200) throw std::runtime_error("design_mmse_equalizer: singular covariance");
    return best;
}

// ---------------------------------------------------------------------------
// Packing grid
// ---------------------------------------------------------------------------

namespace {

PulseSamples scale_bandwidth(const PulseSamples& p, double w) {
    if (w == 1.0) return p;
    // Bandwidth times w <=> time axis compressed by w.
    PulseSamples out = p;
    for (size_t i = 0; i < out.samples.size(); ++i) {
        const double t = (static_cast<int>(i) - out.origin) * out.dt();
        out.samples[i] = p.at_time(t * w);
    }
    return normalize_energy(std::move(out));
}

bool taps_real(const AutocorrTaps& g) {
    double mx = 0.0, im = 0.0;
    for (const auto& v : g.g) {
        mx = std::max(mx, std::abs(v));
        im = std::max(im, std::abs(v.imag()));
    }
    return im <= 1e-9 * std::max(mx, 1e-300);
}

}  // namespace

PackingPoint evaluate_packing_point(const PackingConfig& cfg, double tau, double nuf, double w) {
    if (tau <= 0.0 || nuf <= 0.0) throw std::invalid_argument("packing: tau, nu_f must be > 0");
    PackingPoint pt;
    pt.tau = tau;
    pt.nuf = nuf;
    pt.w = w;

    const PulseSamples pulse = scale_bandwidth(cfg.pulse, w);
    const AutocorrTaps g = ungerboeck_from_pulse(pulse, tau);
    const double g0 = g.g[0].real();
    const double ft = tau * nuf;

    const bool trellis = cfg.detector == DetectorKind::TrellisForney ||
                         cfg.detector == DetectorKind::TrellisUngerboeck ||
                         cfg.detector == DetectorKind::TrellisCs;

    MmseEqualizer eq;
    std::vector<cplx> eq_taps;
    int eq_min_lag = 0;

    for (size_t si = 0; si < cfg.esn0_db.size(); ++si) {
        const double esn0 = std::pow(10.0, cfg.esn0_db[si] / 10.0);
        const double n0 = g0 / esn0;  // Es = g_0 with a unit-energy pulse

        if (cfg.detector == DetectorKind::SbsMmse) {
            eq = design_mmse_equalizer(g, n0, cfg.mmse_taps);
            eq_taps = eq.taps;
            eq_min_lag = eq.min_lag;
        }
        const InterferenceBudget bud =
            interference_budget(pulse, tau, nuf, cfg.j_carriers, cfg.detector, cfg.l, g0,
                                eq_taps, eq_min_lag);
        pt.n_i = bud.n_i;

        AirEstimate est;
        if (trellis) {
            const bool rails = cfg.qpsk_gray_rails;
            if (rails) {
                if (cfg.constellation.kind != ConstellationKind::QPSK)
                    throw std::invalid_argument("packing: gray rails need QPSK");
                if (!taps_real(g))
                    throw std::invalid_argument("packing: gray rails need a real channel");
            }
            const double m_states =
                std::pow(rails ? 2.0 : cfg.constellation.cardinality(), cfg.l);
            if (m_states > static_cast<double>(cfg.max_states))
                throw std::invalid_argument("packing: trellis state cap exceeded");

            // Rail split: BPSK +-1 over h/sqrt(2), noise N0/2 per rail.
            const double chan_scale = rails ? 0.5 : 1.0;  // applies to g
            const double n0_eff = (n0 * chan_scale + bud.cross_power * chan_scale) *
                                  cfg.ni_scale;
            AutocorrTaps g_used;
            g_used.g = g.g;
            if (rails)
                for (auto& v : g_used.g) v *= chan_scale;

            DetectionLaw law = truncation_baseline(g_used, n0_eff, cfg.l);
            Observable obs_kind = Observable::Ungerboeck;
            ChannelTaps h_used = bud.whitened;
            if (rails)
                for (auto& v : h_used.h) v /= std::sqrt(2.0);

            if (cfg.detector == DetectorKind::TrellisCs) {
                const SpectrumSamples gs = dtft(g_used, kDefaultGrid);
                std::vector<double> vsq(gs.size());
                for (int i = 0; i < gs.size(); ++i) vsq[i] = std::max(0.0, gs.v[i].real());
                law = design_scalar_cs_psd(vsq, n0_eff, cfg.l).law(Observable::Ungerboeck);
            } else if (cfg.detector == DetectorKind::TrellisForney) {
                law = truncation_baseline_forney(h_used, n0_eff, cfg.l);
                obs_kind = Observable::Forney;
            }

            const Constellation used_const =
                rails ? make_constellation(ConstellationKind::BPSK) : cfg.constellation;
            const double n0_rail = rails ? 0.5 * n0 : n0;

            TrellisChannel ch;
            ch.constellation = used_const;
            if (obs_kind == Observable::Forney) {
                const ForneyModel fm{h_used, n0_rail};
                ch.simulate = [fm](std::span<const cplx> c, SeededRng& rng) {
                    return simulate_forney(fm, c, rng, 0);
                };
            } else {
                UngerboeckModel um;
                um.g = g_used;
                um.n0 = n0_rail;
                um.factor = h_used;
                ch.simulate = [um](std::span<const cplx> c, SeededRng& rng) {
                    return simulate_ungerboeck(um, c, rng);
                };
            }
            est = mc_air_trellis(ch, law, cfg.n_per_point, cfg.blocks,
                                 cfg.seed + 977 * si, 1);
            if (rails) {
                est.value *= 2.0;
                est.std_err *= 2.0;
            }
        } else {
            // Symbol-by-symbol detectors.
            SbsAux aux;
            aux.es = 1.0;
            const int lag0 = -bud.own_min_lag;
            aux.h00 = bud.own_taps[lag0];
            aux.variance = (n0 + bud.n_i) * cfg.ni_scale;

            SbsChannel ch;
            ch.constellation = cfg.constellation;
            const double n0c = n0;
            const DetectorKind kind = cfg.detector;
            const AutocorrTaps g_c = g;
            const ChannelTaps wh = bud.whitened;
            const double g0c = g0;
            const Constellation cst = cfg.constellation;
            ch.simulate = [=](long n, SeededRng& rng, std::vector<int>& idx,
                              std::vector<cplx>& r) {
                idx = random_symbols(cst, n, rng);
                const std::vector<cplx> c = map_symbols(cst, idx);
                if (kind == DetectorKind::SbsWf) {
                    const SimOut out = simulate_forney(ForneyModel{wh, n0c}, c, rng, 0);
                    r.assign(out.r.begin(), out.r.begin() + n);
                } else {
                    UngerboeckModel um;
                    um.g = g_c;
                    um.n0 = n0c;
                    um.factor = wh;
                    const SimOut out = simulate_ungerboeck(um, c, rng);
                    if (kind == DetectorKind::SbsMf) {
                        const double s = 1.0 / std::sqrt(g0c);
                        r.resize(n);
                        for (long i = 0; i < n; ++i) r[i] = out.r[i] * s;
                    } else {  // SbsMmse: equalize the MF record
                        double nv = 0.0;
                        for (size_t a2 = 0; a2 < eq_taps.size(); ++a2)
                            for (size_t b2 = 0; b2 < eq_taps.size(); ++b2)
                                nv += std::real(std::conj(eq_taps[a2]) * eq_taps[b2] *
                                                g_c.at(static_cast<int>(a2) -
                                                       static_cast<int>(b2)));
                        const double s = 1.0 / std::sqrt(std::max(nv, 1e-300));
                        const SimOut f = filter_observation(
                            out, eq_taps, eq_min_lag, 0, static_cast<int>(n));
                        r.resize(n);
                        for (long i = 0; i < n; ++i) r[i] = f.r[i] * s;
                    }
                }
            };
            est = sbs_air(ch, aux, cfg.n_per_point, cfg.blocks, cfg.seed + 977 * si);
        }
        pt.air.push_back(est);
        pt.eta.push_back(est.value / ft);
    }
    return pt;
}

PackingGridResult optimize_ase(const PackingConfig& cfg) {
    if (cfg.tau_grid.empty() || cfg.nuf_grid.empty() || cfg.esn0_db.empty())
        throw std::invalid_argument("optimize_ase: empty grid");
    PackingGridResult res;
    const std::vector<double> wg = cfg.w_grid.empty() ? std::vector<double>{1.0} : cfg.w_grid;

    long spent = 0;
    for (double w : wg) {
        for (double tau : cfg.tau_grid) {
            for (double nuf : cfg.nuf_grid) {
                const long cost =
                    cfg.n_per_point * cfg.blocks * static_cast<long>(cfg.esn0_db.size());
                if (cfg.mc_budget > 0 && spent + cost > cfg.mc_budget) {
                    res.budget_exceeded = true;
                    break;
                }
                spent += cost;
                res.points.push_back(evaluate_packing_point(cfg, tau, nuf, w));
            }
            if (res.budget_exceeded) break;
        }
        if (res.budget_exceeded) break;
    }

    for (double ebn0_db : cfg.ebn0_db) {
        const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
        PackingSummary sum;
        sum.ebn0_db = ebn0_db;
        for (const auto& pt : res.points) {
            std::vector<double> xs, ys;
            for (size_t i = 0; i < cfg.esn0_db.size(); ++i) {
                xs.push_back(std::pow(10.0, cfg.esn0_db[i] / 10.0));
                ys.push_back(std::max(0.0, pt.air[i].value));
            }
            if (xs.size() < 2) continue;
            const CubicSpline spline(xs, ys);
            const FixedPointResult fp = ebn0_fixed_point(
                [&](double x) { return std::max(0.0, spline(x)); }, xs.front(), xs.back(),
                ebn0);
            if (!fp.ok) continue;
            const double eta = fp.i_r / (pt.tau * pt.nuf);
            if (!sum.ok || eta > sum.eta_max) {
                sum.ok = true;
                sum.eta_max = eta;
                sum.tau_opt = pt.tau;
                sum.nuf_opt = pt.nuf;
                sum.w_opt = pt.w;
                sum.esn0_db_opt = 10.0 * std::log10(fp.esn0);
                sum.air_opt = fp.i_r;
            }
        }
        res.summary.push_back(sum);
    }
    return res;
}

}  // namespace csdet
