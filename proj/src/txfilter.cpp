#include "csdet/txfilter.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "fft_util.hpp"
#include "num_util.hpp"

namespace csdet {

namespace {

// ---------------------------------------------------------------------------
// Nelder-Mead (minimization)
// ---------------------------------------------------------------------------

struct NmResult {
    std::vector<double> x;
    double f = 0.0;
    bool converged = false;
};

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& fn,
                     std::vector<double> x0, double step, int max_iter, double tol) {
    const int dim = static_cast<int>(x0.size());
    std::vector<std::vector<double>> pts(dim + 1, x0);
    std::vector<double> fv(dim + 1);
    for (int i = 0; i < dim; ++i)
        pts[i + 1][i] += (x0[i] != 0.0 ? 0.15 * std::abs(x0[i]) : step);
    for (int i = 0; i <= dim; ++i) fv[i] = fn(pts[i]);

    std::vector<int> order(dim + 1);
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        if (std::abs(fv[order[dim]] - fv[order[0]]) <
            tol * (std::abs(fv[order[0]]) + tol))
            break;

        const int worst = order[dim];
        std::vector<double> centroid(dim, 0.0);
        for (int i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (int d = 0; d < dim; ++d) centroid[d] += pts[i][d];
        }
        for (double& v : centroid) v /= dim;

        auto blend = [&](double t) {
            std::vector<double> p(dim);
            for (int d = 0; d < dim; ++d) p[d] = centroid[d] + t * (pts[worst][d] - centroid[d]);
            return p;
        };

        const std::vector<double> refl = blend(-1.0);
        const double fr = fn(refl);
        if (fr < fv[order[0]]) {
            const std::vector<double> exp_p = blend(-2.0);
            const double fe = fn(exp_p);
            if (fe < fr) {
                pts[worst] = exp_p;
                fv[worst] = fe;
            } else {
                pts[worst] = refl;
                fv[worst] = fr;
            }
        } else if (fr < fv[order[dim - 1]]) {
            pts[worst] = refl;
            fv[worst] = fr;
        } else {
            const std::vector<double> con = blend(fr < fv[worst] ? -0.5 : 0.5);
            const double fc = fn(con);
            if (fc < std::min(fr, fv[worst])) {
                pts[worst] = con;
                fv[worst] = fc;
            } else {
                for (int i = 0; i <= dim; ++i) {
                    if (i == order[0]) continue;
                    for (int d = 0; d < dim; ++d)
                        pts[i][d] = pts[order[0]][d] + 0.5 * (pts[i][d] - pts[order[0]][d]);
                    fv[i] = fn(pts[i]);
                }
            }
        }
    }
    int best = 0;
    for (int i = 1; i <= dim; ++i)
        if (fv[i] < fv[best]) best = i;
    return NmResult{pts[best], fv[best], iter < max_iter};
}

// ---------------------------------------------------------------------------
// Spectrum family
// ---------------------------------------------------------------------------

std::vector<cplx> params_to_a(std::span<const double> p, bool complex_ch, int l) {
    std::vector<cplx> a(l + 1);
    if (!complex_ch) {
        for (int i = 0; i <= l; ++i) a[i] = cplx(p[i], 0.0);
    } else {
        a[0] = cplx(p[0], 0.0);
        for (int i = 1; i <= l; ++i) a[i] = cplx(p[2 * i - 1], p[2 * i]);
    }
    return a;
}

struct FamilyEval {
    std::vector<double> psq;
    double min_sa = 0.0;
    double power_raw = 0.0;
    bool feasible = false;
};

// target_power <= 0 leaves the raw family spectrum unnormalized.
FamilyEval eval_family(std::span<const cplx> a, std::span<const double> h2, double n0,
                       double target_power) {
    const int n = static_cast<int>(h2.size());
    const int l = static_cast<int>(a.size()) - 1;
    FamilyEval fe;
    fe.psq.assign(n, 0.0);
    fe.min_sa = 1e300;
    double pw = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = -kPi + 2.0 * kPi * i / n;
        double sa = a[0].real();
        for (int q = 1; q <= l; ++q)
            sa += 2.0 * std::real(a[q] * std::polar(1.0, w * q));
        fe.min_sa = std::min(fe.min_sa, sa);
        if (h2[i] <= 0.0) continue;
        const double v =
            n0 / std::sqrt(h2[i]) * std::sqrt(std::max(sa, 0.0)) - n0 / h2[i];
        fe.psq[i] = std::max(0.0, v);
        pw += fe.psq[i];
    }
    fe.power_raw = pw / n;
    if (fe.power_raw < 1e-12) return fe;
    if (target_power > 0.0) {
        const double s = target_power / fe.power_raw;
        for (auto& v : fe.psq) v *= s;
    }
    fe.feasible = true;
    return fe;
}

}  // namespace

double cs_objective(std::span<const double> psq, std::span<const double> h2, double n0, int l) {
    const int n = static_cast<int>(h2.size());
    std::vector<double> vsq(n);
    for (int i = 0; i < n; ++i) vsq[i] = psq[i] * h2[i];
    return cs_core_from_b(cs_b_taps(vsq, n0, l)).i_opt;
}

TransmitFilterSpec optimize_transmit_filter(std::span<const double> h2, double n0, int l,
                                            int multistart, std::uint64_t seed,
                                            double target_power) {
    const int n = static_cast<int>(h2.size());
    if (l + 1 > 8) throw std::invalid_argument("optimize_transmit_filter: L+1 > 8");
    double h2max = 0.0;
    for (double v : h2) h2max = std::max(h2max, v);
    if (h2max <= 0.0) throw std::invalid_argument("optimize_transmit_filter: zero channel");

    TransmitFilterSpec spec;
    if (target_power <= 1e-9) {  // switched-off branch (MIMO power allocation)
        spec.a_coef.assign(l + 1, cplx(0.0, 0.0));
        spec.psq.assign(n, 0.0);
        spec.power = 0.0;
        spec.objective = 0.0;
        return spec;
    }

    bool complex_ch = false;
    for (int i = 0; i < n; ++i)
        if (std::abs(h2[i] - h2[(n - i) % n]) > 1e-9 * h2max) complex_ch = true;
    const int dim = complex_ch ? 2 * l + 1 : l + 1;

    // Power handled as an equality penalty on the raw family (the normalized
    // surrogate is flat along a reparametrization manifold and loses the
    // coefficient identifiability); S_A >= 0 kept as a soft constraint.
    auto objective = [&](const std::vector<double>& p) -> double {  // minimized
        const std::vector<cplx> a = params_to_a(p, complex_ch, l);
        const FamilyEval fe = eval_family(a, h2, n0, -1.0);
        if (fe.power_raw < 1e-9) return 1e6;
        double obj;
        try {
            obj = cs_objective(fe.psq, h2, n0, l);
        } catch (const std::exception&) {
            return 1e6;
        }
        const double pw_rel = fe.power_raw / target_power - 1.0;
        double pen = 1e5 * pw_rel * pw_rel;
        if (fe.min_sa < 0.0) {
            const double rel = -fe.min_sa / (std::abs(a[0].real()) + 1e-9);
            pen += 1e3 * rel * rel;
        }
        return -obj + pen;
    };

    // A-space fit of an arbitrary positive spectrum: S_A such that the family
    // reproduces it on the grid, truncated to L lags.
    auto fit_start = [&](const std::vector<double>& psq_target) {
        const double floor_h2 = 1e-3 * h2max;
        std::vector<double> sa(n);
        for (int i = 0; i < n; ++i) {
            const double h2c = std::max(h2[i], floor_h2);
            const double root = psq_target[i] * std::sqrt(h2c) / n0 + 1.0 / std::sqrt(h2c);
            sa[i] = root * root;
        }
        std::vector<double> p(dim, 0.0);
        for (int q = 0; q <= l; ++q) {
            cplx acc(0.0, 0.0);
            for (int i = 0; i < n; ++i) {
                const double w = -kPi + 2.0 * kPi * i / n;
                acc += sa[i] * std::polar(1.0, w * q);
            }
            acc /= static_cast<double>(n);
            if (!complex_ch) {
                p[q] = acc.real();
            } else if (q == 0) {
                p[0] = acc.real();
            } else {
                p[2 * q - 1] = acc.real();
                p[2 * q] = acc.imag();
            }
        }
        return p;
    };

    std::vector<std::vector<double>> starts;
    starts.push_back(fit_start(std::vector<double>(n, target_power)));
    const WaterfillingSpec wf = waterfilling(h2, n0, target_power);
    starts.push_back(fit_start(wf.psq));
    SeededRng rng(seed);
    while (static_cast<int>(starts.size()) < std::max(multistart, 2)) {
        std::vector<double> p = starts[0];
        for (auto& v : p) v *= 1.0 + 0.4 * rng.gaussian();
        starts.push_back(std::move(p));
    }

    NmResult best;
    best.f = 1e300;
    for (const auto& s0 : starts) {
        const NmResult r = nelder_mead(objective, s0, 1.0, 500 * dim, 1e-12);
        if (r.f < best.f) best = r;
    }

    std::vector<cplx> a = params_to_a(best.x, complex_ch, l);
    if (eval_family(a, h2, n0, -1.0).power_raw < 1e-12)
        throw std::runtime_error("optimize_transmit_filter: all starts infeasible");

    // Exact power feasibility: bisect a coefficient scale (power is monotone
    // in it); the penalty solution is already within ~1e-5 so the shift is
    // negligible.
    {
        auto power_of = [&](double kappa) {
            std::vector<cplx> ak = a;
            for (auto& v : ak) v *= kappa;
            return eval_family(ak, h2, n0, -1.0).power_raw;
        };
        double lo = 0.5, hi = 2.0;
        while (power_of(lo) > target_power) lo *= 0.5;
        while (power_of(hi) < target_power) hi *= 2.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (power_of(mid) < target_power ? lo : hi) = mid;
        }
        const double kappa = 0.5 * (lo + hi);
        for (auto& v : a) v *= kappa;
    }

    const FamilyEval fe = eval_family(a, h2, n0, -1.0);
    spec.a_coef = std::move(a);
    spec.psq = fe.psq;
    spec.power = fe.power_raw;
    spec.power_residual = std::abs(spec.power - target_power);
    spec.objective = cs_objective(spec.psq, h2, n0, l);
    spec.converged = best.converged;
    spec.min_sa = fe.min_sa;
    return spec;
}

// ---------------------------------------------------------------------------
// Waterfilling
// ---------------------------------------------------------------------------

WaterfillingSpec waterfilling(std::span<const double> h2, double n0, double total_power) {
    if (total_power <= 0.0) throw std::invalid_argument("waterfilling: power must be positive");
    const int n = static_cast<int>(h2.size());
    auto power_at = [&](double theta) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            if (h2[i] <= 0.0) continue;
            acc += std::max(0.0, theta - n0 / h2[i]);
        }
        return acc / n;
    };
    double lo = 0.0, hi = total_power + n0;
    while (power_at(hi) < total_power) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (power_at(mid) < total_power ? lo : hi) = mid;
    }
    WaterfillingSpec spec;
    spec.theta = 0.5 * (lo + hi);
    spec.psq.resize(n, 0.0);
    double cap = 0.0;
    for (int i = 0; i < n; ++i) {
        if (h2[i] > 0.0) spec.psq[i] = std::max(0.0, spec.theta - n0 / h2[i]);
        cap += std::log2(1.0 + spec.psq[i] * h2[i] / n0);
    }
    spec.capacity = cap / n;
    return spec;
}

CombinedMemory combined_memory(const ChannelTaps& h, const ChannelTaps& p) {
    CombinedMemory cm;
    cm.v = make_channel_taps(convolve(h.h, p.h), 1e-6);
    cm.nu_c = cm.v.memory();
    cm.at_least_channel_memory = cm.nu_c >= h.memory();
    return cm;
}

// ---------------------------------------------------------------------------
// MIMO precoders
// ---------------------------------------------------------------------------

MimoPrecoderResult mimo_precoders(const std::vector<Eigen::MatrixXcd>& h_taps, double n0, int l,
                                  int n_omega, int multistart, std::uint64_t seed) {
    const int k = static_cast<int>(h_taps[0].rows());
    if (k > 4) throw std::invalid_argument("mimo_precoders: K > 4 not supported");

    MimoPrecoderResult res;
    res.sigma2.assign(k, std::vector<double>(n_omega, 0.0));
    res.u_bank.resize(n_omega);
    res.v_bank.resize(n_omega);
    const std::vector<Eigen::MatrixXcd> hw = block_dtft_causal(h_taps, n_omega);
    double sv_gap = 1e300, sv_max = 0.0;
    for (int i = 0; i < n_omega; ++i) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(hw[i],
                                               Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::MatrixXcd u = svd.matrixU(), v = svd.matrixV();
        const Eigen::VectorXd s = svd.singularValues();
        for (int c = 0; c < k; ++c) {
            int row = 0;
            while (row < k - 1 && std::abs(v(row, c)) < 1e-12) ++row;
            const cplx ph = std::polar(1.0, -std::arg(v(row, c)));
            v.col(c) *= ph;
            u.col(c) *= ph;
        }
        res.u_bank[i] = u;
        res.v_bank[i] = v;
        for (int c = 0; c < k; ++c) res.sigma2[c][i] = s(c) * s(c);
        for (int c = 0; c + 1 < k; ++c) sv_gap = std::min(sv_gap, s(c) - s(c + 1));
        sv_max = std::max(sv_max, s(0));
    }
    res.branch_crossing = k > 1 && sv_gap < 1e-6 * sv_max;

    auto branch_obj = [&](int c, double power) -> double {
        if (power <= 1e-9) return 0.0;
        return optimize_transmit_filter(res.sigma2[c], n0, l, std::max(2, multistart), seed + c,
                                        power)
            .objective;
    };

    res.branch_power.assign(k, static_cast<double>(k) / k);
    if (k == 2) {
        // Golden-section on the single split parameter.
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = 0.0, b = 2.0;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        auto f = [&](double rho) { return branch_obj(0, rho) + branch_obj(1, 2.0 - rho); };
        double f1 = f(x1), f2 = f(x2);
        for (int it = 0; it < 24; ++it) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = f(x1);
            }
        }
        const double rho = 0.5 * (a + b);
        res.branch_power = {rho, 2.0 - rho};
    } else if (k > 2) {
        // Pairwise rebalancing passes.
        for (int round = 0; round < 2; ++round) {
            for (int i = 0; i < k; ++i) {
                for (int j = i + 1; j < k; ++j) {
                    const double tot = res.branch_power[i] + res.branch_power[j];
                    double best_rho = res.branch_power[i], best_val = -1e300;
                    for (int s = 0; s <= 8; ++s) {
                        const double rho = tot * s / 8.0;
                        const double val = branch_obj(i, rho) + branch_obj(j, tot - rho);
                        if (val > best_val) {
                            best_val = val;
                            best_rho = rho;
                        }
                    }
                    res.branch_power[i] = best_rho;
                    res.branch_power[j] = tot - best_rho;
                }
            }
        }
    }

    res.sum_objective = 0.0;
    for (int c = 0; c < k; ++c) {
        if (res.branch_power[c] <= 1e-9) {
            TransmitFilterSpec off;
            off.a_coef.assign(l + 1, cplx(0.0, 0.0));
            off.psq.assign(n_omega, 0.0);
            res.branches.push_back(std::move(off));
            continue;
        }
        res.branches.push_back(optimize_transmit_filter(res.sigma2[c], n0, l,
                                                        std::max(2, multistart), seed + c,
                                                        res.branch_power[c]));
        res.sum_objective += res.branches.back().objective;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Pulse realization
// ---------------------------------------------------------------------------

RealizedPulse realize_pulse(std::span<const double> psq, double wt, int span_symbols,
                            int eta_s) {
    const int n = static_cast<int>(psq.size());
    const double edge = 2.0 * kPi * wt;  // |omega| <= 2 pi W T
    if (edge > kPi * (1.0 + 1e-12))
        throw std::invalid_argument("realize_pulse: 2WT > 1 needs no band limiting beyond pi");

    // Amplitude spectrum on a fine zero-phase grid, then IFFT and taper.
    int nt = 1;
    while (nt < 4 * span_symbols * eta_s) nt *= 2;
    std::vector<cplx> spec(nt, cplx(0.0, 0.0));
    auto target_at = [&](double w) -> double {  // linear interp of psq at omega
        if (std::abs(w) > edge * (1.0 + 1e-12)) return 0.0;
        double x = (w + kPi) / (2.0 * kPi) * n;
        x = std::clamp(x, 0.0, static_cast<double>(n) - 1e-9);
        const int i0 = static_cast<int>(x);
        const int i1 = std::min(i0 + 1, n - 1);
        const double u = x - i0;
        return (1.0 - u) * psq[i0] + u * psq[i1];
    };
    for (int m = 0; m < nt; ++m) {
        // FFT bin m <-> normalized frequency f m/nt in [-1/2, 1/2) cycles/sample.
        const double fn = (m < nt / 2 ? m : m - nt) / static_cast<double>(nt);
        const double w_sym = 2.0 * kPi * fn * eta_s;  // omega at symbol rate
        if (std::abs(w_sym) <= kPi)
            spec[m] = std::sqrt(std::max(0.0, target_at(w_sym)));
    }
    detail::fft_inplace(spec, true);

    PulseSamples p;
    p.eta_s = eta_s;
    p.T = 1.0;
    const int half = span_symbols * eta_s / 2;
    p.origin = half;
    p.samples.resize(2 * half + 1);
    for (int i = -half; i <= half; ++i) {
        const int src = (i % nt + nt) % nt;
        p.samples[i + half] =
            spec[src] * detail::kaiser(static_cast<double>(i) / (half + 1), 6.0);
    }
    p = normalize_energy(std::move(p));

    RealizedPulse out;
    out.pulse = p;

    // Folded achieved spectrum vs normalized target over the inner passband.
    const AutocorrTaps ga = ungerboeck_from_pulse(p, 1.0);
    const SpectrumSamples va = dtft(ga, n);
    double tmean = 0.0;
    for (double v : psq) tmean += v;
    tmean /= n;
    double err = 0.0;
    bool vest = true;
    for (int i = 0; i < n; ++i) {
        const double w = -kPi + 2.0 * kPi * i / n;
        if (std::abs(w) <= 0.9 * edge)
            err = std::max(err, std::abs(va.v[i].real() - psq[i] / tmean));
        if (wt >= 0.5 && std::abs(va.v[i].real() - 1.0) > 0.05) vest = false;
    }
    out.linf_error = err;
    out.vestigial_ok = vest;
    return out;
}

}  // namespace csdet
