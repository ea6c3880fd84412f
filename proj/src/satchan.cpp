#include "csdet/satchan.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "num_util.hpp"

namespace csdet {

cplx SalehHpa::apply(cplx x) const {
    const double rho = std::abs(x);
    if (rho == 0.0) return cplx(0.0, 0.0);
    const double a = amam(rho);
    const double ph = std::arg(x) + ampm(rho);
    return std::polar(a, ph);
}

// ---------------------------------------------------------------------------
// Transponder
// ---------------------------------------------------------------------------

namespace {

// Windowed-sinc lowpass, unity DC gain, origin at the center tap.
std::vector<cplx> lowpass_fir(double cutoff_per_sample, int half) {
    std::vector<cplx> h(2 * half + 1);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        const double x = 2.0 * cutoff_per_sample * i;
        const double sinc = i == 0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
        const double v =
            2.0 * cutoff_per_sample * sinc * detail::kaiser(static_cast<double>(i) / (half + 1), 6.0);
        h[i + half] = v;
        sum += v;
    }
    for (auto& v : h) v /= sum;
    return h;
}

double fir_mag_at(const std::vector<cplx>& h, int origin, double f_per_sample) {
    cplx acc(0.0, 0.0);
    for (size_t i = 0; i < h.size(); ++i)
        acc += h[i] * std::polar(1.0, -2.0 * kPi * f_per_sample * (static_cast<int>(i) - origin));
    return std::abs(acc);
}

// Cutoff calibrated so the realized |H| crosses 1/sqrt(2) at the target.
std::vector<cplx> bandwidth_calibrated_fir(double bw_3db, int eta_s, int* origin) {
    const int half = 6 * eta_s;
    const double f3 = 0.5 * bw_3db / eta_s;  // one-sided, cycles per sample
    double lo = 0.5 * f3, hi = std::min(0.499, 3.0 * f3);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const std::vector<cplx> h = lowpass_fir(mid, half);
        (fir_mag_at(h, half, f3) < 1.0 / std::sqrt(2.0) ? lo : hi) = mid;
    }
    *origin = half;
    return lowpass_fir(0.5 * (lo + hi), half);
}

std::vector<cplx> filter_centered(std::span<const cplx> x, const std::vector<cplx>& h,
                                  int origin) {
    std::vector<cplx> y(x.size(), cplx(0.0, 0.0));
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(h.size());
    for (int k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (int j = 0; j < m; ++j) {
            const int src = k - (j - origin);
            if (src >= 0 && src < n) acc += h[j] * x[src];
        }
        y[k] = acc;
    }
    return y;
}

}  // namespace

TransponderSpec make_transponder(int eta_s, double imux_3db_bw, double omux_3db_bw,
                                 const SalehHpa& hpa, double ibo_db) {
    if (eta_s < 8) throw std::invalid_argument("make_transponder: need eta_s >= 8");
    TransponderSpec spec;
    spec.eta_s = eta_s;
    spec.hpa = hpa;
    spec.ibo_db = ibo_db;
    spec.imux = bandwidth_calibrated_fir(imux_3db_bw, eta_s, &spec.imux_origin);
    spec.omux = bandwidth_calibrated_fir(omux_3db_bw, eta_s, &spec.omux_origin);
    return spec;
}

TransponderOut simulate_transponder(std::span<const cplx> x, const TransponderSpec& spec) {
    for (const auto& v : x)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("simulate_transponder: non-finite input sample");

    std::vector<cplx> y = spec.bypass_filters
                              ? std::vector<cplx>(x.begin(), x.end())
                              : filter_centered(x, spec.imux, spec.imux_origin);

    TransponderOut out;
    if (spec.bypass_hpa) {
        out.drive_scale = 1.0;
    } else {
        double scale = spec.drive_scale;
        if (scale <= 0.0) {
            double pin = 0.0;
            for (const auto& v : y) pin += std::norm(v);
            pin /= static_cast<double>(y.size());
            const double target =
                (1.0 / spec.hpa.beta_a) * std::pow(10.0, -spec.ibo_db / 10.0);
            scale = std::sqrt(target / std::max(pin, 1e-300));
        }
        out.drive_scale = scale;
        for (auto& v : y) v = spec.hpa.apply(v * scale);
    }

    out.s = spec.bypass_filters ? std::move(y) : filter_centered(y, spec.omux, spec.omux_origin);

    double pout = 0.0;
    for (const auto& v : out.s) pout += std::norm(v);
    pout /= static_cast<double>(out.s.size());
    out.obo_db = 10.0 * std::log10(spec.hpa.sat_power() / std::max(pout, 1e-300));
    return out;
}

std::vector<cplx> modulate_waveform(std::span<const cplx> c, const PulseSamples& pulse) {
    const int n = static_cast<int>(c.size());
    const int plen = static_cast<int>(pulse.samples.size());
    const int len = (n - 1) * pulse.eta_s + plen;
    std::vector<cplx> x(len, cplx(0.0, 0.0));
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < plen; ++j) x[k * pulse.eta_s + j] += c[k] * pulse.samples[j];
    return x;  // sample m sits at t = (m - pulse.origin) * dt
}

// ---------------------------------------------------------------------------
// Volterra fit
// ---------------------------------------------------------------------------

VolterraModel fit_volterra(const TransponderSpec& spec, const PulseSamples& tx_pulse,
                           const Constellation& probe, int v, long n_symbols,
                           std::uint64_t seed, int kernel_half_symbols, double ridge) {
    if (v < 1 || v % 2 == 0) throw std::invalid_argument("fit_volterra: order must be odd");
    const int nv = (v + 1) / 2;
    const int eta = spec.eta_s;
    if (tx_pulse.eta_s != eta)
        throw std::invalid_argument("fit_volterra: pulse oversampling mismatch");

    SeededRng rng(seed);
    const std::vector<int> idx = random_symbols(probe, n_symbols, rng);
    const std::vector<cplx> c = map_symbols(probe, idx);
    const std::vector<cplx> x = modulate_waveform(c, tx_pulse);
    const TransponderOut tout = simulate_transponder(x, spec);

    // Virtual streams c_k |c_k|^{2i}.
    std::vector<std::vector<cplx>> streams(nv, std::vector<cplx>(n_symbols));
    for (long k = 0; k < n_symbols; ++k) {
        const double p2 = std::norm(c[k]);
        double amp = 1.0;
        for (int i = 0; i < nv; ++i) {
            streams[i][k] = c[k] * amp;
            amp *= p2;
        }
    }

    const int kh = kernel_half_symbols;
    const int d = nv * (2 * kh + 1);
    const int span_pad = static_cast<int>(tx_pulse.samples.size()) / eta + 1;
    const long n_lo = kh + span_pad;
    const long n_hi = n_symbols - kh - span_pad;
    if (n_hi - n_lo < 4 * d)
        throw std::invalid_argument("fit_volterra: probe too short for kernel span");

    VolterraModel model;
    model.v = v;
    model.kernels.assign(nv, PulseSamples{});
    for (int i = 0; i < nv; ++i) {
        model.kernels[i].eta_s = eta;
        model.kernels[i].T = tx_pulse.T;
        model.kernels[i].origin = kh * eta;
        model.kernels[i].samples.assign((2 * kh + 1) * eta, cplx(0.0, 0.0));
    }

    double err_num = 0.0, err_den = 0.0;
    Eigen::MatrixXcd gram(d, d);
    Eigen::VectorXcd rhs(d), row(d);
    for (int phase = 0; phase < eta; ++phase) {
        gram.setZero();
        rhs.setZero();
        for (long n = n_lo; n < n_hi; ++n) {
            const long m = tx_pulse.origin + n * eta + phase;
            const cplx y = tout.s[m];
            for (int i = 0; i < nv; ++i)
                for (int q = -kh; q <= kh; ++q)
                    row(i * (2 * kh + 1) + (q + kh)) = streams[i][n - q];
            gram.noalias() += row * row.adjoint();
            rhs.noalias() += row * std::conj(y);
        }
        const double tr = std::real(gram.trace()) / d;
        gram += ridge * tr * Eigen::MatrixXcd::Identity(d, d);
        const Eigen::VectorXcd theta_c = gram.ldlt().solve(rhs);
        // gram/rhs built with conj(y): undo to get the kernel samples.
        for (int i = 0; i < nv; ++i)
            for (int q = -kh; q <= kh; ++q)
                model.kernels[i].samples[(q + kh) * eta + phase] =
                    std::conj(theta_c(i * (2 * kh + 1) + (q + kh)));
        for (long n = n_lo; n < n_hi; ++n) {
            const long m = tx_pulse.origin + n * eta + phase;
            cplx pred(0.0, 0.0);
            for (int i = 0; i < nv; ++i)
                for (int q = -kh; q <= kh; ++q)
                    pred += streams[i][n - q] *
                            model.kernels[i].samples[(q + kh) * eta + phase];
            err_num += std::norm(tout.s[m] - pred);
            err_den += std::norm(tout.s[m]);
        }
    }
    model.residual_db = 10.0 * std::log10(std::max(err_num, 1e-300) / err_den);
    return model;
}

PulseSamples psk_equivalent_pulse(const VolterraModel& model) {
    PulseSamples out = model.kernels[0];
    for (size_t i = 1; i < model.kernels.size(); ++i)
        for (size_t j = 0; j < out.samples.size(); ++j)
            out.samples[j] += model.kernels[i].samples[j];
    return out;
}

// ---------------------------------------------------------------------------
// APSK lifted statistics
// ---------------------------------------------------------------------------

ApskBlockStatistics apsk_block_statistics(const VolterraModel& model, const Constellation& c,
                                          double t_sym) {
    // Distinct ring radii.
    std::vector<double> radii;
    for (const auto& pt : c.points) {
        const double r = std::abs(pt);
        bool found = false;
        for (double q : radii)
            if (std::abs(q - r) < 1e-9) found = true;
        if (!found) radii.push_back(r);
    }
    if (radii.size() < 2)
        throw std::invalid_argument(
            "apsk_block_statistics: constant-modulus constellation; use the PSK path");

    const int nv = model.nv();
    const int r_eff = std::min<int>(nv, static_cast<int>(radii.size()));

    ApskBlockStatistics st;
    st.kernels.assign(model.kernels.begin(), model.kernels.begin() + r_eff);
    if (r_eff < nv) {
        // |c|^{2i} for i >= r_eff is a linear combination of the first r_eff
        // powers on these rings; fold the extra kernels exactly.
        Eigen::MatrixXd vand(r_eff, r_eff);
        for (int m = 0; m < r_eff; ++m)
            for (int j = 0; j < r_eff; ++j) vand(m, j) = std::pow(radii[m], 2.0 * j);
        for (int i = r_eff; i < nv; ++i) {
            Eigen::VectorXd target(r_eff);
            for (int m = 0; m < r_eff; ++m) target(m) = std::pow(radii[m], 2.0 * i);
            const Eigen::VectorXd beta = vand.fullPivLu().solve(target);
            for (int j = 0; j < r_eff; ++j)
                for (size_t s = 0; s < st.kernels[j].samples.size(); ++s)
                    st.kernels[j].samples[s] += beta(j) * model.kernels[i].samples[s];
        }
    }

    // Lifted alphabet and its correlation.
    st.lifted.points.resize(c.cardinality(), Eigen::VectorXcd::Zero(r_eff));
    st.v = Eigen::MatrixXcd::Zero(r_eff, r_eff);
    for (int a = 0; a < c.cardinality(); ++a) {
        const cplx x = c.points[a];
        const double p2 = std::norm(x);
        double amp = 1.0;
        for (int j = 0; j < r_eff; ++j) {
            st.lifted.points[a](j) = x * amp;
            amp *= p2;
        }
        st.v += st.lifted.points[a] * st.lifted.points[a].adjoint();
    }
    st.v /= static_cast<double>(c.cardinality());
    st.v = 0.5 * (st.v + st.v.adjoint()).eval();
    if (Eigen::LLT<Eigen::MatrixXcd>(st.v).info() != Eigen::Success)
        throw std::runtime_error("apsk_block_statistics: reduced V not positive definite");

    // Matched-filter-bank taps (G_i)_{a,b} = int h_b(t) h_a^*(t - i T) dt.
    double span = 0.0;
    for (const auto& k : st.kernels) span = std::max(span, k.samples.size() * k.dt());
    const int max_lag = static_cast<int>(std::ceil(span / t_sym)) + 1;
    std::vector<Eigen::MatrixXcd> g;
    for (int i = 0; i <= max_lag; ++i) {
        Eigen::MatrixXcd gi(r_eff, r_eff);
        for (int a = 0; a < r_eff; ++a)
            for (int b = 0; b < r_eff; ++b)
                gi(a, b) = pulse_xcorr(st.kernels[b], st.kernels[a], i * t_sym);
        if (i == 0) gi = 0.5 * (gi + gi.adjoint()).eval();
        g.push_back(gi);
    }
    const double thr = 1e-6 * g[0].norm();
    while (g.size() > 1 && g.back().norm() < thr) g.pop_back();

    st.model.k = r_eff;
    st.model.g = std::move(g);
    st.model.n0 = 1.0;
    st.model.v = st.v;
    return st;
}

// ---------------------------------------------------------------------------
// Receive chains
// ---------------------------------------------------------------------------

SatellitePskChain build_satellite_psk_chain(const TransponderSpec& spec,
                                            const PulseSamples& tx_pulse,
                                            const Constellation& c, long fit_symbols,
                                            std::uint64_t seed) {
    SatellitePskChain chain;
    chain.spec = spec;
    chain.tx_pulse = tx_pulse;
    chain.constellation = c;

    // Freeze the drive scale on a calibration probe so every later block sees
    // the same channel.
    {
        SeededRng rng(seed ^ 0xCA11B7A7E5EEDULL);
        const std::vector<int> idx = random_symbols(c, 4000, rng);
        const std::vector<cplx> cc = map_symbols(c, idx);
        const std::vector<cplx> x = modulate_waveform(cc, tx_pulse);
        const TransponderOut t = simulate_transponder(x, chain.spec);
        chain.spec.drive_scale = t.drive_scale;
        chain.obo_db = t.obo_db;
    }

    const VolterraModel vm =
        fit_volterra(chain.spec, tx_pulse, c, 1, fit_symbols, seed + 1);
    chain.h_bar = psk_equivalent_pulse(vm);
    chain.fit_residual_db = vm.residual_db;
    chain.g = ungerboeck_from_pulse(chain.h_bar, tx_pulse.T);
    return chain;
}

SimOut satellite_psk_observable(const SatellitePskChain& chain, std::span<const cplx> c,
                                double n0, SeededRng& rng) {
    const std::vector<cplx> x = modulate_waveform(c, chain.tx_pulse);
    TransponderOut t = simulate_transponder(x, chain.spec);
    const double dt = chain.tx_pulse.T / chain.tx_pulse.eta_s;
    if (n0 > 0.0) {
        const double var = n0 / dt;
        for (auto& v : t.s) v += rng.cgaussian(var);
    }
    const int n = static_cast<int>(c.size());
    const int eta = chain.tx_pulse.eta_s;
    const int klen = static_cast<int>(chain.h_bar.samples.size());
    SimOut out;
    out.offset = 0;
    out.r.assign(n, cplx(0.0, 0.0));
    for (int k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        // r_u[k] = dt * sum_m conj(h_bar(t_m - kT)) s(t_m)
        const int base = k * eta + chain.tx_pulse.origin - chain.h_bar.origin;
        for (int j = 0; j < klen; ++j) {
            const int m = base + j;
            if (m >= 0 && m < static_cast<int>(t.s.size()))
                acc += std::conj(chain.h_bar.samples[j]) * t.s[m];
        }
        out.r[k] = acc * dt;
    }
    return out;
}

BlockObservation satellite_apsk_observable(const TransponderSpec& spec,
                                           const PulseSamples& tx_pulse,
                                           const ApskBlockStatistics& stats,
                                           std::span<const cplx> c, double n0,
                                           SeededRng& rng) {
    const std::vector<cplx> x = modulate_waveform(c, tx_pulse);
    TransponderOut t = simulate_transponder(x, spec);
    const double dt = tx_pulse.T / tx_pulse.eta_s;
    if (n0 > 0.0) {
        const double var = n0 / dt;
        for (auto& v : t.s) v += rng.cgaussian(var);
    }
    const int n = static_cast<int>(c.size());
    const int eta = tx_pulse.eta_s;
    const int kdim = static_cast<int>(stats.kernels.size());
    BlockObservation out;
    out.offset = 0;
    out.r.assign(n, Eigen::VectorXcd::Zero(kdim));
    for (int k = 0; k < n; ++k) {
        for (int a = 0; a < kdim; ++a) {
            const auto& ker = stats.kernels[a];
            cplx acc(0.0, 0.0);
            const int base = k * eta + tx_pulse.origin - ker.origin;
            for (size_t j = 0; j < ker.samples.size(); ++j) {
                const int m = base + static_cast<int>(j);
                if (m >= 0 && m < static_cast<int>(t.s.size()))
                    acc += std::conj(ker.samples[j]) * t.s[m];
            }
            out.r[k](a) = acc * dt;
        }
    }
    return out;
}

}  // namespace csdet
