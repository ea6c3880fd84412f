#include "csdet/obs_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fft_util.hpp"

namespace csdet {

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

UngerboeckModel ungerboeck_from_forney(const ForneyModel& fm) {
    UngerboeckModel um;
    um.g = autocorrelate(fm.h);
    um.n0 = fm.n0;
    um.factor = fm.h;
    return um;
}

UngerboeckModel ungerboeck_from_autocorr(AutocorrTaps g, double n0) {
    UngerboeckModel um;
    um.factor = spectral_factorize(g);
    um.g = std::move(g);
    um.n0 = n0;
    return um;
}

AutocorrTaps ungerboeck_from_pulse(const PulseSamples& p, double t_sym) {
    if (p.eta_s < 4) throw std::invalid_argument("ungerboeck_from_pulse: need eta_s >= 4");
    for (const auto& s : p.samples)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw std::invalid_argument("ungerboeck_from_pulse: non-finite pulse samples");

    const double span_time = p.samples.size() * p.dt();
    const int max_lag = static_cast<int>(std::ceil(span_time / t_sym)) + 1;
    AutocorrTaps g;
    g.g.resize(max_lag + 1);
    for (int i = 0; i <= max_lag; ++i) g.g[i] = pulse_xcorr(p, p, i * t_sym);
    g.g[0] = cplx(g.g[0].real(), 0.0);
    const double thr = 1e-6 * g.g[0].real();
    while (g.g.size() > 1 && std::abs(g.g.back()) < thr) g.g.pop_back();
    return g;
}

// ---------------------------------------------------------------------------
// Cepstral spectral factorization
// ---------------------------------------------------------------------------

namespace {

double reconstruction_error(std::span<const cplx> h, const AutocorrTaps& g) {
    const AutocorrTaps back = autocorrelate(ChannelTaps{std::vector<cplx>(h.begin(), h.end())});
    double err = 0.0;
    const int m = std::max(back.memory(), g.memory());
    for (int i = 0; i <= m; ++i) err = std::max(err, std::abs(back.at(i) - g.at(i)));
    return err;
}

// Damped Gauss-Newton refinement of a short factor (numeric Jacobian); pushes
// the cepstral estimate to the tolerance even with spectral zeros on the
// unit circle, where the log-spectrum method alone degrades.
void polish_factor(std::vector<cplx>* h, const AutocorrTaps& g) {
    const int len = static_cast<int>(h->size());
    const int m = std::max(g.memory(), len - 1);
    const int n_res = 2 * (m + 1);
    const int n_par = 2 * len;

    auto residuals = [&](const std::vector<cplx>& taps, Eigen::VectorXd* r) {
        const AutocorrTaps back = autocorrelate(ChannelTaps{taps});
        for (int i = 0; i <= m; ++i) {
            const cplx d = back.at(i) - g.at(i);
            (*r)(2 * i) = d.real();
            (*r)(2 * i + 1) = d.imag();
        }
    };

    Eigen::VectorXd r0(n_res), r1(n_res);
    residuals(*h, &r0);
    double lambda = 1e-6;
    for (int iter = 0; iter < 40; ++iter) {
        Eigen::MatrixXd jac(n_res, n_par);
        const double eps = 1e-7 * std::max(1.0, std::sqrt(std::abs(g.g[0])));
        for (int p = 0; p < n_par; ++p) {
            std::vector<cplx> taps = *h;
            taps[p / 2] += (p % 2 == 0) ? cplx(eps, 0.0) : cplx(0.0, eps);
            residuals(taps, &r1);
            jac.col(p) = (r1 - r0) / eps;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r0;
        const Eigen::VectorXd step =
            (jtj + lambda * jtj.diagonal().asDiagonal().toDenseMatrix())
                .ldlt()
                .solve(-jtr);
        std::vector<cplx> trial = *h;
        for (int p = 0; p < len; ++p) trial[p] += cplx(step(2 * p), step(2 * p + 1));
        residuals(trial, &r1);
        if (r1.norm() < r0.norm()) {
            *h = trial;
            r0 = r1;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (r0.norm() < 1e-12 * std::max(1.0, std::abs(g.g[0]))) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e8) break;
        }
    }
}

ChannelTaps cepstral_factor(const AutocorrTaps& g, int nfft, double* recon_err) {
    const SpectrumSamples gs = dtft(g, nfft);
    const double g0 = std::abs(g.g[0]);
    double min_v = 0.0;
    for (const auto& v : gs.v) min_v = std::min(min_v, v.real());
    // Tolerance matched to the 1e-6 g0 tap-trimming budget of the
    // autocorrelation constructors; anything worse is a genuinely
    // non-factorizable input.
    if (min_v < -2e-6 * std::max(g0, 1e-300)) {
        throw std::runtime_error("spectral_factorize: spectrum negative (min " +
                                 std::to_string(min_v) + " at relative " +
                                 std::to_string(min_v / std::max(g0, 1e-300)) + ")");
    }

    const double floor_v = 1e-13 * std::max(g0, 1e-300);
    std::vector<cplx> work(nfft);
    for (int i = 0; i < nfft; ++i)
        work[i] = cplx(0.5 * std::log(std::max(gs.v[i].real(), floor_v)), 0.0);

    // Real cepstrum of log|H|, then fold onto the causal part.
    detail::fft_inplace(work, true);
    std::vector<cplx> causal(nfft, cplx(0.0, 0.0));
    causal[0] = work[0];
    for (int n = 1; n < nfft / 2; ++n) causal[n] = 2.0 * work[n];
    causal[nfft / 2] = work[nfft / 2];
    detail::fft_inplace(causal, false);
    for (int i = 0; i < nfft; ++i) causal[i] = std::exp(causal[i]);
    detail::fft_inplace(causal, true);

    // The grid transforms above live on omega_n = 2 pi n / nfft while dtft()
    // uses omega_n = -pi + 2 pi n / nfft; the factor spectrum only entered
    // through |G| so the shift is immaterial for the tap magnitudes, but the
    // alternating sign from the half-grid offset must be undone.
    // dtft grid: e^{-j(-pi + w)n} = (-1)^n e^{-jwn}; compensate per tap.
    std::vector<cplx> taps(nfft);
    for (int n = 0; n < nfft; ++n) taps[n] = causal[n] * ((n % 2 == 0) ? 1.0 : -1.0);

    // The exact factor of a degree-nu autocorrelation has nu+1 taps; spectra
    // with deep minima leak energy into a slow tail. Prefer the short factor
    // (polished) and fall back to longer truncations only when it misses the
    // tolerance.
    const double tol = 1e-7 * std::abs(g.g[0]);
    std::vector<cplx> short_h(taps.begin(), taps.begin() + g.memory() + 1);
    if (short_h.size() <= 64) polish_factor(&short_h, g);
    double best_err = reconstruction_error(short_h, g);
    std::vector<cplx> best_h = std::move(short_h);
    if (best_err > tol) {
        for (int len = 2 * (g.memory() + 1) + 8; len <= std::min(nfft / 4, 4096);
             len = 2 * len + 8) {
            std::span<const cplx> head(taps.data(), len);
            const double err = reconstruction_error(head, g);
            if (err < 0.5 * best_err) {
                best_err = err;
                best_h.assign(head.begin(), head.end());
            }
            if (best_err <= tol) break;
        }
    }
    *recon_err = best_err;
    return make_channel_taps(std::move(best_h), 1e-12);
}

}  // namespace

ChannelTaps spectral_factorize(const AutocorrTaps& g, int n_omega) {
    const double g0 = std::abs(g.g[0]);
    if (g0 == 0.0) return ChannelTaps{{cplx(0.0, 0.0)}};

    int nfft = n_omega > 0 ? n_omega : kDefaultGrid;
    while (nfft < 8 * (2 * g.memory() + 1)) nfft *= 2;

    ChannelTaps best;
    double best_err = 1e300;
    while (true) {
        double err = 0.0;
        ChannelTaps h = cepstral_factor(g, nfft, &err);
        if (err < best_err) {
            best = std::move(h);
            best_err = err;
        }
        if (best_err <= 1e-7 * g0 || nfft >= (1 << 16) || n_omega > 0) break;
        nfft *= 2;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

SimOut simulate_forney(const ForneyModel& fm, std::span<const cplx> c, SeededRng& rng,
                       int guard) {
    if (c.empty()) throw std::invalid_argument("simulate_forney: empty symbol block");
    const int n = static_cast<int>(c.size());
    const int nu = fm.memory();
    SimOut out;
    out.offset = guard;
    out.r.resize(n + nu + 2 * guard);
    for (int k = -guard; k < n + nu + guard; ++k) {
        cplx s(0.0, 0.0);
        for (int i = 0; i <= nu; ++i) {
            const int j = k - i;
            if (j >= 0 && j < n) s += fm.h.h[i] * c[j];
        }
        out.r[guard + k] = s + (fm.n0 > 0.0 ? rng.cgaussian(fm.n0) : cplx(0.0, 0.0));
    }
    return out;
}

SimOut matched_filter(const SimOut& rf, const ChannelTaps& h, int n) {
    SimOut out;
    out.offset = 0;
    out.r.resize(n);
    const int nu = h.memory();
    for (int k = 0; k < n; ++k) {
        cplx s(0.0, 0.0);
        for (int j = 0; j <= nu; ++j) s += std::conj(h.h[j]) * rf.at(k + j);
        out.r[k] = s;
    }
    return out;
}

SimOut simulate_ungerboeck(const UngerboeckModel& um, std::span<const cplx> c, SeededRng& rng,
                           int guard) {
    if (c.empty()) throw std::invalid_argument("simulate_ungerboeck: empty symbol block");
    const int n = static_cast<int>(c.size());
    const int nu = um.memory();
    const int nuh = um.factor.memory();

    // Same white-noise draw order as simulate_forney with guard 0.
    std::vector<cplx> w(n + nuh + 2 * guard);
    for (auto& x : w) x = um.n0 > 0.0 ? rng.cgaussian(um.n0) : cplx(0.0, 0.0);

    SimOut out;
    out.offset = guard;
    out.r.resize(n + 2 * guard);
    for (int k = -guard; k < n + guard; ++k) {
        cplx s(0.0, 0.0);
        for (int i = -nu; i <= nu; ++i) {
            const int j = k - i;
            if (j >= 0 && j < n) s += um.g.at(i) * c[j];
        }
        cplx nk(0.0, 0.0);
        for (int j = 0; j <= nuh; ++j) nk += std::conj(um.factor.h[j]) * w[guard + k + j];
        out.r[guard + k] = s + nk;
    }
    return out;
}

SimOut filter_observation(const SimOut& in, std::span<const cplx> taps, int min_lag, int first_k,
                          int n) {
    SimOut out;
    out.offset = -first_k;
    out.r.resize(n);
    for (int k = first_k; k < first_k + n; ++k) {
        cplx s(0.0, 0.0);
        for (size_t m = 0; m < taps.size(); ++m)
            s += taps[m] * in.at(k - (min_lag + static_cast<int>(m)));
        out.r[k - first_k] = s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Block models
// ---------------------------------------------------------------------------

Eigen::MatrixXcd BlockUngerboeckModel::at(int lag) const {
    const int a = std::abs(lag);
    if (a >= lag_count()) return Eigen::MatrixXcd::Zero(k, k);
    return lag >= 0 ? g[a] : g[a].adjoint();
}

std::vector<Eigen::MatrixXcd> block_autocorrelate(const std::vector<Eigen::MatrixXcd>& h) {
    const int n = static_cast<int>(h.size());
    std::vector<Eigen::MatrixXcd> g(n);
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(h[0].rows(), h[0].cols());
        for (int k = 0; k + i < n; ++k) s += h[k].adjoint() * h[k + i];
        g[i] = s;
    }
    return g;
}

std::vector<Eigen::MatrixXcd> block_dtft(const std::vector<Eigen::MatrixXcd>& g_taps,
                                         int n_omega) {
    const int lg = static_cast<int>(g_taps.size()) - 1;
    const int k = static_cast<int>(g_taps[0].rows());
    std::vector<Eigen::MatrixXcd> s(n_omega, Eigen::MatrixXcd::Zero(k, k));
    for (int n = 0; n < n_omega; ++n) {
        const double w = -kPi + 2.0 * kPi * n / n_omega;
        Eigen::MatrixXcd acc = g_taps[0];
        for (int i = 1; i <= lg; ++i) {
            const cplx e = std::polar(1.0, -w * i);
            acc += g_taps[i] * e + g_taps[i].adjoint() * std::conj(e);
        }
        s[n] = acc;
    }
    return s;
}

std::vector<Eigen::MatrixXcd> block_dtft_causal(const std::vector<Eigen::MatrixXcd>& h_taps,
                                                int n_omega) {
    const int k = static_cast<int>(h_taps[0].rows());
    std::vector<Eigen::MatrixXcd> s(n_omega, Eigen::MatrixXcd::Zero(k, k));
    for (int n = 0; n < n_omega; ++n) {
        const double w = -kPi + 2.0 * kPi * n / n_omega;
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(k, k);
        for (size_t i = 0; i < h_taps.size(); ++i)
            acc += h_taps[i] * std::polar(1.0, -w * static_cast<double>(i));
        s[n] = acc;
    }
    return s;
}

// ---------------------------------------------------------------------------
// FDM
// ---------------------------------------------------------------------------

cplx FdmStationaryModel::rotation(int carrier, long k) const {
    return std::polar(1.0, 2.0 * kPi * carrier_freqs[carrier] * k * t_sym);
}

FdmStationaryModel fdm_stationary_model(const FdmSpec& spec) {
    const int k = static_cast<int>(spec.pulses.size());
    if (k < 1 || k > 8) throw std::invalid_argument("fdm_stationary_model: need 1 <= K <= 8");
    if (spec.carrier_freqs.size() != spec.pulses.size())
        throw std::invalid_argument("fdm_stationary_model: freqs/pulses size mismatch");

    double span = 0.0;
    for (const auto& p : spec.pulses) span = std::max(span, p.samples.size() * p.dt());
    const int max_lag = static_cast<int>(std::ceil(span / spec.t_sym)) + 1;

    std::vector<Eigen::MatrixXcd> g;
    double total = 0.0;
    for (int i = 0; i <= max_lag; ++i) {
        Eigen::MatrixXcd gi(k, k);
        for (int l = 0; l < k; ++l) {
            for (int u = 0; u < k; ++u) {
                const double f = spec.carrier_freqs[l] - spec.carrier_freqs[u];
                const cplx integ =
                    pulse_xcorr(spec.pulses[u], spec.pulses[l], i * spec.t_sym, f);
                gi(l, u) = std::polar(1.0, -2.0 * kPi * f * i * spec.t_sym) * integ;
            }
        }
        if (i == 0) gi = 0.5 * (gi + gi.adjoint()).eval();
        g.push_back(gi);
        total += gi.squaredNorm() * (i == 0 ? 1.0 : 2.0);
    }

    // Trim trailing lags with negligible energy.
    const double thr = spec.lag_energy_residual * total;
    double tail = 0.0;
    int keep = static_cast<int>(g.size());
    while (keep > 1 && tail + 2.0 * g[keep - 1].squaredNorm() < thr) {
        tail += 2.0 * g[keep - 1].squaredNorm();
        --keep;
    }
    if (keep == max_lag + 1 && g.back().squaredNorm() > thr)
        throw std::runtime_error("fdm_stationary_model: lag truncation residual " +
                                 std::to_string(g.back().squaredNorm() / total) +
                                 " above threshold");
    g.resize(keep);

    FdmStationaryModel out;
    out.model.k = k;
    out.model.g = std::move(g);
    out.model.v = Eigen::MatrixXcd::Identity(k, k);
    out.carrier_freqs = spec.carrier_freqs;
    out.t_sym = spec.t_sym;
    return out;
}

}  // namespace csdet
