#include "csdet/shortening.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "num_util.hpp"

namespace csdet {

namespace {

double log2_det_hermitian(const Eigen::MatrixXcd& m) {
    Eigen::LLT<Eigen::MatrixXcd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("log2_det: matrix not positive definite");
    double acc = 0.0;
    for (int i = 0; i < m.rows(); ++i) acc += 2.0 * std::log2(std::real(llt.matrixL()(i, i)));
    return acc;
}

Eigen::MatrixXcd hermitianize(const Eigen::MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

// Windowed inverse transform of a spectrum grid to lags [-half, half], plus
// the max deviation of the realized spectrum from the target.
void realize_fir(const std::vector<cplx>& spec, int half, std::vector<cplx>* taps,
                 double* max_err) {
    const int n = static_cast<int>(spec.size());
    taps->assign(2 * half + 1, cplx(0.0, 0.0));
    for (int lag = -half; lag <= half; ++lag) {
        cplx acc(0.0, 0.0);
        for (int i = 0; i < n; ++i) {
            const double w = -kPi + 2.0 * kPi * i / n;
            acc += spec[i] * std::polar(1.0, w * lag);
        }
        (*taps)[lag + half] =
            acc / static_cast<double>(n) * detail::kaiser_flat(static_cast<double>(lag) / (half + 1));
    }
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = -kPi + 2.0 * kPi * i / n;
        cplx acc(0.0, 0.0);
        for (int lag = -half; lag <= half; ++lag)
            acc += (*taps)[lag + half] * std::polar(1.0, -w * lag);
        err = std::max(err, std::abs(acc - spec[i]));
    }
    *max_err = err;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scalar design
// ---------------------------------------------------------------------------

std::vector<cplx> cs_b_taps(std::span<const double> vsq, double n0, int l) {
    if (n0 <= 0.0) throw std::invalid_argument("cs_b_taps: N0 must be positive");
    if (l < 0) throw std::invalid_argument("cs_b_taps: L must be >= 0");
    const int n = static_cast<int>(vsq.size());
    std::vector<cplx> b(l + 1, cplx(0.0, 0.0));
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(vsq[i])) throw std::invalid_argument("cs_b_taps: non-finite spectrum");
        const double y = n0 / (vsq[i] + n0);
        const double w = -kPi + 2.0 * kPi * i / n;
        for (int lag = 0; lag <= l; ++lag) b[lag] += y * std::polar(1.0, w * lag);
    }
    for (auto& v : b) v /= static_cast<double>(n);
    b[0] = cplx(b[0].real(), 0.0);
    return b;
}

CsCore cs_core_from_b(std::span<const cplx> b) {
    const int l = static_cast<int>(b.size()) - 1;
    CsCore core;
    core.b.assign(b.begin(), b.end());

    double c = b[0].real();
    std::vector<cplx> y;  // B^{-1} b^dagger
    if (l > 0) {
        Eigen::MatrixXcd bm(l, l);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < l; ++j)
                bm(i, j) = j >= i ? b[j - i] : std::conj(b[i - j]);
        Eigen::VectorXcd rhs(l);
        for (int i = 0; i < l; ++i) rhs(i) = std::conj(b[i + 1]);
        Eigen::LDLT<Eigen::MatrixXcd> ldlt(bm);
        if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("cs_core_from_b: B matrix not factorizable");
        Eigen::VectorXcd sol = ldlt.solve(rhs);
        const double resid = (bm * sol - rhs).norm();
        if (!(resid <= 1e-8 * std::max(1.0, rhs.norm()))) {
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(bm);
            const double cond =
                svd.singularValues()(0) / svd.singularValues()(l - 1);
            throw std::runtime_error("cs_core_from_b: B numerically singular, cond ~ " +
                                     std::to_string(cond));
        }
        cplx quad(0.0, 0.0);
        for (int i = 0; i < l; ++i) quad += b[i + 1] * sol(i);
        c -= quad.real();
        y.resize(l);
        for (int i = 0; i < l; ++i) y[i] = sol(i);
    }

    if (!(c > 0.0) || !std::isfinite(c))
        throw std::runtime_error("cs_core_from_b: degenerate C = " + std::to_string(c));
    core.c_scalar = c;
    core.i_opt = -std::log2(c);

    const double inv_sqrt_c = 1.0 / std::sqrt(c);
    core.u.resize(l + 1);
    core.u[0] = inv_sqrt_c;
    for (int i = 1; i <= l; ++i) core.u[i] = -std::conj(y[i - 1]) * inv_sqrt_c;

    core.target.resize(l + 1);
    for (int i = 0; i <= l; ++i) {
        cplx rho(0.0, 0.0);
        for (int k = 0; k + i <= l; ++k) rho += core.u[k + i] * std::conj(core.u[k]);
        core.target[i] = rho - (i == 0 ? cplx(1.0, 0.0) : cplx(0.0, 0.0));
    }
    core.target[0] = cplx(core.target[0].real(), 0.0);
    return core;
}

namespace {

// |U(omega)|^2 = G^r(omega) + 1 on the grid.
std::vector<double> grp1_spectrum(const CsCore& core, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const double w = -kPi + 2.0 * kPi * i / n;
        cplx u(0.0, 0.0);
        for (size_t k = 0; k < core.u.size(); ++k)
            u += core.u[k] * std::polar(1.0, -w * static_cast<double>(k));
        out[i] = std::norm(u);
    }
    return out;
}

}  // namespace

ShortenerDesign design_scalar_cs_psd(std::span<const double> vsq, double n0, int l,
                                     int fe_half_len) {
    ShortenerDesign d;
    d.n0 = n0;
    d.l = l;
    d.core = cs_core_from_b(cs_b_taps(vsq, n0, l));

    const int n = static_cast<int>(vsq.size());
    const std::vector<double> grp1 = grp1_spectrum(d.core, n);
    std::vector<cplx> fe(n);
    for (int i = 0; i < n; ++i) fe[i] = grp1[i] / (vsq[i] + n0);
    realize_fir(fe, fe_half_len, &d.fe_ung, &d.fe_realization_error);
    d.fe_ung_min_lag = -fe_half_len;
    d.has_forney_fe = false;
    return d;
}

ShortenerDesign design_scalar_cs(const ChannelTaps& h, double n0, int l, int n_omega,
                                 int fe_half_len) {
    const SpectrumSamples hs = dtft(h, n_omega);
    const std::vector<double> vsq = abs2(hs);
    ShortenerDesign d = design_scalar_cs_psd(vsq, n0, l, fe_half_len);

    const std::vector<double> grp1 = grp1_spectrum(d.core, n_omega);
    std::vector<cplx> fe(n_omega);
    for (int i = 0; i < n_omega; ++i)
        fe[i] = std::conj(hs.v[i]) * grp1[i] / (vsq[i] + n0);
    double err = 0.0;
    realize_fir(fe, fe_half_len, &d.fe_forney, &err);
    d.fe_forney_min_lag = -fe_half_len;
    d.fe_realization_error = std::max(d.fe_realization_error, err);
    d.has_forney_fe = true;
    return d;
}

MismatchedLaw ShortenerDesign::law(Observable obs) const {
    MismatchedLaw ml;
    ml.target = core.target;
    ml.expects = obs;
    if (obs == Observable::Forney) {
        if (!has_forney_fe)
            throw std::logic_error("ShortenerDesign: no Forney front end (PSD-only design)");
        ml.front_end = fe_forney;
        ml.fe_min_lag = fe_forney_min_lag;
    } else {
        ml.front_end = fe_ung;
        ml.fe_min_lag = fe_ung_min_lag;
    }
    return ml;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

MismatchedLaw truncation_baseline(const AutocorrTaps& g, double n0, int l,
                                  double noise_scale) {
    if (l < 0) throw std::invalid_argument("truncation_baseline: L must be >= 0");
    const double np = n0 * noise_scale;
    MismatchedLaw ml;
    ml.expects = Observable::Ungerboeck;
    ml.target.resize(l + 1);
    for (int i = 0; i <= l; ++i) ml.target[i] = g.at(i) / np;
    ml.front_end = {cplx(1.0 / np, 0.0)};
    ml.fe_min_lag = 0;
    return ml;
}

MismatchedLaw truncation_baseline_forney(const ChannelTaps& h, double n0, int l,
                                         double noise_scale) {
    const double np = n0 * noise_scale;
    const int keep = std::min<int>(l, h.memory());
    ChannelTaps ht{std::vector<cplx>(h.h.begin(), h.h.begin() + keep + 1)};
    const AutocorrTaps gt = autocorrelate(ht);

    MismatchedLaw ml;
    ml.expects = Observable::Forney;
    ml.target.resize(l + 1, cplx(0.0, 0.0));
    for (int i = 0; i <= std::min(l, gt.memory()); ++i) ml.target[i] = gt.at(i) / np;
    ml.front_end.resize(keep + 1);
    for (int m = 0; m <= keep; ++m) ml.front_end[m] = std::conj(ht.h[keep - m]) / np;
    ml.fe_min_lag = -keep;
    return ml;
}

LegacyMmseDesign mmse_legacy_cs(const ChannelTaps& h, double n0, int l, int n_w) {
    const int nu = h.memory();
    if (n_w <= 0) n_w = std::max(15, 4 * nu + 2 * l + 7);
    const AutocorrTaps g = autocorrelate(h);

    Eigen::MatrixXcd r_rr(n_w, n_w);
    for (int m = 0; m < n_w; ++m)
        for (int mp = 0; mp < n_w; ++mp)
            r_rr(m, mp) = g.at(mp - m) + (m == mp ? cplx(n0, 0.0) : cplx(0.0, 0.0));
    const Eigen::LDLT<Eigen::MatrixXcd> rr(r_rr);
    if (rr.info() != Eigen::Success)
        throw std::runtime_error("mmse_legacy_cs: normal equations singular");

    auto tap = [&](int i) -> cplx {
        return (i >= 0 && i <= nu) ? h.h[i] : cplx(0.0, 0.0);
    };

    double best_mse = 1e300;
    Eigen::VectorXcd best_q, best_w;
    int best_d = 0;
    for (int d = 0; d <= n_w + nu; ++d) {
        Eigen::MatrixXcd r_rc(n_w, l + 1);
        for (int m = 0; m < n_w; ++m)
            for (int i = 0; i <= l; ++i) r_rc(m, i) = tap(d - m + i);
        if (r_rc.norm() < 1e-12) continue;
        const Eigen::MatrixXcd s =
            Eigen::MatrixXcd::Identity(l + 1, l + 1) - r_rc.adjoint() * rr.solve(r_rc);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitianize(s));
        const double mse = es.eigenvalues()(0);
        if (mse < best_mse) {
            best_mse = mse;
            best_q = es.eigenvectors().col(0);
            best_w = rr.solve(r_rc * best_q);
            best_d = d;
        }
    }

    LegacyMmseDesign out;
    out.mse = best_mse;
    out.q.resize(l + 1);
    for (int i = 0; i <= l; ++i) out.q[i] = best_q(i);

    // Front end as applied: estimate_k = sum_m conj(w_m) r_{k+d-m}, i.e. the
    // coefficient at lag m-d is conj(w_m); ascending in m already.
    out.w.resize(n_w);
    for (int m = 0; m < n_w; ++m) out.w[m] = std::conj(best_w(m));
    out.w_min_lag = -best_d;

    // Unified law: matched filter for q-tilde after the feedforward filter,
    // target = autocorrelation of q-tilde, everything over N0.
    std::vector<cplx> qt(l + 1);
    for (int i = 0; i <= l; ++i) qt[i] = std::conj(out.q[i]);
    std::vector<cplx> mf(l + 1);
    for (int m = 0; m <= l; ++m) mf[m] = std::conj(qt[l - m]);
    std::vector<cplx> combined = convolve(mf, out.w);
    for (auto& v : combined) v /= n0;

    out.law.expects = Observable::Forney;
    out.law.fe_min_lag = -l + out.w_min_lag;
    out.law.front_end = std::move(combined);
    const AutocorrTaps gq = autocorrelate(ChannelTaps{qt});
    out.law.target.resize(l + 1, cplx(0.0, 0.0));
    for (int i = 0; i <= std::min(l, gq.memory()); ++i) out.law.target[i] = gq.at(i) / n0;
    return out;
}

// ---------------------------------------------------------------------------
// Adaptive design
// ---------------------------------------------------------------------------

AdaptiveCsEstimate adaptive_cs(std::span<const cplx> train, const SimOut& received, int l,
                               int mmse_len) {
    if (mmse_len % 2 == 0) ++mmse_len;
    const long t = static_cast<long>(train.size());
    if (t < 50L * mmse_len)
        throw std::invalid_argument("adaptive_cs: training shorter than 50 * mmse_len");
    const int kh = (mmse_len - 1) / 2;

    Eigen::MatrixXcd gm = Eigen::MatrixXcd::Zero(mmse_len, mmse_len);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(mmse_len);
    std::vector<cplx> window(mmse_len);
    for (long k = kh; k < t - kh; ++k) {
        for (int m = -kh; m <= kh; ++m) window[m + kh] = received.at(static_cast<int>(k) - m);
        for (int j = 0; j < mmse_len; ++j) {
            const cplx cj = std::conj(window[j]);
            rhs(j) += train[k] * cj;
            for (int i = 0; i < mmse_len; ++i) gm(j, i) += window[i] * cj;
        }
    }
    const Eigen::LDLT<Eigen::MatrixXcd> ldlt(hermitianize(gm));
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("adaptive_cs: ill-conditioned normal equations");
    const Eigen::VectorXcd w = ldlt.solve(rhs);

    AdaptiveCsEstimate est;
    est.mmse_taps.resize(mmse_len);
    for (int i = 0; i < mmse_len; ++i) est.mmse_taps[i] = w(i);
    est.mmse_min_lag = -kh;

    // Error autocorrelation over the interior of the training block.
    std::vector<cplx> err(t, cplx(0.0, 0.0));
    for (long k = kh; k < t - kh; ++k) {
        cplx chat(0.0, 0.0);
        for (int m = -kh; m <= kh; ++m)
            chat += est.mmse_taps[m + kh] * received.at(static_cast<int>(k) - m);
        err[k] = train[k] - chat;
    }
    est.b_hat.resize(l + 1, cplx(0.0, 0.0));
    for (int i = 0; i <= l; ++i) {
        cplx acc(0.0, 0.0);
        long count = 0;
        for (long k = kh; k + i < t - kh; ++k) {
            acc += err[k + i] * std::conj(err[k]);
            ++count;
        }
        est.b_hat[i] = acc / static_cast<double>(count);
    }
    est.b_hat[0] = cplx(est.b_hat[0].real(), 0.0);

    double sig = 0.0;
    for (long k = 0; k < t; ++k) sig += std::norm(train[k]);
    sig /= static_cast<double>(t);
    if (est.b_hat[0].real() <= 1e-12 * sig) {
        est.degenerate = true;
        return est;
    }

    try {
        est.design.core = cs_core_from_b(est.b_hat);
    } catch (const std::exception&) {
        est.degenerate = true;
        return est;
    }
    est.design.l = l;
    est.design.n0 = 0.0;  // unknown by construction

    // Front end = estimated MMSE filter convolved with (G^r + 1).
    std::vector<cplx> rho(2 * l + 1, cplx(0.0, 0.0));
    for (int i = -l; i <= l; ++i) {
        cplx acc(0.0, 0.0);
        for (int k = 0; k <= l; ++k) {
            const int k2 = k + i;
            if (k2 >= 0 && k2 <= l) acc += est.design.core.u[k2] * std::conj(est.design.core.u[k]);
        }
        rho[i + l] = acc;
    }
    est.design.fe_forney = convolve(est.mmse_taps, rho);
    est.design.fe_forney_min_lag = est.mmse_min_lag - l;
    est.design.has_forney_fe = true;
    return est;
}

// ---------------------------------------------------------------------------
// Block design
// ---------------------------------------------------------------------------

BlockMismatchedLaw BlockShortenerDesign::law() const {
    BlockMismatchedLaw ml;
    ml.front_end = fe_taps;
    ml.fe_min_lag = fe_min_lag;
    ml.target = target;
    ml.expects = Observable::Ungerboeck;
    return ml;
}

BlockShortenerDesign design_block_cs(const std::vector<Eigen::MatrixXcd>& g_spec,
                                     const Eigen::MatrixXcd& v, double n0, int l,
                                     int fe_half_len) {
    const int k = static_cast<int>(v.rows());
    const int n = static_cast<int>(g_spec.size());
    if (n0 <= 0.0) throw std::invalid_argument("design_block_cs: N0 must be positive");
    if (k > 8) throw std::invalid_argument("design_block_cs: K > 8 not supported");

    BlockShortenerDesign d;

    // K = 1 with trivial V routes through the scalar engine (bit-exact).
    if (k == 1 && std::abs(v(0, 0) - cplx(1.0, 0.0)) == 0.0) {
        std::vector<double> vsq(n);
        for (int i = 0; i < n; ++i) vsq[i] = g_spec[i](0, 0).real();
        const ShortenerDesign sd = design_scalar_cs_psd(vsq, n0, l, fe_half_len);
        auto wrap = [](cplx x) {
            Eigen::MatrixXcd m(1, 1);
            m(0, 0) = x;
            return m;
        };
        for (const auto& x : sd.core.b) d.b.push_back(wrap(x));
        d.c_matrix = wrap(sd.core.c_scalar);
        for (const auto& x : sd.core.u) d.u.push_back(wrap(x));
        for (const auto& x : sd.core.target) d.target.push_back(wrap(x));
        d.i_opt = sd.core.i_opt;
        for (const auto& x : sd.fe_ung) d.fe_taps.push_back(wrap(x));
        d.fe_min_lag = sd.fe_ung_min_lag;
        return d;
    }

    Eigen::LLT<Eigen::MatrixXcd> vllt(v);
    if (vllt.info() != Eigen::Success)
        throw std::invalid_argument("design_block_cs: V not positive definite");
    const Eigen::MatrixXcd vinv = vllt.solve(Eigen::MatrixXcd::Identity(k, k));

    // B(omega) = N0 (G(omega) + N0 V^{-1})^{-1}, Hermitian PSD.
    std::vector<Eigen::MatrixXcd> bw(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXcd m = g_spec[i] + n0 * vinv;
        bw[i] = hermitianize(n0 * m.llt().solve(Eigen::MatrixXcd::Identity(k, k)));
    }

    d.b.resize(l + 1, Eigen::MatrixXcd::Zero(k, k));
    for (int i = 0; i < n; ++i) {
        const double w = -kPi + 2.0 * kPi * i / n;
        for (int lag = 0; lag <= l; ++lag) d.b[lag] += bw[i] * std::polar(1.0, w * lag);
    }
    for (auto& m : d.b) m /= static_cast<double>(n);
    d.b[0] = hermitianize(d.b[0]);

    Eigen::MatrixXcd c = d.b[0];
    Eigen::MatrixXcd uunder;  // K x KL
    if (l > 0) {
        Eigen::MatrixXcd big(k * l, k * l);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < l; ++j) {
                const int lag = j - i;
                big.block(i * k, j * k, k, k) =
                    lag >= 0 ? d.b[lag] : Eigen::MatrixXcd(d.b[-lag].adjoint());
            }
        Eigen::MatrixXcd bunder(k, k * l);
        for (int i = 0; i < l; ++i) bunder.block(0, i * k, k, k) = d.b[i + 1];
        const Eigen::LDLT<Eigen::MatrixXcd> bl(big);
        if (bl.info() != Eigen::Success)
            throw std::runtime_error("design_block_cs: block B matrix singular");
        const Eigen::MatrixXcd y = bl.solve(bunder.adjoint());  // KL x K
        c = hermitianize(d.b[0] - bunder * y);

        Eigen::LLT<Eigen::MatrixXcd> cllt(c);
        if (cllt.info() != Eigen::Success)
            throw std::runtime_error("design_block_cs: script-C not positive definite");
        const Eigen::MatrixXcd cinv =
            hermitianize(cllt.solve(Eigen::MatrixXcd::Identity(k, k)));
        const Eigen::MatrixXcd u0 =
            Eigen::LLT<Eigen::MatrixXcd>(cinv).matrixL().adjoint();
        uunder = -u0 * y.adjoint();
        d.u.push_back(u0);
        for (int i = 0; i < l; ++i) d.u.push_back(uunder.block(0, i * k, k, k));
    } else {
        Eigen::LLT<Eigen::MatrixXcd> cllt(c);
        if (cllt.info() != Eigen::Success)
            throw std::runtime_error("design_block_cs: script-C not positive definite");
        const Eigen::MatrixXcd cinv =
            hermitianize(cllt.solve(Eigen::MatrixXcd::Identity(k, k)));
        d.u.push_back(Eigen::LLT<Eigen::MatrixXcd>(cinv).matrixL().adjoint());
    }
    d.c_matrix = c;
    d.i_opt = log2_det_hermitian(v) - log2_det_hermitian(c);

    d.target.resize(l + 1, Eigen::MatrixXcd::Zero(k, k));
    for (int i = 0; i <= l; ++i) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(k, k);
        for (int kk = i; kk <= l; ++kk) acc += d.u[kk - i].adjoint() * d.u[kk];
        if (i == 0) acc -= vinv;
        d.target[i] = i == 0 ? hermitianize(acc) : acc;
    }

    // Ungerboeck-observable front end (G^r(omega) + V^{-1}) B(omega) / N0.
    std::vector<Eigen::MatrixXcd> fe(n);
    for (int i = 0; i < n; ++i) {
        const double w = -kPi + 2.0 * kPi * i / n;
        Eigen::MatrixXcd gr = d.target[0];
        for (int lag = 1; lag <= l; ++lag) {
            const cplx e = std::polar(1.0, -w * lag);
            gr += d.target[lag] * e + d.target[lag].adjoint() * std::conj(e);
        }
        fe[i] = (gr + vinv) * bw[i] / n0;
    }
    d.fe_taps.assign(2 * fe_half_len + 1, Eigen::MatrixXcd::Zero(k, k));
    for (int lag = -fe_half_len; lag <= fe_half_len; ++lag) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(k, k);
        for (int i = 0; i < n; ++i) {
            const double w = -kPi + 2.0 * kPi * i / n;
            acc += fe[i] * std::polar(1.0, w * lag);
        }
        d.fe_taps[lag + fe_half_len] =
            acc / static_cast<double>(n) *
            detail::kaiser_flat(static_cast<double>(lag) / (fe_half_len + 1));
    }
    d.fe_min_lag = -fe_half_len;
    return d;
}

BlockShortenerDesign design_block_cs(const std::vector<Eigen::MatrixXcd>& h_taps, double n0,
                                     int l, int n_omega) {
    const std::vector<Eigen::MatrixXcd> g = block_autocorrelate(h_taps);
    const std::vector<Eigen::MatrixXcd> gs = block_dtft(g, n_omega);
    const int k = static_cast<int>(h_taps[0].rows());
    return design_block_cs(gs, Eigen::MatrixXcd::Identity(k, k), n0, l);
}

// ---------------------------------------------------------------------------
// Finite-N Gaussian AIR
// ---------------------------------------------------------------------------

double finite_n_gaussian_air(const ChannelTaps& h, double n0, int l, int n) {
    Eigen::MatrixXcd hm = Eigen::MatrixXcd::Zero(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = std::max(0, r - h.memory()); c <= r; ++c) hm(r, c) = h.h[r - c];
    const Eigen::MatrixXcd g = hm.adjoint() * hm;
    const Eigen::MatrixXcd b =
        n0 * (g + n0 * Eigen::MatrixXcd::Identity(n, n))
                 .llt()
                 .solve(Eigen::MatrixXcd::Identity(n, n));

    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const int w = std::min(l, n - 1 - i);
        double c = b(i, i).real();
        if (w > 0) {
            const Eigen::MatrixXcd bsub = b.block(i + 1, i + 1, w, w);
            const Eigen::RowVectorXcd brow = b.row(i).segment(i + 1, w);
            const Eigen::VectorXcd sol = bsub.ldlt().solve(brow.adjoint());
            c -= (brow * sol)(0).real();
        }
        acc += -std::log2(c);
    }
    return acc / n;
}

double finite_n_gaussian_air_block(const std::vector<Eigen::MatrixXcd>& h_taps,
                                   const Eigen::MatrixXcd& v, double n0, int l, int n) {
    const int k = static_cast<int>(h_taps[0].rows());
    const int nu = static_cast<int>(h_taps.size()) - 1;
    const int kn = k * n;
    Eigen::MatrixXcd hm = Eigen::MatrixXcd::Zero(kn, kn);
    for (int r = 0; r < n; ++r)
        for (int c = std::max(0, r - nu); c <= r; ++c)
            hm.block(r * k, c * k, k, k) = h_taps[r - c];
    Eigen::MatrixXcd vn = Eigen::MatrixXcd::Zero(kn, kn);
    const Eigen::MatrixXcd vinv = v.llt().solve(Eigen::MatrixXcd::Identity(k, k));
    for (int r = 0; r < n; ++r) vn.block(r * k, r * k, k, k) = vinv;
    const Eigen::MatrixXcd g = hm.adjoint() * hm;
    const Eigen::MatrixXcd b =
        n0 * (g + n0 * vn).llt().solve(Eigen::MatrixXcd::Identity(kn, kn));

    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const int w = std::min(l, n - 1 - i);
        Eigen::MatrixXcd c = b.block(i * k, i * k, k, k);
        if (w > 0) {
            const Eigen::MatrixXcd bsub = b.block((i + 1) * k, (i + 1) * k, w * k, w * k);
            const Eigen::MatrixXcd brow = b.block(i * k, (i + 1) * k, k, w * k);
            const Eigen::MatrixXcd sol = bsub.ldlt().solve(brow.adjoint());
            c -= brow * sol;
        }
        acc += -log2_det_hermitian(hermitianize(c));
    }
    return log2_det_hermitian(v) + acc / n;
}

}  // namespace csdet
