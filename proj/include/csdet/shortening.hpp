#ifndef CSDET_SHORTENING_HPP
#define CSDET_SHORTENING_HPP

#include "csdet/detector.hpp"

namespace csdet {

// ---------------------------------------------------------------------------
// Closed-form channel-shortening design (Gaussian-input optimal)
// ---------------------------------------------------------------------------

/// Core quantities shared by every scalar design: the error-autocorrelation
/// band b_0..b_L, the prediction-error scalar C, the normalized prediction
/// filter u = (1/sqrt(C)) [1, -b B^{-1}], the absorbed target band
/// t_i = (u (x) u*_-)_i - delta_i, and I_OPT = -log2(C).
struct CsCore {
    std::vector<cplx> b;
    double c_scalar = 0.0;
    std::vector<cplx> u;
    std::vector<cplx> target;
    double i_opt = 0.0;
};

/// b taps from a squared channel spectrum on the uniform grid:
/// b_i = (1/2pi) integral N0 / (vsq(omega) + N0) e^{j omega i}.
std::vector<cplx> cs_b_taps(std::span<const double> vsq, double n0, int l);

/// Design from precomputed b taps. Throws on numerically degenerate C <= 0.
CsCore cs_core_from_b(std::span<const cplx> b);

struct ShortenerDesign {
    CsCore core;
    double n0 = 1.0;
    int l = 0;

    // Front ends stored as applied: d_k = sum_m taps[m] r_{k-(min_lag+m)}.
    // The Ungerboeck-observable form (G^r+1)/(|V|^2+N0) always exists; the
    // Forney-observable form conj(H)(G^r+1)/(|H|^2+N0) needs the complex
    // channel spectrum.
    std::vector<cplx> fe_ung;
    int fe_ung_min_lag = 0;
    std::vector<cplx> fe_forney;
    int fe_forney_min_lag = 0;
    bool has_forney_fe = false;
    double fe_realization_error = 0.0;  // max |realized - target| over the grid

    double i_opt() const { return core.i_opt; }
    MismatchedLaw law(Observable obs) const;
};

/// Optimal channel shortener and target response for a known Forney channel.
ShortenerDesign design_scalar_cs(const ChannelTaps& h, double n0, int l,
                                 int n_omega = kDefaultGrid, int fe_half_len = 64);

/// Same design when only |V(omega)|^2 on the grid is known (continuous-time /
/// FTN use); only the Ungerboeck-observable front end is produced.
ShortenerDesign design_scalar_cs_psd(std::span<const double> vsq, double n0, int l,
                                     int fe_half_len = 64);

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Truncated-ISI detector: full matched-filter front end, target g_{0..L}.
/// noise_scale > 1 inflates the detector's assumed noise variance.
MismatchedLaw truncation_baseline(const AutocorrTaps& g, double n0, int l,
                                  double noise_scale = 1.0);
/// Forney-observable variant built from the truncated whitened response.
MismatchedLaw truncation_baseline_forney(const ChannelTaps& h, double n0, int l,
                                         double noise_scale = 1.0);

/// Falconer/Magee MMSE channel shortener (W, Q) mapped into the unified
/// mismatched-law form. Historical baseline.
struct LegacyMmseDesign {
    std::vector<cplx> w;  // feedforward taps, as applied at lags [w_min_lag, ..]
    int w_min_lag = 0;
    std::vector<cplx> q;  // unit-norm target response q_0..q_L
    double mse = 0.0;
    MismatchedLaw law;  // Forney observable
};
LegacyMmseDesign mmse_legacy_cs(const ChannelTaps& h, double n0, int l, int n_w = 0);

// ---------------------------------------------------------------------------
// Adaptive (training-based) design
// ---------------------------------------------------------------------------

struct AdaptiveCsEstimate {
    std::vector<cplx> mmse_taps;  // two-sided, lags [-k_half, k_half]
    int mmse_min_lag = 0;
    std::vector<cplx> b_hat;  // estimated error autocorrelation b_0..b_L
    bool degenerate = false;  // zero-noise / trivial-channel case
    ShortenerDesign design;   // valid when !degenerate
};

/// Estimate the MMSE filter and the error autocorrelation from a training
/// block (batch least squares), then run the closed-form design from b_hat.
/// Training length must be at least 50 * mmse_len.
AdaptiveCsEstimate adaptive_cs(std::span<const cplx> train, const SimOut& received, int l,
                               int mmse_len);

// ---------------------------------------------------------------------------
// Block / MIMO designs
// ---------------------------------------------------------------------------

struct BlockShortenerDesign {
    std::vector<Eigen::MatrixXcd> b;       // B_0..B_L
    Eigen::MatrixXcd c_matrix;             // script-C, K x K Hermitian PD
    std::vector<Eigen::MatrixXcd> u;       // U_0..U_L, U_0^dagger U_0 = C^{-1}
    std::vector<Eigen::MatrixXcd> target;  // absorbed G^r_0..G^r_L
    double i_opt = 0.0;                    // log2 det V + log2 det C^{-1}
    std::vector<Eigen::MatrixXcd> fe_taps;  // Ungerboeck-observable front end
    int fe_min_lag = 0;
    BlockMismatchedLaw law() const;
};

/// Block channel shortening from the matrix spectrum G(omega) on the grid
/// and the symbol-vector correlation V. K = 1, V = 1 routes through the
/// scalar path so the reduction is bit-exact.
BlockShortenerDesign design_block_cs(const std::vector<Eigen::MatrixXcd>& g_spec,
                                     const Eigen::MatrixXcd& v, double n0, int l,
                                     int fe_half_len = 64);
/// Convenience: from MIMO-ISI Forney taps {H_i}.
BlockShortenerDesign design_block_cs(const std::vector<Eigen::MatrixXcd>& h_taps,
                                     double n0, int l, int n_omega = kDefaultGrid);

/// Exact finite-N Gaussian-input AIR of the optimal memory-L design, from the
/// dense block formulas; converges to i_opt as N grows.
double finite_n_gaussian_air(const ChannelTaps& h, double n0, int l, int n);
double finite_n_gaussian_air_block(const std::vector<Eigen::MatrixXcd>& h_taps,
                                   const Eigen::MatrixXcd& v, double n0, int l, int n);

}  // namespace csdet

#endif
