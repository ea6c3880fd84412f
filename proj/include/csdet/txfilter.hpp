#ifndef CSDET_TXFILTER_HPP
#define CSDET_TXFILTER_HPP

#include "csdet/shortening.hpp"

namespace csdet {

// ---------------------------------------------------------------------------
// Transmit-filter optimization for a memory-L shortening detector
// ---------------------------------------------------------------------------

/// Parametric spectrum family: |P(w)|^2 = max(0, N0/|H| sqrt(S_A(w)) -
/// N0/|H|^2) with S_A(w) = sum_l A_l e^{jlw}, A_{-l} = conj(A_l), followed by
/// power normalization (1/2pi) int |P|^2 = target_power.
struct TransmitFilterSpec {
    std::vector<cplx> a_coef;  // A_0..A_L
    std::vector<double> psq;   // |P(omega_n)|^2 on the grid
    double power = 1.0;        // (1/2pi) integral of psq
    double power_residual = 0.0;
    double objective = 0.0;  // -log2(C) with the memory-L design
    bool converged = true;
    // min over the grid of S_A; may be negative on the switched-off set
    // (active frequencies always have S_A > 1/|H|^2 > 0 by construction).
    double min_sa = 0.0;
};

/// -log2(C) for an arbitrary squared transmit spectrum on the grid.
double cs_objective(std::span<const double> psq, std::span<const double> h2, double n0, int l);

/// Nelder-Mead multistart over the A coefficients; real channels use L+1 real
/// parameters, complex channels 2L+1.
TransmitFilterSpec optimize_transmit_filter(std::span<const double> h2, double n0, int l,
                                            int multistart = 3, std::uint64_t seed = 1,
                                            double target_power = 1.0);

// ---------------------------------------------------------------------------
// Waterfilling reference
// ---------------------------------------------------------------------------

struct WaterfillingSpec {
    double theta = 0.0;
    std::vector<double> psq;
    double capacity = 0.0;  // (1/2pi) int log2(1 + psq h2 / N0)
};

WaterfillingSpec waterfilling(std::span<const double> h2, double n0, double total_power = 1.0);

// ---------------------------------------------------------------------------
// Combined memory check
// ---------------------------------------------------------------------------

struct CombinedMemory {
    ChannelTaps v;  // h (x) p trimmed at 1e-6 of peak
    int nu_c = 0;
    bool at_least_channel_memory = false;
};
CombinedMemory combined_memory(const ChannelTaps& h, const ChannelTaps& p);

// ---------------------------------------------------------------------------
// MIMO precoders over the SVD parallelization
// ---------------------------------------------------------------------------

struct MimoPrecoderResult {
    std::vector<TransmitFilterSpec> branches;   // per parallel channel
    std::vector<std::vector<double>> sigma2;    // per-branch |Sigma_i(w)|^2 grids
    std::vector<Eigen::MatrixXcd> u_bank;       // U(omega_n)
    std::vector<Eigen::MatrixXcd> v_bank;       // V(omega_n)
    std::vector<double> branch_power;           // sums to K
    double sum_objective = 0.0;
    bool branch_crossing = false;  // singular-value ties detected
};

MimoPrecoderResult mimo_precoders(const std::vector<Eigen::MatrixXcd>& h_taps, double n0, int l,
                                  int n_omega = 1024, int multistart = 3,
                                  std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Time-domain pulse realization
// ---------------------------------------------------------------------------

struct RealizedPulse {
    PulseSamples pulse;
    double linf_error = 0.0;  // on the passband, folded spectrum vs target
    bool vestigial_ok = true;
};

/// Realize a unit-energy pulse whose folded squared spectrum matches the
/// target |P(omega)|^2 limited to the band |omega| <= 2 pi W T.
RealizedPulse realize_pulse(std::span<const double> psq, double wt, int span_symbols,
                            int eta_s);

}  // namespace csdet

#endif
