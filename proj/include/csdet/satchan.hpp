#ifndef CSDET_SATCHAN_HPP
#define CSDET_SATCHAN_HPP

#include "csdet/detector.hpp"

namespace csdet {

// ---------------------------------------------------------------------------
// Saleh HPA and the transponder chain
// ---------------------------------------------------------------------------

/// Memoryless Saleh nonlinearity: AM/AM A(rho) = alpha_a rho / (1 + beta_a
/// rho^2), AM/PM Phi(rho) = alpha_p rho^2 / (1 + beta_p rho^2).
struct SalehHpa {
    double alpha_a = 2.1322;
    double beta_a = 1.0746;
    double alpha_p = 1.7054;
    double beta_p = 1.5072;

    double amam(double rho) const { return alpha_a * rho / (1.0 + beta_a * rho * rho); }
    double ampm(double rho) const { return alpha_p * rho * rho / (1.0 + beta_p * rho * rho); }
    cplx apply(cplx x) const;
    double input_sat_amplitude() const { return 1.0 / std::sqrt(beta_a); }
    double sat_power() const { return amam(input_sat_amplitude()) * amam(input_sat_amplitude()); }
};

struct TransponderSpec {
    std::vector<cplx> imux;
    int imux_origin = 0;
    std::vector<cplx> omux;
    int omux_origin = 0;
    SalehHpa hpa;
    int eta_s = 8;
    double ibo_db = 0.0;
    double drive_scale = 0.0;  // 0: measure from the input block
    bool bypass_hpa = false;
    bool bypass_filters = false;
};

/// Linear-phase FIR IMUX/OMUX with calibrated 3-dB bandwidths (cycles per
/// symbol time; DVB-S2 transponder defaults are 0.94 and 0.85).
TransponderSpec make_transponder(int eta_s, double imux_3db_bw, double omux_3db_bw,
                                 const SalehHpa& hpa, double ibo_db);

struct TransponderOut {
    std::vector<cplx> s;
    double obo_db = 0.0;
    double drive_scale = 1.0;
};

/// IMUX -> drive scaling to the configured IBO -> Saleh -> OMUX, oversampled.
TransponderOut simulate_transponder(std::span<const cplx> x, const TransponderSpec& spec);

/// Oversampled linear-modulation waveform; sample m sits at t = (m - origin)
/// * T / eta_s with origin = pulse.origin.
std::vector<cplx> modulate_waveform(std::span<const cplx> c, const PulseSamples& pulse);

// ---------------------------------------------------------------------------
// Volterra receiver models
// ---------------------------------------------------------------------------

/// Simplified odd-order Volterra expansion: s(t) ~ sum_i sum_k c_k |c_k|^{2i}
/// h^{(2i+1)}(t - kT), with N_V = (v+1)/2 kernel waveforms.
struct VolterraModel {
    int v = 1;
    std::vector<PulseSamples> kernels;  // N_V entries on the system grid
    double residual_db = 0.0;           // fit MSE relative to signal power
    int nv() const { return static_cast<int>(kernels.size()); }
};

/// Regularized least-squares fit of the kernel waveforms against the actual
/// transponder output driven by an IID probe.
VolterraModel fit_volterra(const TransponderSpec& spec, const PulseSamples& tx_pulse,
                           const Constellation& probe, int v, long n_symbols,
                           std::uint64_t seed, int kernel_half_symbols = 8,
                           double ridge = 1e-6);

/// Constant-modulus constellations collapse the expansion to a single pulse
/// h_bar = sum_i h^{(2i+1)}.
PulseSamples psk_equivalent_pulse(const VolterraModel& model);

/// Lifted symbol-vector statistics for APSK: folded kernels (exact rank
/// reduction to the number of distinct rings), the matched-filter-bank taps
/// G_i, the correlation V = E{c c^dagger}, and the lifted alphabet.
struct ApskBlockStatistics {
    BlockUngerboeckModel model;          // n0 = 1; caller rescales
    Eigen::MatrixXcd v;                  // Hermitian PD after reduction
    VectorAlphabet lifted;
    std::vector<PulseSamples> kernels;   // folded kernel waveforms
};
ApskBlockStatistics apsk_block_statistics(const VolterraModel& model, const Constellation& c,
                                          double t_sym);

// ---------------------------------------------------------------------------
// Receive chains for the detection / AIR pipelines
// ---------------------------------------------------------------------------

struct SatellitePskChain {
    TransponderSpec spec;  // with drive_scale frozen from calibration
    PulseSamples tx_pulse;
    Constellation constellation;
    PulseSamples h_bar;  // fitted equivalent receive pulse
    AutocorrTaps g;      // matched-filter ISI of h_bar at T
    double obo_db = 0.0;
    double fit_residual_db = 0.0;
};

SatellitePskChain build_satellite_psk_chain(const TransponderSpec& spec,
                                            const PulseSamples& tx_pulse,
                                            const Constellation& c, long fit_symbols,
                                            std::uint64_t seed);

/// True-channel observable: waveform through the transponder, AWGN of PSD n0,
/// matched filter with h_bar sampled at the symbol rate (Ungerboeck record).
SimOut satellite_psk_observable(const SatellitePskChain& chain, std::span<const cplx> c,
                                double n0, SeededRng& rng);

/// Matched-filter-bank record for the lifted APSK model.
BlockObservation satellite_apsk_observable(const TransponderSpec& spec,
                                           const PulseSamples& tx_pulse,
                                           const ApskBlockStatistics& stats,
                                           std::span<const cplx> c, double n0, SeededRng& rng);

}  // namespace csdet

#endif
