#ifndef CSDET_OBS_MODELS_HPP
#define CSDET_OBS_MODELS_HPP

#include <Eigen/Dense>

#include "csdet/dsp_core.hpp"

namespace csdet {

// ---------------------------------------------------------------------------
// Discrete-time observation models
// ---------------------------------------------------------------------------

/// Whitened-matched-filter observable: r_k = sum_i h_i c_{k-i} + w_k with
/// white complex Gaussian noise of variance n0.
struct ForneyModel {
    ChannelTaps h;
    double n0 = 1.0;
    int memory() const { return h.memory(); }
};

/// Matched-filter observable: r_k = sum_i g_i c_{k-i} + n_k, noise
/// autocorrelation E{n_{k+i} n_k^*} = n0 * g_i. `factor` is a spectral factor
/// of g (g = factor (x) factor*_-), used by the simulator.
struct UngerboeckModel {
    AutocorrTaps g;
    double n0 = 1.0;
    ChannelTaps factor;
    int memory() const { return g.memory(); }
};

UngerboeckModel ungerboeck_from_forney(const ForneyModel& fm);
UngerboeckModel ungerboeck_from_autocorr(AutocorrTaps g, double n0);

/// ISI of the matched-filter front end for a shaping pulse at symbol time
/// t_sym: g_i = integral p(t) p*(t - i t_sym) dt. Taps below 1e-6 g_0 trimmed.
AutocorrTaps ungerboeck_from_pulse(const PulseSamples& p, double t_sym);

/// Minimum-phase spectral factor h of a Hermitian PSD autocorrelation;
/// cepstral method. Throws if the spectrum is significantly negative.
ChannelTaps spectral_factorize(const AutocorrTaps& g, int n_omega = 0);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Observation record; sample at discrete time k lives at r[offset + k].
/// Valid k range is [-offset, size - offset).
struct SimOut {
    std::vector<cplx> r;
    int offset = 0;
    cplx at(int k) const {
        const int i = offset + k;
        if (i < 0 || i >= static_cast<int>(r.size())) return cplx(0.0, 0.0);
        return r[i];
    }
    int first_k() const { return -offset; }
    int last_k() const { return static_cast<int>(r.size()) - offset - 1; }
};

/// Forney-observable record covering k in [-guard, N+nu-1+guard]; symbols are
/// zero-padded outside [0, N).
SimOut simulate_forney(const ForneyModel& fm, std::span<const cplx> c, SeededRng& rng,
                       int guard = 0);

/// Ungerboeck-observable record for k in [-guard, N+guard): signal g (x) c
/// plus colored noise built by matched-filtering white noise with the factor.
SimOut simulate_ungerboeck(const UngerboeckModel& um, std::span<const cplx> c, SeededRng& rng,
                           int guard = 0);

/// Matched filter of a Forney record with the given taps: out_k = sum_j
/// conj(h_j) r_{k+j}, for k in [0, n).
SimOut matched_filter(const SimOut& rf, const ChannelTaps& h, int n);

/// Two-sided filtering: out_k = sum_m taps[m] r_{k - (min_lag + m)}.
SimOut filter_observation(const SimOut& in, std::span<const cplx> taps, int min_lag, int first_k,
                          int n);

// ---------------------------------------------------------------------------
// Block (MIMO / FDM / symbol-vector) models
// ---------------------------------------------------------------------------

/// Matrix Ungerboeck model: r_k = sum_i G_i c_{k-i} + n_k with K x K taps,
/// G_{-i} = G_i^dagger implied, noise autocorrelation N0 G_i, and optional
/// symbol-vector correlation V = E{c_k c_k^dagger} (identity for IID symbols).
struct BlockUngerboeckModel {
    int k = 1;
    std::vector<Eigen::MatrixXcd> g;  // index i = 0..Lg
    double n0 = 1.0;
    Eigen::MatrixXcd v;  // K x K Hermitian PD
    int lag_count() const { return static_cast<int>(g.size()); }
    Eigen::MatrixXcd at(int lag) const;
};

/// Block taps from a MIMO-ISI Forney response {H_i}: G_i = sum_k H_{k-i}^† H_k.
std::vector<Eigen::MatrixXcd> block_autocorrelate(const std::vector<Eigen::MatrixXcd>& h);

/// Matrix spectrum on the uniform grid: G(omega_n) = sum_i G_i e^{-j omega i}
/// including the implied negative lags.
std::vector<Eigen::MatrixXcd> block_dtft(const std::vector<Eigen::MatrixXcd>& g_taps,
                                         int n_omega);
/// Forward transform of a causal matrix sequence {H_i}, i >= 0.
std::vector<Eigen::MatrixXcd> block_dtft_causal(const std::vector<Eigen::MatrixXcd>& h_taps,
                                                int n_omega);

// ---------------------------------------------------------------------------
// FDM -> stationary MIMO-ISI conversion
// ---------------------------------------------------------------------------

struct FdmSpec {
    std::vector<PulseSamples> pulses;   // one per carrier
    std::vector<double> carrier_freqs;  // F_l, same units as 1/T
    double t_sym = 1.0;
    double lag_energy_residual = 1e-4;  // truncation threshold
};

struct FdmStationaryModel {
    BlockUngerboeckModel model;  // n0 left at 1.0; caller sets it
    std::vector<double> carrier_freqs;
    double t_sym = 1.0;
    /// Per-carrier rotation applied to symbols: x_k = c_k o rot(:,k).
    cplx rotation(int carrier, long k) const;
};

FdmStationaryModel fdm_stationary_model(const FdmSpec& spec);

}  // namespace csdet

#endif
