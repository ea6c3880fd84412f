#ifndef CSDET_AIR_HPP
#define CSDET_AIR_HPP

#include <functional>

#include "csdet/detector.hpp"

namespace csdet {

struct AirEstimate {
    double value = 0.0;    // bit / channel use
    double std_err = 0.0;  // sample std of per-block AIR / sqrt(blocks)
    long n_symbols = 0;    // per block
    int blocks = 0;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Trellis-based Monte Carlo AIR (forward recursion of the BCJR)
// ---------------------------------------------------------------------------

/// True-channel simulator: maps a symbol block to the observable the law
/// consumes (Forney or Ungerboeck record, with any guards already included).
struct TrellisChannel {
    Constellation constellation;
    std::function<SimOut(std::span<const cplx>, SeededRng&)> simulate;
};

/// I_R = (1/N) E[log2 q(r|c) - log2 q(r)], averaged over `blocks` independent
/// blocks with per-block RNG substreams. Deterministic for a fixed seed,
/// regardless of thread count.
AirEstimate mc_air_trellis(const TrellisChannel& ch, const DetectionLaw& law, long n_per_block,
                           int blocks, std::uint64_t seed, int threads = 1);

/// Block-model variant (MIMO-ISI / lifted symbol vectors).
struct BlockTrellisChannel {
    VectorAlphabet alphabet;
    std::function<BlockObservation(std::span<const int>, SeededRng&)> simulate;
};
AirEstimate mc_air_trellis_block(const BlockTrellisChannel& ch, const BlockDetectionLaw& law,
                                 long n_per_block, int blocks, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Symbol-by-symbol AIR with a Gaussian auxiliary channel
// ---------------------------------------------------------------------------

/// Auxiliary channel r = sqrt(es) h00 c + v, v ~ CN(0, variance).
struct SbsAux {
    double es = 1.0;
    cplx h00 = cplx(1.0, 0.0);
    double variance = 1.0;  // N0 + N_I
};

/// Simulator fills matched index/observation arrays drawn from the true
/// channel (stationarized: any FDM rotation already removed).
struct SbsChannel {
    Constellation constellation;
    std::function<void(long, SeededRng&, std::vector<int>&, std::vector<cplx>&)> simulate;
};

AirEstimate sbs_air(const SbsChannel& ch, const SbsAux& aux, long n_per_block, int blocks,
                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Interference bookkeeping for time/frequency packing
// ---------------------------------------------------------------------------

enum class DetectorKind { SbsMf, SbsWf, SbsMmse, TrellisForney, TrellisUngerboeck, TrellisCs };

DetectorKind detector_kind_from_name(const std::string& name);
std::string detector_kind_name(DetectorKind kind);

struct InterferenceBudget {
    double es = 1.0;
    double n_i = 0.0;  // lumped interference power
    std::vector<cplx> own_taps;  // effective own-channel taps, noise white N0
    int own_min_lag = 0;
    double own_residual = 0.0;   // own-channel power beyond detector memory
    double cross_power = 0.0;    // adjacent-carrier power through the front end
    AutocorrTaps g;              // matched-filter ISI of the packed pulse
    ChannelTaps whitened;        // spectral factor of g
    int l = 0;
    DetectorKind kind = DetectorKind::TrellisForney;
};

/// Effective interference coefficients h(n, l, k) by pulse cross-correlation
/// quadrature, and the lumped N_I for the chosen detector.
InterferenceBudget interference_budget(const PulseSamples& p, double t_sym, double f_spacing,
                                       int j_carriers, DetectorKind kind, int l,
                                       double es = 1.0,
                                       std::span<const cplx> mmse_taps = {},
                                       int mmse_min_lag = 0);

// ---------------------------------------------------------------------------
// Spectral efficiency
// ---------------------------------------------------------------------------

struct AseValue {
    double eta = 0.0;  // bit/s/Hz
    double i_r = 0.0;
    double ft = 0.0;  // normalized time-frequency product
};

/// eta = I_R / (F T).
AseValue ase(double i_r, double f, double t);

}  // namespace csdet

#endif
