#ifndef CSDET_PACKING_HPP
#define CSDET_PACKING_HPP

#include <functional>

#include "csdet/air.hpp"
#include "csdet/shortening.hpp"

namespace csdet {

// ---------------------------------------------------------------------------
// Interpolation and the Eb/N0 fixed point
// ---------------------------------------------------------------------------

/// Natural cubic spline through strictly increasing abscissae; clamped
/// (constant) extrapolation outside the knot range.
class CubicSpline {
  public:
    CubicSpline(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

  private:
    std::vector<double> x_, y_, m_;  // second derivatives at knots
};

struct FixedPointResult {
    double esn0 = 0.0;  // linear
    double i_r = 0.0;   // bit/channel use at the solution
    int iterations = 0;
    bool ok = false;
    double bracket_lo = 0.0, bracket_hi = 0.0;  // reported when !ok
};

/// Solve Es/N0 = I(Es/N0) * Eb/N0 by damped iteration with a bisection
/// fallback; converges to |delta| < 1e-6 dB. `i_of_esn0` takes the linear
/// Es/N0 and must be nondecreasing over [lo, hi].
FixedPointResult ebn0_fixed_point(const std::function<double(double)>& i_of_esn0, double lo,
                                  double hi, double ebn0_linear);

// ---------------------------------------------------------------------------
// MMSE feedforward equalizer (symbol-by-symbol front end)
// ---------------------------------------------------------------------------

struct MmseEqualizer {
    std::vector<cplx> taps;  // as applied to the matched-filter record
    int min_lag = 0;
    int delay = 0;
    double mse = 0.0;
};

/// Wiener solution on the matched-filter output with an optimized decision
/// delay; at most 22 taps.
MmseEqualizer design_mmse_equalizer(const AutocorrTaps& g, double n0, int n_taps);

// ---------------------------------------------------------------------------
// Time / frequency packing optimization
// ---------------------------------------------------------------------------

struct PackingConfig {
    Constellation constellation;
    PulseSamples pulse;  // designed for the reference symbol time T_B = 1
    DetectorKind detector = DetectorKind::TrellisCs;
    int l = 1;
    bool qpsk_gray_rails = false;  // two independent binary rails (real channels)
    std::vector<double> tau_grid;  // T / T_B
    std::vector<double> nuf_grid;  // F * T_B
    std::vector<double> w_grid;    // bandwidth scale factors (empty = {1})
    int j_carriers = 0;            // adjacent carriers per side
    std::vector<double> esn0_db;
    std::vector<double> ebn0_db;
    long n_per_point = 10000;
    int blocks = 4;
    std::uint64_t seed = 1;
    double ni_scale = 1.0;      // detector noise-variance sweep factor
    int mmse_taps = 21;         // for sbs-mmse
    long max_states = 1 << 14;  // trellis guard
    long mc_budget = 0;         // total simulated symbols; 0 = unlimited
};

struct PackingPoint {
    double tau = 1.0, nuf = 1.0, w = 1.0;
    std::vector<AirEstimate> air;  // one per esn0_db entry
    std::vector<double> eta;
    double n_i = 0.0;
};

struct PackingSummary {
    double ebn0_db = 0.0;
    double eta_max = 0.0;
    double tau_opt = 0.0, nuf_opt = 0.0, w_opt = 0.0;
    double esn0_db_opt = 0.0;
    double air_opt = 0.0;
    bool ok = false;
};

struct PackingGridResult {
    std::vector<PackingPoint> points;
    std::vector<PackingSummary> summary;
    bool budget_exceeded = false;
};

PackingGridResult optimize_ase(const PackingConfig& cfg);

/// Single grid point: AIR estimates over the Es/N0 list for the configured
/// detector. Exposed for tests and the acceptance suite.
PackingPoint evaluate_packing_point(const PackingConfig& cfg, double tau, double nuf, double w);

}  // namespace csdet

#endif
