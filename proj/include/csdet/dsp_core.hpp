#ifndef CSDET_DSP_CORE_HPP
#define CSDET_DSP_CORE_HPP

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace csdet {

using cplx = std::complex<double>;

constexpr double kPi = 3.141592653589793238462643383279502884;

// ---------------------------------------------------------------------------
// Constellations
// ---------------------------------------------------------------------------

enum class ConstellationKind { BPSK, QPSK, PSK8, APSK16, APSK32, GaussianMarker };

/// Zero-mean, unit-average-energy symbol alphabet. GaussianMarker carries no
/// point list and selects the closed-form Gaussian-input analysis paths.
struct Constellation {
    ConstellationKind kind = ConstellationKind::BPSK;
    std::vector<cplx> points;
    int cardinality() const { return static_cast<int>(points.size()); }
    bool gaussian_marker() const { return kind == ConstellationKind::GaussianMarker; }
};

Constellation make_constellation(ConstellationKind kind);
ConstellationKind constellation_kind_from_name(const std::string& name);
std::string constellation_name(ConstellationKind kind);

// ---------------------------------------------------------------------------
// Taps and spectra
// ---------------------------------------------------------------------------

/// Causal ISI response h_0..h_nu. Trailing (near-)zero taps are trimmed on
/// construction so memory() is meaningful.
struct ChannelTaps {
    std::vector<cplx> h;
    int memory() const { return static_cast<int>(h.size()) - 1; }
    double energy() const;
};

ChannelTaps make_channel_taps(std::vector<cplx> taps, double trim_rel = 0.0);

/// Hermitian autocorrelation sequence, stored as g_0..g_nu with the negative
/// lags implied: g_{-i} = conj(g_i).
struct AutocorrTaps {
    std::vector<cplx> g;
    int memory() const { return static_cast<int>(g.size()) - 1; }
    cplx at(int lag) const;
};

AutocorrTaps autocorrelate(const ChannelTaps& h);

/// Uniform grid of spectrum values at omega_n = -pi + 2*pi*n/size.
struct SpectrumSamples {
    std::vector<cplx> v;
    int size() const { return static_cast<int>(v.size()); }
    double omega(int n) const { return -kPi + 2.0 * kPi * n / size(); }
};

constexpr int kDefaultGrid = 4096;

/// T(omega) = sum_k taps[k] e^{-j omega (min_lag + k)} on the uniform grid.
SpectrumSamples dtft(std::span<const cplx> taps, int min_lag, int n_omega);
SpectrumSamples dtft(const ChannelTaps& h, int n_omega = kDefaultGrid);
SpectrumSamples dtft(const AutocorrTaps& g, int n_omega = kDefaultGrid);

/// t_i = (1/N) sum_n S(omega_n) e^{+j omega_n i} for i in [-max_lag, max_lag].
/// Returns 2*max_lag+1 values, index 0 <-> lag -max_lag.
std::vector<cplx> idtft_taps(const SpectrumSamples& s, int max_lag);
/// Single inverse-transform coefficient.
cplx idtft_lag(const SpectrumSamples& s, int lag);

std::vector<double> abs2(const SpectrumSamples& s);

// Rectangular-rule mean over the grid: approximates (1/2pi) * integral.
double grid_mean(std::span<const double> values);

std::vector<cplx> convolve(std::span<const cplx> a, std::span<const cplx> b);

// ---------------------------------------------------------------------------
// Pulses
// ---------------------------------------------------------------------------

/// Sampled shaping pulse at eta_s samples per symbol time T. samples[k] is the
/// pulse value at t = (k - origin) * T / eta_s. Unit energy: sum |s|^2 dt = 1.
struct PulseSamples {
    int eta_s = 8;
    double T = 1.0;
    int origin = 0;
    std::vector<cplx> samples;
    double dt() const { return T / eta_s; }
    double energy() const;
    /// Pulse value at arbitrary time (Catmull-Rom interpolation, 0 outside).
    cplx at_time(double t) const;
};

PulseSamples rrc_pulse(double rolloff, int span_symbols, int eta_s, double T = 1.0);
PulseSamples rc_pulse(double rolloff, int span_symbols, int eta_s, double T = 1.0);
PulseSamples gaussian_pulse(double bt, int span_symbols, int eta_s, double T = 1.0);
PulseSamples normalize_energy(PulseSamples p);

/// Cross-correlation integral p_a(t) p_b^*(t - lag_time) dt by quadrature,
/// with an optional modulation e^{-j 2 pi f t} under the integral.
cplx pulse_xcorr(const PulseSamples& a, const PulseSamples& b, double lag_time, double f = 0.0);

// ---------------------------------------------------------------------------
// Counter-based RNG
// ---------------------------------------------------------------------------

/// Counter-based generator (splitmix64 output function). Identical seeds give
/// identical streams; substream(id) derives an independent stream so Monte
/// Carlo blocks are reproducible regardless of scheduling.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed) {}
    SeededRng substream(std::uint64_t id) const;
    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    double uniform();  // [0, 1)
    double gaussian();
    cplx cgaussian(double variance);  // circularly symmetric, E|x|^2 = variance
    int uniform_int(int n);           // {0, .., n-1}

  private:
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::vector<int> random_symbols(const Constellation& c, long n, SeededRng& rng);
std::vector<cplx> map_symbols(const Constellation& c, std::span<const int> idx);

// ---------------------------------------------------------------------------
// Toeplitz / Szego utilities
// ---------------------------------------------------------------------------

/// y = T x where (T)_{lm} = g_{l-m} built from Hermitian autocorrelation taps.
std::vector<cplx> toeplitz_multiply(const AutocorrTaps& g, std::span<const cplx> x);

struct SzegoResult {
    double finite_n;    // (1/N) log2 det(I + G_N / N0)
    double asymptotic;  // (1/2pi) integral log2(1 + G(omega)/N0)
};

/// Both sides of the Szego log-det identity; throws if the Toeplitz matrix is
/// numerically indefinite (reports the offending eigenvalue).
SzegoResult szego_logdet(const AutocorrTaps& g, int n, double n0, int n_omega = kDefaultGrid);

}  // namespace csdet

#endif
