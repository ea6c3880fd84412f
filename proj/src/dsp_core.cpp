#include "csdet/dsp_core.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csdet {

// ---------------------------------------------------------------------------
// Constellations
// ---------------------------------------------------------------------------

namespace {

std::vector<cplx> psk_ring(int m, double radius, double phase0) {
    std::vector<cplx> p(m);
    for (int k = 0; k < m; ++k) {
        const double th = phase0 + 2.0 * kPi * k / m;
        p[k] = radius * cplx(std::cos(th), std::sin(th));
    }
    return p;
}

void append(std::vector<cplx>& dst, const std::vector<cplx>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

std::vector<cplx> normalize_points(std::vector<cplx> p) {
    cplx mean(0.0, 0.0);
    for (const auto& x : p) mean += x;
    mean /= static_cast<double>(p.size());
    double pow = 0.0;
    for (auto& x : p) {
        x -= mean;
        pow += std::norm(x);
    }
    pow /= static_cast<double>(p.size());
    const double s = 1.0 / std::sqrt(pow);
    for (auto& x : p) x *= s;
    return p;
}

}  // namespace

Constellation make_constellation(ConstellationKind kind) {
    Constellation c;
    c.kind = kind;
    switch (kind) {
        case ConstellationKind::BPSK:
            c.points = {cplx(-1.0, 0.0), cplx(1.0, 0.0)};
            break;
        case ConstellationKind::QPSK:
            c.points = psk_ring(4, 1.0, kPi / 4.0);
            break;
        case ConstellationKind::PSK8:
            c.points = psk_ring(8, 1.0, kPi / 8.0);
            break;
        case ConstellationKind::APSK16: {
            // DVB-S2 4+12 layout; ring ratio gamma = 2.85 (code-rate-independent
            // default, see README).
            const double gamma = 2.85;
            const double r1 = std::sqrt(16.0 / (4.0 + 12.0 * gamma * gamma));
            std::vector<cplx> p = psk_ring(4, r1, kPi / 4.0);
            append(p, psk_ring(12, r1 * gamma, kPi / 12.0));
            c.points = std::move(p);
            break;
        }
        case ConstellationKind::APSK32: {
            // DVB-S2 4+12+16 layout; gamma1 = 2.84, gamma2 = 5.27.
            const double g1 = 2.84, g2 = 5.27;
            const double r1 =
                std::sqrt(32.0 / (4.0 + 12.0 * g1 * g1 + 16.0 * g2 * g2));
            std::vector<cplx> p = psk_ring(4, r1, kPi / 4.0);
            append(p, psk_ring(12, r1 * g1, kPi / 12.0));
            append(p, psk_ring(16, r1 * g2, 0.0));
            c.points = std::move(p);
            break;
        }
        case ConstellationKind::GaussianMarker:
            return c;
    }
    c.points = normalize_points(std::move(c.points));
    return c;
}

ConstellationKind constellation_kind_from_name(const std::string& name) {
    if (name == "bpsk") return ConstellationKind::BPSK;
    if (name == "qpsk") return ConstellationKind::QPSK;
    if (name == "8psk") return ConstellationKind::PSK8;
    if (name == "16apsk") return ConstellationKind::APSK16;
    if (name == "32apsk") return ConstellationKind::APSK32;
    if (name == "gaussian") return ConstellationKind::GaussianMarker;
    throw std::invalid_argument("unsupported constellation: " + name);
}

std::string constellation_name(ConstellationKind kind) {
    switch (kind) {
        case ConstellationKind::BPSK: return "bpsk";
        case ConstellationKind::QPSK: return "qpsk";
        case ConstellationKind::PSK8: return "8psk";
        case ConstellationKind::APSK16: return "16apsk";
        case ConstellationKind::APSK32: return "32apsk";
        case ConstellationKind::GaussianMarker: return "gaussian";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Taps and spectra
// ---------------------------------------------------------------------------

double ChannelTaps::energy() const {
    double e = 0.0;
    for (const auto& x : h) e += std::norm(x);
    return e;
}

ChannelTaps make_channel_taps(std::vector<cplx> taps, double trim_rel) {
    double peak = 0.0;
    for (const auto& x : taps) peak = std::max(peak, std::abs(x));
    const double thr = trim_rel * peak;
    while (taps.size() > 1 && std::abs(taps.back()) <= thr) taps.pop_back();
    if (taps.empty()) taps.push_back(cplx(0.0, 0.0));
    return ChannelTaps{std::move(taps)};
}

cplx AutocorrTaps::at(int lag) const {
    const int a = std::abs(lag);
    if (a >= static_cast<int>(g.size())) return cplx(0.0, 0.0);
    return lag >= 0 ? g[a] : std::conj(g[a]);
}

AutocorrTaps autocorrelate(const ChannelTaps& h) {
    const int n = static_cast<int>(h.h.size());
    AutocorrTaps g;
    g.g.resize(n);
    for (int i = 0; i < n; ++i) {
        cplx s(0.0, 0.0);
        for (int k = 0; k + i < n; ++k) s += h.h[k + i] * std::conj(h.h[k]);
        g.g[i] = s;
    }
    while (g.g.size() > 1 && std::abs(g.g.back()) == 0.0) g.g.pop_back();
    return g;
}

SpectrumSamples dtft(std::span<const cplx> taps, int min_lag, int n_omega) {
    if (n_omega < 4 * static_cast<int>(taps.size()))
        throw std::invalid_argument("dtft: grid too small for tap count");
    SpectrumSamples s;
    s.v.resize(n_omega);
    for (int n = 0; n < n_omega; ++n) {
        const double w = -kPi + 2.0 * kPi * n / n_omega;
        cplx acc(0.0, 0.0);
        for (size_t k = 0; k < taps.size(); ++k) {
            const double ph = -w * (min_lag + static_cast<int>(k));
            acc += taps[k] * cplx(std::cos(ph), std::sin(ph));
        }
        s.v[n] = acc;
    }
    return s;
}

SpectrumSamples dtft(const ChannelTaps& h, int n_omega) {
    return dtft(std::span<const cplx>(h.h), 0, n_omega);
}

SpectrumSamples dtft(const AutocorrTaps& g, int n_omega) {
    std::vector<cplx> two_sided;
    const int nu = g.memory();
    two_sided.reserve(2 * nu + 1);
    for (int i = -nu; i <= nu; ++i) two_sided.push_back(g.at(i));
    return dtft(std::span<const cplx>(two_sided), -nu, n_omega);
}

cplx idtft_lag(const SpectrumSamples& s, int lag) {
    const int n = s.size();
    cplx acc(0.0, 0.0);
    for (int i = 0; i < n; ++i) {
        const double ph = s.omega(i) * lag;
        acc += s.v[i] * cplx(std::cos(ph), std::sin(ph));
    }
    return acc / static_cast<double>(n);
}

std::vector<cplx> idtft_taps(const SpectrumSamples& s, int max_lag) {
    std::vector<cplx> out(2 * max_lag + 1);
    for (int lag = -max_lag; lag <= max_lag; ++lag) out[lag + max_lag] = idtft_lag(s, lag);
    return out;
}

std::vector<double> abs2(const SpectrumSamples& s) {
    std::vector<double> out(s.v.size());
    for (size_t i = 0; i < s.v.size(); ++i) out[i] = std::norm(s.v[i]);
    return out;
}

double grid_mean(std::span<const double> values) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

std::vector<cplx> convolve(std::span<const cplx> a, std::span<const cplx> b) {
    if (a.empty() || b.empty()) return {};
    std::vector<cplx> out(a.size() + b.size() - 1, cplx(0.0, 0.0));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// ---------------------------------------------------------------------------
// Pulses
// ---------------------------------------------------------------------------

double PulseSamples::energy() const {
    double e = 0.0;
    for (const auto& x : samples) e += std::norm(x);
    return e * dt();
}

cplx PulseSamples::at_time(double t) const {
    // Catmull-Rom on the sample grid.
    const double x = t / dt() + origin;
    const int n = static_cast<int>(samples.size());
    const int i1 = static_cast<int>(std::floor(x));
    if (i1 < -1 || i1 > n - 1) return cplx(0.0, 0.0);
    const double u = x - i1;
    auto sample = [&](int i) -> cplx {
        return (i >= 0 && i < n) ? samples[i] : cplx(0.0, 0.0);
    };
    const cplx p0 = sample(i1 - 1), p1 = sample(i1), p2 = sample(i1 + 1), p3 = sample(i1 + 2);
    const double u2 = u * u, u3 = u2 * u;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
}

PulseSamples normalize_energy(PulseSamples p) {
    const double e = p.energy();
    if (e <= 0.0) throw std::invalid_argument("pulse has zero energy");
    const double s = 1.0 / std::sqrt(e);
    for (auto& x : p.samples) x *= s;
    return p;
}

namespace {

// Raised-cosine taper over the outer 10% of the span bounds the truncation
// error of the infinite-support pulses.
double edge_taper(double t, double t_max) {
    const double a = std::abs(t) / t_max;
    if (a <= 0.9) return 1.0;
    if (a >= 1.0) return 0.0;
    const double u = (a - 0.9) / 0.1;
    return 0.5 * (1.0 + std::cos(kPi * u));
}

PulseSamples build_pulse(double (*shape)(double, double, double), double param, int span_symbols,
                         int eta_s, double T) {
    if (span_symbols < 8) throw std::invalid_argument("pulse span too small (need >= 8 symbols)");
    PulseSamples p;
    p.eta_s = eta_s;
    p.T = T;
    const int half = span_symbols * eta_s / 2;
    p.origin = half;
    p.samples.resize(2 * half + 1);
    const double t_max = 0.5 * span_symbols * T;
    for (int k = -half; k <= half; ++k) {
        const double t = k * T / eta_s;
        p.samples[k + half] = shape(t, param, T) * edge_taper(t, t_max);
    }
    return normalize_energy(std::move(p));
}

double rrc_shape(double t, double a, double T) {
    const double x = t / T;
    if (a < 0.0 || a > 1.0) throw std::invalid_argument("rolloff must be in [0,1]");
    if (std::abs(x) < 1e-9) return 1.0 + a * (4.0 / kPi - 1.0);
    if (a > 0.0) {
        const double xc = 1.0 / (4.0 * a);
        if (std::abs(std::abs(x) - xc) < 1e-9) {
            return (a / std::sqrt(2.0)) *
                   ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * a)) +
                    (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * a)));
        }
    }
    const double num = std::sin(kPi * x * (1.0 - a)) + 4.0 * a * x * std::cos(kPi * x * (1.0 + a));
    const double den = kPi * x * (1.0 - (4.0 * a * x) * (4.0 * a * x));
    return num / den;
}

double rc_shape(double t, double a, double T) {
    const double x = t / T;
    double s;
    if (std::abs(x) < 1e-9) {
        s = 1.0;
    } else {
        s = std::sin(kPi * x) / (kPi * x);
    }
    if (a > 0.0) {
        const double xc = 1.0 / (2.0 * a);
        if (std::abs(std::abs(x) - xc) < 1e-9) return s * kPi / 4.0;
        return s * std::cos(kPi * a * x) / (1.0 - (2.0 * a * x) * (2.0 * a * x));
    }
    return s;
}

double gauss_shape(double t, double bt, double T) {
    // 3-dB bandwidth B with B*T = bt.
    const double sigma = std::sqrt(std::log(2.0)) / (2.0 * kPi * bt / T);
    return std::exp(-t * t / (2.0 * sigma * sigma));
}

}  // namespace

PulseSamples rrc_pulse(double rolloff, int span_symbols, int eta_s, double T) {
    return build_pulse(rrc_shape, rolloff, span_symbols, eta_s, T);
}

PulseSamples rc_pulse(double rolloff, int span_symbols, int eta_s, double T) {
    return build_pulse(rc_shape, rolloff, span_symbols, eta_s, T);
}

PulseSamples gaussian_pulse(double bt, int span_symbols, int eta_s, double T) {
    if (bt <= 0.0) throw std::invalid_argument("gaussian pulse needs bt > 0");
    return build_pulse(gauss_shape, bt, span_symbols, eta_s, T);
}

cplx pulse_xcorr(const PulseSamples& a, const PulseSamples& b, double lag_time, double f) {
    cplx acc(0.0, 0.0);
    const int n = static_cast<int>(a.samples.size());
    for (int k = 0; k < n; ++k) {
        const double t = (k - a.origin) * a.dt();
        cplx term = a.samples[k] * std::conj(b.at_time(t - lag_time));
        if (f != 0.0) {
            const double ph = -2.0 * kPi * f * t;
            term *= cplx(std::cos(ph), std::sin(ph));
        }
        acc += term;
    }
    return acc * a.dt();
}

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

namespace {
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace

SeededRng SeededRng::substream(std::uint64_t id) const {
    return SeededRng(mix64(seed_ + 0xD1342543DE82EF95ULL * (id + 1)));
}

std::uint64_t SeededRng::next_u64() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix64(seed_ + counter_);
}

double SeededRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
}

cplx SeededRng::cgaussian(double variance) {
    const double s = std::sqrt(0.5 * variance);
    return cplx(s * gaussian(), s * gaussian());
}

int SeededRng::uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

std::vector<int> random_symbols(const Constellation& c, long n, SeededRng& rng) {
    std::vector<int> idx(n);
    for (long i = 0; i < n; ++i) idx[i] = rng.uniform_int(c.cardinality());
    return idx;
}

std::vector<cplx> map_symbols(const Constellation& c, std::span<const int> idx) {
    std::vector<cplx> out(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) out[i] = c.points[idx[i]];
    return out;
}

// ---------------------------------------------------------------------------
// Toeplitz / Szego
// ---------------------------------------------------------------------------

std::vector<cplx> toeplitz_multiply(const AutocorrTaps& g, std::span<const cplx> x) {
    const int n = static_cast<int>(x.size());
    std::vector<cplx> y(n, cplx(0.0, 0.0));
    for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m) y[l] += g.at(l - m) * x[m];
    return y;
}

SzegoResult szego_logdet(const AutocorrTaps& g, int n, double n0, int n_omega) {
    if (n < 1 || n > 4096) throw std::invalid_argument("szego_logdet: N out of range");
    if (n0 <= 0.0) throw std::invalid_argument("szego_logdet: N0 must be positive");

    {
        const SpectrumSamples check = dtft(g, n_omega);
        double mn = 0.0, mx = 0.0;
        for (const auto& v : check.v) {
            mn = std::min(mn, v.real());
            mx = std::max(mx, std::abs(v.real()));
        }
        if (mn < -1e-9 * std::max(mx, 1.0))
            throw std::runtime_error("szego_logdet: autocorrelation not PSD, min spectrum " +
                                     std::to_string(mn));
    }

    bool real = true;
    for (const auto& v : g.g)
        if (v.imag() != 0.0) real = false;

    double logdet = 0.0;  // natural log of det(I + G_N/N0)
    if (real) {
        Eigen::MatrixXd m(n, n);
        for (int l = 0; l < n; ++l)
            for (int c = 0; c < n; ++c) m(l, c) = g.at(l - c).real() / n0 + (l == c ? 1.0 : 0.0);
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() != Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
            throw std::runtime_error("szego_logdet: Toeplitz matrix not PSD, min eigenvalue " +
                                     std::to_string(es.eigenvalues().minCoeff()));
        }
        for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    } else {
        Eigen::MatrixXcd m(n, n);
        for (int l = 0; l < n; ++l)
            for (int c = 0; c < n; ++c)
                m(l, c) = g.at(l - c) / n0 + (l == c ? cplx(1.0, 0.0) : cplx(0.0, 0.0));
        Eigen::LLT<Eigen::MatrixXcd> llt(m);
        if (llt.info() != Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
            throw std::runtime_error("szego_logdet: Toeplitz matrix not PSD, min eigenvalue " +
                                     std::to_string(es.eigenvalues().minCoeff()));
        }
        for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(std::real(llt.matrixL()(i, i)));
    }

    SzegoResult r;
    r.finite_n = logdet / (n * std::log(2.0));

    const SpectrumSamples gs = dtft(g, n_omega);
    double acc = 0.0;
    for (const auto& v : gs.v) acc += std::log2(1.0 + std::max(0.0, v.real()) / n0);
    r.asymptotic = acc / gs.size();
    return r;
}

}  // namespace csdet
