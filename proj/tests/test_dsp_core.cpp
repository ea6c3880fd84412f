#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csdet/dsp_core.hpp"
#include "test_util.hpp"

using namespace csdet;

TEST_CASE("constellations are zero-mean unit-energy") {
    for (auto kind : {ConstellationKind::BPSK, ConstellationKind::QPSK, ConstellationKind::PSK8,
                      ConstellationKind::APSK16, ConstellationKind::APSK32}) {
        const Constellation c = make_constellation(kind);
        cplx mean(0.0, 0.0);
        double pow = 0.0;
        for (const auto& p : c.points) {
            mean += p;
            pow += std::norm(p);
        }
        mean /= static_cast<double>(c.cardinality());
        pow /= static_cast<double>(c.cardinality());
        CHECK(std::abs(mean) < 1e-12);
        CHECK(std::abs(pow - 1.0) < 1e-12);
    }
    CHECK(make_constellation(ConstellationKind::BPSK).cardinality() == 2);
    CHECK(make_constellation(ConstellationKind::QPSK).cardinality() == 4);
    CHECK(make_constellation(ConstellationKind::PSK8).cardinality() == 8);
    CHECK(make_constellation(ConstellationKind::APSK16).cardinality() == 16);
    CHECK(make_constellation(ConstellationKind::APSK32).cardinality() == 32);
    CHECK(make_constellation(ConstellationKind::GaussianMarker).points.empty());
}

TEST_CASE("bpsk and qpsk exact points") {
    const Constellation b = make_constellation(ConstellationKind::BPSK);
    CHECK(std::abs(b.points[0] - cplx(-1.0, 0.0)) < 1e-15);
    CHECK(std::abs(b.points[1] - cplx(1.0, 0.0)) < 1e-15);
    const Constellation q = make_constellation(ConstellationKind::QPSK);
    for (const auto& p : q.points) {
        CHECK(std::abs(std::abs(p.real()) - 1.0 / std::sqrt(2.0)) < 1e-12);
        CHECK(std::abs(std::abs(p.imag()) - 1.0 / std::sqrt(2.0)) < 1e-12);
    }
}

TEST_CASE("8psk points sit on the expected half-step grid") {
    const Constellation c = make_constellation(ConstellationKind::PSK8);
    double power = 0.0;
    for (int m = 0; m < 8; ++m) {
        power += std::norm(c.points[m]);
        const double ang = std::arg(c.points[m]);
        // e^{j pi (2m+1)/8} for some m
        const double steps = ang / (kPi / 8.0);
        const double odd = std::fmod(std::abs(steps) + 8.0, 2.0);
        CHECK(std::abs(odd - 1.0) < 1e-9);
    }
    CHECK(std::abs(power / 8.0 - 1.0) < 1e-12);
}

TEST_CASE("channel taps trim trailing zeros") {
    const ChannelTaps h = make_channel_taps({cplx(1.0, 0.0), cplx(0.5, 0.0), cplx(0.0, 0.0)});
    CHECK(h.memory() == 1);
    const ChannelTaps z = make_channel_taps({cplx(0.0, 0.0), cplx(0.0, 0.0)});
    CHECK(z.memory() == 0);
}

TEST_CASE("dtft closed forms and round trip") {
    // taps = [1] -> constant spectrum
    const SpectrumSamples s1 = dtft(ChannelTaps{{cplx(1.0, 0.0)}}, 64);
    for (const auto& v : s1.v) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-14);

    // taps = [1,1] -> |T|^2 = 2 + 2 cos w
    const SpectrumSamples s2 = dtft(ChannelTaps{{cplx(1.0, 0.0), cplx(1.0, 0.0)}}, 256);
    for (int i = 0; i < s2.size(); ++i)
        CHECK(std::abs(std::norm(s2.v[i]) - (2.0 + 2.0 * std::cos(s2.omega(i)))) < 1e-12);

    // EPR4 has a spectral null at omega = 0
    const ChannelTaps epr4{{cplx(0.5, 0), cplx(0.5, 0), cplx(-0.5, 0), cplx(-0.5, 0)}};
    const SpectrumSamples s3 = dtft(epr4, 4096);
    CHECK(std::abs(s3.v[2048]) < 1e-12);  // omega index 2048 <-> 0

    // round trip to 1e-10
    SeededRng rng(7);
    std::vector<cplx> taps(5);
    for (auto& t : taps) t = cplx(rng.gaussian(), rng.gaussian());
    const SpectrumSamples sp = dtft(taps, 0, 1024);
    const std::vector<cplx> back = idtft_taps(sp, 6);
    for (int lag = -6; lag <= 6; ++lag) {
        const cplx want = (lag >= 0 && lag < 5) ? taps[lag] : cplx(0.0, 0.0);
        CHECK(std::abs(back[lag + 6] - want) < 1e-10);
    }

    CHECK_THROWS(dtft(taps, 0, 8));  // grid too small
}

TEST_CASE("rrc pulse: unit energy and Nyquist autocorrelation") {
    const PulseSamples p = rrc_pulse(0.2, 32, 8);
    CHECK(std::abs(p.energy() - 1.0) < 1e-12);

    const cplx g0 = pulse_xcorr(p, p, 0.0);
    CHECK(std::abs(g0.real() - 1.0) < 1e-12);
    for (int i = 1; i <= 6; ++i) {
        const cplx gi = pulse_xcorr(p, p, static_cast<double>(i));
        CHECK(std::abs(gi) < 1e-3);
    }

    // alpha = 0, long span: sinc-like; still near-orthogonal at symbol shifts
    const PulseSamples p0 = rrc_pulse(0.0, 64, 8);
    for (int i = 1; i <= 4; ++i) CHECK(std::abs(pulse_xcorr(p0, p0, i * 1.0)) < 2e-2);

    // satellite configuration pulse exists
    const PulseSamples p05 = rrc_pulse(0.05, 32, 8);
    CHECK(std::abs(p05.energy() - 1.0) < 1e-12);

    CHECK_THROWS(rrc_pulse(1.5, 32, 8));
    CHECK_THROWS(rrc_pulse(0.2, 4, 8));
}

TEST_CASE("rc and gaussian pulses normalize") {
    CHECK(std::abs(rc_pulse(0.2, 32, 8).energy() - 1.0) < 1e-12);
    CHECK(std::abs(gaussian_pulse(0.3, 32, 8).energy() - 1.0) < 1e-12);
}

TEST_CASE("seeded rng is deterministic with independent substreams") {
    SeededRng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    SeededRng s0 = SeededRng(42).substream(0);
    SeededRng s1 = SeededRng(42).substream(1);
    CHECK(s0.next_u64() != s1.next_u64());

    // gaussian moments sanity
    SeededRng g(3);
    double m1 = 0.0, m2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = g.gaussian();
        m1 += x;
        m2 += x * x;
    }
    m1 /= n;
    m2 /= n;
    CHECK(std::abs(m1) < 0.01);
    CHECK(std::abs(m2 - 1.0) < 0.02);
}

TEST_CASE("toeplitz multiply equals direct convolution") {
    SeededRng rng(11);
    const AutocorrTaps g = testutil::random_psd_autocorr(3, rng);
    std::vector<cplx> x(16);
    for (auto& v : x) v = cplx(rng.gaussian(), rng.gaussian());
    const std::vector<cplx> y = toeplitz_multiply(g, x);
    for (int l = 0; l < 16; ++l) {
        cplx want(0.0, 0.0);
        for (int m = 0; m < 16; ++m) want += g.at(l - m) * x[m];
        CHECK(std::abs(y[l] - want) < 1e-12);
    }
}

TEST_CASE("szego log-det: closed forms") {
    // ISI-free
    AutocorrTaps delta;
    delta.g = {cplx(1.0, 0.0)};
    const SzegoResult r = szego_logdet(delta, 32, 0.5);
    CHECK(r.finite_n == doctest::Approx(std::log2(1.0 + 2.0)).epsilon(1e-12));
    CHECK(r.asymptotic == doctest::Approx(std::log2(1.0 + 2.0)).epsilon(1e-12));

    // zero channel
    AutocorrTaps zero;
    zero.g = {cplx(0.0, 0.0)};
    const SzegoResult rz = szego_logdet(zero, 16, 1.0);
    CHECK(rz.finite_n == doctest::Approx(0.0));
    CHECK(rz.asymptotic == doctest::Approx(0.0));
}

TEST_CASE("szego log-det: EPR4 convergence") {
    const ChannelTaps epr4{{cplx(0.5, 0), cplx(0.5, 0), cplx(-0.5, 0), cplx(-0.5, 0)}};
    const AutocorrTaps g = autocorrelate(epr4);
    const SzegoResult r = szego_logdet(g, 512, 1.0);
    CHECK(std::abs(r.finite_n - r.asymptotic) < 0.01);
}

TEST_CASE("szego convergence improves with N on random PSD channels") {
    SeededRng rng(5);
    for (int trial = 0; trial < 3; ++trial) {
        const AutocorrTaps g = testutil::random_psd_autocorr(4, rng);
        double prev = 1e300;
        for (int n : {64, 256, 1024}) {
            const SzegoResult r = szego_logdet(g, n, 1.0);
            const double gap = std::abs(r.finite_n - r.asymptotic);
            CHECK(gap <= prev * 1.1 + 1e-12);  // 10% jitter tolerance
            prev = gap;
        }
    }
}

TEST_CASE("szego rejects non-psd input") {
    AutocorrTaps bad;
    bad.g = {cplx(1.0, 0.0), cplx(0.9, 0.0), cplx(0.9, 0.0)};  // spectrum dips negative
    CHECK_THROWS(szego_logdet(bad, 64, 1.0));
}
