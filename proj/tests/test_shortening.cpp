#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csdet/shortening.hpp"
#include "test_util.hpp"

using namespace csdet;

namespace {

const ChannelTaps kEpr4{{cplx(0.5, 0), cplx(0.5, 0), cplx(-0.5, 0), cplx(-0.5, 0)}};

// Independent fine-grid oracle: b_i by direct quadrature of the defining
// integral on a 2^16 grid, C by a dense solve. Deliberately avoids cs_b_taps
// and cs_core_from_b.
struct OracleDesign {
    std::vector<cplx> b;
    double c = 0.0;
    double i_opt = 0.0;
};

OracleDesign oracle_scalar_cs(const ChannelTaps& h, double n0, int l) {
    const int n = 1 << 16;
    OracleDesign d;
    d.b.assign(l + 1, cplx(0.0, 0.0));
    for (int i = 0; i < n; ++i) {
        const double w = -kPi + 2.0 * kPi * i / n;
        cplx hw(0.0, 0.0);
        for (size_t k = 0; k < h.h.size(); ++k) hw += h.h[k] * std::polar(1.0, -w * double(k));
        const double y = n0 / (std::norm(hw) + n0);
        for (int lag = 0; lag <= l; ++lag) d.b[lag] += y * std::polar(1.0, w * lag);
    }
    for (auto& v : d.b) v /= static_cast<double>(n);

    d.c = d.b[0].real();
    if (l > 0) {
        Eigen::MatrixXcd bm(l, l);
        for (int i = 0; i < l; ++i)
            for (int j = 0; j < l; ++j)
                bm(i, j) = j >= i ? d.b[j - i] : std::conj(d.b[i - j]);
        Eigen::VectorXcd rhs(l);
        for (int i = 0; i < l; ++i) rhs(i) = std::conj(d.b[i + 1]);
        const Eigen::VectorXcd sol = bm.fullPivLu().solve(rhs);
        cplx quad(0.0, 0.0);
        for (int i = 0; i < l; ++i) quad += d.b[i + 1] * sol(i);
        d.c -= quad.real();
    }
    d.i_opt = -std::log2(d.c);
    return d;
}

ChannelTaps random_channel(int nu, SeededRng& rng) {
    std::vector<cplx> h(nu + 1);
    for (auto& v : h) v = cplx(rng.gaussian(), rng.gaussian());
    if (std::abs(h.back()) < 0.05) h.back() += cplx(0.1, 0.0);
    return ChannelTaps{h};
}

}  // namespace

TEST_CASE("scalar CS: ISI-free closed form") {
    for (double n0 : {0.25, 1.0, 2.0}) {
        const ShortenerDesign d = design_scalar_cs(ChannelTaps{{cplx(1.0, 0.0)}}, n0, 0);
        CHECK(d.core.b[0].real() == doctest::Approx(n0 / (1.0 + n0)).epsilon(1e-12));
        CHECK(d.core.c_scalar == doctest::Approx(n0 / (1.0 + n0)).epsilon(1e-12));
        CHECK(d.i_opt() == doctest::Approx(std::log2(1.0 + 1.0 / n0)).epsilon(1e-12));
        // absorbed target at L=0 equals g0/N0 = 1/N0
        CHECK(d.core.target[0].real() == doctest::Approx(1.0 / n0).epsilon(1e-10));
    }
}

TEST_CASE("scalar CS matches the 2^16-grid quadrature oracle on EPR4") {
    const double n0 = kEpr4.energy() / std::pow(10.0, 0.6);  // 6 dB
    for (int l = 0; l <= 3; ++l) {
        const ShortenerDesign d = design_scalar_cs(kEpr4, n0, l);
        const OracleDesign o = oracle_scalar_cs(kEpr4, n0, l);
        for (int i = 0; i <= l; ++i) CHECK(std::abs(d.core.b[i] - o.b[i]) < 1e-6);
        CHECK(std::abs(d.core.c_scalar - o.c) < 1e-6);
        CHECK(std::abs(d.i_opt() - o.i_opt) < 1e-6);
    }
}

TEST_CASE("scalar CS: I_OPT non-decreasing in L and Szego-exact at L=nu") {
    SeededRng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const int nu = 1 + trial % 4;
        const ChannelTaps h = random_channel(nu, rng);
        const double n0 = 0.2 + rng.uniform();
        double prev = -1e300;
        for (int l = 0; l <= nu; ++l) {
            const ShortenerDesign d = design_scalar_cs(h, n0, l);
            CHECK(d.i_opt() >= prev - 1e-9);
            prev = d.i_opt();
        }
        const SzegoResult sz = szego_logdet(autocorrelate(h), 64, n0);
        CHECK(std::abs(prev - sz.asymptotic) < 1e-4);
    }
}

TEST_CASE("scalar CS on EPR4: L=3 reaches the Szego integral") {
    const double n0 = 0.35;
    const ShortenerDesign d = design_scalar_cs(kEpr4, n0, 3);
    const SzegoResult sz = szego_logdet(autocorrelate(kEpr4), 64, n0);
    CHECK(std::abs(d.i_opt() - sz.asymptotic) < 1e-4);
}

TEST_CASE("u-vector identity: target reproduces u (x) u*_- minus delta") {
    SeededRng rng(7);
    const ChannelTaps h = random_channel(3, rng);
    const ShortenerDesign d = design_scalar_cs(h, 0.5, 2);
    const auto& u = d.core.u;
    for (int i = 0; i <= 2; ++i) {
        cplx rho(0.0, 0.0);
        for (int k = 0; k + i <= 2; ++k) rho += u[k + i] * std::conj(u[k]);
        const cplx want = rho - (i == 0 ? cplx(1.0, 0.0) : cplx(0.0, 0.0));
        CHECK(std::abs(d.core.target[i] - want) < 1e-14);
    }
    // B Hermitian positive definite and C in (0, b0]
    CHECK(d.core.c_scalar > 0.0);
    CHECK(d.core.c_scalar <= d.core.b[0].real() + 1e-15);
}

TEST_CASE("front-end realization error is small and shrinks with the window") {
    SeededRng rng(19);
    const ChannelTaps h = random_channel(2, rng);
    const ShortenerDesign d = design_scalar_cs(h, 0.8, 1);
    CHECK(d.fe_realization_error < 1e-4);
    const ShortenerDesign wide = design_scalar_cs(h, 0.8, 1, kDefaultGrid, 128);
    CHECK(wide.fe_realization_error < d.fe_realization_error);
    CHECK(d.has_forney_fe);
    CHECK_NOTHROW(d.law(Observable::Forney));
    CHECK_NOTHROW(d.law(Observable::Ungerboeck));
}

TEST_CASE("finite-N Gaussian AIR approaches I_OPT") {
    SeededRng rng(23);
    for (int trial = 0; trial < 3; ++trial) {
        const ChannelTaps h = random_channel(2, rng);
        const double n0 = 0.5;
        for (int l : {1, 2}) {
            const ShortenerDesign d = design_scalar_cs(h, n0, l);
            const double finite = finite_n_gaussian_air(h, n0, l, 256);
            CHECK(std::abs(finite - d.i_opt()) < 0.01);
        }
    }
}

TEST_CASE("degenerate C raises instead of clamping") {
    // b taps of an (impossible) perfectly predictable error sequence
    std::vector<cplx> b = {cplx(1.0, 0.0), cplx(1.0, 0.0)};
    CHECK_THROWS(cs_core_from_b(b));
}

TEST_CASE("block CS: K=1 trivial V routes bit-exactly through the scalar path") {
    SeededRng rng(3);
    const ChannelTaps h = random_channel(3, rng);
    const double n0 = 0.7;
    const int l = 2;
    const ShortenerDesign sd = design_scalar_cs(h, n0, l);

    const SpectrumSamples hs = dtft(h, kDefaultGrid);
    std::vector<Eigen::MatrixXcd> gs(hs.size());
    for (int i = 0; i < hs.size(); ++i) {
        gs[i] = Eigen::MatrixXcd(1, 1);
        gs[i](0, 0) = std::norm(hs.v[i]);
    }
    const BlockShortenerDesign bd =
        design_block_cs(gs, Eigen::MatrixXcd::Identity(1, 1), n0, l);
    CHECK(bd.i_opt == sd.i_opt());  // bit-exact
    for (int i = 0; i <= l; ++i) {
        CHECK(bd.b[i](0, 0) == sd.core.b[i]);
        CHECK(bd.target[i](0, 0) == sd.core.target[i]);
    }
}

TEST_CASE("block CS on the printed 2x2 nu=3 channel: monotone in L") {
    std::vector<Eigen::MatrixXcd> h(4, Eigen::MatrixXcd(2, 2));
    h[0] << -0.080302, 0.256280, 0.385964, 0.353422;
    h[1] << 0.440662, -0.168631, 0.159813, -0.338684;
    h[2] << -0.358555, -0.303972, -0.084969, 0.668917;
    h[3] << 0.669006, 0.066229, 0.347376, -0.207065;

    double eh = 0.0;
    for (const auto& m : h) eh += m.squaredNorm();
    const double n0 = eh / std::pow(10.0, 0.8);  // mid SNR (8 dB on E_H/N0)

    double prev = -1e300;
    for (int l = 0; l <= 3; ++l) {
        const BlockShortenerDesign d = design_block_cs(h, n0, l);
        CHECK(d.i_opt >= prev - 1e-9);
        prev = d.i_opt;
        // script-C Hermitian PD
        Eigen::LLT<Eigen::MatrixXcd> llt(d.c_matrix);
        CHECK(llt.info() == Eigen::Success);
        // U_0^dagger U_0 = C^{-1}
        const Eigen::MatrixXcd cinv =
            d.c_matrix.llt().solve(Eigen::MatrixXcd::Identity(2, 2));
        CHECK((Eigen::MatrixXcd(d.u[0].adjoint() * d.u[0]) - cinv).norm() < 1e-9);
    }

    // L = nu reaches the MIMO Szego integral (flat inputs)
    const int n = kDefaultGrid;
    const std::vector<Eigen::MatrixXcd> hw = block_dtft_causal(h, n);
    double cap = 0.0;
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXcd m =
            Eigen::MatrixXcd::Identity(2, 2) + hw[i].adjoint() * hw[i] / n0;
        cap += std::log2(std::abs(m.determinant()));
    }
    cap /= n;
    CHECK(std::abs(prev - cap) < 1e-4);

    // finite-N within 0.01 bit of the asymptotic value; the boundary loss
    // scales with SNR, so this is checked at the low end of the sweep
    const double n0_low = eh / std::pow(10.0, 0.2);  // E_H/N0 = 2 dB
    const BlockShortenerDesign d1 = design_block_cs(h, n0_low, 1);
    const double fin = finite_n_gaussian_air_block(
        h, Eigen::MatrixXcd::Identity(2, 2), n0_low, 1, 256);
    CHECK(std::abs(fin - d1.i_opt) < 0.01);
}

TEST_CASE("truncation baseline: L=nu is the exact absorbed law") {
    const AutocorrTaps g = autocorrelate(kEpr4);
    const double n0 = 0.4;
    const MismatchedLaw ml = truncation_baseline(g, n0, 3);
    for (int i = 0; i <= 3; ++i) CHECK(std::abs(ml.target[i] - g.at(i) / n0) < 1e-15);
    CHECK(ml.front_end.size() == 1);
    CHECK(std::abs(ml.front_end[0] - cplx(1.0 / n0, 0.0)) < 1e-15);

    const MismatchedLaw m0 = truncation_baseline(g, n0, 0);
    CHECK(m0.target.size() == 1);  // memoryless law with target g0
}

TEST_CASE("legacy MMSE shortener: ISI-free identity scaling") {
    const ChannelTaps id{{cplx(1.0, 0.0)}};
    const double n0 = 0.5;
    const LegacyMmseDesign d = mmse_legacy_cs(id, n0, 0, 1);
    CHECK(std::abs(std::abs(d.q[0]) - 1.0) < 1e-12);
    CHECK(d.mse == doctest::Approx(n0 / (1.0 + n0)).epsilon(1e-9));
    // law target equals 1/N0 like the optimal design
    CHECK(std::abs(d.law.target[0] - cplx(1.0 / n0, 0.0)) < 1e-9);
}

TEST_CASE("legacy MMSE shortener: L=nu target response recovers the channel shape") {
    const double n0 = 0.3;
    const LegacyMmseDesign d = mmse_legacy_cs(kEpr4, n0, 3);
    CHECK(d.mse < 0.5);
    CHECK(d.law.target.size() == 4);
}

TEST_CASE("adaptive CS: estimates the closed-form error autocorrelation on EPR4") {
    const double es = kEpr4.energy();
    const double n0 = es / std::pow(10.0, 0.6);  // 6 dB
    const ForneyModel fm{kEpr4, n0};
    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);

    SeededRng rng(404);
    const long t = 100000;
    const std::vector<int> idx = random_symbols(bpsk, t, rng);
    const std::vector<cplx> c = map_symbols(bpsk, idx);
    const SimOut r = simulate_forney(fm, c, rng, 60);
    const int l = 1;
    const AdaptiveCsEstimate est = adaptive_cs(c, r, l, 81);
    REQUIRE_FALSE(est.degenerate);

    const ShortenerDesign ref = design_scalar_cs(kEpr4, n0, l);
    for (int i = 0; i <= l; ++i) {
        const double rel = std::abs(est.b_hat[i] - ref.core.b[i]) / std::abs(ref.core.b[i]);
        CHECK(rel < 0.02);
    }
    CHECK(std::abs(est.design.i_opt() - ref.i_opt()) < 0.01);
}

TEST_CASE("adaptive CS: statistical consistency and the degenerate flag") {
    const double n0 = 0.25;
    const ForneyModel fm{kEpr4, n0};
    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);
    const ShortenerDesign ref = design_scalar_cs(kEpr4, n0, 1);

    auto b_err = [&](long t, std::uint64_t seed) {
        SeededRng rng(seed);
        const std::vector<cplx> c = map_symbols(bpsk, random_symbols(bpsk, t, rng));
        const SimOut r = simulate_forney(fm, c, rng, 40);
        const AdaptiveCsEstimate est = adaptive_cs(c, r, 1, 21);
        double err = 0.0;
        for (int i = 0; i <= 1; ++i) err += std::abs(est.b_hat[i] - ref.core.b[i]);
        return err;
    };
    // average over a few seeds so the comparison is not a single draw
    double small = 0.0, big = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
        small += b_err(1500, 10 + s);
        big += b_err(100000, 20 + s);
    }
    CHECK(big < small);

    // zero-noise trivial channel -> degenerate
    SeededRng rng(5);
    const ForneyModel clean{ChannelTaps{{cplx(1.0, 0.0)}}, 0.0};
    const std::vector<cplx> c = map_symbols(bpsk, random_symbols(bpsk, 2000, rng));
    const SimOut r = simulate_forney(clean, c, rng, 20);
    const AdaptiveCsEstimate est = adaptive_cs(c, r, 1, 21);
    CHECK(est.degenerate);

    CHECK_THROWS(adaptive_cs(std::vector<cplx>(100, cplx(1.0, 0.0)), r, 1, 21));
}
