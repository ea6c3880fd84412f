#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csdet/detector.hpp"
#include "test_util.hpp"

using namespace csdet;

namespace {

double max_marginal_gap(const TrellisPosterior& a, const TrellisPosterior& b) {
    REQUIRE(a.n == b.n);
    REQUIRE(a.m == b.m);
    double mx = 0.0;
    for (int k = 0; k < a.n; ++k)
        for (int j = 0; j < a.m; ++j) mx = std::max(mx, std::abs(a.at(k, j) - b.at(k, j)));
    return mx;
}

ChannelTaps random_channel(int nu, SeededRng& rng, bool complex_taps) {
    std::vector<cplx> h(nu + 1);
    for (auto& v : h)
        v = complex_taps ? cplx(rng.gaussian(), rng.gaussian()) : cplx(rng.gaussian(), 0.0);
    if (std::abs(h.back()) < 0.05) h.back() += cplx(0.1, 0.0);
    return ChannelTaps{h};
}

}  // namespace

TEST_CASE("bcjr: ISI-free low-noise posteriors concentrate on the sent symbols") {
    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);
    const ForneyModel fm{ChannelTaps{{cplx(1.0, 0.0)}}, 1e-3};
    SeededRng rng(2);
    const std::vector<int> idx = random_symbols(bpsk, 32, rng);
    const std::vector<cplx> c = map_symbols(bpsk, idx);
    const SimOut r = simulate_forney(fm, c, rng);
    const TrellisPosterior post = bcjr(r, bpsk, fm, 32);
    for (int k = 0; k < 32; ++k) CHECK(post.at(k, idx[k]) > 0.999);
}

TEST_CASE("bcjr equals brute force on a fixed h=[1,0.5] BPSK instance") {
    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);
    const ForneyModel fm{ChannelTaps{{cplx(1.0, 0.0), cplx(0.5, 0.0)}}, 0.4};
    SeededRng rng(77);
    const std::vector<int> idx = random_symbols(bpsk, 6, rng);
    const std::vector<cplx> c = map_symbols(bpsk, idx);
    const SimOut r = simulate_forney(fm, c, rng);
    const TrellisPosterior fast = bcjr(r, bpsk, fm, 6);
    const TrellisPosterior slow = brute_force_map(r, bpsk, fm, 6);
    CHECK(max_marginal_gap(fast, slow) < 1e-9);
    CHECK(std::abs(fast.log_q_r - slow.log_q_r) < 1e-8);
}

TEST_CASE("bcjr equals brute force on 50 random instances (BPSK/QPSK, Forney + Ungerboeck)") {
    SeededRng master(31);
    for (int trial = 0; trial < 50; ++trial) {
        const bool qpsk = trial % 2 == 1;
        const Constellation c =
            make_constellation(qpsk ? ConstellationKind::QPSK : ConstellationKind::BPSK);
        const int nu = 1 + trial % 3;
        const int n = qpsk ? 5 : 7;
        const ChannelTaps h = random_channel(nu, master, trial % 3 == 0);
        const double n0 = 0.2 + 0.5 * master.uniform();
        const ForneyModel fm{h, n0};

        SeededRng rng = master.substream(trial);
        const std::vector<int> idx = random_symbols(c, n, rng);
        const std::vector<cplx> cc = map_symbols(c, idx);
        const SimOut rf = simulate_forney(fm, cc, rng);

        const TrellisPosterior fast = bcjr(rf, c, fm, n);
        const TrellisPosterior slow = brute_force_map(rf, c, fm, n);
        CHECK(max_marginal_gap(fast, slow) < 1e-9);
        CHECK(std::abs(fast.log_q_r - slow.log_q_r) < 1e-8);

        // Ungerboeck law on the matched-filter record agrees with brute force
        const UngerboeckModel um = ungerboeck_from_forney(fm);
        const SimOut ru = matched_filter(rf, h, n);
        const TrellisPosterior fast_u = bcjr(ru, c, um, n);
        const TrellisPosterior slow_u = brute_force_map(ru, c, um, n);
        CHECK(max_marginal_gap(fast_u, slow_u) < 1e-9);
    }
}

TEST_CASE("full-memory Forney and Ungerboeck laws give identical posteriors") {
    const Constellation qpsk = make_constellation(ConstellationKind::QPSK);
    SeededRng master(8);
    const ChannelTaps h = random_channel(2, master, true);
    const ForneyModel fm{h, 0.5};
    const UngerboeckModel um = ungerboeck_from_forney(fm);
    SeededRng rng(4);
    const std::vector<int> idx = random_symbols(qpsk, 40, rng);
    const SimOut rf = simulate_forney(fm, map_symbols(qpsk, idx), rng);
    const SimOut ru = matched_filter(rf, h, 40);
    const TrellisPosterior pf = bcjr(rf, qpsk, fm, 40);
    const TrellisPosterior pu = bcjr(ru, qpsk, um, 40);
    CHECK(max_marginal_gap(pf, pu) < 1e-8);
}

TEST_CASE("mismatched law with L=nu, target g/N0 and MF front end is exact") {
    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);
    SeededRng master(12);
    const ChannelTaps h = random_channel(2, master, false);
    const double n0 = 0.6;
    const ForneyModel fm{h, n0};
    const UngerboeckModel um = ungerboeck_from_forney(fm);

    MismatchedLaw law;
    law.expects = Observable::Forney;
    const int nu = h.memory();
    law.target.resize(nu + 1);
    for (int i = 0; i <= nu; ++i) law.target[i] = um.g.at(i) / n0;
    law.front_end.resize(nu + 1);
    for (int m = 0; m <= nu; ++m) law.front_end[m] = std::conj(h.h[nu - m]) / n0;
    law.fe_min_lag = -nu;

    SeededRng rng(9);
    const std::vector<int> idx = random_symbols(bpsk, 30, rng);
    const SimOut rf = simulate_forney(fm, map_symbols(bpsk, idx), rng);
    const SimOut ru = matched_filter(rf, h, 30);
    const TrellisPosterior pm = bcjr(rf, bpsk, law, 30);
    const TrellisPosterior pu = bcjr(ru, bpsk, um, 30);
    CHECK(max_marginal_gap(pm, pu) < 1e-9);
}

TEST_CASE("posteriors normalize and delta priors pass through") {
    const Constellation qpsk = make_constellation(ConstellationKind::QPSK);
    SeededRng master(21);
    const ChannelTaps h = random_channel(2, master, true);
    const ForneyModel fm{h, 0.8};
    SeededRng rng(3);
    const std::vector<int> idx = random_symbols(qpsk, 16, rng);
    const SimOut rf = simulate_forney(fm, map_symbols(qpsk, idx), rng);

    Priors priors;
    priors.m = 4;
    priors.logp.assign(16 * 4, -std::log(4.0));
    const int k_fixed = 7, a_fixed = 2;
    for (int a = 0; a < 4; ++a) priors.logp[k_fixed * 4 + a] = a == a_fixed ? 0.0 : -1e300;

    const TrellisPosterior post = bcjr(rf, qpsk, fm, 16, priors);
    for (int k = 0; k < 16; ++k) {
        double sum = 0.0;
        for (int a = 0; a < 4; ++a) sum += post.at(k, a);
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    CHECK(post.at(k_fixed, a_fixed) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward normalizations reproduce the brute-force log q(r)") {
    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);
    SeededRng master(44);
    for (int trial = 0; trial < 5; ++trial) {
        const ChannelTaps h = random_channel(2, master, false);
        const ForneyModel fm{h, 0.5};
        SeededRng rng = master.substream(trial);
        const std::vector<int> idx = random_symbols(bpsk, 8, rng);
        const SimOut rf = simulate_forney(fm, map_symbols(bpsk, idx), rng);
        const double lq = bcjr_log_q(rf, bpsk, fm, 8);
        const TrellisPosterior slow = brute_force_map(rf, bpsk, fm, 8);
        CHECK(std::abs(lq - slow.log_q_r) < 1e-8);
    }
}

TEST_CASE("path metric dominates q(r) in the zero-noise limit") {
    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);
    const ForneyModel fm{ChannelTaps{{cplx(1.0, 0.0), cplx(0.4, 0.0)}}, 1e-4};
    SeededRng rng(6);
    const std::vector<int> idx = random_symbols(bpsk, 10, rng);
    const SimOut rf = simulate_forney(fm, map_symbols(bpsk, idx), rng);
    // With N0 -> 0 the transmitted path dominates: log q(r) ~ log q(r|c) +
    // N log P(c).
    const double lq = bcjr_log_q(rf, bpsk, fm, 10);
    const double lp = path_log_metric(rf, bpsk, fm, idx);
    CHECK(std::abs(lq - (lp + 10 * std::log(0.5))) < 1e-3);
}

TEST_CASE("map_decide: argmax with lowest-index tie rule") {
    TrellisPosterior p;
    p.n = 2;
    p.m = 3;
    p.post = {0.2, 0.5, 0.3, 1.0 / 3, 1.0 / 3, 1.0 / 3};
    const std::vector<int> d = map_decide(p);
    CHECK(d[0] == 1);
    CHECK(d[1] == 0);  // uniform -> index 0
}

TEST_CASE("brute force: N=1 is Bayes rule") {
    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);
    const ForneyModel fm{ChannelTaps{{cplx(1.0, 0.0)}}, 0.5};
    SimOut r;
    r.offset = 0;
    r.r = {cplx(0.3, 0.1)};
    const TrellisPosterior post = brute_force_map(r, bpsk, fm, 1);
    const double e0 = std::exp(-std::norm(r.r[0] - cplx(-1.0, 0.0)) / 0.5);
    const double e1 = std::exp(-std::norm(r.r[0] - cplx(1.0, 0.0)) / 0.5);
    CHECK(post.at(0, 0) == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-12));
    CHECK(post.at(0, 1) == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-12));
}

TEST_CASE("state-space guard rejects oversized trellises") {
    const Constellation apsk = make_constellation(ConstellationKind::APSK32);
    std::vector<cplx> taps(6, cplx(0.3, 0.0));
    taps[0] = cplx(1.0, 0.0);
    const ForneyModel fm{ChannelTaps{taps}, 0.5};  // 32^5 = 2^25 states
    SimOut r;
    r.r.assign(32, cplx(0.0, 0.0));
    CHECK_THROWS(bcjr(r, apsk, fm, 16));
}

TEST_CASE("block bcjr equals block brute force (2x2 MIMO, BPSK)") {
    SeededRng master(55);
    std::vector<Eigen::MatrixXcd> h(2, Eigen::MatrixXcd(2, 2));
    for (auto& m : h)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m(i, j) = cplx(master.gaussian(), master.gaussian());
    const double n0 = 0.5;

    const Constellation bpsk = make_constellation(ConstellationKind::BPSK);
    const VectorAlphabet alph = product_alphabet(bpsk, 2);
    REQUIRE(alph.cardinality() == 4);

    BlockUngerboeckModel bm;
    bm.k = 2;
    bm.g = block_autocorrelate(h);
    bm.n0 = n0;
    bm.v = Eigen::MatrixXcd::Identity(2, 2);

    SeededRng rng(91);
    const int n = 5;
    std::vector<int> idx(n);
    for (auto& v : idx) v = rng.uniform_int(4);
    std::vector<Eigen::VectorXcd> c(n);
    for (int k = 0; k < n; ++k) c[k] = alph.points[idx[k]];
    const BlockObservation rf = simulate_block_forney(h, n0, c, rng);
    const BlockObservation ru = block_matched_filter(rf, h, n);

    const TrellisPosterior fast = bcjr_block(ru, alph, bm, n);
    const TrellisPosterior slow = brute_force_map_block(ru, alph, bm, n);
    CHECK(max_marginal_gap(fast, slow) < 1e-9);
    CHECK(std::abs(fast.log_q_r - slow.log_q_r) < 1e-8);
    CHECK(std::abs(bcjr_block_log_q(ru, alph, bm, n) - slow.log_q_r) < 1e-8);
}
