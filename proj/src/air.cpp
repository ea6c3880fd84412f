#include "csdet/air.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace csdet {

namespace {

AirEstimate reduce_blocks(const std::vector<double>& per_block, long n, std::uint64_t seed) {
    AirEstimate est;
    est.n_symbols = n;
    est.blocks = static_cast<int>(per_block.size());
    est.seed = seed;
    double mean = 0.0;
    for (double v : per_block) mean += v;
    mean /= est.blocks;
    est.value = mean;
    if (est.blocks > 1) {
        double var = 0.0;
        for (double v : per_block) var += (v - mean) * (v - mean);
        var /= (est.blocks - 1);
        est.std_err = std::sqrt(var / est.blocks);
    }
    return est;
}

void run_blocks(int blocks, int threads, const std::function<double(int)>& one_block,
                std::vector<double>* out) {
    out->assign(blocks, 0.0);
    if (threads <= 1) {
        for (int b = 0; b < blocks; ++b) (*out)[b] = one_block(b);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int b = next.fetch_add(1);
            if (b >= blocks) break;
            (*out)[b] = one_block(b);
        }
    };
    std::vector<std::thread> pool;
    const int nt = std::min(threads, blocks);
    pool.reserve(nt);
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

constexpr double kLn2 = 0.6931471805599453;

}  // namespace

AirEstimate mc_air_trellis(const TrellisChannel& ch, const DetectionLaw& law, long n_per_block,
                           int blocks, std::uint64_t seed, int threads) {
    if (ch.constellation.gaussian_marker())
        throw std::invalid_argument(
            "mc_air_trellis: Gaussian inputs have a closed form; Monte Carlo path disabled");
    if (n_per_block < 1 || blocks < 1)
        throw std::invalid_argument("mc_air_trellis: need n >= 1, blocks >= 1");

    const SeededRng root(seed);
    auto one_block = [&](int b) {
        SeededRng rng = root.substream(b);
        const std::vector<int> idx = random_symbols(ch.constellation, n_per_block, rng);
        const std::vector<cplx> c = map_symbols(ch.constellation, idx);
        const SimOut obs = ch.simulate(c, rng);
        const double log_q_rc = path_log_metric(obs, ch.constellation, law, idx);
        const double log_q_r =
            bcjr_log_q(obs, ch.constellation, law, static_cast<int>(n_per_block));
        return (log_q_rc - log_q_r) / (n_per_block * kLn2);
    };

    std::vector<double> per_block;
    run_blocks(blocks, threads, one_block, &per_block);
    return reduce_blocks(per_block, n_per_block, seed);
}

AirEstimate mc_air_trellis_block(const BlockTrellisChannel& ch, const BlockDetectionLaw& law,
                                 long n_per_block, int blocks, std::uint64_t seed) {
    const SeededRng root(seed);
    std::vector<double> per_block(blocks);
    for (int b = 0; b < blocks; ++b) {
        SeededRng rng = root.substream(b);
        std::vector<int> idx(n_per_block);
        for (long i = 0; i < n_per_block; ++i) idx[i] = rng.uniform_int(ch.alphabet.cardinality());
        const BlockObservation obs = ch.simulate(idx, rng);
        const double log_q_rc = block_path_log_metric(obs, ch.alphabet, law, idx);
        const double log_q_r =
            bcjr_block_log_q(obs, ch.alphabet, law, static_cast<int>(n_per_block));
        per_block[b] = (log_q_rc - log_q_r) / (n_per_block * kLn2);
    }
    return reduce_blocks(per_block, n_per_block, seed);
}

AirEstimate sbs_air(const SbsChannel& ch, const SbsAux& aux, long n_per_block, int blocks,
                    std::uint64_t seed) {
    if (aux.variance <= 0.0) throw std::invalid_argument("sbs_air: zero auxiliary variance");
    const int m = ch.constellation.cardinality();
    const double amp = std::sqrt(aux.es);
    std::vector<cplx> mu(m);
    for (int a = 0; a < m; ++a) mu[a] = amp * aux.h00 * ch.constellation.points[a];
    const double inv_var = 1.0 / aux.variance;
    const double log_m = std::log(static_cast<double>(m));

    const SeededRng root(seed);
    std::vector<double> per_block(blocks);
    std::vector<int> idx;
    std::vector<cplx> r;
    for (int b = 0; b < blocks; ++b) {
        SeededRng rng = root.substream(b);
        ch.simulate(n_per_block, rng, idx, r);
        double acc = 0.0;
        for (long i = 0; i < n_per_block; ++i) {
            const double lq_true = -std::norm(r[i] - mu[idx[i]]) * inv_var;
            double mx = -1e300;
            for (int a = 0; a < m; ++a) mx = std::max(mx, -std::norm(r[i] - mu[a]) * inv_var);
            double s = 0.0;
            for (int a = 0; a < m; ++a) {
                const double d = -std::norm(r[i] - mu[a]) * inv_var - mx;
                if (d > -40.0) s += std::exp(d);
            }
            const double lq_r = mx + std::log(s) - log_m;
            acc += (lq_true - lq_r) / kLn2;
        }
        per_block[b] = acc / n_per_block;
    }
    return reduce_blocks(per_block, n_per_block, seed);
}

// ---------------------------------------------------------------------------
// Interference budgets
// ---------------------------------------------------------------------------

DetectorKind detector_kind_from_name(const std::string& name) {
    if (name == "sbs-mf") return DetectorKind::SbsMf;
    if (name == "sbs-wf") return DetectorKind::SbsWf;
    if (name == "sbs-mmse") return DetectorKind::SbsMmse;
    if (name == "trellis-forney") return DetectorKind::TrellisForney;
    if (name == "trellis-ungerboeck") return DetectorKind::TrellisUngerboeck;
    if (name == "trellis-cs") return DetectorKind::TrellisCs;
    throw std::invalid_argument("unknown detector kind: " + name);
}

std::string detector_kind_name(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::SbsMf: return "sbs-mf";
        case DetectorKind::SbsWf: return "sbs-wf";
        case DetectorKind::SbsMmse: return "sbs-mmse";
        case DetectorKind::TrellisForney: return "trellis-forney";
        case DetectorKind::TrellisUngerboeck: return "trellis-ungerboeck";
        case DetectorKind::TrellisCs: return "trellis-cs";
    }
    return "?";
}

InterferenceBudget interference_budget(const PulseSamples& p, double t_sym, double f_spacing,
                                       int j_carriers, DetectorKind kind, int l, double es,
                                       std::span<const cplx> mmse_taps, int mmse_min_lag) {
    InterferenceBudget bud;
    bud.es = es;
    bud.l = l;
    bud.kind = kind;
    bud.g = ungerboeck_from_pulse(p, t_sym);
    const double g0 = bud.g.g[0].real();
    bud.whitened = spectral_factorize(bud.g);

    const int nu_g = bud.g.memory();
    switch (kind) {
        case DetectorKind::SbsMf:
        case DetectorKind::TrellisUngerboeck: {
            // Matched-filter output normalized to white-equivalent noise N0.
            const double s = 1.0 / std::sqrt(g0);
            bud.own_taps.resize(2 * nu_g + 1);
            for (int i = -nu_g; i <= nu_g; ++i) bud.own_taps[i + nu_g] = bud.g.at(i) * s;
            bud.own_min_lag = -nu_g;
            break;
        }
        case DetectorKind::SbsWf:
        case DetectorKind::TrellisForney:
        case DetectorKind::TrellisCs: {
            bud.own_taps = bud.whitened.h;
            bud.own_min_lag = 0;
            break;
        }
        case DetectorKind::SbsMmse: {
            if (mmse_taps.empty())
                throw std::invalid_argument("interference_budget: sbs-mmse needs equalizer taps");
            // Equalizer on the matched-filter output; rescale so the output
            // noise variance is N0.
            std::vector<cplx> gg(2 * nu_g + 1);
            for (int i = -nu_g; i <= nu_g; ++i) gg[i + nu_g] = bud.g.at(i);
            std::vector<cplx> eff = convolve(mmse_taps, gg);
            double nv = 0.0;  // w^dagger G w
            for (size_t a = 0; a < mmse_taps.size(); ++a)
                for (size_t b = 0; b < mmse_taps.size(); ++b)
                    nv += std::real(std::conj(mmse_taps[a]) * mmse_taps[b] *
                                    bud.g.at(static_cast<int>(a) - static_cast<int>(b)));
            const double s = 1.0 / std::sqrt(std::max(nv, 1e-300));
            for (auto& v : eff) v *= s;
            bud.own_taps = std::move(eff);
            bud.own_min_lag = mmse_min_lag - nu_g;
            break;
        }
    }

    // Own-channel residual outside the detector's reach.
    double resid = 0.0;
    const bool sbs = kind == DetectorKind::SbsMf || kind == DetectorKind::SbsWf ||
                     kind == DetectorKind::SbsMmse;
    for (size_t i = 0; i < bud.own_taps.size(); ++i) {
        const int lag = bud.own_min_lag + static_cast<int>(i);
        bool inside;
        if (sbs) {
            inside = lag == 0;
        } else if (kind == DetectorKind::TrellisForney) {
            inside = lag >= 0 && lag <= l;
        } else if (kind == DetectorKind::TrellisUngerboeck) {
            inside = std::abs(lag) <= l;
        } else {  // TrellisCs: the design consumes the whole own-channel spectrum
            inside = true;
        }
        if (!inside) resid += std::norm(bud.own_taps[i]);
    }
    bud.own_residual = es * resid;

    // Adjacent carriers through the same front end (unit-amplitude rotation
    // dropped: only |h(n,l,k)|^2 enters the budget).
    double cross = 0.0;
    if (j_carriers > 0 && f_spacing > 0.0) {
        const double span_time = p.samples.size() * p.dt();
        const int max_lag = static_cast<int>(std::ceil(span_time / t_sym)) + 1;
        const SpectrumSamples gs = dtft(bud.g, kDefaultGrid);
        for (int carrier = -j_carriers; carrier <= j_carriers; ++carrier) {
            if (carrier == 0) continue;
            std::vector<cplx> x;
            x.reserve(2 * max_lag + 1);
            for (int n = -max_lag; n <= max_lag; ++n)
                x.push_back(pulse_xcorr(p, p, n * t_sym, carrier * f_spacing));
            if (kind == DetectorKind::SbsMf || kind == DetectorKind::TrellisUngerboeck) {
                double pw = 0.0;
                for (const auto& v : x) pw += std::norm(v);
                cross += pw / g0;
            } else {
                // White-referenced: cross spectrum through the whitening filter.
                const SpectrumSamples xs = dtft(x, -max_lag, kDefaultGrid);
                const double floor_v = 1e-9 * g0;
                double pw = 0.0;
                for (int i = 0; i < xs.size(); ++i)
                    pw += std::norm(xs.v[i]) / std::max(gs.v[i].real(), floor_v);
                cross += pw / xs.size();
            }
        }
    }
    bud.cross_power = es * cross;
    bud.n_i = bud.own_residual + bud.cross_power;
    return bud;
}

AseValue ase(double i_r, double f, double t) {
    if (f <= 0.0 || t <= 0.0) throw std::invalid_argument("ase: need F, T > 0");
    AseValue v;
    v.i_r = i_r;
    v.ft = f * t;
    v.eta = i_r / v.ft;
    return v;
}

}  // namespace csdet
