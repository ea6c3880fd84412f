#include "csdet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csdet {

namespace {

constexpr double kLogZero = -1e300;

inline double logsumexp2(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b <= kLogZero / 2) return a;
    const double d = b - a;
    return d < -40.0 ? a : a + std::log1p(std::exp(d));
}

double logsumexp(std::span<const double> v) {
    double m = kLogZero;
    for (double x : v) m = std::max(m, x);
    if (m <= kLogZero / 2) return kLogZero;
    double s = 0.0;
    for (double x : v) {
        const double d = x - m;
        if (d > -40.0) s += std::exp(d);
    }
    return m + std::log(s);
}

// ---------------------------------------------------------------------------
// Scalar trellis engine
// ---------------------------------------------------------------------------

struct ScalarEngine {
    // trellis geometry
    int m = 0;        // constellation size
    int lh = 0;       // state history length
    int s_count = 1;  // m^lh
    int mpow = 1;     // m^(lh-1)
    int n = 0;        // data symbols
    int tail = 0;     // forced zero-symbol steps after the data (Forney laws)

    bool forney_style = false;
    std::vector<cplx> chi;  // constellation points

    // Forney style: metric -|r_k - sum h_i c_{k-i}|^2 / n0
    std::vector<cplx> h;
    double inv_n0 = 1.0;
    const SimOut* rf = nullptr;

    // Ungerboeck/mismatched style: 2Re(c* d_k) - |c|^2 t0 - 2Re(c* sum t_i c_{k-i})
    std::vector<cplx> t;
    std::vector<cplx> d;

    int digit(int s, int i) const { return (s / ipow(i)) % m; }
    int ipow(int e) const {
        int r = 1;
        for (int i = 0; i < e; ++i) r *= m;
        return r;
    }
    int next_state(int s, int a) const { return lh == 0 ? 0 : a + (s % mpow) * m; }

    cplx hist_value(int s, int i, int k) const {  // c_{k-i}, zero-padded
        if (k - i < 0) return cplx(0.0, 0.0);
        return chi[digit(s, i - 1)];
    }

    double metric(int k, int s, int a) const {
        if (forney_style) {
            cplx mu = chi[a] * h[0];
            const int nu = static_cast<int>(h.size()) - 1;
            for (int i = 1; i <= std::min(nu, lh); ++i) mu += h[i] * hist_value(s, i, k);
            return -std::norm(rf->at(k) - mu) * inv_n0;
        }
        const int l = static_cast<int>(t.size()) - 1;
        cplx isi(0.0, 0.0);
        for (int i = 1; i <= std::min(l, lh); ++i) isi += t[i] * hist_value(s, i, k);
        const cplx ca = chi[a];
        return 2.0 * std::real(std::conj(ca) * d[k]) - std::norm(ca) * t[0].real() -
               2.0 * std::real(std::conj(ca) * isi);
    }

    // Forced zero-symbol step u = k - n (state frozen at its time-n value).
    double tail_metric(int u, int s) const {
        const int k = n + u;
        cplx mu(0.0, 0.0);
        const int nu = static_cast<int>(h.size()) - 1;
        for (int i = u + 1; i <= nu; ++i) {
            const int rest = i - u - 1;  // digit index into the frozen state
            if (rest < lh && n - 1 - rest >= 0) mu += h[i] * chi[digit(s, rest)];
        }
        return -std::norm(rf->at(k) - mu) * inv_n0;
    }
};

ScalarEngine make_engine(const SimOut& obs, const Constellation& c, const DetectionLaw& law,
                         int n) {
    if (c.gaussian_marker())
        throw std::invalid_argument("bcjr: Gaussian marker has no trellis; use the closed form");
    ScalarEngine e;
    e.m = c.cardinality();
    e.chi = c.points;
    e.n = n;

    if (const auto* fm = std::get_if<ForneyModel>(&law)) {
        e.forney_style = true;
        e.h = fm->h.h;
        e.inv_n0 = 1.0 / fm->n0;
        e.rf = &obs;
        e.lh = fm->memory();
        e.tail = fm->memory();
    } else if (const auto* um = std::get_if<UngerboeckModel>(&law)) {
        e.lh = um->memory();
        e.t.resize(e.lh + 1);
        for (int i = 0; i <= e.lh; ++i) e.t[i] = um->g.at(i) / um->n0;
        e.d.resize(n);
        for (int k = 0; k < n; ++k) e.d[k] = obs.at(k) / um->n0;
    } else {
        const auto& ml = std::get<MismatchedLaw>(law);
        e.lh = ml.memory();
        e.t = ml.target;
        const SimOut filtered =
            filter_observation(obs, ml.front_end, ml.fe_min_lag, 0, n);
        e.d = filtered.r;
    }

    double s_check = std::pow(static_cast<double>(e.m), e.lh);
    if (s_check > static_cast<double>(1 << 20))
        throw std::invalid_argument("bcjr: state space too large (M^L > 2^20)");
    e.s_count = e.ipow(e.lh);
    e.mpow = e.lh > 0 ? e.ipow(e.lh - 1) : 1;
    return e;
}

// Precomputed branch tables for the steady-state steps (full history valid).
struct BranchTables {
    std::vector<double> base;  // s_count * m, state-dependent part
    std::vector<cplx> mu;      // Forney style predicted means
    bool forney = false;
};

BranchTables make_tables(const ScalarEngine& e) {
    BranchTables bt;
    bt.forney = e.forney_style;
    const int sm = e.s_count * e.m;
    if (e.forney_style) {
        bt.mu.resize(sm);
        const int nu = static_cast<int>(e.h.size()) - 1;
        for (int s = 0; s < e.s_count; ++s) {
            cplx isi(0.0, 0.0);
            for (int i = 1; i <= std::min(nu, e.lh); ++i) isi += e.h[i] * e.chi[e.digit(s, i - 1)];
            for (int a = 0; a < e.m; ++a) bt.mu[s * e.m + a] = e.h[0] * e.chi[a] + isi;
        }
    } else {
        bt.base.resize(sm);
        const int l = static_cast<int>(e.t.size()) - 1;
        for (int s = 0; s < e.s_count; ++s) {
            cplx isi(0.0, 0.0);
            for (int i = 1; i <= std::min(l, e.lh); ++i) isi += e.t[i] * e.chi[e.digit(s, i - 1)];
            for (int a = 0; a < e.m; ++a) {
                const cplx ca = e.chi[a];
                bt.base[s * e.m + a] =
                    -std::norm(ca) * e.t[0].real() - 2.0 * std::real(std::conj(ca) * isi);
            }
        }
    }
    return bt;
}

inline double branch(const ScalarEngine& e, const BranchTables& bt, int k, int s, int a) {
    if (bt.forney) return -std::norm(e.rf->at(k) - bt.mu[s * e.m + a]) * e.inv_n0;
    return bt.base[s * e.m + a] + 2.0 * std::real(std::conj(e.chi[a]) * e.d[k]);
}

double log_prior(const Priors& pr, int m, long k, int a) {
    if (pr.empty()) return -std::log(static_cast<double>(m));
    return pr.at(k, a);
}

// Forward recursion; calls store(k, alpha) with the normalized alpha BEFORE
// consuming symbol k. Returns log q(r).
template <typename StoreFn>
double forward_pass(const ScalarEngine& e, const BranchTables& bt, const Priors& priors,
                    bool max_log, StoreFn&& store) {
    std::vector<double> alpha(e.s_count, kLogZero), next(e.s_count, kLogZero);
    alpha[0] = 0.0;
    double log_q = 0.0;

    auto combine = [max_log](double acc, double x) {
        return max_log ? std::max(acc, x) : logsumexp2(acc, x);
    };

    for (int k = 0; k < e.n; ++k) {
        store(k, alpha);
        const bool warm = k < e.lh;
        std::fill(next.begin(), next.end(), kLogZero);
        if (e.lh == 0) {
            double acc = kLogZero;
            for (int a = 0; a < e.m; ++a) {
                const double met =
                    warm ? e.metric(k, 0, a) : branch(e, bt, k, 0, a);
                acc = combine(acc, alpha[0] + met + log_prior(priors, e.m, k, a));
            }
            next[0] = acc;
        } else {
            for (int sp = 0; sp < e.s_count; ++sp) {
                const int a = sp % e.m;
                const int basestate = sp / e.m;
                const double lp = log_prior(priors, e.m, k, a);
                double acc = kLogZero;
                for (int z = 0; z < e.m; ++z) {
                    const int s = basestate + z * e.mpow;
                    if (alpha[s] <= kLogZero / 2) continue;
                    const double met = warm ? e.metric(k, s, a) : branch(e, bt, k, s, a);
                    acc = combine(acc, alpha[s] + met + lp);
                }
                next[sp] = acc;
            }
        }
        const double norm = logsumexp(next);
        if (!std::isfinite(norm))
            throw std::runtime_error("bcjr: non-finite forward metric at step " +
                                     std::to_string(k));
        for (auto& v : next) v -= norm;
        log_q += norm;
        alpha.swap(next);
    }
    store(e.n, alpha);

    for (int u = 0; u < e.tail; ++u) {
        for (int s = 0; s < e.s_count; ++s)
            if (alpha[s] > kLogZero / 2) alpha[s] += e.tail_metric(u, s);
        const double norm = logsumexp(alpha);
        for (auto& v : alpha) v -= norm;
        log_q += norm;
    }
    return log_q;
}

}  // namespace

Observable law_observable(const DetectionLaw& law) {
    if (std::holds_alternative<ForneyModel>(law)) return Observable::Forney;
    if (std::holds_alternative<UngerboeckModel>(law)) return Observable::Ungerboeck;
    return std::get<MismatchedLaw>(law).expects;
}

double bcjr_log_q(const SimOut& obs, const Constellation& c, const DetectionLaw& law, int n,
                  const Priors& priors) {
    const ScalarEngine e = make_engine(obs, c, law, n);
    const BranchTables bt = make_tables(e);
    return forward_pass(e, bt, priors, false, [](int, const std::vector<double>&) {});
}

TrellisPosterior bcjr(const SimOut& obs, const Constellation& c, const DetectionLaw& law, int n,
                      const Priors& priors, const BcjrOptions& opt) {
    const ScalarEngine e = make_engine(obs, c, law, n);
    const BranchTables bt = make_tables(e);

    if (static_cast<double>(e.s_count) * (n + 1) > static_cast<double>(1 << 28))
        throw std::invalid_argument("bcjr: posterior storage too large; use bcjr_log_q");

    std::vector<std::vector<double>> alphas(n + 1);
    const double log_q =
        forward_pass(e, bt, priors, opt.max_log,
                     [&](int k, const std::vector<double>& a) { alphas[k] = a; });

    auto combine = [&](double acc, double x) {
        return opt.max_log ? std::max(acc, x) : logsumexp2(acc, x);
    };

    // Backward recursion, tail first (state frozen through forced steps).
    std::vector<double> beta(e.s_count, 0.0), prev(e.s_count, kLogZero);
    for (int u = e.tail - 1; u >= 0; --u)
        for (int s = 0; s < e.s_count; ++s) beta[s] += e.tail_metric(u, s);

    TrellisPosterior post;
    post.n = n;
    post.m = e.m;
    post.post.assign(static_cast<size_t>(n) * e.m, 0.0);
    post.log_q_r = log_q;

    std::vector<double> sym(e.m);
    for (int k = n - 1; k >= 0; --k) {
        const bool warm = k < e.lh;
        // completion at k
        std::fill(sym.begin(), sym.end(), kLogZero);
        for (int s = 0; s < e.s_count; ++s) {
            if (alphas[k][s] <= kLogZero / 2) continue;
            for (int a = 0; a < e.m; ++a) {
                const double met = warm ? e.metric(k, s, a) : branch(e, bt, k, s, a);
                const double v = alphas[k][s] + met + log_prior(priors, e.m, k, a) +
                                 beta[e.next_state(s, a)];
                sym[a] = combine(sym[a], v);
            }
        }
        const double norm = logsumexp(sym);
        for (int a = 0; a < e.m; ++a) post.post[static_cast<size_t>(k) * e.m + a] =
            std::exp(sym[a] - norm);

        // backward step to beta_k
        std::fill(prev.begin(), prev.end(), kLogZero);
        for (int s = 0; s < e.s_count; ++s) {
            double acc = kLogZero;
            for (int a = 0; a < e.m; ++a) {
                const double met = warm ? e.metric(k, s, a) : branch(e, bt, k, s, a);
                acc = combine(acc, met + log_prior(priors, e.m, k, a) +
                                       beta[e.next_state(s, a)]);
            }
            prev[s] = acc;
        }
        const double bnorm = logsumexp(prev);
        for (auto& v : prev) v -= bnorm;
        beta.swap(prev);
    }
    return post;
}

double path_log_metric(const SimOut& obs, const Constellation& c, const DetectionLaw& law,
                       std::span<const int> path) {
    const int n = static_cast<int>(path.size());
    const ScalarEngine e = make_engine(obs, c, law, n);
    double acc = 0.0;
    int s = 0;
    for (int k = 0; k < n; ++k) {
        acc += e.metric(k, s, path[k]);
        s = e.next_state(s, path[k]);
    }
    for (int u = 0; u < e.tail; ++u) acc += e.tail_metric(u, s);
    return acc;
}

std::vector<int> map_decide(const TrellisPosterior& p) {
    std::vector<int> out(p.n);
    for (int k = 0; k < p.n; ++k) {
        int best = 0;
        double bv = p.at(k, 0);
        for (int a = 1; a < p.m; ++a) {
            if (p.at(k, a) > bv) {
                bv = p.at(k, a);
                best = a;
            }
        }
        out[k] = best;
    }
    return out;
}

TrellisPosterior brute_force_map(const SimOut& obs, const Constellation& c,
                                 const DetectionLaw& law, int n, const Priors& priors) {
    const int m = c.cardinality();
    double total = std::pow(static_cast<double>(m), n);
    if (total > static_cast<double>(1 << 24))
        throw std::invalid_argument("brute_force_map: instance too large (M^N > 2^24)");

    const ScalarEngine e = make_engine(obs, c, law, n);
    std::vector<double> joint(static_cast<size_t>(n) * m, kLogZero);
    double log_q = kLogZero;

    std::vector<int> path(n, 0);
    const long count = static_cast<long>(total);
    for (long idx = 0; idx < count; ++idx) {
        long v = idx;
        for (int k = 0; k < n; ++k) {
            path[k] = static_cast<int>(v % m);
            v /= m;
        }
        double lp = 0.0;
        int s = 0;
        for (int k = 0; k < n; ++k) {
            lp += e.metric(k, s, path[k]) + log_prior(priors, m, k, path[k]);
            s = e.next_state(s, path[k]);
        }
        for (int u = 0; u < e.tail; ++u) lp += e.tail_metric(u, s);
        log_q = logsumexp2(log_q, lp);
        for (int k = 0; k < n; ++k) {
            auto& cell = joint[static_cast<size_t>(k) * m + path[k]];
            cell = logsumexp2(cell, lp);
        }
    }

    TrellisPosterior post;
    post.n = n;
    post.m = m;
    post.log_q_r = log_q;
    post.post.resize(static_cast<size_t>(n) * m);
    for (int k = 0; k < n; ++k)
        for (int a = 0; a < m; ++a)
            post.post[static_cast<size_t>(k) * m + a] =
                std::exp(joint[static_cast<size_t>(k) * m + a] - log_q);
    return post;
}

// ---------------------------------------------------------------------------
// Block trellis
// ---------------------------------------------------------------------------

VectorAlphabet product_alphabet(const Constellation& c, int k) {
    const int m = c.cardinality();
    long total = 1;
    for (int i = 0; i < k; ++i) total *= m;
    VectorAlphabet a;
    a.points.resize(total, Eigen::VectorXcd::Zero(k));
    for (long idx = 0; idx < total; ++idx) {
        long v = idx;
        for (int i = 0; i < k; ++i) {
            a.points[idx](i) = c.points[v % m];
            v /= m;
        }
    }
    return a;
}

namespace {

struct BlockEngine {
    int ma = 0;  // alphabet size
    int lh = 0;
    int s_count = 1;
    int mpow = 1;
    int n = 0;
    int dim = 0;
    const VectorAlphabet* alph = nullptr;
    std::vector<Eigen::MatrixXcd> t;   // T_0..T_L
    std::vector<Eigen::VectorXcd> d;   // filtered observable

    std::vector<double> q0;            // Re(c_a^† T_0 c_a)
    std::vector<std::vector<cplx>> cross;  // cross[i-1][a*ma+b] = c_a^† T_i c_b

    int digit(int s, int i) const {
        int r = s;
        for (int j = 0; j < i; ++j) r /= ma;
        return r % ma;
    }
    int next_state(int s, int a) const { return lh == 0 ? 0 : a + (s % mpow) * ma; }

    double metric(int k, int s, int a) const {
        cplx isi(0.0, 0.0);
        const int l = static_cast<int>(t.size()) - 1;
        for (int i = 1; i <= std::min(l, lh); ++i) {
            if (k - i < 0) continue;
            isi += cross[i - 1][static_cast<size_t>(a) * ma + digit(s, i - 1)];
        }
        return 2.0 * std::real(alph->points[a].dot(d[k])) - q0[a] - 2.0 * std::real(isi);
    }
};

BlockEngine make_block_engine(const BlockObservation& obs, const VectorAlphabet& a,
                              const BlockDetectionLaw& law, int n) {
    BlockEngine e;
    e.ma = a.cardinality();
    e.alph = &a;
    e.n = n;
    e.dim = static_cast<int>(a.points[0].size());

    if (const auto* bm = std::get_if<BlockUngerboeckModel>(&law)) {
        const int l = bm->lag_count() - 1;
        e.lh = l;
        e.t.resize(l + 1);
        for (int i = 0; i <= l; ++i) e.t[i] = bm->g[i] / bm->n0;
        e.d.resize(n);
        for (int k = 0; k < n; ++k) e.d[k] = obs.at(k, e.dim) / bm->n0;
    } else {
        const auto& ml = std::get<BlockMismatchedLaw>(law);
        e.lh = ml.memory();
        e.t = ml.target;
        const BlockObservation f = filter_block_observation(obs, ml.front_end, ml.fe_min_lag, n);
        e.d = f.r;
    }

    double s_check = std::pow(static_cast<double>(e.ma), e.lh);
    if (s_check > static_cast<double>(1 << 20))
        throw std::invalid_argument("bcjr_block: state space too large");
    e.s_count = 1;
    for (int i = 0; i < e.lh; ++i) e.s_count *= e.ma;
    e.mpow = e.lh > 0 ? e.s_count / e.ma : 1;

    e.q0.resize(e.ma);
    for (int i = 0; i < e.ma; ++i)
        e.q0[i] = std::real(a.points[i].dot(e.t[0] * a.points[i]));
    const int l = static_cast<int>(e.t.size()) - 1;
    e.cross.resize(l);
    for (int i = 1; i <= l; ++i) {
        e.cross[i - 1].resize(static_cast<size_t>(e.ma) * e.ma);
        for (int x = 0; x < e.ma; ++x)
            for (int y = 0; y < e.ma; ++y)
                e.cross[i - 1][static_cast<size_t>(x) * e.ma + y] =
                    a.points[x].dot(e.t[i] * a.points[y]);
    }
    return e;
}

template <typename StoreFn>
double block_forward(const BlockEngine& e, StoreFn&& store) {
    std::vector<double> alpha(e.s_count, kLogZero), next(e.s_count, kLogZero);
    alpha[0] = 0.0;
    const double lp = -std::log(static_cast<double>(e.ma));
    double log_q = 0.0;
    for (int k = 0; k < e.n; ++k) {
        store(k, alpha);
        std::fill(next.begin(), next.end(), kLogZero);
        if (e.lh == 0) {
            double acc = kLogZero;
            for (int a = 0; a < e.ma; ++a)
                acc = logsumexp2(acc, alpha[0] + e.metric(k, 0, a) + lp);
            next[0] = acc;
        } else {
            for (int sp = 0; sp < e.s_count; ++sp) {
                const int a = sp % e.ma;
                const int basestate = sp / e.ma;
                double acc = kLogZero;
                for (int z = 0; z < e.ma; ++z) {
                    const int s = basestate + z * e.mpow;
                    if (alpha[s] <= kLogZero / 2) continue;
                    acc = logsumexp2(acc, alpha[s] + e.metric(k, s, a) + lp);
                }
                next[sp] = acc;
            }
        }
        const double norm = logsumexp(next);
        if (!std::isfinite(norm))
            throw std::runtime_error("bcjr_block: non-finite metric at step " + std::to_string(k));
        for (auto& v : next) v -= norm;
        log_q += norm;
        alpha.swap(next);
    }
    store(e.n, alpha);
    return log_q;
}

}  // namespace

double bcjr_block_log_q(const BlockObservation& obs, const VectorAlphabet& a,
                        const BlockDetectionLaw& law, int n) {
    const BlockEngine e = make_block_engine(obs, a, law, n);
    return block_forward(e, [](int, const std::vector<double>&) {});
}

TrellisPosterior bcjr_block(const BlockObservation& obs, const VectorAlphabet& a,
                            const BlockDetectionLaw& law, int n) {
    const BlockEngine e = make_block_engine(obs, a, law, n);
    std::vector<std::vector<double>> alphas(n + 1);
    const double log_q =
        block_forward(e, [&](int k, const std::vector<double>& al) { alphas[k] = al; });

    const double lp = -std::log(static_cast<double>(e.ma));
    std::vector<double> beta(e.s_count, 0.0), prev(e.s_count, kLogZero);

    TrellisPosterior post;
    post.n = n;
    post.m = e.ma;
    post.post.assign(static_cast<size_t>(n) * e.ma, 0.0);
    post.log_q_r = log_q;

    std::vector<double> sym(e.ma);
    for (int k = n - 1; k >= 0; --k) {
        std::fill(sym.begin(), sym.end(), kLogZero);
        for (int s = 0; s < e.s_count; ++s) {
            if (alphas[k][s] <= kLogZero / 2) continue;
            for (int a2 = 0; a2 < e.ma; ++a2) {
                const double v =
                    alphas[k][s] + e.metric(k, s, a2) + lp + beta[e.next_state(s, a2)];
                sym[a2] = logsumexp2(sym[a2], v);
            }
        }
        const double norm = logsumexp(sym);
        for (int a2 = 0; a2 < e.ma; ++a2)
            post.post[static_cast<size_t>(k) * e.ma + a2] = std::exp(sym[a2] - norm);

        std::fill(prev.begin(), prev.end(), kLogZero);
        for (int s = 0; s < e.s_count; ++s) {
            double acc = kLogZero;
            for (int a2 = 0; a2 < e.ma; ++a2)
                acc = logsumexp2(acc, e.metric(k, s, a2) + lp + beta[e.next_state(s, a2)]);
            prev[s] = acc;
        }
        const double bnorm = logsumexp(prev);
        for (auto& v : prev) v -= bnorm;
        beta.swap(prev);
    }
    return post;
}

double block_path_log_metric(const BlockObservation& obs, const VectorAlphabet& a,
                             const BlockDetectionLaw& law, std::span<const int> path) {
    const int n = static_cast<int>(path.size());
    const BlockEngine e = make_block_engine(obs, a, law, n);
    double acc = 0.0;
    int s = 0;
    for (int k = 0; k < n; ++k) {
        acc += e.metric(k, s, path[k]);
        s = e.next_state(s, path[k]);
    }
    return acc;
}

TrellisPosterior brute_force_map_block(const BlockObservation& obs, const VectorAlphabet& a,
                                       const BlockDetectionLaw& law, int n) {
    const int ma = a.cardinality();
    double total = std::pow(static_cast<double>(ma), n);
    if (total > static_cast<double>(1 << 22))
        throw std::invalid_argument("brute_force_map_block: instance too large");
    const BlockEngine e = make_block_engine(obs, a, law, n);
    const double lp = -std::log(static_cast<double>(ma));

    std::vector<double> joint(static_cast<size_t>(n) * ma, kLogZero);
    double log_q = kLogZero;
    std::vector<int> path(n);
    for (long idx = 0; idx < static_cast<long>(total); ++idx) {
        long v = idx;
        for (int k = 0; k < n; ++k) {
            path[k] = static_cast<int>(v % ma);
            v /= ma;
        }
        double acc = 0.0;
        int s = 0;
        for (int k = 0; k < n; ++k) {
            acc += e.metric(k, s, path[k]) + lp;
            s = e.next_state(s, path[k]);
        }
        log_q = logsumexp2(log_q, acc);
        for (int k = 0; k < n; ++k) {
            auto& cell = joint[static_cast<size_t>(k) * ma + path[k]];
            cell = logsumexp2(cell, acc);
        }
    }
    TrellisPosterior post;
    post.n = n;
    post.m = ma;
    post.log_q_r = log_q;
    post.post.resize(static_cast<size_t>(n) * ma);
    for (size_t i = 0; i < post.post.size(); ++i) post.post[i] = std::exp(joint[i] - log_q);
    return post;
}

BlockObservation simulate_block_forney(const std::vector<Eigen::MatrixXcd>& h, double n0,
                                       std::span<const Eigen::VectorXcd> c, SeededRng& rng) {
    const int n = static_cast<int>(c.size());
    const int nu = static_cast<int>(h.size()) - 1;
    const int dim = static_cast<int>(h[0].rows());
    BlockObservation out;
    out.offset = 0;
    out.r.resize(n + nu, Eigen::VectorXcd::Zero(dim));
    for (int k = 0; k < n + nu; ++k) {
        Eigen::VectorXcd s = Eigen::VectorXcd::Zero(dim);
        for (int i = 0; i <= nu; ++i) {
            const int j = k - i;
            if (j >= 0 && j < n) s += h[i] * c[j];
        }
        for (int d2 = 0; d2 < dim; ++d2) s(d2) += rng.cgaussian(n0);
        out.r[k] = s;
    }
    return out;
}

BlockObservation block_matched_filter(const BlockObservation& rf,
                                      const std::vector<Eigen::MatrixXcd>& h, int n) {
    const int nu = static_cast<int>(h.size()) - 1;
    const int dim = static_cast<int>(h[0].rows());
    BlockObservation out;
    out.offset = 0;
    out.r.resize(n, Eigen::VectorXcd::Zero(dim));
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXcd s = Eigen::VectorXcd::Zero(dim);
        for (int j = 0; j <= nu; ++j) s += h[j].adjoint() * rf.at(k + j, dim);
        out.r[k] = s;
    }
    return out;
}

BlockObservation filter_block_observation(const BlockObservation& in,
                                          const std::vector<Eigen::MatrixXcd>& taps, int min_lag,
                                          int n) {
    const int dim = static_cast<int>(taps[0].rows());
    BlockObservation out;
    out.offset = 0;
    out.r.resize(n, Eigen::VectorXcd::Zero(dim));
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXcd s = Eigen::VectorXcd::Zero(dim);
        for (size_t m = 0; m < taps.size(); ++m)
            s += taps[m] * in.at(k - (min_lag + static_cast<int>(m)), dim);
        out.r[k] = s;
    }
    return out;
}

}  // namespace csdet
