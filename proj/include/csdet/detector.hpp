#ifndef CSDET_DETECTOR_HPP
#define CSDET_DETECTOR_HPP

#include <variant>

#include "csdet/obs_models.hpp"

namespace csdet {

// ---------------------------------------------------------------------------
// Detection laws
// ---------------------------------------------------------------------------

enum class Observable { Forney, Ungerboeck };

/// Reduced-complexity (channel-shortening / truncation / MMSE) detection law.
/// The noise variance is absorbed into both the front end and the target, so
/// the trellis metric is exp{2 Re(c_k^* d_k) - |c_k|^2 t_0 - 2 Re(c_k^* sum_i
/// t_i c_{k-i})} with d the front-end filtered observable. Entries beyond lag
/// L are absent by construction; the target need not be PSD.
struct MismatchedLaw {
    std::vector<cplx> front_end;  // d_k = sum_m front_end[m] r_{k-(fe_min_lag+m)}
    int fe_min_lag = 0;
    std::vector<cplx> target;  // t_0..t_L (Hermitian band, negative lags implied)
    Observable expects = Observable::Forney;
    int memory() const { return static_cast<int>(target.size()) - 1; }
};

using DetectionLaw = std::variant<ForneyModel, UngerboeckModel, MismatchedLaw>;

/// Exact-model laws for the matched comparisons: the Forney law consumes the
/// Forney record (length >= N+nu), the Ungerboeck law the matched-filter
/// record (length N).
Observable law_observable(const DetectionLaw& law);

// ---------------------------------------------------------------------------
// Posteriors
// ---------------------------------------------------------------------------

struct TrellisPosterior {
    int n = 0;
    int m = 0;
    std::vector<double> post;  // n x m, row k sums to 1
    double log_q_r = 0.0;      // log q(r) (nats, metric normalization constants dropped)
    double at(long k, int a) const { return post[k * m + a]; }
};

/// Optional per-symbol prior table (natural logs); empty means uniform.
struct Priors {
    int m = 0;
    std::vector<double> logp;  // n x m
    bool empty() const { return logp.empty(); }
    double at(long k, int a) const { return logp[k * m + a]; }
};

// ---------------------------------------------------------------------------
// Scalar BCJR
// ---------------------------------------------------------------------------

struct BcjrOptions {
    bool max_log = false;  // max-star instead of exact log-sum-exp
};

/// Forward/backward MAP symbol detection in the log domain. `n` is the number
/// of data symbols; the trellis starts and ends in the zero-padded state.
TrellisPosterior bcjr(const SimOut& obs, const Constellation& c, const DetectionLaw& law, int n,
                      const Priors& priors = {}, const BcjrOptions& opt = {});

/// Forward recursion only: log q(r) = sum_k log of the per-step normalization.
double bcjr_log_q(const SimOut& obs, const Constellation& c, const DetectionLaw& law, int n,
                  const Priors& priors = {});

/// log q(r | c) along a known symbol path (no priors).
double path_log_metric(const SimOut& obs, const Constellation& c, const DetectionLaw& law,
                       std::span<const int> path);

std::vector<int> map_decide(const TrellisPosterior& p);

/// Exact marginals by enumeration of all M^N sequences. Oracle use only.
TrellisPosterior brute_force_map(const SimOut& obs, const Constellation& c,
                                 const DetectionLaw& law, int n, const Priors& priors = {});

// ---------------------------------------------------------------------------
// Block (vector-symbol) BCJR
// ---------------------------------------------------------------------------

/// Vector alphabet: candidate symbol vectors with uniform priors. For a
/// MIMO-ISI channel this is the K-fold product constellation; for the lifted
/// symbol-vector models each scalar symbol maps to one vector.
struct VectorAlphabet {
    std::vector<Eigen::VectorXcd> points;
    int cardinality() const { return static_cast<int>(points.size()); }
};

VectorAlphabet product_alphabet(const Constellation& c, int k);

struct BlockObservation {
    std::vector<Eigen::VectorXcd> r;
    int offset = 0;
    Eigen::VectorXcd at(int k, int dim) const {
        const int i = offset + k;
        if (i < 0 || i >= static_cast<int>(r.size())) return Eigen::VectorXcd::Zero(dim);
        return r[i];
    }
};

struct BlockMismatchedLaw {
    std::vector<Eigen::MatrixXcd> front_end;
    int fe_min_lag = 0;
    std::vector<Eigen::MatrixXcd> target;  // T_0..T_L, T_{-i} = T_i^dagger implied
    Observable expects = Observable::Ungerboeck;
    int memory() const { return static_cast<int>(target.size()) - 1; }
};

/// Exact block law: metric from the model's G_i with noise variance divided
/// out, equivalent to BlockMismatchedLaw{identity front end / N0, G_i / N0}.
using BlockDetectionLaw = std::variant<BlockUngerboeckModel, BlockMismatchedLaw>;

TrellisPosterior bcjr_block(const BlockObservation& obs, const VectorAlphabet& a,
                            const BlockDetectionLaw& law, int n);
double bcjr_block_log_q(const BlockObservation& obs, const VectorAlphabet& a,
                        const BlockDetectionLaw& law, int n);
double block_path_log_metric(const BlockObservation& obs, const VectorAlphabet& a,
                             const BlockDetectionLaw& law, std::span<const int> path);
TrellisPosterior brute_force_map_block(const BlockObservation& obs, const VectorAlphabet& a,
                                       const BlockDetectionLaw& law, int n);

/// MIMO-ISI Forney simulation r_k = sum_i H_i c_{k-i} + w_k (white, var n0
/// per component) and the matched-filter pass to the block Ungerboeck record.
BlockObservation simulate_block_forney(const std::vector<Eigen::MatrixXcd>& h, double n0,
                                       std::span<const Eigen::VectorXcd> c, SeededRng& rng);
BlockObservation block_matched_filter(const BlockObservation& rf,
                                      const std::vector<Eigen::MatrixXcd>& h, int n);
BlockObservation filter_block_observation(const BlockObservation& in,
                                          const std::vector<Eigen::MatrixXcd>& taps, int min_lag,
                                          int n);

}  // namespace csdet

#endif
