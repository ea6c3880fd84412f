#ifndef CSDET_TEST_UTIL_HPP
#define CSDET_TEST_UTIL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "csdet/dsp_core.hpp"

namespace csdet::testutil {

// Gauss-Hermite nodes/weights for integral e^{-x^2} f(x) dx (Golub-Welsch).
inline void gauss_hermite(int n, std::vector<double>* nodes, std::vector<double>* weights) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = std::sqrt(i / 2.0);
        j(i, i - 1) = b;
        j(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes->resize(n);
    weights->resize(n);
    const double sqrt_pi = std::sqrt(kPi);
    for (int i = 0; i < n; ++i) {
        (*nodes)[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        (*weights)[i] = v * v * sqrt_pi;
    }
}

// Finite-alphabet mutual information on the complex AWGN channel r = c + w,
// w ~ CN(0, n0), by 2-D Gauss-Hermite quadrature. Independent oracle for the
// Monte Carlo estimators.
inline double awgn_mi_bits(const Constellation& c, double n0, int order = 48) {
    std::vector<double> x, w;
    gauss_hermite(order, &x, &w);
    const int m = c.cardinality();
    const double s = std::sqrt(n0);
    double total = 0.0;
    for (int a = 0; a < m; ++a) {
        double acc = 0.0;
        for (int i = 0; i < order; ++i) {
            for (int j = 0; j < order; ++j) {
                const cplx noise(s * x[i], s * x[j]);
                // log2 of p(r|a) / ((1/M) sum_b p(r|b)) with r = c_a + noise
                double mx = -1e300;
                std::vector<double> e(m);
                for (int b = 0; b < m; ++b) {
                    e[b] = -std::norm(c.points[a] + noise - c.points[b]) / n0;
                    mx = std::max(mx, e[b]);
                }
                double sum = 0.0;
                for (int b = 0; b < m; ++b) sum += std::exp(e[b] - mx);
                const double log_den = mx + std::log(sum) - std::log(static_cast<double>(m));
                const double log_num = -std::norm(noise) / n0;
                acc += w[i] * w[j] * (log_num - log_den);
            }
        }
        total += acc / kPi;
    }
    return total / (m * std::log(2.0));
}

// Random PSD autocorrelation built from a random FIR factor.
inline AutocorrTaps random_psd_autocorr(int memory, SeededRng& rng, bool complex_taps = true) {
    std::vector<cplx> h(memory + 1);
    for (auto& v : h)
        v = complex_taps ? cplx(rng.gaussian(), rng.gaussian()) : cplx(rng.gaussian(), 0.0);
    return autocorrelate(ChannelTaps{h});
}

}  // namespace csdet::testutil

#endif
