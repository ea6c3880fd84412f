#ifndef CSDET_NUM_UTIL_HPP
#define CSDET_NUM_UTIL_HPP

#include <cmath>

namespace csdet::detail {

inline double bessel_i0(double x) {
    const double h = 0.5 * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= (h / k) * (h / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Kaiser taper at |x| <= 1.
inline double kaiser(double x, double beta = 8.0) {
    const double a = 1.0 - x * x;
    if (a <= 0.0) return 0.0;
    return bessel_i0(beta * std::sqrt(a)) / bessel_i0(beta);
}

// Kaiser taper with a flat core: leaves |x| <= core untouched so short-lag
// taps are not distorted, rolls off the outer band.
inline double kaiser_flat(double x, double core = 0.7, double beta = 8.0) {
    const double a = std::abs(x);
    if (a <= core) return 1.0;
    if (a >= 1.0) return 0.0;
    return kaiser((a - core) / (1.0 - core), beta);
}

}  // namespace csdet::detail

#endif
