#include "fft_util.hpp"

#include <fftw3.h>

#include <mutex>

namespace csdet::detail {

namespace {
std::mutex plan_mutex;  // FFTW planning is not thread-safe
}

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
    const int n = static_cast<int>(x.size());
    if (n <= 1) return;
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(x.data()),
                                reinterpret_cast<fftw_complex*>(x.data()),
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex);
        fftw_destroy_plan(plan);
    }
    if (inverse) {
        const double s = 1.0 / n;
        for (auto& v : x) v *= s;
    }
}

}  // namespace csdet::detail
