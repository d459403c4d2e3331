#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace afc::detail {

namespace {
std::mutex planner_mutex;
}

void dft_inplace(std::vector<std::complex<double>>& x, int sign) {
    if (x.empty()) return;
    auto* data = reinterpret_cast<fftw_complex*>(x.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        plan = fftw_plan_dft_1d(static_cast<int>(x.size()), data, data, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex);
    fftw_destroy_plan(plan);
}

}  // namespace afc::detail
