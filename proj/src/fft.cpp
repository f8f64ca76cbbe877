#include "fft.hpp"

#include <mutex>
#include <new>

namespace tomo::detail {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

FftwBuffer<fftw_complex> alloc_complex(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<fftw_complex>(p);
}

FftwBuffer<double> alloc_real(std::size_t n) {
  auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<double>(p);
}

FftPlan& FftPlan::operator=(FftPlan&& other) noexcept {
  if (this != &other) {
    if (plan_) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    plan_ = other.plan_;
    other.plan_ = nullptr;
  }
  return *this;
}

FftPlan::~FftPlan() {
  if (plan_) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
}

FftPlan FftPlan::complex_2d(int rows, int cols, fftw_complex* data, int sign) {
  std::lock_guard lock(planner_mutex());
  return FftPlan(fftw_plan_dft_2d(rows, cols, data, data, sign, FFTW_ESTIMATE));
}

FftPlan FftPlan::r2c_2d(int rows, int cols, double* in, fftw_complex* out) {
  std::lock_guard lock(planner_mutex());
  return FftPlan(fftw_plan_dft_r2c_2d(rows, cols, in, out, FFTW_ESTIMATE));
}

FftPlan FftPlan::c2r_2d(int rows, int cols, fftw_complex* in, double* out) {
  std::lock_guard lock(planner_mutex());
  return FftPlan(fftw_plan_dft_c2r_2d(rows, cols, in, out, FFTW_ESTIMATE));
}

}  // namespace tomo::detail
