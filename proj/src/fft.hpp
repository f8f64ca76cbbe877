#pragma once

// Thin RAII layer over FFTW. Plan creation is serialized because the FFTW
// planner is not thread-safe; executing plans on distinct buffers is.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>

namespace tomo::detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

FftwBuffer<fftw_complex> alloc_complex(std::size_t n);
FftwBuffer<double> alloc_real(std::size_t n);

class FftPlan {
 public:
  FftPlan() = default;
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& other) noexcept : plan_(other.plan_) { other.plan_ = nullptr; }
  FftPlan& operator=(FftPlan&& other) noexcept;
  ~FftPlan();

  // In-place complex 2-D transform; sign is FFTW_FORWARD or FFTW_BACKWARD.
  static FftPlan complex_2d(int rows, int cols, fftw_complex* data, int sign);
  static FftPlan r2c_2d(int rows, int cols, double* in, fftw_complex* out);
  static FftPlan c2r_2d(int rows, int cols, fftw_complex* in, double* out);

  void execute() const { fftw_execute(plan_); }

 private:
  explicit FftPlan(fftw_plan plan) : plan_(plan) {}
  fftw_plan plan_ = nullptr;
};

}  // namespace tomo::detail
