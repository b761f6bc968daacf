#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace kinlab {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans are created once per (side, direction) and reused from any thread:
// fftw_execute_dft is reentrant, the planner is not.
inline fftw_plan cached_cube_plan(int side, int sign) {
  static std::map<std::pair<int, int>, fftw_plan> plans;
  std::lock_guard lock(fftw_planner_mutex());
  auto it = plans.find({side, sign});
  if (it != plans.end()) return it->second;
  std::vector<std::complex<double>> scratch(std::size_t(side) * side * side);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan = fftw_plan_dft_3d(side, side, side, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(std::pair{side, sign}, plan);
  return plan;
}

}  // namespace detail

/// Unnormalized in-place 3D DFT, exponent sign -1.
inline void fft3_forward(std::complex<double>* data, int side) {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(detail::cached_cube_plan(side, FFTW_FORWARD), p, p);
}

/// Unnormalized in-place 3D DFT, exponent sign +1.
inline void fft3_backward(std::complex<double>* data, int side) {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(detail::cached_cube_plan(side, FFTW_BACKWARD), p, p);
}

/// In-place real cube in FFTW's padded layout: n x n x 2(n/2+1) doubles.
class PaddedRealCube {
 public:
  explicit PaddedRealCube(int n)
      : n_(n), row_(2 * (n / 2 + 1)), buf_(fftw_alloc_real(std::size_t(n) * n * row_)) {}
  ~PaddedRealCube() { fftw_free(buf_); }
  PaddedRealCube(const PaddedRealCube&) = delete;
  PaddedRealCube& operator=(const PaddedRealCube&) = delete;

  int side() const { return n_; }
  double& at(int i, int j, int k) { return buf_[(std::size_t(i) * n_ + j) * row_ + k]; }
  double at(int i, int j, int k) const { return buf_[(std::size_t(i) * n_ + j) * row_ + k]; }
  std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(buf_); }
  std::size_t spectrum_size() const { return std::size_t(n_) * n_ * (n_ / 2 + 1); }

  void forward() {
    run([&] {
      return fftw_plan_dft_r2c_3d(n_, n_, n_, buf_, reinterpret_cast<fftw_complex*>(buf_),
                                  FFTW_ESTIMATE);
    });
  }
  void backward() {
    run([&] {
      return fftw_plan_dft_c2r_3d(n_, n_, n_, reinterpret_cast<fftw_complex*>(buf_), buf_,
                                  FFTW_ESTIMATE);
    });
  }

 private:
  template <class Make>
  void run(Make make) {
    fftw_plan plan;
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      plan = make();
    }
    fftw_execute(plan);
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  int n_;
  int row_;
  double* buf_;
};

}  // namespace kinlab
