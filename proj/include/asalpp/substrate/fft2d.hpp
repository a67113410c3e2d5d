#pragma once

#include <Eigen/Dense>
#include <complex>

#include <unsupported/Eigen/FFT>

namespace asalpp {

/// 2-D FFT on an N x N torus, single precision, row-column decomposition.
/// Each instance owns its plans and scratch buffers; instances are not
/// thread-safe, so parallel rollouts use one workspace per thread.
class Fft2d {
 public:
  explicit Fft2d(int n);

  int size() const { return n_; }

  void forward(const Eigen::ArrayXXf& in, Eigen::MatrixXcf& out);
  /// Inverse transform of a spectrum known to come from real data; returns
  /// the real part (the residual imaginary part is rounding noise).
  void inverse_real(const Eigen::MatrixXcf& in, Eigen::ArrayXXf& out);

 private:
  // Transforms every column of `in` into `out` (columns are contiguous).
  void transform_columns(const Eigen::MatrixXcf& in, Eigen::MatrixXcf& out, bool inverse);

  int n_;
  Eigen::FFT<float> fft_;
  Eigen::MatrixXcf stage_;
  Eigen::MatrixXcf stage2_;
};

}  // namespace asalpp
