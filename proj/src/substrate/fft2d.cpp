#include "asalpp/substrate/fft2d.hpp"

#include <stdexcept>

namespace asalpp {

Fft2d::Fft2d(int n) : n_(n), stage_(n, n), stage2_(n, n) {
  if (n < 1) throw std::invalid_argument("Fft2d: grid size must be >= 1");
}

void Fft2d::transform_columns(const Eigen::MatrixXcf& in, Eigen::MatrixXcf& out, bool inverse) {
  for (int j = 0; j < n_; ++j) {
    if (inverse) {
      fft_.inv(out.col(j).data(), in.col(j).data(), n_);
    } else {
      fft_.fwd(out.col(j).data(), in.col(j).data(), n_);
    }
  }
}

void Fft2d::forward(const Eigen::ArrayXXf& in, Eigen::MatrixXcf& out) {
  out.resize(n_, n_);
  stage_ = in.matrix().cast<std::complex<float>>();
  transform_columns(stage_, stage2_, false);
  stage_ = stage2_.transpose();
  transform_columns(stage_, stage2_, false);
  out = stage2_.transpose();
}

void Fft2d::inverse_real(const Eigen::MatrixXcf& in, Eigen::ArrayXXf& out) {
  stage_ = in;
  transform_columns(stage_, stage2_, true);
  stage_ = stage2_.transpose();
  transform_columns(stage_, stage2_, true);
  out = stage2_.transpose().real().array();
}

}  // namespace asalpp
