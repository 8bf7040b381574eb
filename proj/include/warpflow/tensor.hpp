#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace warpflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense rank-3 array indexed (a, b, c); used for Christoffel symbols
/// Gamma^a_{bc}.
class Tensor3 {
 public:
  explicit Tensor3(int dim = 0) : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim), 0.0) {}

  int dim() const { return dim_; }
  double& operator()(int a, int b, int c) { return data_[index(a, b, c)]; }
  double operator()(int a, int b, int c) const { return data_[index(a, b, c)]; }

  /// Gamma(u, v)^a = Gamma^a_{bc} u^b v^c
  Vec contract(const Vec& u, const Vec& v) const {
    Vec out = Vec::Zero(dim_);
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b)
        for (int c = 0; c < dim_; ++c) out[a] += (*this)(a, b, c) * u[b] * v[c];
    return out;
  }

 private:
  std::size_t index(int a, int b, int c) const {
    return static_cast<std::size_t>((a * dim_ + b) * dim_ + c);
  }
  int dim_;
  std::vector<double> data_;
};

/// Dense rank-4 array of covariant curvature components
/// R_{abcd} = Rm(d_a, d_b, d_c, d_d), with Rm(X, Y, Y, X) the sectional
/// curvature for orthonormal X, Y.
class Tensor4 {
 public:
  explicit Tensor4(int dim = 0) : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim * dim), 0.0) {}

  int dim() const { return dim_; }
  double& operator()(int a, int b, int c, int d) { return data_[index(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return data_[index(a, b, c, d)]; }

  double operator()(const Vec& u, const Vec& v, const Vec& w, const Vec& z) const {
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) {
      if (u[a] == 0.0) continue;
      for (int b = 0; b < dim_; ++b) {
        if (v[b] == 0.0) continue;
        for (int c = 0; c < dim_; ++c) {
          if (w[c] == 0.0) continue;
          for (int d = 0; d < dim_; ++d) s += (*this)(a, b, c, d) * u[a] * v[b] * w[c] * z[d];
        }
      }
    }
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  std::size_t index(int a, int b, int c, int d) const {
    return static_cast<std::size_t>(((a * dim_ + b) * dim_ + c) * dim_ + d);
  }
  int dim_;
  std::vector<double> data_;
};

}  // namespace warpflow
