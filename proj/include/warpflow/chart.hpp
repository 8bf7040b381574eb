#pragma once

#include "warpflow/error.hpp"
#include "warpflow/tensor.hpp"
#include "warpflow/warp.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

namespace warpflow {

/// A coordinate patch of a Riemannian manifold with analytic metric,
/// Levi-Civita connection and curvature.
class Chart {
 public:
  virtual ~Chart() = default;
  virtual int dim() const = 0;
  /// Throws Domain or Degenerate if x is not a regular point of the chart.
  virtual void validate(const Vec& x) const = 0;
  virtual Mat metric(const Vec& x) const = 0;
  /// Gamma^a_{bc}
  virtual Tensor3 christoffel(const Vec& x) const = 0;
  virtual Tensor4 riemann(const Vec& x) const = 0;

  /// Isometric embedding into Euclidean space, when the chart covers a round
  /// sphere; used to build rotation Killing fields.
  virtual bool has_embedding() const { return false; }
  virtual Vec embed(const Vec&) const { fail(ErrorKind::Validation, "chart has no embedding"); }
  virtual Mat embed_jacobian(const Vec&) const { fail(ErrorKind::Validation, "chart has no embedding"); }
};

using ChartPtr = std::shared_ptr<const Chart>;

/// Unit round sphere S^m in stereographic coordinates projected from the
/// north (or south) pole: g = (2 / (1 + |y|^2))^2 delta.
class UnitSphereChart final : public Chart {
 public:
  UnitSphereChart(int m, bool from_south) : m_(m), south_(from_south) {
    if (m < 1) fail(ErrorKind::Validation, "sphere dimension must be >= 1");
  }

  int dim() const override { return m_; }
  bool from_south() const { return south_; }

  void validate(const Vec& y) const override {
    if (y.size() != m_) fail(ErrorKind::Validation, "sphere chart: wrong coordinate count");
    if (!y.allFinite()) fail(ErrorKind::Domain, "sphere chart: non-finite coordinates");
  }

  Mat metric(const Vec& y) const override {
    const double s = 2.0 / (1.0 + y.squaredNorm());
    return s * s * Mat::Identity(m_, m_);
  }

  Tensor3 christoffel(const Vec& y) const override {
    // g = e^{2 psi} delta, psi = log 2 - log(1 + |y|^2)
    const Vec dpsi = -2.0 * y / (1.0 + y.squaredNorm());
    Tensor3 G(m_);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        for (int c = 0; c < m_; ++c)
          G(a, b, c) = (a == b ? dpsi[c] : 0.0) + (a == c ? dpsi[b] : 0.0) - (b == c ? dpsi[a] : 0.0);
    return G;
  }

  Tensor4 riemann(const Vec& y) const override {
    const Mat g = metric(y);
    Tensor4 R(m_);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        for (int c = 0; c < m_; ++c)
          for (int d = 0; d < m_; ++d) R(a, b, c, d) = g(a, d) * g(b, c) - g(a, c) * g(b, d);
    return R;
  }

  bool has_embedding() const override { return true; }

  Vec embed(const Vec& y) const override {
    const double q = y.squaredNorm();
    Vec x(m_ + 1);
    x.head(m_) = 2.0 * y / (1.0 + q);
    x[m_] = (south_ ? (1.0 - q) : (q - 1.0)) / (1.0 + q);
    return x;
  }

  Mat embed_jacobian(const Vec& y) const override {
    const double q = y.squaredNorm();
    const double d = 1.0 + q;
    Mat J(m_ + 1, m_);
    J.topRows(m_) = (2.0 / d) * Mat::Identity(m_, m_) - (4.0 / (d * d)) * y * y.transpose();
    const Vec last = (4.0 / (d * d)) * y;
    J.row(m_) = (south_ ? -last : last).transpose();
    return J;
  }

  /// Inverse of embed for a unit vector away from the projection pole.
  Vec chart_of(const Vec& x) const {
    const double denom = south_ ? (1.0 + x[m_]) : (1.0 - x[m_]);
    return x.head(m_) / denom;
  }

 private:
  int m_;
  bool south_;
};

/// Warped product dt^2 + f(t)^2 g_inner over (t, w).
class WarpedChart final : public Chart {
 public:
  /// `round_suspension` marks f = sin over a unit-sphere inner chart, i.e. the
  /// chart is polar coordinates on a round sphere and admits an embedding.
  WarpedChart(WarpFunction f, ChartPtr inner, bool round_suspension = false)
      : f_(std::move(f)), inner_(std::move(inner)), suspension_(round_suspension) {}

  int dim() const override { return 1 + inner_->dim(); }
  const WarpFunction& warp() const { return f_; }
  const ChartPtr& inner() const { return inner_; }

  void validate(const Vec& x) const override {
    if (x.size() != dim()) fail(ErrorKind::Validation, "warped chart: wrong coordinate count");
    const double t = x[0];
    if (!f_.contains(t)) {
      std::ostringstream os;
      os << "coordinate " << t << " outside [" << f_.lo() << ", " << f_.hi() << "] of warp '" << f_.name() << "'";
      fail(ErrorKind::Domain, os.str());
    }
    const double fv = f_(t);
    if (!(fv > 0.0)) {
      std::ostringstream os;
      os << "warp '" << f_.name() << "' vanishes at " << t << " (degenerate pole)";
      fail(ErrorKind::Degenerate, os.str());
    }
    inner_->validate(x.tail(inner_->dim()));
  }

  Mat metric(const Vec& x) const override {
    validate(x);
    const int d = dim();
    const double fv = f_(x[0]);
    Mat g = Mat::Zero(d, d);
    g(0, 0) = 1.0;
    g.bottomRightCorner(d - 1, d - 1) = fv * fv * inner_->metric(x.tail(d - 1));
    return g;
  }

  Tensor3 christoffel(const Vec& x) const override {
    validate(x);
    const int d = dim();
    const Jet f = f_.jet(x[0]);
    const Vec w = x.tail(d - 1);
    const Mat gi = inner_->metric(w);
    const Tensor3 Gi = inner_->christoffel(w);
    Tensor3 G(d);
    for (int a = 1; a < d; ++a) {
      G(a, 0, a) = G(a, a, 0) = f.d1 / f.v;
      for (int b = 1; b < d; ++b) {
        G(0, a, b) = -f.v * f.d1 * gi(a - 1, b - 1);
        for (int c = 1; c < d; ++c) G(a, b, c) = Gi(a - 1, b - 1, c - 1);
      }
    }
    return G;
  }

  Tensor4 riemann(const Vec& x) const override {
    validate(x);
    const int d = dim();
    const Jet f = f_.jet(x[0]);
    const Vec w = x.tail(d - 1);
    const Mat gh = f.v * f.v * inner_->metric(w);  // horizontal block of the full metric
    const Tensor4 Ri = inner_->riemann(w);
    const double tangential = (f.d1 / f.v) * (f.d1 / f.v);
    const double radial = f.d2 / f.v;
    Tensor4 R(d);
    for (int a = 1; a < d; ++a)
      for (int b = 1; b < d; ++b) {
        const double gab = gh(a - 1, b - 1);
        R(0, a, b, 0) = R(a, 0, 0, b) = -radial * gab;
        R(0, a, 0, b) = R(a, 0, b, 0) = radial * gab;
        for (int c = 1; c < d; ++c)
          for (int e = 1; e < d; ++e)
            R(a, b, c, e) = f.v * f.v * Ri(a - 1, b - 1, c - 1, e - 1) -
                            tangential * (gh(a - 1, e - 1) * gh(b - 1, c - 1) - gh(a - 1, c - 1) * gh(b - 1, e - 1));
      }
    return R;
  }

  bool has_embedding() const override { return suspension_ && inner_->has_embedding(); }

  Vec embed(const Vec& x) const override {
    if (!has_embedding()) return Chart::embed(x);
    const Vec p = inner_->embed(x.tail(dim() - 1));
    Vec out(p.size() + 1);
    out.head(p.size()) = std::sin(x[0]) * p;
    out[p.size()] = std::cos(x[0]);
    return out;
  }

  Mat embed_jacobian(const Vec& x) const override {
    if (!has_embedding()) return Chart::embed_jacobian(x);
    const Vec w = x.tail(dim() - 1);
    const Vec p = inner_->embed(w);
    const Mat Jp = inner_->embed_jacobian(w);
    Mat J = Mat::Zero(p.size() + 1, dim());
    J.block(0, 0, p.size(), 1) = std::cos(x[0]) * p;
    J(p.size(), 0) = -std::sin(x[0]);
    J.block(0, 1, p.size(), dim() - 1) = std::sin(x[0]) * Jp;
    return J;
  }

 private:
  WarpFunction f_;
  ChartPtr inner_;
  bool suspension_;
};

}  // namespace warpflow
