#pragma once

#include "warpflow/error.hpp"
#include "warpflow/tensor.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace warpflow {

/// Elementary symmetric polynomials sigma_0..sigma_k of lam.
inline std::vector<double> elementary_symmetric(const Vec& lam, int k) {
  std::vector<double> e(k + 1, 0.0);
  e[0] = 1.0;
  for (int i = 0; i < lam.size(); ++i)
    for (int j = std::min<int>(k, i + 1); j >= 1; --j) e[j] += lam[i] * e[j - 1];
  return e;
}

inline double sigma(const Vec& lam, int k) { return elementary_symmetric(lam, k)[k]; }

/// d sigma_k / d lam_i = sigma_{k-1}(lam with entry i removed)
inline Vec sigma_gradient(const Vec& lam, int k) {
  const int n = static_cast<int>(lam.size());
  Vec g(n);
  for (int i = 0; i < n; ++i) {
    Vec rest(n - 1);
    for (int j = 0, m = 0; j < n; ++j)
      if (j != i) rest[m++] = lam[j];
    g[i] = k == 0 ? 0.0 : sigma(rest, k - 1);
  }
  return g;
}

/// Traces of fdot^{ij} against g, h and h^2 in the principal frame.
struct FDotTensor {
  Vec diag;            // d f / d lam_i
  double trace_g = 0;  // sum f_i
  double trace_h = 0;  // sum f_i lam_i
  double trace_h2 = 0; // sum f_i lam_i^2
};

/// Symmetric homogeneous speed f(lam_1, ..., lam_n).
class SpeedFunction {
 public:
  enum class Kind { H, InverseH, Gauss, Sigma, Ratio, PowerH };

  static SpeedFunction mean() { return {Kind::H, 0, 0, 1.0}; }
  static SpeedFunction inverse_mean() { return {Kind::InverseH, 0, 0, 1.0}; }
  static SpeedFunction gauss() { return {Kind::Gauss, 0, 0, 1.0}; }
  static SpeedFunction sigma_k(int k) {
    if (k < 1) fail(ErrorKind::Validation, "sigma_k needs k >= 1");
    return {Kind::Sigma, k, 0, 1.0};
  }
  /// (sigma_k / sigma_j)^(1/(k-j))
  static SpeedFunction ratio(int k, int j) {
    if (!(j >= 0 && j < k)) fail(ErrorKind::Validation, "sigma ratio needs 0 <= j < k");
    return {Kind::Ratio, k, j, 1.0};
  }
  static SpeedFunction power_h(double alpha) {
    if (!(alpha > 0.0)) fail(ErrorKind::Validation, "H^alpha needs alpha > 0");
    return {Kind::PowerH, 0, 0, alpha};
  }

  /// Config grammar: H | -1/H | K | sigma:k | ratio:k:j | H^alpha:a
  static SpeedFunction parse(const std::string& s) {
    auto num = [&](const std::string& t) {
      try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
      } catch (const std::exception&) {
        fail(ErrorKind::Validation, "bad number '" + t + "' in speed '" + s + "'");
      }
    };
    auto integer = [&](const std::string& t) {
      const double v = num(t);
      if (v != std::floor(v)) fail(ErrorKind::Validation, "speed '" + s + "' needs integer parameters");
      return static_cast<int>(v);
    };
    if (s == "H") return mean();
    if (s == "-1/H") return inverse_mean();
    if (s == "K") return gauss();
    if (s.rfind("sigma:", 0) == 0) return sigma_k(integer(s.substr(6)));
    if (s.rfind("H^alpha:", 0) == 0) return power_h(num(s.substr(8)));
    if (s.rfind("ratio:", 0) == 0) {
      const auto rest = s.substr(6);
      const auto colon = rest.find(':');
      if (colon == std::string::npos) fail(ErrorKind::Validation, "ratio speed must be ratio:k:j");
      return ratio(integer(rest.substr(0, colon)), integer(rest.substr(colon + 1)));
    }
    fail(ErrorKind::Validation, "unknown speed '" + s + "'");
  }

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }

  std::string name() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::H: return "H";
      case Kind::InverseH: return "-1/H";
      case Kind::Gauss: return "K";
      case Kind::Sigma: os << "sigma:" << k_; break;
      case Kind::Ratio: os << "ratio:" << k_ << ":" << j_; break;
      case Kind::PowerH: os << "H^alpha:" << alpha_; break;
    }
    return os.str();
  }

  /// deg f for n principal curvatures.
  double degree(int n) const {
    switch (kind_) {
      case Kind::H: return 1.0;
      case Kind::InverseH: return -1.0;
      case Kind::Gauss: return n;
      case Kind::Sigma: return k_;
      case Kind::Ratio: return 1.0;
      case Kind::PowerH: return alpha_;
    }
    return 0.0;
  }

  /// Throws Validation when the speed makes no sense in dimension n.
  void check_dimension(int n) const {
    if ((kind_ == Kind::Sigma || kind_ == Kind::Ratio) && k_ > n)
      fail(ErrorKind::Validation, "speed " + name() + " needs k <= n = " + std::to_string(n));
  }

  /// Empty when lam lies in the admissible cone, else the violated constraint.
  std::string violation(const Vec& lam) const {
    std::ostringstream os;
    for (int i = 0; i < lam.size(); ++i)
      if (!std::isfinite(lam[i])) return "non-finite principal curvature";
    switch (kind_) {
      case Kind::H:
      case Kind::InverseH:
      case Kind::PowerH:
        if (!(lam.sum() > 0.0)) os << "H = " << lam.sum() << " <= 0";
        break;
      case Kind::Gauss:
      case Kind::Sigma:
      case Kind::Ratio:
        if (!(lam.minCoeff() > 0.0)) os << "min lambda = " << lam.minCoeff() << " <= 0";
        else if (kind_ == Kind::Ratio && !(sigma(lam, j_) > 0.0)) os << "sigma_" << j_ << " <= 0";
        break;
    }
    return os.str();
  }
  bool admissible(const Vec& lam) const { return violation(lam).empty(); }

  /// Infimum of lam_i over the cone with the other entries held fixed, or NaN
  /// if no value of lam_i is admissible.
  double cone_lower_bound(const Vec& lam, int i) const {
    switch (kind_) {
      case Kind::H:
      case Kind::InverseH:
      case Kind::PowerH: return lam[i] - lam.sum();
      default: {
        for (int j = 0; j < lam.size(); ++j)
          if (j != i && !(lam[j] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return 0.0;
      }
    }
  }

  double operator()(const Vec& lam) const {
    require(lam);
    switch (kind_) {
      case Kind::H: return lam.sum();
      case Kind::InverseH: return -1.0 / lam.sum();
      case Kind::Gauss: return lam.prod();
      case Kind::Sigma: return sigma(lam, k_);
      case Kind::Ratio: {
        const auto e = elementary_symmetric(lam, std::max(k_, j_));
        return std::pow(e[k_] / e[j_], 1.0 / (k_ - j_));
      }
      case Kind::PowerH: return std::pow(lam.sum(), alpha_);
    }
    return 0.0;
  }

  Vec gradient(const Vec& lam) const {
    require(lam);
    const int n = static_cast<int>(lam.size());
    const double H = lam.sum();
    switch (kind_) {
      case Kind::H: return Vec::Ones(n);
      case Kind::InverseH: return Vec::Constant(n, 1.0 / (H * H));
      case Kind::Gauss: return sigma_gradient(lam, n);
      case Kind::Sigma: return sigma_gradient(lam, k_);
      case Kind::Ratio: {
        const auto e = elementary_symmetric(lam, std::max(k_, j_));
        const double q = e[k_] / e[j_];
        const double p = 1.0 / (k_ - j_);
        const Vec dq = (sigma_gradient(lam, k_) * e[j_] - sigma_gradient(lam, j_) * e[k_]) / (e[j_] * e[j_]);
        return p * std::pow(q, p - 1.0) * dq;
      }
      case Kind::PowerH: return Vec::Constant(n, alpha_ * std::pow(H, alpha_ - 1.0));
    }
    return Vec::Zero(n);
  }

  FDotTensor fdot(const Vec& lam) const {
    FDotTensor t;
    t.diag = gradient(lam);
    t.trace_g = t.diag.sum();
    t.trace_h = t.diag.dot(lam);
    t.trace_h2 = t.diag.dot(lam.cwiseProduct(lam));
    return t;
  }

 private:
  SpeedFunction(Kind kind, int k, int j, double alpha) : kind_(kind), k_(k), j_(j), alpha_(alpha) {}

  void require(const Vec& lam) const {
    check_dimension(static_cast<int>(lam.size()));
    const auto v = violation(lam);
    if (!v.empty()) fail(ErrorKind::Inadmissible, "speed " + name() + ": " + v);
  }

  Kind kind_;
  int k_, j_;
  double alpha_;
};

inline SpeedFunction make_speed(const std::string& spec) { return SpeedFunction::parse(spec); }

inline FDotTensor fdot_traces(const SpeedFunction& f, const Vec& lam) { return f.fdot(lam); }

}  // namespace warpflow
