#pragma once

#include "warpflow/error.hpp"

#include <vector>

namespace warpflow {

/// Behaviour of a grid function beyond an end of a uniform grid.
/// Even/Odd reflect through the end node (pole of a rotationally symmetric
/// surface); Open switches to one-sided fourth-order stencils.
enum class EndKind { Even, Odd, Open };

struct GridDerivatives {
  std::vector<double> d1, d2;
};

/// Fourth-order first and second derivatives on a uniform grid with spacing h.
inline GridDerivatives fd4(const std::vector<double>& f, double h, EndKind left, EndKind right) {
  const int N = static_cast<int>(f.size()) - 1;
  if (N < 6) fail(ErrorKind::Validation, "grid needs at least 7 nodes");
  if (left == EndKind::Open) fail(ErrorKind::Validation, "left grid end must be a pole");
  auto at = [&](int i) {
    if (i < 0) return left == EndKind::Even ? f[-i] : -f[-i];
    if (i > N) return right == EndKind::Even ? f[2 * N - i] : -f[2 * N - i];
    return f[i];
  };
  GridDerivatives out{std::vector<double>(N + 1), std::vector<double>(N + 1)};
  const double i12h = 1.0 / (12.0 * h), i12h2 = 1.0 / (12.0 * h * h);
  for (int i = 0; i <= N; ++i) {
    if (right == EndKind::Open && i >= N - 1) continue;
    const double m2 = at(i - 2), m1 = at(i - 1), z = at(i), p1 = at(i + 1), p2 = at(i + 2);
    out.d1[i] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) * i12h;
    out.d2[i] = (-p2 + 16.0 * p1 - 30.0 * z + 16.0 * m1 - m2) * i12h2;
  }
  if (right == EndKind::Open) {
    auto b = [&](int k) { return f[N - k]; };
    out.d1[N] = (25 * b(0) - 48 * b(1) + 36 * b(2) - 16 * b(3) + 3 * b(4)) * i12h;
    out.d2[N] = (45 * b(0) - 154 * b(1) + 214 * b(2) - 156 * b(3) + 61 * b(4) - 10 * b(5)) * i12h2;
    out.d1[N - 1] = (3 * b(0) + 10 * b(1) - 18 * b(2) + 6 * b(3) - b(4)) * i12h;
    out.d2[N - 1] = (10 * b(0) - 15 * b(1) - 4 * b(2) + 14 * b(3) - 6 * b(4) + b(5)) * i12h2;
  }
  return out;
}

}  // namespace warpflow
