#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>

#include "seqmatch/error.hpp"

namespace seqmatch {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Row-major 3x3 projective transform. Instances built by the estimators are
/// scaled so that h33 = 1.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  static Homography translation(double tx, double ty) { return {{1, 0, tx, 0, 1, ty, 0, 0, 1}}; }
  static Homography scaling(double s) { return {{s, 0, 0, 0, s, 0, 0, 0, 1}}; }
  static Homography rotation(double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    return {{c, -s, 0, s, c, 0, 0, 0, 1}};
  }

  double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }
  double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }

  friend Homography operator*(const Homography& a, const Homography& b) {
    Homography out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
        out(r, c) = s;
      }
    return out;
  }

  double determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  double frobenius() const {
    double s = 0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
  }

  bool finite() const {
    for (double v : m)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Homography inverse() const {
    const double det = determinant();
    if (det == 0.0 || !std::isfinite(det)) throw Error(Errc::DegenerateModel, "singular homography");
    Homography inv;
    inv.m = {(m[4] * m[8] - m[5] * m[7]) / det, (m[2] * m[7] - m[1] * m[8]) / det,
             (m[1] * m[5] - m[2] * m[4]) / det, (m[5] * m[6] - m[3] * m[8]) / det,
             (m[0] * m[8] - m[2] * m[6]) / det, (m[2] * m[3] - m[0] * m[5]) / det,
             (m[3] * m[7] - m[4] * m[6]) / det, (m[1] * m[6] - m[0] * m[7]) / det,
             (m[0] * m[4] - m[1] * m[3]) / det};
    return inv;
  }

  /// Same transform scaled so h33 = 1.
  Homography normalized() const {
    Homography out = *this;
    if (m[8] == 0.0) throw Error(Errc::NumericalFailure, "h33 is zero");
    for (double& v : out.m) v /= m[8];
    return out;
  }

  /// Maps a point; empty when it lands at infinity.
  std::optional<Point2> try_project(Point2 p) const {
    const double w = m[6] * p.x + m[7] * p.y + m[8];
    if (std::fabs(w) < 1e-12) return std::nullopt;
    return Point2{(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
  }

  Point2 project(Point2 p) const {
    auto q = try_project(p);
    if (!q) throw Error(Errc::PointAtInfinity, "projected w is zero");
    return *q;
  }
};

/// Relative Frobenius distance between two homographies after h33 normalisation.
inline double relative_error(const Homography& estimate, const Homography& truth) {
  const Homography a = estimate.normalized(), b = truth.normalized();
  double d = 0;
  for (std::size_t i = 0; i < 9; ++i) d += (a.m[i] - b.m[i]) * (a.m[i] - b.m[i]);
  return std::sqrt(d) / b.frobenius();
}

/// Largest displacement of the four corners of a w x h frame between two
/// homographies.
inline double corner_transfer_error(const Homography& estimate, const Homography& truth, double w, double h) {
  double worst = 0;
  for (Point2 c : {Point2{0, 0}, Point2{w - 1, 0}, Point2{w - 1, h - 1}, Point2{0, h - 1}}) {
    const Point2 a = estimate.project(c), b = truth.project(c);
    worst = std::max(worst, std::hypot(a.x - b.x, a.y - b.y));
  }
  return worst;
}

namespace detail {

/// Cyclic Jacobi eigen-decomposition of a symmetric N x N matrix. Returns the
/// unit eigenvector of the smallest eigenvalue. Sweep order is fixed, so the
/// result is bit-stable for a given input.
template <std::size_t N>
std::array<double, N> smallest_eigenvector(std::array<double, N * N> a) {
  std::array<double, N * N> v{};
  for (std::size_t i = 0; i < N; ++i) v[i * N + i] = 1.0;
  const auto A = [&](std::size_t r, std::size_t c) -> double& { return a[r * N + c]; };

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0, diag = 0;
    for (std::size_t r = 0; r < N; ++r)
      for (std::size_t c = 0; c < N; ++c) (r == c ? diag : off) += A(r, c) * A(r, c);
    if (off <= 1e-30 * diag || off == 0.0) break;

    for (std::size_t p = 0; p + 1 < N; ++p)
      for (std::size_t q = p + 1; q < N; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < N; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double vkp = v[k * N + p], vkq = v[k * N + q];
          v[k * N + p] = c * vkp - s * vkq;
          v[k * N + q] = s * vkp + c * vkq;
        }
      }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < N; ++i)
    if (A(i, i) < A(best, best)) best = i;
  std::array<double, N> out{};
  for (std::size_t k = 0; k < N; ++k) out[k] = v[k * N + best];
  return out;
}

}  // namespace detail

}  // namespace seqmatch
