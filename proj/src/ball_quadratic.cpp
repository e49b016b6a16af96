#include "nowpac/ball_quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace nowpac {

namespace {

double quad_value(const Vector& g, const Matrix& H, const Vector& s) {
  return g.dot(s) + 0.5 * s.dot(H * s);
}

BallMinimum sample_ball(const Vector& g, const Matrix& H, double radius) {
  const auto n = g.size();
  const int count = std::max<int>(10 * static_cast<int>(n * n), 16);
  std::mt19937_64 engine(0x5eedULL);
  std::normal_distribution<double> normal;
  BallMinimum best{Vector::Zero(n), 0.0, false};
  for (int k = 0; k < count; ++k) {
    Vector dir(n);
    for (Eigen::Index i = 0; i < n; ++i) dir[i] = normal(engine);
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    dir /= norm;
    // a quadratic restricted to a ray is minimized in closed form
    const double a = 0.5 * dir.dot(H * dir);
    const double b = g.dot(dir);
    double t = radius;
    if (a > 0.0) t = std::clamp(-b / (2.0 * a), 0.0, radius);
    for (double cand : {t, radius}) {
      const Vector s = cand * dir;
      const double v = quad_value(g, H, s);
      if (v < best.value) best = {s, v, false};
    }
  }
  return best;
}

}  // namespace

BallMinimum minimize_quadratic_on_ball(const Vector& g, const Matrix& H, double radius) {
  const auto n = g.size();
  if (n == 0 || radius <= 0.0) return {Vector::Zero(n), 0.0, true};

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (H + H.transpose()));
  if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite()) {
    return sample_ball(g, H, radius);
  }
  const Vector& lam = eig.eigenvalues();  // ascending
  const Matrix& Q = eig.eigenvectors();
  const Vector gq = Q.transpose() * g;
  const double scale = std::max({lam.cwiseAbs().maxCoeff(), g.norm() / radius, 1e-300});
  const double tiny = 1e-14 * scale;

  auto step_norm = [&](double shift) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = lam[i] + shift;
      acc += (gq[i] / d) * (gq[i] / d);
    }
    return std::sqrt(acc);
  };
  auto step = [&](double shift) {
    Vector sq(n);
    for (Eigen::Index i = 0; i < n; ++i) sq[i] = -gq[i] / (lam[i] + shift);
    return Vector(Q * sq);
  };

  const double lam_min = lam[0];

  // interior Newton point
  if (lam_min > tiny) {
    if (step_norm(0.0) <= radius) {
      const Vector s = step(0.0);
      return {s, quad_value(g, H, s), true};
    }
  }

  // boundary: find shift >= max(0, -lam_min) with |s(shift)| = radius
  const double lo0 = std::max(0.0, -lam_min);
  // components of g along the eigenspace of lam_min
  double g_min_sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lam[i] - lam_min <= tiny) g_min_sq += gq[i] * gq[i];
  }
  const bool degenerate = g_min_sq <= (1e-14 * std::max(g.norm(), 1e-300)) *
                                          (1e-14 * std::max(g.norm(), 1e-300)) ||
                          g.norm() == 0.0;

  if (degenerate) {
    // hard case candidate: shift = -lam_min, the singular components vanish
    double acc = 0.0;
    Vector sq = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = lam[i] + lo0;
      if (std::abs(d) > tiny) {
        sq[i] = -gq[i] / d;
        acc += sq[i] * sq[i];
      }
    }
    const double base_norm = std::sqrt(acc);
    if (base_norm <= radius) {
      if (lam_min >= -tiny) {
        // convex, the minimum-norm minimizer is interior
        const Vector s = Q * sq;
        return {s, quad_value(g, H, s), true};
      }
      const double tau = std::sqrt(std::max(0.0, radius * radius - base_norm * base_norm));
      sq[0] += tau;
      const Vector s = Q * sq;
      return {s, quad_value(g, H, s), true};
    }
  }

  double lo = lo0;
  double hi = lo0 + g.norm() / radius + tiny;
  while (step_norm(hi) > radius) hi = lo0 + 2.0 * (hi - lo0);
  if (lo <= -lam_min + tiny) lo = -lam_min + tiny;  // keep H + shift I nonsingular
  lo = std::max(lo, lo0);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (step_norm(mid) > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Vector s = step(hi);
  const double norm = s.norm();
  if (norm > radius) s *= radius / norm;
  BallMinimum out{s, quad_value(g, H, s), true};
  if (!std::isfinite(out.value)) return sample_ball(g, H, radius);
  return out;
}

}  // namespace nowpac
