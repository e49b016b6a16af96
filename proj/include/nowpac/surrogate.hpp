#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "nowpac/blackbox.hpp"

namespace nowpac {

/// m(center + s) = c0 + g's + s'Hs/2.
struct QuadraticModel {
  double c0 = 0.0;
  Vector g;
  Matrix H;

  static QuadraticModel zero(Eigen::Index n) {
    return {0.0, Vector::Zero(n), Matrix::Zero(n, n)};
  }
  double value(const Vector& s) const { return c0 + g.dot(s) + 0.5 * s.dot(H * s); }
  Vector gradient(const Vector& s) const { return g + H * s; }
  /// Frobenius norm of the Hessian.
  double hessian_norm() const { return H.norm(); }
};

/// Sample points with their objective and constraint values. The center is
/// one of the points.
class InterpolationSet {
 public:
  InterpolationSet() = default;
  InterpolationSet(const Vector& center, const Evaluation& value);

  Eigen::Index dim() const { return center().size(); }
  std::size_t size() const { return points_.size(); }
  std::size_t center_index() const { return center_; }
  const Vector& center() const { return points_.at(center_); }
  const std::vector<Vector>& points() const { return points_; }
  const std::vector<double>& f_values() const { return f_values_; }
  const Matrix& c_values() const { return c_values_; }  // m x r
  Eigen::Index num_constraints() const { return c_values_.cols(); }

  double f_center() const { return f_values_[center_]; }
  Vector c_center() const { return c_values_.row(static_cast<Eigen::Index>(center_)).transpose(); }

  /// Largest (n+1)(n+2)/2 and smallest n+1 admissible set sizes.
  std::size_t max_size() const;
  std::size_t min_size() const { return static_cast<std::size_t>(dim()) + 1; }

  double distance_to_center(std::size_t i) const { return (points_[i] - center()).norm(); }
  double max_distance() const;

  /// Index of a point closer than `tol` to x, or size() if none.
  std::size_t find_near(const Vector& x, double tol) const;

  std::size_t add(const Vector& x, const Evaluation& value);
  void replace(std::size_t i, const Vector& x, const Evaluation& value);
  void remove(std::size_t i);
  void set_center(std::size_t i);

 private:
  std::vector<Vector> points_;
  std::vector<double> f_values_;
  Matrix c_values_;
  std::size_t center_ = 0;
};

/// Objective and constraint models sharing one interpolation set.
struct ModelBundle {
  QuadraticModel f;
  std::vector<QuadraticModel> c;

  /// Frobenius norms of the objective Hessian then each constraint Hessian.
  std::vector<double> hessian_norms() const;
};

/// Minimum-Frobenius-norm interpolant of `values` (one per set point).
/// Throws SingularGeometry if the saddle system is numerically singular.
QuadraticModel build_mfn_model(const InterpolationSet& set, const std::vector<double>& values);

/// Objective and all constraint models from one factorization.
ModelBundle build_models(const InterpolationSet& set);

/// Minimum-Frobenius-norm Lagrange basis: l_i(y_j) = delta_ij.
std::vector<QuadraticModel> lagrange_polynomials(const InterpolationSet& set);

struct LagrangeMaximum {
  double value = 0.0;  // max |l_i| over the ball
  Vector s;            // maximizer, relative to the center
};

/// max over |s| <= radius of |l_i(center + s)| for each basis polynomial.
std::vector<LagrangeMaximum> lagrange_maxima(const std::vector<QuadraticModel>& basis,
                                             double radius);

/// Lambda = max_i max_{|x - center| <= radius} |l_i(x)|.
double poisedness(const InterpolationSet& set, double radius);

struct GeometryOptions {
  double scale_factor = 2.0;       // points must lie within scale_factor * rho
  double lambda_threshold = 100.0;
  int max_improve_steps = 0;       // 0 selects 2 * (max set size)
};

/// True iff the set has at least n+1 points, all within scale_factor * rho,
/// and poisedness over the rho-ball is at most the threshold.
bool is_fully_linear(const InterpolationSet& set, double rho, const GeometryOptions& options);

struct ImprovedSet {
  InterpolationSet set;
  ModelBundle models;
  int new_evaluations = 0;
};

/// Repairs the geometry around the center: drops distant points, completes an
/// affinely spanning set with coordinate-like directions, then replaces the
/// worst point by the maximizer of its Lagrange polynomial until poisedness
/// reaches the threshold. Throws ImprovementStalled if the step budget runs
/// out first.
ImprovedSet ensure_fully_linear(InterpolationSet set, ProblemRef problem, EvalCounter& counter,
                                double rho, const GeometryOptions& options = {});

/// Inserts an evaluated point; drops the farthest non-center point beyond the
/// maximum size; moves the center there if the step was accepted.
InterpolationSet update_set_after_step(InterpolationSet set, const Vector& new_point,
                                       const Evaluation& new_values, bool accepted, double rho);

/// Empirical fully-linear errors of a model of `fn` around `center`: the
/// largest value error over sampled points of the rho-ball and the gradient
/// error at those points. Benchmark-only.
struct FullyLinearDiagnostics {
  double max_value_error = 0.0;
  double max_gradient_error = 0.0;
  double rho = 0.0;
};

FullyLinearDiagnostics fully_linear_diagnostics(
    const QuadraticModel& model, const std::function<double(const Vector&)>& fn,
    const std::function<Vector(const Vector&)>& grad, const Vector& center, double rho,
    int samples = 2000, std::uint64_t seed = 7);

}  // namespace nowpac
