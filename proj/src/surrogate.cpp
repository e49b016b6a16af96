#include "nowpac/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "nowpac/ball_quadratic.hpp"
#include "nowpac/errors.hpp"

namespace nowpac {

// ---------------------------------------------------------------------------
// InterpolationSet

InterpolationSet::InterpolationSet(const Vector& center, const Evaluation& value)
    : points_{center}, f_values_{value.f}, c_values_(1, value.c.size()), center_(0) {
  c_values_.row(0) = value.c.transpose();
}

std::size_t InterpolationSet::max_size() const {
  const auto n = static_cast<std::size_t>(dim());
  return (n + 1) * (n + 2) / 2;
}

double InterpolationSet::max_distance() const {
  double d = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) d = std::max(d, distance_to_center(i));
  return d;
}

std::size_t InterpolationSet::find_near(const Vector& x, double tol) const {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if ((points_[i] - x).norm() <= tol) return i;
  }
  return points_.size();
}

std::size_t InterpolationSet::add(const Vector& x, const Evaluation& value) {
  points_.push_back(x);
  f_values_.push_back(value.f);
  c_values_.conservativeResize(c_values_.rows() + 1, value.c.size());
  c_values_.row(c_values_.rows() - 1) = value.c.transpose();
  return points_.size() - 1;
}

void InterpolationSet::replace(std::size_t i, const Vector& x, const Evaluation& value) {
  points_.at(i) = x;
  f_values_[i] = value.f;
  c_values_.row(static_cast<Eigen::Index>(i)) = value.c.transpose();
}

void InterpolationSet::remove(std::size_t i) {
  if (i == center_) throw std::logic_error("cannot remove the center of an interpolation set");
  points_.erase(points_.begin() + static_cast<std::ptrdiff_t>(i));
  f_values_.erase(f_values_.begin() + static_cast<std::ptrdiff_t>(i));
  const auto rows = c_values_.rows();
  const auto row = static_cast<Eigen::Index>(i);
  Matrix kept(rows - 1, c_values_.cols());
  kept.topRows(row) = c_values_.topRows(row);
  kept.bottomRows(rows - 1 - row) = c_values_.bottomRows(rows - 1 - row);
  c_values_ = std::move(kept);
  if (i < center_) --center_;
}

void InterpolationSet::set_center(std::size_t i) {
  if (i >= points_.size()) throw std::out_of_range("interpolation set center index");
  center_ = i;
}

std::vector<double> ModelBundle::hessian_norms() const {
  std::vector<double> out;
  out.reserve(c.size() + 1);
  out.push_back(f.hessian_norm());
  for (const auto& m : c) out.push_back(m.hessian_norm());
  return out;
}

// ---------------------------------------------------------------------------
// Minimum Frobenius norm interpolation

namespace {

constexpr double kMaxCondition = 1e12;

/// Factorized saddle system [A P; P' 0] in shifted and scaled coordinates.
class SaddleSystem {
 public:
  explicit SaddleSystem(const InterpolationSet& set) {
    const auto m = static_cast<Eigen::Index>(set.size());
    n_ = set.dim();
    if (set.size() < 1) throw SingularGeometry("empty interpolation set");
    scale_ = set.max_distance();
    if (!(scale_ > 0.0)) throw SingularGeometry("interpolation points coincide with the center");

    Y_.resize(n_, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Y_.col(i) = (set.points()[static_cast<std::size_t>(i)] - set.center()) / scale_;
    }
    const Eigen::Index size = m + n_ + 1;
    Matrix K = Matrix::Zero(size, size);
    const Matrix gram = Y_.transpose() * Y_;
    K.topLeftCorner(m, m) = 0.5 * gram.array().square().matrix();
    K.block(0, m, m, 1).setOnes();
    K.block(0, m + 1, m, n_) = Y_.transpose();
    K.block(m, 0, 1, m).setOnes();
    K.block(m + 1, 0, n_, m) = Y_;
    lu_.compute(K);
    const double rcond = lu_.rcond();
    if (!(rcond > 1.0 / kMaxCondition) || lu_.rank() < size) {
      throw SingularGeometry("interpolation saddle system is singular (condition estimate " +
                             std::to_string(rcond > 0.0 ? 1.0 / rcond : INFINITY) + ")");
    }
    m_ = m;
  }

  /// One model per column of `values` (m x k).
  std::vector<QuadraticModel> solve(const Matrix& values) const {
    Matrix rhs = Matrix::Zero(m_ + n_ + 1, values.cols());
    rhs.topRows(m_) = values;
    const Matrix sol = lu_.solve(rhs);
    std::vector<QuadraticModel> out;
    out.reserve(static_cast<std::size_t>(values.cols()));
    for (Eigen::Index k = 0; k < values.cols(); ++k) {
      const Vector lambda = sol.col(k).head(m_);
      QuadraticModel q;
      q.c0 = sol(m_, k);
      q.g = sol.col(k).segment(m_ + 1, n_) / scale_;
      const Matrix Hs = Y_ * lambda.asDiagonal() * Y_.transpose();
      q.H = 0.5 * (Hs + Hs.transpose()) / (scale_ * scale_);
      out.push_back(std::move(q));
    }
    return out;
  }

 private:
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  double scale_ = 1.0;
  Matrix Y_;
  Eigen::FullPivLU<Matrix> lu_;
};

}  // namespace

QuadraticModel build_mfn_model(const InterpolationSet& set, const std::vector<double>& values) {
  if (values.size() != set.size()) {
    throw DimensionMismatch("build_mfn_model: one value per interpolation point required");
  }
  SaddleSystem system(set);
  const Eigen::Map<const Vector> v(values.data(), static_cast<Eigen::Index>(values.size()));
  return system.solve(Matrix(v)).front();
}

ModelBundle build_models(const InterpolationSet& set) {
  SaddleSystem system(set);
  const auto m = static_cast<Eigen::Index>(set.size());
  const auto r = set.num_constraints();
  Matrix values(m, r + 1);
  for (Eigen::Index i = 0; i < m; ++i) values(i, 0) = set.f_values()[static_cast<std::size_t>(i)];
  values.rightCols(r) = set.c_values();
  auto models = system.solve(values);
  ModelBundle bundle;
  bundle.f = std::move(models.front());
  bundle.c.assign(std::make_move_iterator(models.begin() + 1), std::make_move_iterator(models.end()));
  return bundle;
}

std::vector<QuadraticModel> lagrange_polynomials(const InterpolationSet& set) {
  SaddleSystem system(set);
  const auto m = static_cast<Eigen::Index>(set.size());
  return system.solve(Matrix::Identity(m, m));
}

std::vector<LagrangeMaximum> lagrange_maxima(const std::vector<QuadraticModel>& basis,
                                             double radius) {
  std::vector<LagrangeMaximum> out;
  out.reserve(basis.size());
  for (const auto& l : basis) {
    const BallMinimum lo = minimize_quadratic_on_ball(l.g, l.H, radius);
    const BallMinimum hi = minimize_quadratic_on_ball(-l.g, -l.H, radius);
    const double min_value = l.c0 + lo.value;
    const double max_value = l.c0 - hi.value;
    if (std::abs(min_value) >= std::abs(max_value)) {
      out.push_back({std::abs(min_value), lo.s});
    } else {
      out.push_back({std::abs(max_value), hi.s});
    }
  }
  return out;
}

double poisedness(const InterpolationSet& set, double radius) {
  double lambda = 0.0;
  for (const auto& m : lagrange_maxima(lagrange_polynomials(set), radius)) {
    lambda = std::max(lambda, m.value);
  }
  return lambda;
}

// ---------------------------------------------------------------------------
// Geometry management

namespace {

int improve_budget(const InterpolationSet& set, const GeometryOptions& options) {
  if (options.max_improve_steps > 0) return options.max_improve_steps;
  return 2 * static_cast<int>(set.max_size());
}

void drop_distant(InterpolationSet& set, double limit) {
  for (std::size_t i = set.size(); i-- > 0;) {
    if (i != set.center_index() && set.distance_to_center(i) > limit) set.remove(i);
  }
}

/// Orthonormal basis of the span of the displacements y_i - center.
Matrix displacement_basis(const InterpolationSet& set, double rho) {
  const auto n = set.dim();
  if (set.size() <= 1) return Matrix(n, 0);
  Matrix D(n, static_cast<Eigen::Index>(set.size()) - 1);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i == set.center_index()) continue;
    D.col(col++) = (set.points()[i] - set.center()) / rho;
  }
  Eigen::JacobiSVD<Matrix> svd(D, Eigen::ComputeFullU);
  const Vector& sv = svd.singularValues();
  Eigen::Index rank = 0;
  const double tol = 1e-6 * std::max(1.0, sv.size() ? sv[0] : 0.0);
  while (rank < sv.size() && sv[rank] > tol) ++rank;
  return svd.matrixU().leftCols(rank);
}

/// Unit direction orthogonal to `basis`, preferring coordinate axes.
Vector complement_direction(const Matrix& basis, Eigen::Index n) {
  Vector best;
  double best_norm = -1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector v = Vector::Unit(n, j);
    if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
    const double norm = v.norm();
    if (norm > best_norm + 1e-12) {
      best_norm = norm;
      best = v / norm;
    }
  }
  return best;
}

void complete_affine_span(InterpolationSet& set, ProblemRef problem, EvalCounter& counter,
                          double rho, int& evals) {
  const auto n = set.dim();
  Matrix basis = displacement_basis(set, rho);
  while (basis.cols() < n) {
    const Vector dir = complement_direction(basis, n);
    const Vector x = set.center() + rho * dir;
    set.add(x, evaluate(problem, x, counter));
    ++evals;
    Matrix grown(n, basis.cols() + 1);
    grown << basis, dir;
    basis = std::move(grown);
  }
}

/// Farthest non-center point.
std::size_t farthest_point(const InterpolationSet& set) {
  std::size_t worst = set.size();
  double dist = -1.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i == set.center_index()) continue;
    const double d = set.distance_to_center(i);
    if (d > dist) {
      dist = d;
      worst = i;
    }
  }
  return worst;
}

/// Removes the farthest point whose removal keeps the affine span and makes
/// the interpolation system regular. False if no such point exists.
bool shed_degenerate_point(InterpolationSet& set, double rho) {
  if (set.size() <= set.min_size()) return false;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i != set.center_index()) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.distance_to_center(a) > set.distance_to_center(b);
  });
  for (std::size_t i : order) {
    InterpolationSet candidate = set;
    candidate.remove(i);
    if (displacement_basis(candidate, rho).cols() < candidate.dim()) continue;
    try {
      SaddleSystem check(candidate);
    } catch (const SingularGeometry&) {
      continue;
    }
    set = std::move(candidate);
    return true;
  }
  return false;
}

}  // namespace

bool is_fully_linear(const InterpolationSet& set, double rho, const GeometryOptions& options) {
  if (set.size() < set.min_size()) return false;
  if (set.max_distance() > options.scale_factor * rho) return false;
  try {
    return poisedness(set, rho) <= options.lambda_threshold;
  } catch (const SingularGeometry&) {
    return false;
  }
}

ImprovedSet ensure_fully_linear(InterpolationSet set, ProblemRef problem, EvalCounter& counter,
                                double rho, const GeometryOptions& options) {
  int evals = 0;
  drop_distant(set, options.scale_factor * rho);
  complete_affine_span(set, problem, counter, rho, evals);

  const int budget = improve_budget(set, options);
  int steps = 0;
  double first_lambda = -1.0;
  double lambda = std::numeric_limits<double>::infinity();
  bool restarted = false;
  while (true) {
    std::vector<QuadraticModel> basis;
    try {
      basis = lagrange_polynomials(set);
    } catch (const SingularGeometry&) {
      // degenerate geometry: shed a point, as a last resort restart from the
      // coordinate stencil
      if (!shed_degenerate_point(set, rho)) {
        if (restarted) throw;
        restarted = true;
        while (set.size() > 1) set.remove(farthest_point(set));
        complete_affine_span(set, problem, counter, rho, evals);
      }
      continue;
    }
    const auto maxima = lagrange_maxima(basis, rho);
    lambda = 0.0;
    std::size_t worst = set.size();
    double worst_value = -1.0;
    for (std::size_t i = 0; i < maxima.size(); ++i) {
      lambda = std::max(lambda, maxima[i].value);
      if (i != set.center_index() && maxima[i].value > worst_value) {
        worst_value = maxima[i].value;
        worst = i;
      }
    }
    if (first_lambda < 0.0) first_lambda = lambda;
    if (lambda <= options.lambda_threshold) break;
    if (steps >= budget || worst == set.size()) {
      throw ImprovementStalled("geometry improvement did not reach poisedness " +
                               std::to_string(options.lambda_threshold) + " (started at " +
                               std::to_string(first_lambda) + ", ended at " +
                               std::to_string(lambda) + ")");
    }
    const Vector x = set.center() + maxima[worst].s;
    set.replace(worst, x, evaluate(problem, x, counter));
    ++evals;
    ++steps;
  }
  ModelBundle models = build_models(set);
  return {std::move(set), std::move(models), evals};
}

InterpolationSet update_set_after_step(InterpolationSet set, const Vector& new_point,
                                       const Evaluation& new_values, bool accepted, double rho) {
  std::size_t idx = set.find_near(new_point, 1e-12 * rho);
  if (idx == set.size()) {
    idx = set.add(new_point, new_values);
  } else if (idx != set.center_index()) {
    set.replace(idx, new_point, new_values);
  }
  if (accepted) set.set_center(idx);
  if (set.size() > set.max_size()) {
    std::size_t worst = set.size();
    double dist = -1.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (i == set.center_index() || i == idx) continue;
      const double d = set.distance_to_center(i);
      if (d > dist) {
        dist = d;
        worst = i;
      }
    }
    set.remove(worst);
  }
  return set;
}

FullyLinearDiagnostics fully_linear_diagnostics(
    const QuadraticModel& model, const std::function<double(const Vector&)>& fn,
    const std::function<Vector(const Vector&)>& grad, const Vector& center, double rho,
    int samples, std::uint64_t seed) {
  const auto n = center.size();
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FullyLinearDiagnostics out;
  out.rho = rho;
  for (int k = 0; k <= samples; ++k) {
    Vector s = Vector::Zero(n);
    if (k > 0) {
      for (Eigen::Index i = 0; i < n; ++i) s[i] = normal(engine);
      s *= rho * std::pow(unit(engine), 1.0 / static_cast<double>(n)) / s.norm();
    }
    const Vector x = center + s;
    out.max_value_error = std::max(out.max_value_error, std::abs(fn(x) - model.value(s)));
    if (grad) {
      out.max_gradient_error =
          std::max(out.max_gradient_error, (grad(x) - model.gradient(s)).norm());
    }
  }
  return out;
}

}  // namespace nowpac
