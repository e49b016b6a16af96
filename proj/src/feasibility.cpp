#include "nowpac/feasibility.hpp"

#include <algorithm>
#include <cmath>

#include "nowpac/errors.hpp"
#include "nowpac/surrogate.hpp"

namespace nowpac {

void IbpParams::validate() const {
  if (!(eps_b > 0.0) || !(eps_b_k > 0.0)) throw InvalidConfig("eps_b must be positive");
  if (!(p >= 0.0 && p < 1.0)) throw InvalidConfig("p must lie in [0,1)");
}

double ibp_value(const Vector& d, const IbpParams& params) {
  const double norm = d.norm();
  if (norm == 0.0) return 0.0;
  if (params.p == 0.0) return params.eps_b_k * d.squaredNorm();
  return params.eps_b_k * std::pow(norm, params.exponent());
}

Vector ibp_gradient(const Vector& d, const IbpParams& params) {
  const double norm = d.norm();
  if (norm == 0.0) return Vector::Zero(d.size());
  if (params.p == 0.0) return 2.0 * params.eps_b_k * d;
  const double a = params.exponent();
  return params.eps_b_k * a * std::pow(norm, a - 2.0) * d;
}

Matrix ibp_hessian(const Vector& d, const IbpParams& params) {
  const auto n = d.size();
  if (params.p == 0.0) return 2.0 * params.eps_b_k * Matrix::Identity(n, n);
  const double norm = d.norm();
  if (norm == 0.0) return Matrix::Zero(n, n);
  const double a = params.exponent();
  const Vector u = d / norm;
  return params.eps_b_k * a * std::pow(norm, a - 2.0) *
         (Matrix::Identity(n, n) + (a - 2.0) * u * u.transpose());
}

IbpParams adapt_eps_b(const IbpParams& params, double prev_step_norm, double prev_rho,
                      double eps_b_min_ratio) {
  if (!(prev_rho > 0.0)) throw InvalidConfig("adapt_eps_b: previous radius must be positive");
  IbpParams out = params;
  const double ratio = prev_step_norm / prev_rho;
  out.eps_b_k = std::max(params.eps_b * ratio * ratio, eps_b_min_ratio * params.eps_b);
  return out;
}

Vector model_constraint_values(const std::vector<QuadraticModel>& models_c, const Vector& s,
                               const IbpParams& params) {
  Vector out(static_cast<Eigen::Index>(models_c.size()));
  const double h = ibp_value(s, params);
  for (std::size_t i = 0; i < models_c.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = models_c[i].value(s) + h;
  }
  return out;
}

}  // namespace nowpac
