#pragma once

#include <vector>

#include "nowpac/blackbox.hpp"

namespace nowpac {

struct QuadraticModel;

/// Inner boundary path constants. The offset added to every constraint model
/// is h(d) = eps_b_k * |d|^(2/(1+p)).
struct IbpParams {
  double eps_b = 10.0;    // base constant
  double eps_b_k = 10.0;  // current, rescaled constant
  double p = 0.0;         // order reduction in [0,1)

  double exponent() const { return 2.0 / (1.0 + p); }
  void validate() const;
};

double ibp_value(const Vector& d, const IbpParams& params);
Vector ibp_gradient(const Vector& d, const IbpParams& params);
/// Hessian of h at d. For p > 0 the Hessian is unbounded at d = 0; zero is
/// returned there.
Matrix ibp_hessian(const Vector& d, const IbpParams& params);

/// eps_b_k = eps_b * (|s_{k-1}| / rho_{k-1})^2, floored at eps_b_min_ratio * eps_b.
IbpParams adapt_eps_b(const IbpParams& params, double prev_step_norm, double prev_rho,
                      double eps_b_min_ratio = 1e-3);

/// Entries m_ci(x_k + s) + h(s); s lies in the approximated feasible domain iff
/// all entries are <= 0.
Vector model_constraint_values(const std::vector<QuadraticModel>& models_c, const Vector& s,
                               const IbpParams& params);

}  // namespace nowpac
