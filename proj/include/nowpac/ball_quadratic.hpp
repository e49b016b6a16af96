#pragma once

#include "nowpac/blackbox.hpp"

namespace nowpac {

struct BallMinimum {
  Vector s;
  double value = 0.0;  // g's + s'Hs/2
  bool exact = true;   // false when the sampling fallback was used
};

/// Global minimizer of g's + 0.5 s'Hs over |s| <= radius, H symmetric and
/// possibly indefinite. Uses an eigen-decomposition and the secular equation,
/// including the hard case. Falls back to deterministic sampling of 10 n^2
/// points if the eigen-solver fails.
BallMinimum minimize_quadratic_on_ball(const Vector& g, const Matrix& H, double radius);

}  // namespace nowpac
