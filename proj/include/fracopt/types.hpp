#pragma once

#include <stdexcept>
#include <string>

namespace fracopt {

/// Numerical failure (divergence, non-convergence, singular system).
class numerics_error : public std::runtime_error {
 public:
  explicit numerics_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Spatial fractional order s of the integral fractional Laplacian, s in (0,1).
struct FracOrder {
  double s;

  explicit FracOrder(double value) : s(value) {
    if (!(s > 0.0 && s < 1.0))
      throw std::invalid_argument("FracOrder: s must lie in (0,1), got " + std::to_string(value));
  }
};

/// Caputo time order gamma in (0,1]. gamma = 1 is the classical-limit
/// diagnostic case (all history weights vanish, stepping reduces to Euler).
struct TimeOrder {
  double gamma;

  explicit TimeOrder(double value) : gamma(value) {
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw std::invalid_argument("TimeOrder: gamma must lie in (0,1], got " +
                                  std::to_string(value));
  }

  bool is_classical() const { return gamma == 1.0; }
};

}  // namespace fracopt
