#pragma once

#include <stdexcept>
#include <string>

namespace mfq {

/// Handling of the service term at level 0.
///
/// PaperLiteral keeps V_0 = x_1 - x_0, which lets probability mass leak out
/// of the simplex at rate nu*x_0. MassConserving replaces it with V_0 = x_1
/// (departures only from non-empty queues), matching the stochastic
/// generator. Default everywhere is MassConserving.
enum class Convention { PaperLiteral, MassConserving };

inline const char* to_string(Convention c) {
  return c == Convention::PaperLiteral ? "paper-literal" : "mass-conserving";
}

inline Convention convention_from_string(const std::string& s) {
  if (s == "paper-literal") return Convention::PaperLiteral;
  if (s == "mass-conserving") return Convention::MassConserving;
  throw std::invalid_argument("unknown convention: " + s);
}

/// Model parameters: per-server arrival rate lambda, service rate nu,
/// choice count L, observation horizon T.
struct Params {
  double lambda = 0.5;
  double nu = 1.0;
  int L = 2;
  double T = 10.0;

  // Degenerate rates (0) are allowed so that pure-birth / pure-death edge
  // cases stay expressible; estimation targets positive rates.
  void validate() const {
    if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
    if (!(nu >= 0)) throw std::invalid_argument("nu must be >= 0");
    if (L < 2) throw std::invalid_argument("L must be >= 2");
    if (!(T > 0)) throw std::invalid_argument("T must be > 0");
  }
};

/// Numerical failure inside an integrator or solver (CLI exit code 4).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tail mass reached the truncation boundary; the level cap J is too small.
struct TruncationOverflow : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace mfq
