#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vecot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace tol {
inline constexpr double entry = 1e-12;       // per-entry comparisons
inline constexpr double mass = 1e-10;        // mass balance
inline constexpr double feasibility = 1e-9;  // LP primal/dual residuals
inline constexpr double gap = 1e-7;          // relative duality gap
inline constexpr double reader = 1e-9;       // negative entries clamped by readers
}  // namespace tol

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shapes or spaces that do not fit together.
struct DimensionError : Error {
  using Error::Error;
};

/// Input that violates a documented precondition.
struct PreconditionError : Error {
  using Error::Error;
};

/// The solver could not produce a validated answer.
struct NumericalBreakdown : Error {
  using Error::Error;
};

/// An enumeration would exceed its size guard.
struct GuardExceeded : Error {
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline double max_abs(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace vecot
