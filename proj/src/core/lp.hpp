#pragma once

#include <limits>

#include "core/mdp.hpp"

namespace mrpe {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(LpStatus status);

// Dense linear program
//   minimise (or maximise) c^T x
//   s.t. eq_lhs x = eq_rhs, le_lhs x <= le_rhs, lower <= x <= upper.
// Empty lower/upper mean x >= 0 with no upper bound; entries may be +-inf.
struct LpProblem {
  Vector objective;
  bool maximize = false;
  Matrix eq_lhs;
  Vector eq_rhs;
  Matrix le_lhs;
  Vector le_rhs;
  Vector lower;
  Vector upper;
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-11;
  int max_iterations = 200000;
};

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double optimum = std::numeric_limits<double>::quiet_NaN();
  Vector point;
  int iterations = 0;
};

// Two-phase tableau simplex with Bland's rule. The final basic solution is
// re-solved against the original constraint matrix to shed pivoting drift.
LpResult lp_solve(const LpProblem& problem, const LpOptions& options = {});

}  // namespace mrpe
