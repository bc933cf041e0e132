#pragma once

#include <iosfwd>
#include <span>

#include "core/mdp.hpp"
#include "core/reward_sets.hpp"

namespace mrpe {

// S x A state-action distribution.
struct Occupancy {
  Matrix omega;
};

struct AllocationResult {
  Occupancy omega;
  double u_value = 0.0;
  int iterations = 0;
  // Relative bracket width proven by the feasibility checks; NaN when the
  // bracket could not be certified (or was not requested).
  double certified_gap = 0.0;
};

// c(s, a) = max over policies with pi_i(s) = a of A_i(s) g^2 / (2 eps^2 (1-g)^2);
// zero where no policy plays a.
Matrix allocation_coefficients(const ComplexityMatrix& cmatrix, std::span<const DeterministicPolicy> policies,
                               int num_actions, double gamma, double eps);

// max over i, s of A_i(s) g^2 / (2 eps^2 (1-g)^2 omega(s, pi_i(s))). Entries
// with A_i(s) > 0 are required; a zero there gives +infinity.
double evaluate_u(const Matrix& omega, const ComplexityMatrix& cmatrix, std::span<const DeterministicPolicy> policies,
                  double gamma, double eps);

struct AllocationOptions {
  double tol_rel = 1e-6;
  double floor = 1e-9;  // eta
  bool certify = true;
  std::ostream* trace = nullptr;
};

// Stationary occupancy of the uniform policy: d(s) / A.
Matrix uniform_occupancy(const Mdp& m);

// Minimises U over stationary occupancies with every entry >= floor.
AllocationResult solve_allocation(const Mdp& m, const ComplexityMatrix& cmatrix,
                                  std::span<const DeterministicPolicy> policies, double eps,
                                  const AllocationOptions& options = {});

// Optimum over the whole simplex (no flow constraints): omega proportional to c.
AllocationResult generative_allocation(const ComplexityMatrix& cmatrix, std::span<const DeterministicPolicy> policies,
                                       int num_actions, double gamma, double eps);

// Largest flow residual |sum_a w(s,a) - sum_{s',a'} P(s|s',a') w(s',a')|.
double flow_residual(const Mdp& m, const Matrix& omega);

}  // namespace mrpe
