#include "core/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "core/error.hpp"
#include "core/lp.hpp"

namespace mrpe {

namespace {

void check_inputs(const ComplexityMatrix& cmatrix, std::span<const DeterministicPolicy> policies, int num_states,
                  int num_actions) {
  if (static_cast<std::size_t>(cmatrix.num_policies()) != policies.size())
    throw Error(Errc::kShapeMismatch, "complexity matrix needs one row per policy");
  if (cmatrix.num_states() != num_states) throw Error(Errc::kShapeMismatch, "complexity matrix has wrong width");
  if (cmatrix.entries.size() > 0 && !(cmatrix.entries.minCoeff() >= 0.0))
    throw Error(Errc::kInvalidArgument, "complexity entries must be non-negative");
  for (const DeterministicPolicy& pi : policies) {
    if (pi.num_states() != num_states) throw Error(Errc::kShapeMismatch, "policy has wrong length");
    for (int a : pi.action)
      if (a < 0 || a >= num_actions) throw Error(Errc::kIndexOutOfRange, "policy action out of range");
  }
}

double scale_factor(double gamma, double eps) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(Errc::kDiscountOutOfRange, "discount must lie in (0, 1)");
  if (!(eps > 0.0)) throw Error(Errc::kInvalidArgument, "eps must be positive");
  return gamma * gamma / (2.0 * eps * eps * (1.0 - gamma) * (1.0 - gamma));
}

Eigen::Index flat(int s, int a, int num_actions) { return static_cast<Eigen::Index>(s) * num_actions + a; }

// Flow equalities and the simplex constraint over the flattened omega.
void add_polytope_rows(const Mdp& m, Eigen::Index num_vars, LpProblem& lp) {
  const int S = m.num_states(), A = m.num_actions();
  lp.eq_lhs = Matrix::Zero(S + 1, num_vars);
  lp.eq_rhs = Vector::Zero(S + 1);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) lp.eq_lhs(s, flat(s, a, A)) += 1.0;
    for (int sp = 0; sp < S; ++sp)
      for (int ap = 0; ap < A; ++ap) lp.eq_lhs(s, flat(sp, ap, A)) -= m.p(sp, ap, s);
  }
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(S) * A; ++k) lp.eq_lhs(S, k) = 1.0;
  lp.eq_rhs[S] = 1.0;
}

Matrix unflatten(const Vector& x, int S, int A) {
  Matrix omega(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) omega(s, a) = x[flat(s, a, A)];
  return omega;
}

// Is there a stationary occupancy with omega >= max(floor, c / level)?
bool feasible_at(const Mdp& m, const Matrix& coeff, double level, double floor) {
  const int S = m.num_states(), A = m.num_actions();
  const Eigen::Index n = static_cast<Eigen::Index>(S) * A;
  LpProblem lp;
  lp.objective = Vector::Zero(n);
  add_polytope_rows(m, n, lp);
  lp.lower.resize(n);
  lp.upper = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) lp.lower[flat(s, a, A)] = std::max(floor, coeff(s, a) / level);
  if (lp.lower.sum() > 1.0) return false;
  return lp_solve(lp).status == LpStatus::kOptimal;
}

}  // namespace

Matrix allocation_coefficients(const ComplexityMatrix& cmatrix, std::span<const DeterministicPolicy> policies,
                               int num_actions, double gamma, double eps) {
  const int S = cmatrix.num_states();
  check_inputs(cmatrix, policies, S, num_actions);
  const double k = scale_factor(gamma, eps);
  Matrix c = Matrix::Zero(S, num_actions);
  for (std::size_t i = 0; i < policies.size(); ++i)
    for (int s = 0; s < S; ++s) {
      double& slot = c(s, policies[i](s));
      slot = std::max(slot, k * cmatrix(static_cast<int>(i), s));
    }
  return c;
}

double evaluate_u(const Matrix& omega, const ComplexityMatrix& cmatrix, std::span<const DeterministicPolicy> policies,
                  double gamma, double eps) {
  check_inputs(cmatrix, policies, static_cast<int>(omega.rows()), static_cast<int>(omega.cols()));
  const double k = scale_factor(gamma, eps);
  double worst = 0.0;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    for (int s = 0; s < cmatrix.num_states(); ++s) {
      const double need = cmatrix(static_cast<int>(i), s);
      if (need <= 0.0) continue;
      const double w = omega(s, policies[i](s));
      if (!(w > 0.0)) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, k * need / w);
    }
  }
  return worst;
}

Matrix uniform_occupancy(const Mdp& m) {
  const StationaryResult st = stationary_distribution(uniform_chain(m));
  Matrix omega(m.num_states(), m.num_actions());
  for (int s = 0; s < m.num_states(); ++s) omega.row(s).setConstant(st.distribution[s] / m.num_actions());
  return omega;
}

AllocationResult solve_allocation(const Mdp& m, const ComplexityMatrix& cmatrix,
                                  std::span<const DeterministicPolicy> policies, double eps,
                                  const AllocationOptions& options) {
  const int S = m.num_states(), A = m.num_actions();
  check_inputs(cmatrix, policies, S, A);
  if (!(options.floor >= 0.0) || options.floor * S * A >= 1.0)
    throw Error(Errc::kInvalidArgument, "occupancy floor too large");
  if (!(options.tol_rel > 0.0 && options.tol_rel < 1.0)) throw Error(Errc::kInvalidArgument, "tol_rel must lie in (0, 1)");

  const Matrix coeff = allocation_coefficients(cmatrix, policies, A, m.discount(), eps);
  const double top = coeff.maxCoeff();
  AllocationResult out;
  if (top <= 0.0) {
    out.omega.omega = uniform_occupancy(m);
    out.u_value = 0.0;
    if (options.trace) *options.trace << "allocation: all coefficients zero, uniform occupancy\n";
    return out;
  }

  // maximise u subject to coeff/top * u <= omega; the optimum of U is top / u.
  const Eigen::Index n = static_cast<Eigen::Index>(S) * A;
  LpProblem lp;
  lp.objective = Vector::Zero(n + 1);
  lp.objective[n] = 1.0;
  lp.maximize = true;
  add_polytope_rows(m, n + 1, lp);
  int required = 0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      if (coeff(s, a) > 0.0) ++required;
  lp.le_lhs = Matrix::Zero(required, n + 1);
  lp.le_rhs = Vector::Zero(required);
  int row = 0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      if (!(coeff(s, a) > 0.0)) continue;
      lp.le_lhs(row, n) = coeff(s, a) / top;
      lp.le_lhs(row, flat(s, a, A)) = -1.0;
      ++row;
    }
  lp.lower = Vector::Constant(n + 1, options.floor);
  lp.lower[n] = 0.0;
  lp.upper = Vector::Constant(n + 1, std::numeric_limits<double>::infinity());

  const LpResult res = lp_solve(lp);
  out.iterations = res.iterations;
  if (options.trace)
    *options.trace << "allocation: lp " << to_string(res.status) << " after " << res.iterations
                   << " pivots, level " << (res.status == LpStatus::kOptimal ? top / res.optimum : 0.0) << '\n';

  if (res.status != LpStatus::kOptimal || !(res.optimum > 0.0)) {
    // The floored polytope is empty (the model has a closed class that
    // misses some states); fall back to the uniform behaviour.
    out.omega.omega = uniform_occupancy(m);
    out.u_value = evaluate_u(out.omega.omega, cmatrix, policies, m.discount(), eps);
    out.certified_gap = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  Matrix omega = unflatten(res.point.head(n), S, A).cwiseMax(options.floor);
  omega /= omega.sum();
  out.omega.omega = omega;
  out.u_value = evaluate_u(omega, cmatrix, policies, m.discount(), eps);

  if (options.certify) {
    const double hi = out.u_value;
    const double lo = hi * (1.0 - options.tol_rel);
    const bool ok_hi = feasible_at(m, coeff, hi * (1.0 + 1e-12), options.floor);
    const bool ok_lo = feasible_at(m, coeff, lo, options.floor);
    out.certified_gap = (ok_hi && !ok_lo) ? options.tol_rel : std::numeric_limits<double>::quiet_NaN();
    if (options.trace)
      *options.trace << "allocation: feasible at " << hi << ": " << ok_hi << ", at " << lo << ": " << ok_lo << '\n';
  } else {
    out.certified_gap = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

AllocationResult generative_allocation(const ComplexityMatrix& cmatrix, std::span<const DeterministicPolicy> policies,
                                       int num_actions, double gamma, double eps) {
  const Matrix coeff = allocation_coefficients(cmatrix, policies, num_actions, gamma, eps);
  const double total = coeff.sum();
  if (!(total > 0.0)) throw Error(Errc::kAllZeroComplexity, "every complexity coefficient is zero");
  AllocationResult out;
  out.omega.omega = coeff / total;
  out.u_value = total;
  return out;
}

double flow_residual(const Mdp& m, const Matrix& omega) {
  const int S = m.num_states(), A = m.num_actions();
  Vector w(static_cast<Eigen::Index>(S) * A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) w[flat(s, a, A)] = omega(s, a);
  const Vector inflow = m.transitions().transpose() * w;
  double worst = 0.0;
  for (int s = 0; s < S; ++s) worst = std::max(worst, std::abs(omega.row(s).sum() - inflow[s]));
  return worst;
}

}  // namespace mrpe
