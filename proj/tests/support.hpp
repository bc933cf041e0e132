#pragma once

#include <cmath>
#include <vector>

#include "core/mdp.hpp"
#include "core/rng.hpp"

namespace mrpe::test {

// Dirichlet(1)-ish rows with a random sparsity pattern; every row keeps at
// least one positive entry.
inline Mdp random_mdp(Rng& rng, int S, int A, double gamma, double zero_prob = 0.3) {
  Matrix t(S * A, S);
  for (int r = 0; r < S * A; ++r) {
    double total = 0.0;
    for (int j = 0; j < S; ++j) {
      const double u = rng.uniform();
      t(r, j) = u < zero_prob ? 0.0 : -std::log(1.0 - rng.uniform());
      total += t(r, j);
    }
    if (total == 0.0) {
      t(r, static_cast<int>(rng.below(S))) = 1.0;
      total = 1.0;
    }
    t.row(r) /= total;
  }
  return Mdp(S, A, gamma, t);
}

// Dense rows: every transition positive, so every chain is ergodic.
inline Mdp random_dense_mdp(Rng& rng, int S, int A, double gamma) { return random_mdp(rng, S, A, gamma, 0.0); }

inline DeterministicPolicy random_policy(Rng& rng, int S, int A) {
  DeterministicPolicy pi;
  for (int s = 0; s < S; ++s) pi.action.push_back(static_cast<int>(rng.below(A)));
  return pi;
}

inline Vector random_reward(Rng& rng, int S) {
  Vector r(S);
  for (int s = 0; s < S; ++s) r[s] = rng.uniform();
  return r;
}

// s1 -> s2 -> s1 under the only action.
inline Mdp two_state_cycle(double gamma) {
  Matrix t(2, 2);
  t << 0, 1, 1, 0;
  return Mdp(2, 1, gamma, t);
}

// Every action self-loops.
inline Mdp self_loops(int S, int A, double gamma) {
  Matrix t = Matrix::Zero(S * A, S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) t(s * A + a, s) = 1.0;
  return Mdp(S, A, gamma, t);
}

inline DeterministicPolicy constant_policy(int S, int a) { return DeterministicPolicy{std::vector<int>(S, a)}; }

}  // namespace mrpe::test
