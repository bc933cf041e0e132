#pragma once

#include <string>
#include <utility>

#include "core/mdp.hpp"

namespace mrpe {

enum class EnvKind { kRiverswim, kForkedRiverswim, kDoubleChain, kNArms };

struct EnvSpec {
  EnvKind kind = EnvKind::kRiverswim;
  int n = 5;
  double p = 0.7;
  double p_prime = -1.0;  // negative: 6 (1 - p) / 7
  double p0 = 0.7;
  double gamma = 0.9;

  double resolved_p_prime() const { return p_prime < 0.0 ? 6.0 * (1.0 - p) / 7.0 : p_prime; }
};

// n states, actions {left, right}.
Mdp make_riverswim(int n, double p, double p_prime, double gamma);

// States s0, s_1..s_n, s'_1..s'_n (indices 0, 1..n, n+1..2n);
// actions {left, right, switch fork}.
Mdp make_forked_riverswim(int n, double p, double p_prime, double gamma);

// States s0, s_1..s_n, s'_1..s'_n as above; a0 enters the first chain from s0,
// a1 the second.
Mdp make_double_chain(int n, double p, double gamma);

// States s0, s_1..s_n with n actions. In s_i, a_j returns home iff
// j >= min(i, n - 1); other actions stay put.
Mdp make_narms(int n, double p0, double gamma);

Mdp make_env(const EnvSpec& spec);

// Designated (state, action) pair whose one-hot reward defines the
// single-policy target.
std::pair<int, int> default_target(const EnvSpec& spec);

const char* env_name(EnvKind kind);

// "riverswim n=5 p=0.7": a kind name followed by key=value tokens (n, p,
// p_prime, p0, gamma). A leading "kind=" or "env=" is accepted too.
EnvSpec parse_env(const std::string& text);
std::string describe(const EnvSpec& spec);

}  // namespace mrpe
