#include "core/environments.hpp"

#include <charconv>
#include <sstream>

#include "core/error.hpp"

namespace mrpe {

namespace {

void check_prob(double v, const char* what) {
  if (!(v > 0.0 && v < 1.0)) throw Error(Errc::kInvalidArgument, std::string(what) + " must lie in (0, 1)");
}

void check_river(int n, double p, double p_prime) {
  if (n < 2) throw Error(Errc::kInvalidArgument, "environment size n must be at least 2");
  check_prob(p, "p");
  check_prob(p_prime, "p_prime");
  if (!(p + p_prime < 1.0)) throw Error(Errc::kInvalidArgument, "p + p_prime must be below 1");
}

// Right-swim row along a chain whose states are chain[0] (entry) .. chain[k]
// where chain[0] plays the role of s0.
void swim_right(Matrix& t, int A, int from, int left, int right, int depth, int last_depth, double p, double p_prime) {
  const Eigen::Index r = static_cast<Eigen::Index>(from) * A + 1;
  if (depth == 0) {
    t(r, right) += p;
    t(r, from) += 1.0 - p;
  } else if (depth == last_depth) {
    t(r, from) += p;
    t(r, left) += 1.0 - p;
  } else {
    t(r, right) += p;
    t(r, from) += p_prime;
    t(r, left) += 1.0 - p - p_prime;
  }
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(Errc::kParse, "bad number for " + key + ": " + value);
  return out;
}

}  // namespace

Mdp make_riverswim(int n, double p, double p_prime, double gamma) {
  check_river(n, p, p_prime);
  const int A = 2;
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(n) * A, n);
  for (int s = 0; s < n; ++s) {
    t(static_cast<Eigen::Index>(s) * A, s == 0 ? 0 : s - 1) = 1.0;
    swim_right(t, A, s, s == 0 ? 0 : s - 1, s == n - 1 ? s : s + 1, s, n - 1, p, p_prime);
  }
  return Mdp(n, A, gamma, std::move(t));
}

Mdp make_forked_riverswim(int n, double p, double p_prime, double gamma) {
  check_river(n, p, p_prime);
  const int S = 2 * n + 1, A = 3;
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(S) * A, S);
  auto at = [&](int fork, int depth) { return depth == 0 ? 0 : fork * n + depth; };
  // s0
  t(0, 0) = 1.0;
  swim_right(t, A, 0, 0, at(0, 1), 0, n, p, p_prime);
  t(2, 0) = 1.0;
  for (int fork = 0; fork < 2; ++fork) {
    for (int d = 1; d <= n; ++d) {
      const int s = at(fork, d);
      const Eigen::Index base = static_cast<Eigen::Index>(s) * A;
      t(base, at(fork, d - 1)) = 1.0;
      swim_right(t, A, s, at(fork, d - 1), d == n ? s : at(fork, d + 1), d, n, p, p_prime);
      t(base + 2, d == n ? s : at(1 - fork, d)) = 1.0;
    }
  }
  return Mdp(S, A, gamma, std::move(t));
}

Mdp make_double_chain(int n, double p, double gamma) {
  if (n < 2) throw Error(Errc::kInvalidArgument, "environment size n must be at least 2");
  check_prob(p, "p");
  const int S = 2 * n + 1, A = 2;
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(S) * A, S);
  auto at = [&](int chain, int depth) { return depth == 0 ? 0 : chain * n + depth; };
  t(0, at(0, 1)) = 1.0;
  t(1, at(1, 1)) = 1.0;
  for (int chain = 0; chain < 2; ++chain) {
    for (int d = 1; d <= n; ++d) {
      const int s = at(chain, d);
      const Eigen::Index base = static_cast<Eigen::Index>(s) * A;
      const int back = at(chain, d - 1);
      t(base, back) = 1.0;
      t(base + 1, d == n ? s : at(chain, d + 1)) += p;
      t(base + 1, back) += 1.0 - p;
    }
  }
  return Mdp(S, A, gamma, std::move(t));
}

Mdp make_narms(int n, double p0, double gamma) {
  if (n < 2) throw Error(Errc::kInvalidArgument, "environment size n must be at least 2");
  check_prob(p0, "p0");
  const int S = n + 1, A = n;
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(S) * A, S);
  t(0, 1) = 1.0;
  for (int i = 1; i < n; ++i) {
    const double go = p0 / (i + 1);
    t(i, i + 1) = go;
    t(i, 0) = 1.0 - go;
  }
  for (int s = 1; s <= n; ++s) {
    const int first_home = std::min(s, n - 1);
    for (int a = 0; a < A; ++a) t(static_cast<Eigen::Index>(s) * A + a, a >= first_home ? 0 : s) = 1.0;
  }
  return Mdp(S, A, gamma, std::move(t));
}

Mdp make_env(const EnvSpec& spec) {
  switch (spec.kind) {
    case EnvKind::kRiverswim:
      return make_riverswim(spec.n, spec.p, spec.resolved_p_prime(), spec.gamma);
    case EnvKind::kForkedRiverswim:
      return make_forked_riverswim(spec.n, spec.p, spec.resolved_p_prime(), spec.gamma);
    case EnvKind::kDoubleChain:
      return make_double_chain(spec.n, spec.p, spec.gamma);
    case EnvKind::kNArms:
      return make_narms(spec.n, spec.p0, spec.gamma);
  }
  throw Error(Errc::kInvalidArgument, "unknown environment kind");
}

std::pair<int, int> default_target(const EnvSpec& spec) {
  switch (spec.kind) {
    case EnvKind::kRiverswim:
      return {spec.n - 1, 1};
    case EnvKind::kForkedRiverswim:
    case EnvKind::kDoubleChain:
      return {2 * spec.n, 1};
    case EnvKind::kNArms:
      return {spec.n, spec.n - 1};
  }
  throw Error(Errc::kInvalidArgument, "unknown environment kind");
}

const char* env_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::kRiverswim:
      return "riverswim";
    case EnvKind::kForkedRiverswim:
      return "forked_riverswim";
    case EnvKind::kDoubleChain:
      return "double_chain";
    case EnvKind::kNArms:
      return "narms";
  }
  return "unknown";
}

EnvSpec parse_env(const std::string& text) {
  std::istringstream in(text);
  std::string token;
  EnvSpec spec;
  bool have_kind = false;
  while (in >> token) {
    std::string key, value;
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      key = "kind";
      value = token;
    } else {
      key = token.substr(0, eq);
      value = token.substr(eq + 1);
    }
    if (key == "kind" || key == "env") {
      if (value == "riverswim")
        spec.kind = EnvKind::kRiverswim;
      else if (value == "forked_riverswim" || value == "forkedriverswim")
        spec.kind = EnvKind::kForkedRiverswim;
      else if (value == "double_chain" || value == "doublechain")
        spec.kind = EnvKind::kDoubleChain;
      else if (value == "narms")
        spec.kind = EnvKind::kNArms;
      else
        throw Error(Errc::kConfig, "unknown environment: " + value);
      have_kind = true;
    } else if (key == "n") {
      const double v = parse_double(key, value);
      if (v != static_cast<int>(v)) throw Error(Errc::kParse, "n must be an integer");
      spec.n = static_cast<int>(v);
    } else if (key == "p") {
      spec.p = parse_double(key, value);
    } else if (key == "p_prime") {
      spec.p_prime = parse_double(key, value);
    } else if (key == "p0") {
      spec.p0 = parse_double(key, value);
    } else if (key == "gamma") {
      spec.gamma = parse_double(key, value);
    } else {
      throw Error(Errc::kConfig, "unknown environment parameter: " + key);
    }
  }
  if (!have_kind) throw Error(Errc::kConfig, "environment kind missing");
  return spec;
}

std::string describe(const EnvSpec& spec) {
  std::ostringstream out;
  out << env_name(spec.kind) << " n=" << spec.n;
  if (spec.kind == EnvKind::kNArms)
    out << " p0=" << spec.p0;
  else
    out << " p=" << spec.p;
  if (spec.kind == EnvKind::kRiverswim || spec.kind == EnvKind::kForkedRiverswim)
    out << " p_prime=" << spec.resolved_p_prime();
  out << " gamma=" << spec.gamma;
  return out.str();
}

}  // namespace mrpe
