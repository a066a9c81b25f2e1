#pragma once

// Structural predicates on truth tables, decentering, the window-distribution
// bound on lost bits, and generators for the conserving and decentered
// families.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/rational.hpp>

#include "cointoss/core.hpp"

namespace cointoss {

using Rational = boost::rational<std::int64_t>;

/// phi(-x) = -phi(x) for every x. The transformation is then invariant
/// under global sign flip of the input.
inline bool is_even(const TruthTable& t) {
  const StateId flip = t.states() - 1;
  for (StateId s = 0; s < t.states(); ++s) {
    if (t.bit(s) == t.bit(s ^ flip)) return false;
  }
  return true;
}

/// phi(x) = x_1 psi(x_2..x_d); equivalently both step maps are bijections.
/// The zero-length table is vacuously of this form.
inline bool is_maxloss(const TruthTable& t) {
  if (t.dim() == 0) return true;
  const StateId top = StateId{1} << (t.dim() - 1);
  for (StateId s = 0; s < top; ++s) {
    if (t.bit(s) == t.bit(s | top)) return false;
  }
  return true;
}

struct Dichotomy {
  Sign gamma = Sign::plus;
  StateSet a;  // class containing state 0
  StateSet b;
};

/// Two-colouring of E_d preserved by f_gamma and swapped by f_{-gamma},
/// found by parity propagation. gamma = + is tried first.
inline std::optional<Dichotomy> is_dichotomic(const TruthTable& t) {
  if (t.dim() == 0) return std::nullopt;
  const StepMap f(t);
  const StateId n = t.states();
  for (Sign gamma : kSigns) {
    std::vector<int> colour(n, -1);
    colour[0] = 0;
    std::vector<StateId> stack{0};
    bool ok = true;
    auto visit = [&](StateId v, int c) {
      if (colour[v] < 0) {
        colour[v] = c;
        stack.push_back(v);
      } else if (colour[v] != c) {
        ok = false;
      }
    };
    // constraints are symmetric, so walk both images and both preimages
    std::vector<std::vector<std::pair<StateId, int>>> adj(n);
    for (StateId s = 0; s < n; ++s) {
      const StateId keep = f(gamma, s);
      const StateId swap = f(-gamma, s);
      adj[s].emplace_back(keep, 0);
      adj[keep].emplace_back(s, 0);
      adj[s].emplace_back(swap, 1);
      adj[swap].emplace_back(s, 1);
    }
    while (ok && !stack.empty()) {
      const StateId s = stack.back();
      stack.pop_back();
      for (auto [v, parity] : adj[s]) visit(v, colour[s] ^ parity);
    }
    if (!ok) continue;
    Dichotomy out;
    out.gamma = gamma;
    for (StateId s = 0; s < n; ++s) {
      if (colour[s] < 0) throw InvariantViolation("shift graph is not connected");
      if (colour[s] == 0) {
        out.a.insert(s);
      } else {
        out.b.insert(s);
      }
    }
    return out;
  }
  return std::nullopt;
}

/// |phi^{-1}(1)| - 2^(d-1).
inline int decentering(const TruthTable& t) {
  return t.ones() - static_cast<int>(t.states() / 2);
}

/// E[H] = decentering / 2^(d-1), with H = phi of a uniform window.
inline Rational mean_h(const TruthTable& t) {
  return Rational(2 * t.ones() - static_cast<std::int64_t>(t.states()), static_cast<std::int64_t>(t.states()));
}

/// P[H != 1] for a uniform window.
inline Rational prob_h_not_one(const TruthTable& t) {
  return Rational(static_cast<std::int64_t>(t.states()) - t.ones(), static_cast<std::int64_t>(t.states()));
}

/// Smallest p such that some outcome of (H_1..H_d) has probability above
/// 2^-(p+1). At most p bits are lost.
inline int window_bound(const TruthTable& t) {
  const int d = t.dim();
  if (d == 0) return 0;
  const int span_len = 2 * d - 1;
  const std::uint64_t windows = std::uint64_t{1} << span_len;
  const StateId mask = t.states() - 1;
  std::vector<std::uint32_t> counts(t.states(), 0);
  for (std::uint64_t w = 0; w < windows; ++w) {
    // bits of w, most significant first, are eps_{1-d} .. eps_{d-1}
    StateId outcome = 0;
    for (int k = 0; k < d; ++k) {
      const auto window = static_cast<StateId>((w >> (span_len - d - k)) & mask);
      outcome = (outcome << 1) | (t.bit(window) ? 1U : 0U);
    }
    ++counts[outcome];
  }
  const std::uint64_t best = *std::max_element(counts.begin(), counts.end());
  for (int p = 0; p <= d; ++p) {
    if ((best << (p + 1)) > windows) return p;
  }
  throw InvariantViolation("window-distribution bound exceeded d");
}

/// Smallest p with P[H != 1] < (2^(p+1) - 1) / (2^(p+1) d), if any p <= d works.
inline std::optional<int> flip_rate_bound(const TruthTable& t) {
  const int d = t.dim();
  if (d == 0) return std::nullopt;
  const std::uint64_t minus = t.states() - static_cast<StateId>(t.ones());
  for (int p = 0; p <= d; ++p) {
    const std::uint64_t scale = std::uint64_t{1} << (p + 1);
    if (minus * scale * static_cast<std::uint64_t>(d) < (scale - 1) * t.states()) return p;
  }
  return std::nullopt;
}

struct ClassTags {
  bool even = false;
  std::optional<Dichotomy> dichotomic;
  bool maxloss = false;
  int decentering = 0;
  Rational mean_h;
};

inline ClassTags classify(const TruthTable& t) {
  return {is_even(t), is_dichotomic(t), is_maxloss(t), decentering(t), mean_h(t)};
}

// ---- families ------------------------------------------------------------

/// H_n = max(eps_{n-a_1}, ..., eps_{n-a_m}); lag a reads x_{d-a+1}, d = a_m.
inline TruthTable family_max_lags(std::span<const int> lags) {
  if (lags.size() < 2) throw std::invalid_argument("max-lags family needs at least two lags");
  if (lags.front() < 1) throw std::invalid_argument("lags must be positive");
  if (!std::is_sorted(lags.begin(), lags.end()) ||
      std::adjacent_find(lags.begin(), lags.end()) != lags.end()) {
    throw std::invalid_argument("lags must be strictly increasing");
  }
  const int d = lags.back();
  check_dim(d);
  return TruthTable::from_function(d, [&](std::span<const int> x) {
    int v = -1;
    for (int a : lags) v = std::max(v, x[static_cast<std::size_t>(d - a)]);
    return v;
  });
}

inline int lag_gcd(std::span<const int> lags) {
  return std::accumulate(lags.begin(), lags.end(), 0, [](int g, int a) { return std::gcd(g, a); });
}

/// phi(x) = max(x_1, -x_{e+1}, psi(x)) with e = d - c.
inline TruthTable family_guard(int d, int c, const TruthTable& psi) {
  check_dim(d);
  if (c < 1 || c >= d) throw std::invalid_argument("guard family needs 1 <= c < d");
  if (psi.dim() != d) throw std::invalid_argument("psi must have the same window length as phi");
  const auto e = static_cast<std::size_t>(d - c);
  return TruthTable::from_function(d, [&](std::span<const int> x) {
    return std::max({x[0], -x[e], psi.value(encode_state(x))});
  });
}

/// Every distinct table of the guard family for (d, c). psi only matters on
/// states with x_1 = -1 and x_{e+1} = +1, so it ranges over those.
inline std::vector<TruthTable> guard_instances(int d, int c) {
  check_dim(d);
  if (c < 1 || c >= d) throw std::invalid_argument("guard family needs 1 <= c < d");
  const int e = d - c;
  const StateId x1 = StateId{1} << (d - 1);
  const StateId xe = StateId{1} << (d - 1 - e);
  std::vector<StateId> free;
  for (StateId s = 0; s < state_count(d); ++s) {
    if ((s & x1) == 0 && (s & xe) != 0) free.push_back(s);
  }
  std::vector<TruthTable> out;
  for (std::uint64_t choice = 0; choice < (std::uint64_t{1} << free.size()); ++choice) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < free.size(); ++i) {
      if ((choice >> i) & 1U) bits |= std::uint64_t{1} << free[i];
    }
    out.push_back(family_guard(d, c, TruthTable(d, bits)));
  }
  return out;
}

/// phi(x) >= x_d everywhere and phi is not the last coordinate.
inline bool is_dominating(const TruthTable& t) {
  if (t.dim() == 0) return false;
  bool differs = false;
  for (StateId s = 0; s < t.states(); ++s) {
    const bool last = (s & 1U) != 0;
    if (last && !t.bit(s)) return false;
    if (last != t.bit(s)) differs = true;
  }
  return differs;
}

/// Length d-1 table (-1)^m, m the run of -1 at the newest end, capped at d-1.
inline TruthTable decentered_inner(int d) {
  if (d < 2) throw std::invalid_argument("decentered family needs d >= 2");
  check_dim(d);
  const int q = d - 1;
  return TruthTable::from_function(q, [&](std::span<const int> y) {
    int m = 0;
    for (int i = q - 1; i >= 0 && y[static_cast<std::size_t>(i)] == -1; --i) ++m;
    return m % 2 == 0 ? 1 : -1;
  });
}

/// Dichotomic table of length d whose H is close to 1/6 away from 1.
inline TruthTable family_decentered(int d) {
  return compose(TruthTable::phi1(), decentered_inner(d));
}

/// Closed form of P[H != 1] for family_decentered(d).
inline Rational decentered_expected(int d) {
  const std::int64_t n = std::int64_t{1} << d;
  return Rational(n + (d % 2 == 0 ? 8 : 4), 6 * n);
}

// ---- decomposition -------------------------------------------------------

struct Decomposition {
  TruthTable outer;
  TruthTable inner;
};

/// All tables of exact length L.
inline std::vector<TruthTable> tables_of_length(int length) {
  std::vector<TruthTable> out;
  const std::uint64_t count = std::uint64_t{1} << state_count(length);
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    TruthTable t(length, bits);
    if (effective_length(t).length == length) out.push_back(t);
  }
  return out;
}

/// Largest effective length find_decomposition accepts.
inline constexpr int kMaxDecomposeLength = 5;

/// A pair of positive-length factors whose composite is the reduced table,
/// or none when no such pair exists.
inline std::optional<Decomposition> find_decomposition(const TruthTable& t) {
  const Reduction r = effective_length(t);
  if (r.length > kMaxDecomposeLength) throw CapacityExceeded("decomposition search limited to length 5");
  for (int q = 1; q < r.length; ++q) {
    const std::vector<TruthTable> outers = tables_of_length(q);
    const std::vector<TruthTable> inners = tables_of_length(r.length - q);
    for (const TruthTable& o : outers) {
      for (const TruthTable& i : inners) {
        if (compose(o, i).bits() == r.table.bits()) return Decomposition{o, i};
      }
    }
  }
  return std::nullopt;
}

}  // namespace cointoss
