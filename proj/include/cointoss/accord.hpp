#pragma once

// Accordability of states, the subset chain on P(E_d), and the loss report.
//
// Two states are accordable when some sign word sends them to the same state.
// M is the largest number of pairwise non-accordable states, N = 2^d / M the
// largest simultaneously accordable set, and k = log2 M the number of bits
// of information the transformation destroys.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "cointoss/core.hpp"

namespace cointoss {

struct Limits {
  /// Largest number of nodes any single exploration may visit.
  std::size_t node_cap = std::size_t{1} << 20;
  /// Compare the subset-chain M with the exhaustive independent-set oracle
  /// whenever 2^d <= 32.
  bool cross_check = true;
  /// When the subset search hits node_cap, reach M by merging accordable
  /// pairs instead of failing. The word is then not certified shortest.
  bool merge_fallback = true;
};

/// Symmetric accordability relation, one row mask per state.
struct AccordMatrix {
  int dim = 0;
  std::vector<StateSet> rows;

  bool operator()(StateId a, StateId b) const { return rows[a].contains(b); }
  bool all_true() const {
    const StateSet full = StateSet::full(dim);
    return std::all_of(rows.begin(), rows.end(), [&](StateSet r) { return r == full; });
  }
  /// Number of true entries.
  int count() const {
    int n = 0;
    for (StateSet r : rows) n += r.size();
    return n;
  }
  bool is_equivalence() const {
    for (StateId a = 0; a < rows.size(); ++a) {
      for (StateId b : rows[a].elements()) {
        if (rows[b] != rows[a]) return false;
      }
    }
    return true;
  }
  bool operator==(const AccordMatrix&) const = default;
};

enum class ClosureMode {
  /// Entries flipped in place as soon as they are discovered.
  dynamic,
  /// A_{n+1} computed from a frozen A_n; the round count equals the
  /// largest number of steps any accordable pair needs.
  synchronous,
};

struct Closure {
  AccordMatrix matrix;
  int rounds = 0;
};

/// Fixed point of: set (i, j) when (f_+(i), f_+(j)) or (f_-(i), f_-(j)) is set,
/// seeded with the diagonal.
inline Closure accordability_closure(const TruthTable& t, ClosureMode mode = ClosureMode::dynamic) {
  const StepMap f(t);
  const StateId n = t.states();
  Closure out;
  out.matrix.dim = t.dim();
  auto& rows = out.matrix.rows;
  rows.resize(n);
  for (StateId i = 0; i < n; ++i) rows[i] = StateSet::singleton(i);

  bool changed = true;
  while (changed) {
    changed = false;
    const std::vector<StateSet> frozen = mode == ClosureMode::synchronous ? rows : std::vector<StateSet>{};
    const std::vector<StateSet>& read = mode == ClosureMode::synchronous ? frozen : rows;
    for (StateId i = 0; i < n; ++i) {
      for (StateId j = i + 1; j < n; ++j) {
        if (rows[i].contains(j)) continue;
        if (read[f.step(0, i)].contains(f.step(0, j)) || read[f.step(1, i)].contains(f.step(1, j))) {
          rows[i].insert(j);
          rows[j].insert(i);
          changed = true;
        }
      }
    }
    if (changed) ++out.rounds;
  }
  return out;
}

inline AccordMatrix accordability_matrix(const TruthTable& t) {
  return accordability_closure(t, ClosureMode::dynamic).matrix;
}

/// Shortest accord word length for (a, b) by forward search in the pair graph.
inline std::optional<int> min_accord_steps(const TruthTable& t, StateId a, StateId b) {
  const StateId n = t.states();
  if (a >= n || b >= n) throw std::out_of_range("state outside E_d");
  if (a == b) return 0;
  const StepMap f(t);
  std::vector<int> dist(static_cast<std::size_t>(n) * n, -1);
  std::deque<std::pair<StateId, StateId>> queue{{a, b}};
  dist[a * n + b] = 0;
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    const int dx = dist[x * n + y];
    for (int s = 0; s < 2; ++s) {
      const StateId nx = f.step(s, x);
      const StateId ny = f.step(s, y);
      if (nx == ny) return dx + 1;
      if (dist[nx * n + ny] < 0) {
        dist[nx * n + ny] = dx + 1;
        queue.emplace_back(nx, ny);
      }
    }
  }
  return std::nullopt;
}

/// Distance from every ordered pair to the diagonal, -1 when unreachable.
/// Computed backwards from the diagonal; pair (a, b) sits at a * 2^d + b.
inline std::vector<int> accord_distances(const StepMap& f) {
  const StateId n = f.states();
  std::array<std::vector<std::vector<StateId>>, 2> pre;
  for (int s = 0; s < 2; ++s) {
    pre[s].resize(n);
    for (StateId x = 0; x < n; ++x) pre[s][f.step(s, x)].push_back(x);
  }
  std::vector<int> dist(static_cast<std::size_t>(n) * n, -1);
  std::vector<std::uint32_t> queue;
  queue.reserve(dist.size());
  for (StateId x = 0; x < n; ++x) {
    dist[x * n + x] = 0;
    queue.push_back(x * n + x);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const StateId x = queue[head] / n;
    const StateId y = queue[head] % n;
    for (int s = 0; s < 2; ++s) {
      for (StateId a : pre[s][x]) {
        for (StateId b : pre[s][y]) {
          if (dist[a * n + b] < 0) {
            dist[a * n + b] = dist[x * n + y] + 1;
            queue.push_back(a * n + b);
          }
        }
      }
    }
  }
  return dist;
}

inline std::vector<int> accord_distances(const TruthTable& t) { return accord_distances(StepMap(t)); }

/// Largest finite accord distance over all pairs.
inline int max_accord_steps(const TruthTable& t) {
  const std::vector<int> dist = accord_distances(t);
  return *std::max_element(dist.begin(), dist.end());
}

/// Largest set of pairwise non-accordable states, by exhaustive branch and
/// bound over the accordability graph. Requires 2^d <= 32.
inline int max_independent_oracle(const AccordMatrix& acc) {
  if (acc.dim > 5) throw std::invalid_argument("independent-set oracle limited to d <= 5");
  int best = 0;
  auto search = [&](auto&& self, std::uint64_t candidates, int chosen) -> void {
    if (candidates == 0) {
      best = std::max(best, chosen);
      return;
    }
    if (chosen + std::popcount(candidates) <= best) return;
    const auto v = static_cast<StateId>(std::countr_zero(candidates));
    self(self, candidates & ~acc.rows[v].mask(), chosen + 1);
    self(self, candidates & ~(std::uint64_t{1} << v), chosen);
  };
  search(search, StateSet::full_mask(acc.dim), 0);
  return best;
}

inline int max_independent_oracle(const TruthTable& t) {
  return max_independent_oracle(accordability_matrix(t));
}

namespace detail {

/// Visited-set for 64-bit keys. Tables up to d = 4 use a stamped flat array
/// kept per thread; larger ones fall back to hashing.
class MaskVisited {
 public:
  explicit MaskVisited(int d) : flat_(d <= 4) {
    if (flat_) {
      auto& s = scratch();
      if (++s.generation == 0) {
        std::fill(s.stamps.begin(), s.stamps.end(), 0U);
        s.generation = 1;
      }
    }
  }

  /// Returns true when the key was not seen before.
  bool insert(std::uint64_t key) {
    if (flat_) {
      auto& s = scratch();
      if (s.stamps[key] == s.generation) return false;
      s.stamps[key] = s.generation;
      return true;
    }
    return hashed_.insert(key).second;
  }

 private:
  struct Scratch {
    std::vector<std::uint32_t> stamps = std::vector<std::uint32_t>(std::size_t{1} << 16, 0U);
    std::uint32_t generation = 0;
  };
  static Scratch& scratch() {
    thread_local Scratch s;
    return s;
  }

  bool flat_;
  std::unordered_set<std::uint64_t> hashed_;
};

struct SubsetSearch {
  int min_size = 0;
  SignWord word;     // lexicographically first shortest word reaching min_size
  StateSet image;    // image of the start set under `word`
  std::size_t nodes = 0;
  bool shortest = true;  // false when found by pair merging
};

/// Breadth-first search over the sets reachable from `start` under f_+ and
/// f_-, exploring + before -.
inline SubsetSearch explore_subsets(const StepMap& f, StateSet start, const Limits& limits) {
  struct Node {
    std::uint64_t mask;
    std::uint32_t parent;
    std::uint8_t sign;
  };
  MaskVisited visited(f.dim());
  std::vector<Node> nodes;
  nodes.push_back({start.mask(), 0, 0});
  visited.insert(start.mask());
  int min_size = start.size();
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (min_size == 1) break;  // cannot shrink further
    const StateSet cur(nodes[head].mask);
    for (int s = 0; s < 2; ++s) {
      const StateSet next = f.image(s, cur);
      if (visited.insert(next.mask())) {
        if (nodes.size() >= limits.node_cap) {
          throw CapacityExceeded("subset exploration exceeded " + std::to_string(limits.node_cap) +
                                 " nodes");
        }
        nodes.push_back({next.mask(), static_cast<std::uint32_t>(head), static_cast<std::uint8_t>(s)});
        min_size = std::min(min_size, next.size());
      }
    }
  }
  SubsetSearch out;
  out.min_size = min_size;
  out.nodes = nodes.size();
  std::size_t hit = 0;
  while (StateSet(nodes[hit].mask).size() != min_size) ++hit;
  out.image = StateSet(nodes[hit].mask);
  std::vector<Sign> signs;
  for (std::size_t i = hit; i != 0; i = nodes[i].parent) signs.push_back(nodes[i].sign == 0 ? Sign::plus : Sign::minus);
  std::reverse(signs.begin(), signs.end());
  out.word = SignWord(std::move(signs));
  return out;
}

/// Repeatedly applies the shortest word merging the closest accordable pair
/// of the current set. Stops at a set of pairwise non-accordable states,
/// which has exactly M elements since every word is injective on it.
inline SubsetSearch merge_pairs(const StepMap& f, StateSet start) {
  const std::vector<int> dist = accord_distances(f);
  const StateId n = f.states();
  auto at = [&](StateId a, StateId b) { return dist[static_cast<std::size_t>(a) * n + b]; };
  SubsetSearch out;
  std::vector<Sign> signs;
  StateSet cur = start;
  for (;;) {
    const std::vector<StateId> elems = cur.elements();
    int best = -1;
    StateId a = 0;
    StateId b = 0;
    for (std::size_t i = 0; i < elems.size(); ++i) {
      for (std::size_t j = i + 1; j < elems.size(); ++j) {
        const int d = at(elems[i], elems[j]);
        if (d > 0 && (best < 0 || d < best)) {
          best = d;
          a = elems[i];
          b = elems[j];
        }
      }
    }
    if (best < 0) break;
    for (int left = best; left > 0; --left) {
      const int s = at(f.step(0, a), f.step(0, b)) == left - 1 ? 0 : 1;
      signs.push_back(s == 0 ? Sign::plus : Sign::minus);
      cur = f.image(s, cur);
      a = f.step(s, a);
      b = f.step(s, b);
    }
  }
  out.min_size = cur.size();
  out.image = cur;
  out.word = SignWord(std::move(signs));
  out.shortest = false;
  return out;
}

/// Smallest image of E_d: subset BFS, or pair merging once the BFS is over
/// the node cap and the fallback is enabled.
inline SubsetSearch min_image(const StepMap& f, const Limits& limits) {
  const StateSet full = StateSet::full(f.dim());
  if (!limits.merge_fallback) return explore_subsets(f, full, limits);
  try {
    return explore_subsets(f, full, limits);
  } catch (const CapacityExceeded&) {
    return merge_pairs(f, full);
  }
}

}  // namespace detail

/// M: the smallest cardinality of a set reachable from E_d. Checked against
/// the independent-set oracle when limits.cross_check is on and 2^d <= 32.
inline int max_nonaccordable(const TruthTable& t, const Limits& limits = {}) {
  const int m = detail::min_image(StepMap(t), limits).min_size;
  if (limits.cross_check && t.dim() <= 5) {
    const int oracle = max_independent_oracle(t);
    if (oracle != m) {
      throw InvariantViolation("table " + t.to_hex() + ": subset chain gives M=" + std::to_string(m) +
                               " but independent-set oracle gives " + std::to_string(oracle));
    }
  }
  return m;
}

/// k with M = 2^k.
inline int bits_from_m(int m, const TruthTable& t) {
  if (m <= 0 || !std::has_single_bit(static_cast<unsigned>(m))) {
    throw InvariantViolation("table " + t.to_hex() + ": M=" + std::to_string(m) + " is not a power of two");
  }
  return std::countr_zero(static_cast<unsigned>(m));
}

inline int bits_lost(const TruthTable& t, const Limits& limits = {}) {
  return bits_from_m(max_nonaccordable(t, limits), t);
}

/// Word whose composite sends E_d onto exactly M states; the shortest such
/// word, lexicographically first with + before -.
inline SignWord maximal_accord_word(const TruthTable& t, const Limits& limits = {}) {
  return detail::min_image(StepMap(t), limits).word;
}

/// N(a) for every a: the largest set containing a that some word collapses
/// to one state. The collapsible sets are exactly the preimages w^{-1}(c),
/// explored backwards from the singletons.
inline std::vector<int> simultaneous_counts(const TruthTable& t, const Limits& limits = {}) {
  const StepMap f(t);
  const StateId n = t.states();
  detail::MaskVisited visited(t.dim());
  std::vector<std::uint64_t> queue;
  for (StateId c = 0; c < n; ++c) {
    visited.insert(StateSet::singleton(c).mask());
    queue.push_back(StateSet::singleton(c).mask());
  }
  std::vector<int> best(n, 1);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const StateSet cur(queue[head]);
    for (StateId a : cur.elements()) best[a] = std::max(best[a], cur.size());
    for (int s = 0; s < 2; ++s) {
      const StateSet pre = f.preimage(s, cur);
      if (!pre.empty() && visited.insert(pre.mask())) {
        if (queue.size() >= limits.node_cap) {
          throw CapacityExceeded("preimage exploration exceeded " + std::to_string(limits.node_cap) + " nodes");
        }
        queue.push_back(pre.mask());
      }
    }
  }
  return best;
}

inline int simultaneous_count(const TruthTable& t, StateId a, const Limits& limits = {}) {
  if (a >= t.states()) throw std::out_of_range("state outside E_d");
  return simultaneous_counts(t, limits)[a];
}

/// Shortest word sending `from` to `to`, + before -.
inline SignWord path_word(const StepMap& f, StateId from, StateId to) {
  const StateId n = f.states();
  std::vector<int> parent(n, -1);
  std::vector<int> via(n, 0);
  std::vector<StateId> queue{from};
  parent[from] = static_cast<int>(from);
  for (std::size_t head = 0; head < queue.size() && parent[to] < 0; ++head) {
    for (int s = 0; s < 2; ++s) {
      const StateId nx = f.step(s, queue[head]);
      if (parent[nx] < 0) {
        parent[nx] = static_cast<int>(queue[head]);
        via[nx] = s;
        queue.push_back(nx);
      }
    }
  }
  if (parent[to] < 0) throw InvariantViolation("shift graph is not strongly connected");
  std::vector<Sign> signs;
  for (StateId x = to; x != from; x = static_cast<StateId>(parent[x])) signs.push_back(via[x] == 0 ? Sign::plus : Sign::minus);
  std::reverse(signs.begin(), signs.end());
  return SignWord(std::move(signs));
}

struct Partition {
  /// Sorted by smallest element.
  std::vector<StateSet> blocks;
  /// One word that is constant on every block.
  SignWord witness;
};

namespace detail {

/// Shortest word collapsing each block to a single state.
inline SignWord collapsing_word(const StepMap& f, const std::vector<StateSet>& blocks, const Limits& limits) {
  using Key = std::vector<std::uint64_t>;
  struct Node {
    Key sets;
    std::uint32_t parent;
    std::uint8_t sign;
  };
  auto done = [](const Key& k) {
    return std::all_of(k.begin(), k.end(), [](std::uint64_t m) { return std::has_single_bit(m); });
  };
  auto hash = [](const Key& k) {
    std::size_t h = 0;
    for (std::uint64_t m : k) h = h * 0x9E3779B97F4A7C15ULL + std::hash<std::uint64_t>{}(m);
    return h;
  };
  std::unordered_set<Key, decltype(hash)> seen(16, hash);
  std::vector<Node> nodes;
  Key start;
  for (StateSet b : blocks) start.push_back(b.mask());
  seen.insert(start);
  nodes.push_back({start, 0, 0});
  std::size_t hit = 0;
  bool found = done(start);
  for (std::size_t head = 0; head < nodes.size() && !found; ++head) {
    for (int s = 0; s < 2 && !found; ++s) {
      Key next = nodes[head].sets;
      for (auto& m : next) m = f.image(s, StateSet(m)).mask();
      if (seen.insert(next).second) {
        if (nodes.size() >= limits.node_cap) {
          throw CapacityExceeded("witness search exceeded " + std::to_string(limits.node_cap) + " nodes");
        }
        found = done(next);
        nodes.push_back({std::move(next), static_cast<std::uint32_t>(head), static_cast<std::uint8_t>(s)});
        hit = nodes.size() - 1;
      }
    }
  }
  if (!found) throw InvariantViolation("no word is constant on every block");
  std::vector<Sign> signs;
  for (std::size_t i = hit; i != 0; i = nodes[i].parent) signs.push_back(nodes[i].sign == 0 ? Sign::plus : Sign::minus);
  std::reverse(signs.begin(), signs.end());
  return SignWord(std::move(signs));
}

}  // namespace detail

/// Partition of E_d into M simultaneously accordable blocks of N states.
///
/// Built by the refinement step: given blocks F_1..F_k on which a composite
/// g is constant with values c_1..c_k, take the smallest state a outside
/// them, a word h sending c_1 to a, and replace g by g o h o g; the fibres of
/// the new composite over c_1..c_k, g(a) are the next k + 1 blocks. The
/// composite is carried as a map because its word doubles at every step.
inline Partition partition_blocks(const TruthTable& t, const Limits& limits = {}) {
  const StepMap f(t);
  const StateId n = t.states();
  const detail::SubsetSearch search = detail::min_image(f, limits);

  std::vector<StateId> g(n);
  for (StateId s = 0; s < n; ++s) g[s] = f.apply(search.word, s);

  auto fibre = [&](const std::vector<StateId>& map, StateId value) {
    StateSet out;
    for (StateId s = 0; s < n; ++s) {
      if (map[s] == value) out.insert(s);
    }
    return out;
  };

  std::vector<StateId> values{g[0]};
  std::vector<StateSet> blocks{fibre(g, g[0])};
  const int block_size = blocks[0].size();
  auto covered = [&] {
    StateSet u;
    for (StateSet b : blocks) u = u | b;
    return u;
  };
  while (covered() != StateSet::full(t.dim())) {
    const StateId a = StateSet(~covered().mask() & StateSet::full_mask(t.dim())).min();
    const StateId c_new = g[a];
    if (std::find(values.begin(), values.end(), c_new) != values.end()) {
      throw InvariantViolation("table " + t.to_hex() + ": block refinement produced a repeated value");
    }
    const SignWord h = path_word(f, values[0], a);
    std::vector<StateId> next(n);
    for (StateId s = 0; s < n; ++s) next[s] = g[f.apply(h, g[s])];
    g = std::move(next);
    values.push_back(c_new);
    blocks.clear();
    for (StateId c : values) {
      blocks.push_back(fibre(g, c));
      if (blocks.back().size() != block_size) {
        throw InvariantViolation("table " + t.to_hex() + ": refined block has " +
                                 std::to_string(blocks.back().size()) + " states, expected " +
                                 std::to_string(block_size));
      }
    }
  }
  std::sort(blocks.begin(), blocks.end(), [](StateSet a, StateSet b) { return a.min() < b.min(); });
  Partition out;
  const bool word_collapses = std::all_of(blocks.begin(), blocks.end(), [&](StateSet b) {
    return f.image(search.word, b).size() == 1;
  });
  out.witness = word_collapses ? search.word : detail::collapsing_word(f, blocks, limits);
  out.blocks = std::move(blocks);
  return out;
}

/// Everything the accordability analysis says about one table.
struct LossReport {
  TruthTable table;
  int m = 0;       // pairwise non-accordable maximum
  int n = 0;       // simultaneous-accord maximum
  int bits = 0;    // k with M = 2^k
  SignWord word;   // maximal-accord word
  bool word_shortest = true;
  StateSet image;  // image of E_d under `word`
  int max_steps = 0;
  Partition partition;
};

/// Runs every analysis and asserts the structural identities between them:
/// M = 2^k, M N = 2^d, N(a) independent of a, balanced fibres of the
/// maximal-accord word and the step bound 2^(2d-2).
inline LossReport analyze_loss(const TruthTable& t, const Limits& limits = {}) {
  LossReport r;
  r.table = t;
  const StepMap f(t);
  const detail::SubsetSearch search = detail::min_image(f, limits);
  r.m = search.min_size;
  r.word = search.word;
  r.word_shortest = search.shortest;
  r.image = search.image;
  if (limits.cross_check && t.dim() <= 5) {
    const int oracle = max_independent_oracle(t);
    if (oracle != r.m) {
      throw InvariantViolation("table " + t.to_hex() + ": subset chain gives M=" + std::to_string(r.m) +
                               " but independent-set oracle gives " + std::to_string(oracle));
    }
  }
  r.bits = bits_from_m(r.m, t);

  const std::vector<int> counts = simultaneous_counts(t, limits);
  r.n = counts[0];
  for (StateId a = 1; a < t.states(); ++a) {
    const int na = counts[a];
    if (na != r.n) {
      throw InvariantViolation("table " + t.to_hex() + ": N(0)=" + std::to_string(r.n) + " but N(" +
                               std::to_string(a) + ")=" + std::to_string(na));
    }
  }
  if (static_cast<StateId>(r.m * r.n) != t.states()) {
    throw InvariantViolation("table " + t.to_hex() + ": M*N=" + std::to_string(r.m * r.n) + " != 2^d");
  }

  for (StateId c : r.image.elements()) {
    int pre = 0;
    for (StateId s = 0; s < t.states(); ++s) pre += f.apply(r.word, s) == c ? 1 : 0;
    if (pre != r.n) {
      throw InvariantViolation("table " + t.to_hex() + ": image state " + std::to_string(c) + " has " +
                               std::to_string(pre) + " preimages, expected N=" + std::to_string(r.n));
    }
  }

  r.max_steps = max_accord_steps(t);
  if (t.dim() >= 1 && r.max_steps > (1 << (2 * t.dim() - 2))) {
    throw InvariantViolation("table " + t.to_hex() + ": accord needs " + std::to_string(r.max_steps) +
                             " steps, above 2^(2d-2)");
  }

  r.partition = partition_blocks(t, limits);
  if (static_cast<int>(r.partition.blocks.size()) != r.m) {
    throw InvariantViolation("table " + t.to_hex() + ": partition has " +
                             std::to_string(r.partition.blocks.size()) + " blocks, expected M");
  }
  return r;
}

}  // namespace cointoss
