#pragma once

// Simulation of coin-tossing streams and recovery of the input from the
// transformed stream.
//
// Positions count consumed output symbols: position k holds the window
// eps[k .. k+d-1], and zeta[k] moves position k to k + 1. The candidate set
// F_k is the image of E_d under zeta[0 .. k-1]; it always contains the true
// window, and has exactly M elements from the end of the first occurrence of
// the maximal-accord word onwards (the valid region).

#include <algorithm>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "cointoss/accord.hpp"
#include "cointoss/core.hpp"

namespace cointoss {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of trial i under a master seed.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t i) {
  return splitmix64(master + i * 0x9E3779B97F4A7C15ULL);
}

/// n fair signs from std::mt19937_64 seeded with `seed`; each 64-bit output
/// is consumed least significant bit first, bit 1 meaning +1.
inline EpsilonStream coin_flips(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  EpsilonStream eps;
  eps.values.reserve(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = gen();
    eps.values.push_back(((word >> (i % 64)) & 1U) ? Sign::plus : Sign::minus);
  }
  return eps;
}

struct Simulation {
  EpsilonStream eps;
  ZetaStream zeta;
};

/// n input signs (including the initial window) and their transform.
inline Simulation simulate(const TruthTable& t, std::uint64_t seed, std::size_t n) {
  if (n < static_cast<std::size_t>(t.dim())) throw std::invalid_argument("stream shorter than the window length");
  Simulation s;
  s.eps = coin_flips(seed, n);
  s.zeta = transform_stream(t, s.eps);
  return s;
}

/// True window at every position.
inline std::vector<StateId> true_windows(const TruthTable& t, const EpsilonStream& eps) {
  const auto d = static_cast<std::size_t>(t.dim());
  if (eps.values.size() < d) throw std::invalid_argument("stream shorter than the window length");
  std::vector<StateId> out;
  out.reserve(eps.values.size() - d + 1);
  const StateId mask = t.states() - 1;
  StateId w = 0;
  for (std::size_t i = 0; i < d; ++i) w = (w << 1) | (eps.values[i] == Sign::plus ? 1U : 0U);
  out.push_back(w);
  for (std::size_t i = d; i < eps.values.size(); ++i) {
    w = ((w << 1) | (eps.values[i] == Sign::plus ? 1U : 0U)) & mask;
    out.push_back(w);
  }
  return out;
}

struct SubsetTrajectory {
  int m = 0;
  SignWord word;
  std::vector<StateSet> sets;  // F_k, k = 0 .. zeta length
  std::optional<std::size_t> anchor;

  bool valid(std::size_t k) const { return anchor && k >= *anchor && k < sets.size(); }
  std::size_t valid_count() const { return anchor ? sets.size() - *anchor : 0; }
};

/// F_k for every position, and the first position after a full occurrence
/// of the maximal-accord word.
inline SubsetTrajectory track_subsets(const TruthTable& t, const ZetaStream& zeta, const Limits& limits = {}) {
  const StepMap f(t);
  const detail::SubsetSearch search = detail::min_image(f, limits);
  SubsetTrajectory tr;
  tr.m = search.min_size;
  tr.word = search.word;
  tr.sets.reserve(zeta.values.size() + 1);
  tr.sets.push_back(StateSet::full(t.dim()));
  const std::size_t wl = tr.word.size();
  if (wl == 0) tr.anchor = 0;
  for (std::size_t k = 0; k < zeta.values.size(); ++k) {
    tr.sets.push_back(f.image(zeta.values[k], tr.sets.back()));
    if (!tr.anchor && k + 1 >= wl &&
        std::equal(tr.word.begin(), tr.word.end(), zeta.values.begin() + static_cast<std::ptrdiff_t>(k + 1 - wl))) {
      tr.anchor = k + 1;
    }
  }
  if (tr.anchor) {
    for (std::size_t k = *tr.anchor; k < tr.sets.size(); ++k) {
      if (tr.sets[k].size() != tr.m) {
        throw InvariantViolation("candidate set at position " + std::to_string(k) + " has " +
                                 std::to_string(tr.sets[k].size()) + " states, expected M=" + std::to_string(tr.m));
      }
    }
  }
  return tr;
}

struct ComplementIndex {
  std::size_t anchor = 0;
  std::vector<int> values;  // 1-based rank of the true window in F_k, k >= anchor
};

inline ComplementIndex complement_index(const TruthTable& t, const EpsilonStream& eps, const SubsetTrajectory& tr) {
  if (!tr.anchor) throw std::invalid_argument("maximal-accord word never observed; no valid positions");
  const std::vector<StateId> windows = true_windows(t, eps);
  if (windows.size() != tr.sets.size()) throw std::invalid_argument("stream and trajectory lengths differ");
  ComplementIndex idx;
  idx.anchor = *tr.anchor;
  for (std::size_t k = idx.anchor; k < windows.size(); ++k) {
    if (!tr.sets[k].contains(windows[k])) {
      throw InvariantViolation("true window " + std::to_string(windows[k]) + " missing from the candidate set at position " +
                               std::to_string(k));
    }
    idx.values.push_back(tr.sets[k].rank_of(windows[k]));
  }
  return idx;
}

inline ComplementIndex complement_index(const TruthTable& t, const EpsilonStream& eps, const ZetaStream& zeta,
                                        const Limits& limits = {}) {
  return complement_index(t, eps, track_subsets(t, zeta, limits));
}

/// Input signs eps[offset ..] recovered from the output.
struct Recovered {
  std::size_t offset = 0;
  std::vector<Sign> values;
};

namespace detail {

/// The first window's signs, then eps_{k+d} = zeta_k phi(window_k).
inline Recovered windows_to_signs(const TruthTable& t, const ZetaStream& zeta, std::size_t anchor,
                                  const std::vector<StateId>& windows) {
  Recovered out;
  out.offset = anchor;
  if (windows.empty()) return out;
  for (int i = t.dim() - 1; i >= 0; --i) out.values.push_back(((windows[0] >> i) & 1U) ? Sign::plus : Sign::minus);
  for (std::size_t k = 0; k + 1 < windows.size(); ++k) {
    out.values.push_back(sign_of(to_int(zeta.values[anchor + k]) * t.value(windows[k])));
  }
  return out;
}

}  // namespace detail

/// Recovers the valid region from the rank of the true window at one
/// position p: roll forward with the step maps and backward using that each
/// step map is injective on the candidate sets of the valid region.
inline Recovered reconstruct_with_index(const TruthTable& t, const ZetaStream& zeta, const SubsetTrajectory& tr,
                                        std::size_t p, int rank) {
  if (!tr.valid(p)) throw std::invalid_argument("index position outside the valid region");
  if (rank < 1 || rank > tr.m) throw std::invalid_argument("index must lie in [1, M]");
  const StepMap f(t);
  const std::size_t a = *tr.anchor;
  std::vector<StateId> windows(tr.sets.size() - a);
  windows[p - a] = tr.sets[p].nth(rank);
  for (std::size_t k = p; k + 1 < tr.sets.size(); ++k) windows[k + 1 - a] = f(zeta.values[k], windows[k - a]);
  for (std::size_t k = p; k > a; --k) {
    std::optional<StateId> prev;
    for (StateId x : tr.sets[k - 1].elements()) {
      if (f(zeta.values[k - 1], x) != windows[k - a]) continue;
      if (prev) throw InvariantViolation("step map not injective on the candidate set at position " + std::to_string(k - 1));
      prev = x;
    }
    if (!prev) throw std::invalid_argument("inconsistent index: no predecessor at position " + std::to_string(k - 1));
    windows[k - 1 - a] = *prev;
  }
  return detail::windows_to_signs(t, zeta, a, windows);
}

/// Recovers the valid region from per-position ranks, checking that
/// consecutive windows are linked by the observed output.
inline Recovered reconstruct_with_index(const TruthTable& t, const ZetaStream& zeta, const SubsetTrajectory& tr,
                                        const ComplementIndex& idx) {
  if (!tr.anchor || idx.anchor != *tr.anchor) throw std::invalid_argument("index anchor does not match the trajectory");
  if (idx.values.size() != tr.valid_count()) throw std::invalid_argument("index length does not match the valid region");
  const StepMap f(t);
  std::vector<StateId> windows;
  windows.reserve(idx.values.size());
  for (std::size_t i = 0; i < idx.values.size(); ++i) {
    const std::size_t k = idx.anchor + i;
    if (idx.values[i] < 1 || idx.values[i] > tr.m) throw std::invalid_argument("index must lie in [1, M]");
    windows.push_back(tr.sets[k].nth(idx.values[i]));
    if (i > 0 && f(zeta.values[k - 1], windows[i - 1]) != windows[i]) {
      throw std::invalid_argument("inconsistent index at position " + std::to_string(k));
    }
  }
  return detail::windows_to_signs(t, zeta, idx.anchor, windows);
}

/// Exact inverse for a table that loses nothing: after the constant word
/// has been seen, the window is known and every later sign follows.
inline Recovered reconstruct_conserving(const TruthTable& t, const ZetaStream& zeta, const Limits& limits = {}) {
  const SubsetTrajectory tr = track_subsets(t, zeta, limits);
  if (tr.m != 1) throw std::invalid_argument("table " + t.to_hex() + " loses information; use an index");
  if (!tr.anchor) {
    throw std::runtime_error("constant word " + tr.word.to_string() + " not observed within " +
                             std::to_string(zeta.values.size()) + " output symbols");
  }
  return reconstruct_with_index(t, zeta, tr, *tr.anchor, 1);
}

/// Positions in the recovered region where the recovered sign differs.
inline std::size_t count_mismatches(const EpsilonStream& eps, const Recovered& rec) {
  if (rec.offset + rec.values.size() > eps.values.size()) throw std::invalid_argument("recovered region exceeds stream");
  std::size_t bad = 0;
  for (std::size_t i = 0; i < rec.values.size(); ++i) bad += rec.values[i] != eps.values[rec.offset + i] ? 1 : 0;
  return bad;
}

struct Chi2Result {
  int m = 0;
  int dof = 0;
  std::uint64_t trials = 0;
  std::uint64_t uncovered = 0;  // trials where the word never appeared
  std::vector<std::uint64_t> histogram;  // rank 1..M at the horizon
  double statistic = 0.0;
  double threshold = 0.0;
  bool coverage_ok = false;  // at most 1% of trials uncovered
  bool pass = false;
};

/// Goodness of fit of the final complement index against uniform on [1, M].
inline Chi2Result uniformity_chi2(const TruthTable& t, std::uint64_t trials, std::size_t horizon,
                                  std::uint64_t master_seed, unsigned jobs = 0, const Limits& limits = {}) {
  const StepMap f(t);
  const detail::SubsetSearch search = detail::min_image(f, limits);
  Chi2Result res;
  res.m = search.min_size;
  if (res.m < 2) throw std::invalid_argument("table " + t.to_hex() + " conserves information; no index to test");
  if (trials == 0) throw std::invalid_argument("need at least one trial");
  res.dof = res.m - 1;
  res.trials = trials;

  jobs = jobs == 0 ? std::max(1U, std::thread::hardware_concurrency()) : jobs;
  jobs = static_cast<unsigned>(std::min<std::uint64_t>(jobs, trials));
  struct Part {
    std::vector<std::uint64_t> hist;
    std::uint64_t uncovered = 0;
  };
  std::vector<Part> parts(jobs, Part{std::vector<std::uint64_t>(static_cast<std::size_t>(res.m), 0), 0});
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::uint64_t i = trials * w / jobs; i < trials * (w + 1) / jobs; ++i) {
            const Simulation sim = simulate(t, trial_seed(master_seed, i), horizon + static_cast<std::size_t>(t.dim()));
            const SubsetTrajectory tr = track_subsets(t, sim.zeta, limits);
            if (!tr.anchor) {
              ++parts[w].uncovered;
              continue;
            }
            const StateId last = true_windows(t, sim.eps).back();
            if (!tr.sets.back().contains(last)) throw InvariantViolation("true window missing from the candidate set");
            ++parts[w].hist[static_cast<std::size_t>(tr.sets.back().rank_of(last) - 1)];
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  res.histogram.assign(static_cast<std::size_t>(res.m), 0);
  for (const Part& p : parts) {
    res.uncovered += p.uncovered;
    for (std::size_t i = 0; i < p.hist.size(); ++i) res.histogram[i] += p.hist[i];
  }
  const std::uint64_t covered = trials - res.uncovered;
  res.coverage_ok = res.uncovered * 100 <= trials;
  if (covered > 0) {
    const double expected = static_cast<double>(covered) / res.m;
    for (std::uint64_t o : res.histogram) {
      const double diff = static_cast<double>(o) - expected;
      res.statistic += diff * diff / expected;
    }
  }
  res.threshold = boost::math::quantile(boost::math::chi_squared_distribution<double>(res.dof), 0.99);
  res.pass = res.coverage_ok && covered > 0 && res.statistic < res.threshold;
  return res;
}

}  // namespace cointoss
