#pragma once

// Attainable cells of the coupled planar kernel on [0,1)^2.
//
// The kernel moves (u, v) to ((u + a(u)) / 2, (v + a(v)) / 2) or to
// ((u + 1 - a(u)) / 2, (v + 1 - a(v)) / 2) with probability 1/2 each, where
// a is the indicator of A+. Starting from the whole square, the image after
// n steps is a union of cells of side 1 / (D 2^n). Everything is integer
// arithmetic on cell indices.

#include <bit>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cointoss/core.hpp"

namespace cointoss {

/// Sorted disjoint half-open intervals [p/D, q/D) inside [0, 1).
struct IntervalSet {
  std::uint64_t denom = 1;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> runs;

  /// Whether x = num / den lies in the set.
  bool contains(std::uint64_t num, std::uint64_t den) const {
    for (auto [p, q] : runs) {
      // p/D <= num/den < q/D
      if (p * den <= num * denom && num * denom < q * den) return true;
    }
    return false;
  }

  /// Total length times D.
  std::uint64_t measure() const {
    std::uint64_t m = 0;
    for (auto [p, q] : runs) m += q - p;
    return m;
  }

  bool operator==(const IntervalSet&) const = default;
};

struct KernelSets {
  IntervalSet plus;
  IntervalSet minus;
};

namespace detail {

/// Runs of cells [c/D, (c+1)/D) selected by `keep`.
template <typename Pred>
IntervalSet runs_of(std::uint64_t denom, Pred keep) {
  IntervalSet out;
  out.denom = denom;
  for (std::uint64_t c = 0; c < denom; ++c) {
    if (!keep(c)) continue;
    if (!out.runs.empty() && out.runs.back().second == c) {
      out.runs.back().second = c + 1;
    } else {
      out.runs.emplace_back(c, c + 1);
    }
  }
  return out;
}

}  // namespace detail

/// A+ = [0, 1/3) u [2/3, 1), A- = [1/3, 2/3).
inline KernelSets ternary_sets() {
  return {detail::runs_of(3, [](std::uint64_t c) { return c != 1; }),
          detail::runs_of(3, [](std::uint64_t c) { return c == 1; })};
}

/// Cell [c / 2^d, (c+1) / 2^d) holds the states whose binary expansion of c
/// reads x_d, x_{d-1}, ..., x_1 from the most significant digit; it belongs to
/// A+ when phi is +1 there.
inline KernelSets dyadic_sets(const TruthTable& t) {
  if (t.dim() < 1) throw std::invalid_argument("dyadic sets need d >= 1");
  const int d = t.dim();
  auto state_of = [d](std::uint64_t c) {
    StateId s = 0;
    for (int i = 0; i < d; ++i) s |= static_cast<StateId>((c >> i) & 1U) << (d - 1 - i);
    return s;
  };
  const std::uint64_t denom = t.states();
  return {detail::runs_of(denom, [&](std::uint64_t c) { return t.bit(state_of(c)); }),
          detail::runs_of(denom, [&](std::uint64_t c) { return !t.bit(state_of(c)); })};
}

/// Occupancy of the cells [i/D, (i+1)/D) x [j/D, (j+1)/D); i indexes u.
class CellGrid {
 public:
  CellGrid() = default;
  explicit CellGrid(std::uint64_t denom, bool filled = false)
      : denom_(denom), row_words_((denom + 63) / 64), words_(denom * row_words_, 0) {
    if (filled) {
      for (std::uint64_t j = 0; j < denom; ++j) {
        for (std::uint64_t i = 0; i < denom; ++i) set(i, j);
      }
    }
  }

  std::uint64_t denom() const { return denom_; }
  bool get(std::uint64_t i, std::uint64_t j) const { return (words_[j * row_words_ + i / 64] >> (i % 64)) & 1U; }
  void set(std::uint64_t i, std::uint64_t j) { words_[j * row_words_ + i / 64] |= std::uint64_t{1} << (i % 64); }

  std::uint64_t count() const {
    std::uint64_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::uint64_t>(std::popcount(w));
    return n;
  }

  bool is_symmetric() const {
    for (std::uint64_t j = 0; j < denom_; ++j) {
      for (std::uint64_t i = j + 1; i < denom_; ++i) {
        if (get(i, j) != get(j, i)) return false;
      }
    }
    return true;
  }

  /// Calls f(i, j) for every occupied cell, row by row.
  template <typename F>
  void for_each(F&& f) const {
    for (std::uint64_t j = 0; j < denom_; ++j) {
      for (std::uint64_t k = 0; k < row_words_; ++k) {
        for (std::uint64_t w = words_[j * row_words_ + k]; w != 0; w &= w - 1) {
          f(64 * k + static_cast<std::uint64_t>(std::countr_zero(w)), j);
        }
      }
    }
  }

  bool operator==(const CellGrid&) const = default;

 private:
  std::uint64_t denom_ = 0;
  std::uint64_t row_words_ = 0;
  std::vector<std::uint64_t> words_;
};

inline constexpr int kDefaultStepCap = 12;

/// Attainable cells after `steps` kernel steps from the full square, at
/// denominator D 2^steps.
inline CellGrid iterate_attainable(const KernelSets& sets, int steps, int step_cap = kDefaultStepCap) {
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  if (steps > step_cap) {
    throw CapacityExceeded("resolution overflow: " + std::to_string(steps) + " steps exceeds the cap of " +
                           std::to_string(step_cap));
  }
  const std::uint64_t base = sets.plus.denom;
  if (sets.minus.denom != base || sets.plus.measure() + sets.minus.measure() != base) {
    throw std::invalid_argument("A+ and A- must partition [0,1) over one denominator");
  }
  CellGrid grid(base, true);
  for (int n = 0; n < steps; ++n) {
    const std::uint64_t g = grid.denom();
    std::vector<char> in_plus(g);
    for (std::uint64_t i = 0; i < g; ++i) in_plus[i] = sets.plus.contains(i, g) ? 1 : 0;
    CellGrid next(2 * g);
    grid.for_each([&](std::uint64_t i, std::uint64_t j) {
      const std::uint64_t ai = in_plus[i] != 0 ? 1 : 0;
      const std::uint64_t aj = in_plus[j] != 0 ? 1 : 0;
      next.set(i + ai * g, j + aj * g);
      next.set(i + (1 - ai) * g, j + (1 - aj) * g);
    });
    grid = std::move(next);
  }
  return grid;
}

/// Every occupied closed cell meets a line v - u = k / q.
inline bool band_check(const CellGrid& grid, std::uint64_t q) {
  if (q == 0 || grid.denom() % q != 0) {
    throw std::invalid_argument("grid denominator " + std::to_string(grid.denom()) + " is not a multiple of " +
                                std::to_string(q));
  }
  const auto g = static_cast<std::int64_t>(grid.denom() / q);
  bool ok = true;
  grid.for_each([&](std::uint64_t i, std::uint64_t j) {
    // need a multiple of g in [j - i - 1, j - i + 1]
    const std::int64_t lo = static_cast<std::int64_t>(j) - static_cast<std::int64_t>(i) - 1;
    const std::int64_t r = ((lo % g) + g) % g;
    const std::int64_t first = r == 0 ? lo : lo + (g - r);
    if (first > lo + 2) ok = false;
  });
  return ok;
}

/// Binary PGM (P5), one byte per cell, occupied cells black (0), the row
/// for v near 1 first so that the origin is at the bottom left.
inline void write_pgm(std::ostream& os, const CellGrid& grid) {
  const std::uint64_t n = grid.denom();
  os << "P5\n" << n << ' ' << n << "\n255\n";
  std::string row(n, '\xFF');
  for (std::uint64_t r = 0; r < n; ++r) {
    const std::uint64_t j = n - 1 - r;
    for (std::uint64_t i = 0; i < n; ++i) row[i] = grid.get(i, j) ? '\0' : '\xFF';
    os.write(row.data(), static_cast<std::streamsize>(n));
  }
}

/// Plain PBM (P1), '1' for occupied, same orientation as write_pgm.
inline void write_pbm_text(std::ostream& os, const CellGrid& grid) {
  const std::uint64_t n = grid.denom();
  os << "P1\n" << n << ' ' << n << '\n';
  for (std::uint64_t r = 0; r < n; ++r) {
    const std::uint64_t j = n - 1 - r;
    std::string line(n, '0');
    for (std::uint64_t i = 0; i < n; ++i) line[i] = grid.get(i, j) ? '1' : '0';
    os << line << '\n';
  }
}

inline void render(const CellGrid& grid, const std::string& pgm_path, const std::string& pbm_path = {}) {
  std::ofstream pgm(pgm_path, std::ios::binary);
  if (!pgm) throw std::runtime_error("cannot open " + pgm_path);
  write_pgm(pgm, grid);
  if (!pgm) throw std::runtime_error("write failed: " + pgm_path);
  if (!pbm_path.empty()) {
    std::ofstream pbm(pbm_path);
    if (!pbm) throw std::runtime_error("cannot open " + pbm_path);
    write_pbm_text(pbm, grid);
    if (!pbm) throw std::runtime_error("write failed: " + pbm_path);
  }
}

}  // namespace cointoss
