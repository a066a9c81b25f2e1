#pragma once

// Exhaustive classification of every truth table of a given window length.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cointoss/accord.hpp"
#include "cointoss/classify.hpp"
#include "cointoss/core.hpp"

namespace cointoss {

/// Largest d for which a full sweep is accepted (2^(2^d) tables).
inline constexpr int kMaxSweepDim = 4;

struct SweepOptions {
  /// Worker threads; 0 means hardware concurrency.
  unsigned jobs = 0;
  /// Run the full loss analysis and every structural identity on each table.
  bool check_invariants = false;
  /// Keep the hex list of losing tables.
  bool collect_losing = true;
  Limits limits{.node_cap = std::size_t{1} << 20, .cross_check = false};
};

struct SweepReport {
  int d = 0;
  std::uint64_t total = 0;
  std::uint64_t losing = 0;
  std::map<int, std::uint64_t> histogram;  // bits lost -> tables
  std::uint64_t even = 0;
  std::uint64_t dichotomic = 0;
  std::uint64_t maxloss = 0;
  std::uint64_t even_dichotomic = 0;
  std::uint64_t even_maxloss = 0;
  std::uint64_t dichotomic_maxloss = 0;
  std::uint64_t all_three = 0;
  std::uint64_t union_count = 0;
  std::uint64_t losing_in_union = 0;
  std::map<int, std::uint64_t> losing_decentering;  // decentering -> losing tables
  int max_steps = 0;  // only filled when invariants are checked
  std::vector<std::string> losing_tables;

  std::uint64_t losing_nonzero_decentering() const {
    std::uint64_t n = 0;
    for (auto [dec, c] : losing_decentering) n += dec != 0 ? c : 0;
    return n;
  }
  std::uint64_t losing_odd_decentering() const {
    std::uint64_t n = 0;
    for (auto [dec, c] : losing_decentering) n += dec % 2 != 0 ? c : 0;
    return n;
  }

  void merge(const SweepReport& o) {
    total += o.total;
    losing += o.losing;
    for (auto [k, c] : o.histogram) histogram[k] += c;
    even += o.even;
    dichotomic += o.dichotomic;
    maxloss += o.maxloss;
    even_dichotomic += o.even_dichotomic;
    even_maxloss += o.even_maxloss;
    dichotomic_maxloss += o.dichotomic_maxloss;
    all_three += o.all_three;
    union_count += o.union_count;
    losing_in_union += o.losing_in_union;
    for (auto [k, c] : o.losing_decentering) losing_decentering[k] += c;
    max_steps = std::max(max_steps, o.max_steps);
    losing_tables.insert(losing_tables.end(), o.losing_tables.begin(), o.losing_tables.end());
  }

  bool operator==(const SweepReport&) const = default;
};

/// Structural identities every table must satisfy; throws InvariantViolation
/// naming the table on the first failure. Returns the full loss report.
inline LossReport check_table(const TruthTable& t, const Limits& limits) {
  Limits checked = limits;
  checked.cross_check = true;
  LossReport r = analyze_loss(t, checked);
  auto fail = [&](const std::string& what) { throw InvariantViolation("table " + t.to_hex() + ": " + what); };
  if (r.bits > window_bound(t)) fail("bits lost exceed the window-distribution bound");
  const Reduction red = effective_length(t);
  if (is_maxloss(red.table) != (r.bits == red.length)) fail("max-loss form disagrees with bits lost = length");
  if (is_even(t) && r.bits < 1) fail("even table conserves information");
  if (is_dichotomic(t) && r.bits < 1) fail("dichotomic table conserves information");
  if (accordability_matrix(t).all_true() != (r.m == 1)) fail("all-accordable disagrees with M = 1");
  if (accordability_closure(t, ClosureMode::synchronous).matrix != accordability_matrix(t)) {
    fail("synchronous and dynamic closures differ");
  }
  if (accordability_closure(t, ClosureMode::synchronous).rounds != r.max_steps) {
    fail("synchronous closure rounds differ from the largest accord distance");
  }
  return r;
}

namespace detail {

inline SweepReport sweep_range(int d, std::uint64_t begin, std::uint64_t end, const SweepOptions& opt) {
  SweepReport rep;
  rep.d = d;
  for (std::uint64_t bits = begin; bits < end; ++bits) {
    const TruthTable t(d, bits);
    int lost = 0;
    if (opt.check_invariants) {
      const LossReport r = check_table(t, opt.limits);
      lost = r.bits;
      rep.max_steps = std::max(rep.max_steps, r.max_steps);
    } else {
      lost = bits_from_m(min_image(StepMap(t), opt.limits).min_size, t);
    }
    const bool ev = is_even(t);
    const bool di = is_dichotomic(t).has_value();
    const bool ml = is_maxloss(t);
    ++rep.total;
    rep.even += ev;
    rep.dichotomic += di;
    rep.maxloss += ml;
    rep.even_dichotomic += ev && di;
    rep.even_maxloss += ev && ml;
    rep.dichotomic_maxloss += di && ml;
    rep.all_three += ev && di && ml;
    rep.union_count += ev || di || ml;
    if (lost > 0) {
      ++rep.losing;
      ++rep.histogram[lost];
      ++rep.losing_decentering[decentering(t)];
      rep.losing_in_union += ev || di || ml;
      if (opt.collect_losing) rep.losing_tables.push_back(t.to_hex());
    }
  }
  return rep;
}

}  // namespace detail

/// Classifies all 2^(2^d) tables. Ranges are split evenly across workers and
/// merged; the result does not depend on the worker count.
inline SweepReport sweep(int d, const SweepOptions& opt = {}) {
  if (d < 0 || d > kMaxSweepDim) {
    throw std::invalid_argument("full sweep supports 0 <= d <= " + std::to_string(kMaxSweepDim));
  }
  const std::uint64_t total = std::uint64_t{1} << state_count(d);
  unsigned jobs = opt.jobs == 0 ? std::max(1U, std::thread::hardware_concurrency()) : opt.jobs;
  jobs = static_cast<unsigned>(std::min<std::uint64_t>(jobs, total));

  std::vector<SweepReport> parts(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      const std::uint64_t lo = total * w / jobs;
      const std::uint64_t hi = total * (w + 1) / jobs;
      workers.emplace_back([&, w, lo, hi] {
        try {
          parts[w] = detail::sweep_range(d, lo, hi, opt);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  SweepReport out;
  out.d = d;
  for (const SweepReport& p : parts) out.merge(p);
  std::sort(out.losing_tables.begin(), out.losing_tables.end());
  return out;
}

struct ExpectedCounts {
  int d = 0;
  std::uint64_t even = 0;
  std::uint64_t dichotomic = 0;
  std::uint64_t maxloss = 0;
  std::uint64_t even_maxloss = 0;
  std::uint64_t even_dichotomic = 0;
  std::uint64_t dichotomic_maxloss = 0;
  std::uint64_t all_three = 0;
  std::uint64_t union_count = 0;
};

/// Closed-form class sizes; the triple term needs d >= 3.
inline ExpectedCounts expected_counts(int d) {
  if (d < 3 || d > kMaxDim) throw std::invalid_argument("closed-form counts need 3 <= d <= 6");
  auto pow2 = [](std::uint64_t e) { return std::uint64_t{1} << e; };
  const std::uint64_t a = pow2(pow2(d - 1));
  const std::uint64_t b = pow2(pow2(d - 2));
  const std::uint64_t c = pow2(pow2(d - 3));
  ExpectedCounts e;
  e.d = d;
  e.even = e.dichotomic = e.maxloss = a;
  e.even_maxloss = b;
  e.even_dichotomic = 2 * b;
  e.dichotomic_maxloss = b;
  e.all_three = 2 * c;
  e.union_count = 3 * a - 4 * b + 2 * c;
  return e;
}

struct CountDiff {
  std::string category;
  std::uint64_t expected = 0;
  std::uint64_t observed = 0;
};

/// Categories where the sweep disagrees with the closed forms.
inline std::vector<CountDiff> verify_counts(const SweepReport& rep) {
  const ExpectedCounts e = expected_counts(rep.d);
  std::vector<CountDiff> diffs;
  auto check = [&](const char* name, std::uint64_t want, std::uint64_t got) {
    if (want != got) diffs.push_back({name, want, got});
  };
  check("even", e.even, rep.even);
  check("dichotomic", e.dichotomic, rep.dichotomic);
  check("maxloss", e.maxloss, rep.maxloss);
  check("even_maxloss", e.even_maxloss, rep.even_maxloss);
  check("even_dichotomic", e.even_dichotomic, rep.even_dichotomic);
  check("dichotomic_maxloss", e.dichotomic_maxloss, rep.dichotomic_maxloss);
  check("all_three", e.all_three, rep.all_three);
  check("union", e.union_count, rep.union_count);
  return diffs;
}

/// Every losing table has even decentering.
inline bool parity_observation(const SweepReport& rep) { return rep.losing_odd_decentering() == 0; }

/// Full report for a single table of any supported length.
struct TableCheck {
  LossReport loss;
  ClassTags tags;
  Reduction reduced;
  int window_bits = 0;
  std::optional<int> flip_rate_bits;
  /// Set when the decomposition search ran (length <= 5).
  std::optional<bool> indecomposable;
  std::optional<Decomposition> decomposition;
};

inline TableCheck check_one(const TruthTable& t, const Limits& limits = {}) {
  TableCheck c;
  c.loss = analyze_loss(t, limits);
  c.tags = classify(t);
  c.reduced = effective_length(t);
  c.window_bits = window_bound(t);
  c.flip_rate_bits = flip_rate_bound(t);
  if (c.reduced.length >= 2 && c.reduced.length <= kMaxDecomposeLength) {
    c.decomposition = find_decomposition(t);
    c.indecomposable = !c.decomposition.has_value();
  }
  return c;
}

}  // namespace cointoss
