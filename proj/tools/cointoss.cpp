// Command-line front end. Prints JSON; exit status 0 on success, 1 on usage
// or input errors, 2 when an internal invariant fails.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cointoss/cointoss.hpp"

namespace {

using cointoss::Json;

constexpr int kUsageError = 1;
constexpr int kInvariantError = 2;

void emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open " + out);
  f << j.dump(2) << '\n';
}

struct TableArgs {
  std::string hex;
  int d = -1;

  void add(CLI::App* app) {
    app->add_option("--table", hex, "truth table as hex, bit s = (1 + phi(s)) / 2")->required();
    app->add_option("--d", d, "window length")->required()->check(CLI::Range(0, cointoss::kMaxDim));
  }
  cointoss::TruthTable table() const { return cointoss::TruthTable::from_hex(hex, d); }
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information loss of homogeneous transformations of coin-tossing sequences"};
  app.require_subcommand(1);
  std::string out;
  std::size_t node_cap = std::size_t{1} << 20;
  app.add_option("--out", out, "write JSON here instead of stdout");
  app.add_option("--node-cap", node_cap, "largest search any single exploration may visit");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "full report for one table");
  TableArgs analyze_table;
  analyze_table.add(analyze);
  bool with_matrix = false;
  analyze->add_flag("--matrix", with_matrix, "include the accordability matrix");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "classify every table of window length d");
  int sweep_d = 0;
  unsigned jobs = 0;
  std::string list_path;
  bool check = false;
  sweep->add_option("--d", sweep_d, "window length")->required()->check(CLI::Range(0, cointoss::kMaxSweepDim));
  sweep->add_option("--jobs", jobs, "worker threads, 0 for all cores");
  sweep->add_option("--list", list_path, "write the sorted hex list of losing tables here");
  sweep->add_flag("--check", check, "verify every structural identity on every table");

  // counts
  auto* counts = app.add_subcommand("counts", "closed-form class counts, compared with a sweep");
  int counts_d = 0;
  counts->add_option("--d", counts_d, "window length")->required()->check(CLI::Range(3, cointoss::kMaxDim));
  counts->add_option("--jobs", jobs, "worker threads, 0 for all cores");

  // reconstruct
  auto* reconstruct = app.add_subcommand("reconstruct", "simulate a stream and recover it from its transform");
  TableArgs rec_table;
  rec_table.add(reconstruct);
  std::uint64_t seed = 0;
  std::size_t length = 0;
  std::string mode = "roundtrip";
  std::uint64_t trials = 10000;
  std::size_t horizon = 64;
  reconstruct->add_option("--seed", seed, "generator seed")->required();
  reconstruct->add_option("--n", length, "input length including the initial window; output symbols per trial for --mode chi2")->required();
  reconstruct->add_option("--mode", mode, "conserving, subset, roundtrip or chi2")
      ->check(CLI::IsMember({"conserving", "subset", "roundtrip", "chi2"}));
  reconstruct->add_option("--trials", trials, "trials for --mode chi2");
  reconstruct->add_option("--jobs", jobs, "worker threads for --mode chi2");

  // chi2
  auto* chi2 = app.add_subcommand("chi2", "uniformity test of the lost-information index");
  TableArgs chi_table;
  chi_table.add(chi2);
  chi2->add_option("--seed", seed, "master seed")->required();
  chi2->add_option("--trials", trials, "independent simulations");
  chi2->add_option("--horizon", horizon, "output symbols per simulation");
  chi2->add_option("--jobs", jobs, "worker threads, 0 for all cores");

  // kernel2d
  auto* kernel = app.add_subcommand("kernel2d", "attainable cells of the planar kernel");
  std::string sets_spec;
  int kernel_d = -1;
  int steps = 0;
  int step_cap = cointoss::kDefaultStepCap;
  std::string image_path;
  std::string pbm_path;
  std::optional<std::uint64_t> band;
  kernel->add_option("--sets", sets_spec, "ternary or table:HEX")->required();
  kernel->add_option("--d", kernel_d, "window length for table:HEX")->check(CLI::Range(1, cointoss::kMaxDim));
  kernel->add_option("--steps", steps, "kernel steps")->required()->check(CLI::NonNegativeNumber);
  kernel->add_option("--step-cap", step_cap, "largest accepted step count");
  kernel->add_option("--image", image_path, "write a binary PGM here");
  kernel->add_option("--pbm", pbm_path, "write a plain-text PBM here");
  kernel->add_option("--band", band, "check that every cell meets a line v - u = k/q");

  // families
  auto* families = app.add_subcommand("families", "generate tables of the named families");
  std::string kind;
  std::string lags_text;
  int fam_d = 0;
  int fam_c = 0;
  std::string psi_hex;
  families->add_option("--kind", kind, "max-lags, guard, dominating or decentered")
      ->required()
      ->check(CLI::IsMember({"max-lags", "guard", "dominating", "decentered"}));
  families->add_option("--lags", lags_text, "comma-separated increasing lags for max-lags");
  families->add_option("--d", fam_d, "window length")->check(CLI::Range(1, cointoss::kMaxDim));
  families->add_option("--c", fam_c, "guard offset, 1 <= c < d");
  families->add_option("--psi", psi_hex, "guard psi table (hex at window length d); omit for all instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  cointoss::Limits limits;
  limits.node_cap = node_cap;

  try {
    if (*analyze) {
      const cointoss::TruthTable t = analyze_table.table();
      Json j = cointoss::to_json(cointoss::check_one(t, limits));
      if (with_matrix) j["accordability"] = cointoss::to_json(cointoss::accordability_matrix(t));
      emit(j, out);
    } else if (*sweep) {
      cointoss::SweepOptions opt;
      opt.jobs = jobs;
      opt.check_invariants = check;
      opt.limits.node_cap = node_cap;
      const cointoss::SweepReport rep = cointoss::sweep(sweep_d, opt);
      Json j = cointoss::to_json(rep);
      if (check) j["max_steps_observed"] = rep.max_steps;
      if (!list_path.empty()) {
        std::ofstream f(list_path);
        if (!f) throw std::runtime_error("cannot open " + list_path);
        for (const std::string& h : rep.losing_tables) f << h << '\n';
      }
      emit(j, out);
    } else if (*counts) {
      Json j = {{"schema_version", cointoss::kSchemaVersion}, {"expected", cointoss::to_json(cointoss::expected_counts(counts_d))}};
      if (counts_d <= cointoss::kMaxSweepDim) {
        cointoss::SweepOptions opt;
        opt.jobs = jobs;
        opt.collect_losing = false;
        const cointoss::SweepReport rep = cointoss::sweep(counts_d, opt);
        const auto diffs = cointoss::verify_counts(rep);
        j["observed"] = cointoss::to_json(rep)["counts"];
        j["diffs"] = cointoss::to_json(diffs);
        j["match"] = diffs.empty();
        j["parity_observation"] = cointoss::parity_observation(rep);
      }
      emit(j, out);
    } else if (*reconstruct) {
      const cointoss::TruthTable t = rec_table.table();
      Json j = {{"schema_version", cointoss::kSchemaVersion}, {"table", t.to_hex()}, {"d", t.dim()}, {"mode", mode}};
      if (mode == "chi2") {
        const cointoss::Chi2Result r = cointoss::uniformity_chi2(t, trials, length, seed, jobs, limits);
        const Json chi = cointoss::to_json(r);
        for (auto& [k, v] : chi.items()) j[k] = v;
        emit(j, out);
        return 0;
      }
      const cointoss::Simulation sim = cointoss::simulate(t, seed, length);
      const cointoss::SubsetTrajectory tr = cointoss::track_subsets(t, sim.zeta, limits);
      j["M"] = tr.m;
      j["word"] = tr.word.to_string();
      j["coverage_position"] = tr.anchor ? Json(*tr.anchor) : Json(nullptr);
      j["valid_positions"] = tr.valid_count();
      std::size_t mismatches = 0;
      if (mode == "conserving") {
        const cointoss::Recovered rec = cointoss::reconstruct_conserving(t, sim.zeta, limits);
        mismatches = cointoss::count_mismatches(sim.eps, rec);
        j["recovered"] = rec.values.size();
      } else if (mode == "subset") {
        const std::vector<cointoss::StateId> windows = cointoss::true_windows(t, sim.eps);
        std::size_t outside = 0;
        for (std::size_t k = 0; k < windows.size(); ++k) outside += tr.sets[k].contains(windows[k]) ? 0 : 1;
        mismatches = outside;
        j["membership_failures"] = outside;
      } else if (tr.anchor) {
        const cointoss::ComplementIndex idx = cointoss::complement_index(t, sim.eps, tr);
        const cointoss::Recovered rec = cointoss::reconstruct_with_index(t, sim.zeta, tr, idx);
        const cointoss::Recovered from_anchor = cointoss::reconstruct_with_index(t, sim.zeta, tr, idx.anchor, idx.values.front());
        mismatches = cointoss::count_mismatches(sim.eps, rec) + cointoss::count_mismatches(sim.eps, from_anchor);
        j["recovered"] = rec.values.size();
        j["anchor_index"] = idx.values.front();
      }
      j["mismatches"] = mismatches;
      emit(j, out);
      if (mismatches != 0) {
        std::cerr << "error: " << mismatches << " mismatches on the valid region\n";
        return kInvariantError;
      }
    } else if (*chi2) {
      const cointoss::TruthTable t = chi_table.table();
      Json j = cointoss::to_json(cointoss::uniformity_chi2(t, trials, horizon, seed, jobs, limits));
      j["table"] = t.to_hex();
      emit(j, out);
    } else if (*kernel) {
      cointoss::KernelSets sets;
      if (sets_spec == "ternary") {
        sets = cointoss::ternary_sets();
      } else if (sets_spec.rfind("table:", 0) == 0) {
        if (kernel_d < 1) throw std::invalid_argument("--sets table:HEX needs --d");
        sets = cointoss::dyadic_sets(cointoss::TruthTable::from_hex(sets_spec.substr(6), kernel_d));
      } else {
        throw std::invalid_argument("--sets must be ternary or table:HEX");
      }
      const cointoss::CellGrid grid = cointoss::iterate_attainable(sets, steps, step_cap);
      Json j = {{"schema_version", cointoss::kSchemaVersion},
                {"A_plus", cointoss::to_json(sets.plus)},
                {"A_minus", cointoss::to_json(sets.minus)},
                {"steps", steps},
                {"denominator", grid.denom()},
                {"occupied", grid.count()},
                {"symmetric", grid.is_symmetric()}};
      if (band) j["band_check"] = {{"q", *band}, {"holds", cointoss::band_check(grid, *band)}};
      if (!image_path.empty() || !pbm_path.empty()) {
        if (image_path.empty()) throw std::invalid_argument("--pbm needs --image");
        cointoss::render(grid, image_path, pbm_path);
      }
      emit(j, out);
    } else if (*families) {
      Json tables = Json::array();
      Json j = {{"schema_version", cointoss::kSchemaVersion}, {"kind", kind}};
      auto entry = [&](const cointoss::TruthTable& t) {
        return Json{{"table", t.to_hex()}, {"d", t.dim()}, {"bits_lost", cointoss::bits_lost(t, limits)}};
      };
      if (kind == "max-lags") {
        const std::vector<int> lags = parse_int_list(lags_text);
        const cointoss::TruthTable t = cointoss::family_max_lags(lags);
        j["gcd"] = cointoss::lag_gcd(lags);
        tables.push_back(entry(t));
      } else if (kind == "guard") {
        if (psi_hex.empty()) {
          for (const auto& t : cointoss::guard_instances(fam_d, fam_c)) tables.push_back(entry(t));
        } else {
          const auto t = cointoss::family_guard(fam_d, fam_c, cointoss::TruthTable::from_hex(psi_hex, fam_d));
          tables.push_back(entry(t));
        }
      } else if (kind == "dominating") {
        if (fam_d > cointoss::kMaxSweepDim) throw std::invalid_argument("dominating listing supports d <= 4");
        for (std::uint64_t b = 0; b < (std::uint64_t{1} << cointoss::state_count(fam_d)); ++b) {
          const cointoss::TruthTable t(fam_d, b);
          if (cointoss::is_dominating(t)) tables.push_back(entry(t));
        }
      } else {
        const cointoss::TruthTable t = cointoss::family_decentered(fam_d);
        j["P_H_not_one"] = cointoss::to_json(cointoss::prob_h_not_one(t));
        tables.push_back(entry(t));
      }
      j["all_conserving"] = std::all_of(tables.begin(), tables.end(), [](const Json& e) { return e["bits_lost"] == 0; });
      j["tables"] = tables;
      emit(j, out);
    }
  } catch (const cointoss::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariantError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return 0;
}
