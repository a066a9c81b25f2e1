#pragma once

// JSON forms of the analysis results. Every top-level document carries
// "schema_version".

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cointoss/accord.hpp"
#include "cointoss/classify.hpp"
#include "cointoss/enumerate.hpp"
#include "cointoss/kernel2d.hpp"
#include "cointoss/reconstruct.hpp"

namespace cointoss {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

inline Json to_json(StateSet s) { return s.elements(); }

inline Json to_json(const Rational& r) { return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator()); }

inline Json to_json(const AccordMatrix& a) {
  Json rows = Json::array();
  for (StateId i = 0; i < a.rows.size(); ++i) {
    std::string row;
    for (StateId j = 0; j < a.rows.size(); ++j) row.push_back(a(i, j) ? '1' : '0');
    rows.push_back(row);
  }
  return rows;
}

inline Json to_json(const LossReport& r) {
  Json blocks = Json::array();
  for (StateSet b : r.partition.blocks) blocks.push_back(to_json(b));
  return {{"table", r.table.to_hex()},
          {"d", r.table.dim()},
          {"M", r.m},
          {"N", r.n},
          {"bits", r.bits},
          {"word", r.word.to_string()},
          {"word_length", r.word.size()},
          {"word_shortest", r.word_shortest},
          {"image", to_json(r.image)},
          {"max_steps", r.max_steps},
          {"blocks", blocks},
          {"witness", r.partition.witness.to_string()}};
}

inline Json to_json(const ClassTags& c) {
  Json dich = nullptr;
  if (c.dichotomic) {
    dich = {{"gamma", c.dichotomic->gamma == Sign::plus ? "+" : "-"},
            {"A", to_json(c.dichotomic->a)},
            {"B", to_json(c.dichotomic->b)}};
  }
  return {{"even", c.even},
          {"dichotomic", dich},
          {"maxloss", c.maxloss},
          {"decentering", c.decentering},
          {"mean_H", to_json(c.mean_h)}};
}

inline Json to_json(const TableCheck& c) {
  Json decomposition = nullptr;
  if (c.decomposition) {
    decomposition = {{"outer", c.decomposition->outer.to_hex()},
                     {"outer_d", c.decomposition->outer.dim()},
                     {"inner", c.decomposition->inner.to_hex()},
                     {"inner_d", c.decomposition->inner.dim()}};
  }
  Json out = {{"schema_version", kSchemaVersion}};
  const Json loss = to_json(c.loss);
  for (auto& [k, v] : loss.items()) out[k] = v;
  out["effective_length"] = c.reduced.length;
  out["reduced_table"] = c.reduced.table.to_hex();
  out["classes"] = to_json(c.tags);
  out["window_bound"] = c.window_bits;
  out["flip_rate_bound"] = c.flip_rate_bits ? Json(*c.flip_rate_bits) : Json(nullptr);
  out["indecomposable"] = c.indecomposable ? Json(*c.indecomposable) : Json(nullptr);
  out["decomposition"] = decomposition;
  return out;
}

inline Json to_json(const SweepReport& r) {
  Json hist = Json::object();
  for (auto [k, c] : r.histogram) hist[std::to_string(k)] = c;
  Json dec = Json::object();
  for (auto [k, c] : r.losing_decentering) dec[std::to_string(k)] = c;
  return {{"schema_version", kSchemaVersion},
          {"d", r.d},
          {"total", r.total},
          {"losing_count", r.losing},
          {"histogram_bits_lost", hist},
          {"counts",
           {{"even", r.even},
            {"dichotomic", r.dichotomic},
            {"maxloss", r.maxloss},
            {"even_dichotomic", r.even_dichotomic},
            {"even_maxloss", r.even_maxloss},
            {"dichotomic_maxloss", r.dichotomic_maxloss},
            {"all_three", r.all_three},
            {"union", r.union_count}}},
          {"losing_in_union", r.losing_in_union},
          {"losing_by_decentering", dec},
          {"losing_nonzero_decentering", r.losing_nonzero_decentering()},
          {"losing_odd_decentering", r.losing_odd_decentering()},
          {"parity_observation", parity_observation(r)}};
}

inline Json to_json(const ExpectedCounts& e) {
  return {{"d", e.d},
          {"even", e.even},
          {"dichotomic", e.dichotomic},
          {"maxloss", e.maxloss},
          {"even_dichotomic", e.even_dichotomic},
          {"even_maxloss", e.even_maxloss},
          {"dichotomic_maxloss", e.dichotomic_maxloss},
          {"all_three", e.all_three},
          {"union", e.union_count}};
}

inline Json to_json(const std::vector<CountDiff>& diffs) {
  Json out = Json::array();
  for (const CountDiff& d : diffs) out.push_back({{"category", d.category}, {"expected", d.expected}, {"observed", d.observed}});
  return out;
}

inline Json to_json(const Chi2Result& r) {
  return {{"schema_version", kSchemaVersion},
          {"M", r.m},
          {"dof", r.dof},
          {"trials", r.trials},
          {"uncovered", r.uncovered},
          {"histogram", r.histogram},
          {"statistic", r.statistic},
          {"threshold_99", r.threshold},
          {"coverage_ok", r.coverage_ok},
          {"pass", r.pass}};
}

inline Json to_json(const IntervalSet& s) {
  Json runs = Json::array();
  for (auto [p, q] : s.runs) runs.push_back({p, q});
  return {{"denom", s.denom}, {"runs", runs}};
}

}  // namespace cointoss
