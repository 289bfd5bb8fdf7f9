/*
 * Copyright 2026 The Multiplicity Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Structural and range validation of report.json against schema v1
// (schemas/v1/report.schema.json). Violations are returned as data.

#ifndef MULTIPLICITY_SCHEMA_HPP_
#define MULTIPLICITY_SCHEMA_HPP_

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "multiplicity/core.hpp"
#include "multiplicity/ingest.hpp"

namespace multiplicity {

inline constexpr std::string_view kReportSchemaMajor = "1";

struct Violation {
  std::string path;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {

class ReportChecker {
 public:
  std::vector<Violation> Run(const Json& root) {
    if (!root.is_object()) {
      Add("", "report is not a JSON object");
      return out_;
    }
    static const char* kTop[] = {"selection", "overall", "per_dataset",
                                 "per_group", "per_stratum", "provenance"};
    std::set<std::string> known(std::begin(kTop), std::end(kTop));
    for (const auto& [key, _] : root.items()) {
      if (!known.count(key)) Add("/" + key, "unknown top-level key");
    }
    for (const char* key : kTop) {
      if (!root.contains(key)) Add(std::string("/") + key, "missing top-level key");
    }
    if (root.contains("selection")) Selection(root["selection"]);
    const Json* overall = nullptr;
    if (root.contains("overall")) {
      overall = &root["overall"];
      Block(*overall, "/overall");
    }
    for (const char* key : {"per_dataset", "per_group", "per_stratum"}) {
      if (root.contains(key)) Breakdown(root[key], std::string("/") + key, overall);
    }
    if (root.contains("provenance")) ProvenanceBlock(root["provenance"]);
    return out_;
  }

 private:
  void Add(std::string path, std::string message) {
    out_.push_back({std::move(path), std::move(message)});
  }

  bool Require(const Json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) {
      Add(path + "/" + key, "missing key");
      return false;
    }
    return true;
  }

  void Selection(const Json& s) {
    const std::string p = "/selection";
    if (!s.is_object()) return Add(p, "not an object");
    for (const char* k : {"reference_model_id", "policy", "confidence", "epsilon",
                          "reference_error", "absolute_slack", "error_split",
                          "per_model_train_error", "included_model_ids",
                          "excluded_model_ids"}) {
      Require(s, k, p);
    }
    if (s.contains("policy")) {
      const auto& v = s["policy"];
      if (!v.is_string() || (v != "fixed" && v != "cp_bound"))
        Add(p + "/policy", "must be \"fixed\" or \"cp_bound\"");
      else if (v == "cp_bound" && s.contains("confidence") && s["confidence"].is_null())
        Add(p + "/confidence", "cp_bound policy needs a confidence");
    }
    if (s.contains("confidence") && !s["confidence"].is_null()) {
      const auto& c = s["confidence"];
      if (!c.is_number() || !(c.get<double>() > 0.0 && c.get<double>() < 1.0))
        Add(p + "/confidence", "must be a number in (0, 1) or null");
    }
    if (s.contains("epsilon") &&
        (!s["epsilon"].is_number() || !(s["epsilon"].get<double>() >= 0.0)))
      Add(p + "/epsilon", "must be a number >= 0");
    if (s.contains("reference_error")) UnitNumber(s["reference_error"], p + "/reference_error");
    if (s.contains("absolute_slack") && !s["absolute_slack"].is_null() &&
        (!s["absolute_slack"].is_number() || !(s["absolute_slack"].get<double>() >= 0.0)))
      Add(p + "/absolute_slack", "must be a number >= 0 or null");
    if (s.contains("error_split")) {
      const auto& v = s["error_split"];
      if (!v.is_string() || (v != "train" && v != "val" && v != "test" && v != "all"))
        Add(p + "/error_split", "must be train, val, test or all");
    }
    std::vector<std::string> included, excluded;
    bool ids_ok = StringArray(s, "included_model_ids", p, included) &
                  StringArray(s, "excluded_model_ids", p, excluded);
    if (ids_ok) {
      std::set<std::string> inc(included.begin(), included.end());
      if (inc.size() != included.size()) Add(p + "/included_model_ids", "duplicate ids");
      for (const auto& id : excluded) {
        if (inc.count(id)) Add(p + "/excluded_model_ids", "id '" + id + "' is also included");
      }
      if (s.contains("reference_model_id") && s["reference_model_id"].is_string() &&
          !inc.count(s["reference_model_id"].get<std::string>()))
        Add(p + "/included_model_ids", "reference model is not included");
    }
    if (s.contains("per_model_train_error")) {
      const auto& errs = s["per_model_train_error"];
      if (!errs.is_object()) {
        Add(p + "/per_model_train_error", "not an object");
      } else {
        for (const auto& [id, e] : errs.items()) UnitNumber(e, p + "/per_model_train_error/" + id);
        if (ids_ok) Membership(s, errs, included, excluded);
      }
    }
  }

  void Membership(const Json& s, const Json& errs, const std::vector<std::string>& included,
                  const std::vector<std::string>& excluded) {
    const std::string p = "/selection";
    if (!s.contains("epsilon") || !s["epsilon"].is_number() || !s.contains("reference_error") ||
        !s["reference_error"].is_number())
      return;
    double bound = (1.0 + s["epsilon"].get<double>()) * s["reference_error"].get<double>();
    if (s.contains("absolute_slack") && s["absolute_slack"].is_number())
      bound = s["absolute_slack"].get<double>();
    const std::string ref = s.value("reference_model_id", std::string());
    if (errs.size() != included.size() + excluded.size())
      Add(p + "/per_model_train_error", "must list exactly the included and excluded models");
    for (const auto& id : included) {
      auto it = errs.find(id);
      if (it == errs.end()) {
        Add(p + "/per_model_train_error/" + id, "missing error for included model");
      } else if (it->is_number() && id != ref && it->get<double>() > bound) {
        Add(p + "/included_model_ids", "model '" + id + "' exceeds the Rashomon bound");
      }
    }
    for (const auto& id : excluded) {
      auto it = errs.find(id);
      if (it == errs.end()) {
        Add(p + "/per_model_train_error/" + id, "missing error for excluded model");
      } else if (it->is_number() && it->get<double>() <= bound) {
        Add(p + "/excluded_model_ids", "model '" + id + "' is within the Rashomon bound");
      }
    }
  }

  bool StringArray(const Json& j, const char* key, const std::string& path,
                   std::vector<std::string>& out) {
    if (!j.contains(key)) return false;
    const auto& v = j[key];
    if (!v.is_array()) {
      Add(path + "/" + key, "not an array");
      return false;
    }
    for (const auto& e : v) {
      if (!e.is_string()) {
        Add(path + "/" + key, "holds a non-string");
        return false;
      }
      out.push_back(e.get<std::string>());
    }
    return true;
  }

  void UnitNumber(const Json& v, const std::string& path) {
    if (!v.is_number() || !(v.get<double>() >= 0.0 && v.get<double>() <= 1.0))
      Add(path, "must be a number in [0, 1]");
  }

  void Block(const Json& block, const std::string& path) {
    if (!block.is_object()) return Add(path, "not an object");
    for (const auto& [name, value] : block.items()) {
      const std::string mp = path + "/" + name;
      if (!IsKnownMetric(name)) Add(mp, "unknown metric name");
      Value(value, mp);
    }
  }

  void Value(const Json& v, const std::string& path) {
    if (!v.is_object()) return Add(path, "not an object");
    bool numbers = true;
    for (const char* k : {"point", "ci_low", "ci_high"}) {
      if (!Require(v, k, path)) {
        numbers = false;
      } else if (!v[k].is_number()) {
        Add(path + "/" + k, "not a number");
        numbers = false;
      }
    }
    std::optional<CiMethod> method;
    if (Require(v, "ci_method", path)) {
      if (v["ci_method"].is_string()) method = ParseCiMethod(v["ci_method"].get<std::string>());
      if (!method) Add(path + "/ci_method", "must be sem, bootstrap_percentile or none");
    }
    if (Require(v, "n_effective", path) && !v["n_effective"].is_number_unsigned())
      Add(path + "/n_effective", "must be a non-negative integer");
    if (!numbers) return;
    const double point = v["point"].get<double>();
    if (!(point >= 0.0 && point <= 1.0)) Add(path + "/point", "must lie in [0, 1]");
    if (method && *method != CiMethod::kNone &&
        !(v["ci_low"].get<double>() <= point && point <= v["ci_high"].get<double>()))
      Add(path + "/point", "outside [ci_low, ci_high]");
  }

  void Breakdown(const Json& b, const std::string& path, const Json* overall) {
    if (!b.is_object()) return Add(path, "not an object");
    for (const auto& [label, block] : b.items()) {
      const std::string bp = path + "/" + label;
      Block(block, bp);
      if (!overall || !overall->is_object() || !block.is_object()) continue;
      for (const auto& [name, value] : block.items()) {
        auto it = overall->find(name);
        if (it == overall->end() || !it->is_object() || !value.is_object()) continue;
        const auto n = value.find("n_effective");
        const auto n_all = it->find("n_effective");
        if (n != value.end() && n_all != it->end() && n->is_number_unsigned() &&
            n_all->is_number_unsigned() &&
            n->get<std::uint64_t>() > n_all->get<std::uint64_t>())
          Add(bp + "/" + name + "/n_effective", "exceeds the overall n_effective");
      }
    }
  }

  void ProvenanceBlock(const Json& p) {
    const std::string path = "/provenance";
    if (!p.is_object()) return Add(path, "not an object");
    if (Require(p, "schema_version", path)) {
      const auto& v = p["schema_version"];
      if (!v.is_string()) {
        Add(path + "/schema_version", "not a string");
      } else {
        const std::string s = v.get<std::string>();
        if (s.substr(0, s.find('.')) != kReportSchemaMajor)
          Add(path + "/schema_version", "unsupported major version '" + s + "'");
      }
    }
    if (Require(p, "tool_version", path) && !p["tool_version"].is_string())
      Add(path + "/tool_version", "not a string");
    for (const char* k : {"seed", "n_models", "single_annotator_samples",
                          "samples_without_annotators"}) {
      if (Require(p, k, path) && !p[k].is_number_unsigned())
        Add(path + "/" + k, "must be a non-negative integer");
    }
    for (const char* k : {"input_digests", "settings"}) {
      if (!Require(p, k, path)) continue;
      if (!p[k].is_object()) {
        Add(path + "/" + k, "not an object");
        continue;
      }
      for (const auto& [key, v] : p[k].items()) {
        if (!v.is_string()) Add(path + "/" + k + "/" + key, "not a string");
      }
    }
    std::vector<std::string> ignored;
    if (Require(p, "warnings", path)) StringArray(p, "warnings", path, ignored);
  }

  std::vector<Violation> out_;
};

}  // namespace detail

inline std::vector<Violation> ValidateReport(std::string_view bytes) {
  Json root;
  try {
    root = Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    return {{"", std::string("invalid JSON: ") + e.what()}};
  }
  return detail::ReportChecker().Run(root);
}

inline std::vector<Violation> ValidateReport(const AuditReport& report) {
  return detail::ReportChecker().Run(ReportToJson(report));
}

}  // namespace multiplicity

#endif  // MULTIPLICITY_SCHEMA_HPP_
