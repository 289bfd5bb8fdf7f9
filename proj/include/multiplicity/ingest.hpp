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

// Wire formats.
//
// predictions.csv
//   header  := "sample_id" ("," model_id)+ EOL
//   row     := sample_id ("," ("0" | "1"))+ EOL
//   EOL is "\n" (a "\r" before it is tolerated); the final EOL is optional.
//   Fields are unquoted and may not contain ',', '"', '\r' or '\n'. No
//   whitespace is trimmed, no blank lines are allowed.
//
// predictions.jsonl
//   one object per line: {"sample_id": str, "predictions": {model_id: 0|1}}
//   Every line carries the same model set; model order is taken from the
//   first line. Values are JSON integers, never booleans or strings.
//
// manifest.jsonl
//   one object per line with required keys sample_id (str), label (0|1),
//   split ("train"|"val"|"test") and optional keys dataset (str),
//   groups ([str]), annotator_labels ([0|1]), text (str). Any other key is
//   rejected.
//
// report.json
//   canonical, key order: selection, overall, per_dataset, per_group,
//   per_stratum, provenance. See schemas/v1/report.schema.json.

#ifndef MULTIPLICITY_INGEST_HPP_
#define MULTIPLICITY_INGEST_HPP_

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "multiplicity/core.hpp"

namespace multiplicity {

using Json = nlohmann::ordered_json;

enum class PredictionFormat { kCsv, kJsonl };

// Shortest decimal text that reads back to exactly `v`.
inline std::string FormatDouble(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorKind::kInternal, "cannot format number");
  return std::string(buf, end);
}

namespace detail {

// Reads '\n'-terminated lines, dropping one trailing '\r'. Single pass over
// the stream.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool Next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::size_t line_number() const noexcept { return line_number_; }

 private:
  std::istream& in_;
  std::size_t line_number_ = 0;
};

inline void SplitFields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline bool IsPlainField(std::string_view s) {
  return !s.empty() && s.find_first_of(",\"\r\n") == std::string_view::npos;
}

inline void CheckIdField(std::string_view id, std::size_t line, std::size_t col,
                         const char* what) {
  if (id.empty())
    throw ParseError(std::string("empty ") + what, line, std::to_string(col));
  if (id.front() == '"')
    throw ParseError("quoted fields are not supported", line, std::to_string(col));
}

inline Json ParseJsonLine(const std::string& line, std::size_t line_number) {
  if (line.empty()) throw ParseError("blank line", line_number);
  try {
    Json j = Json::parse(line);
    if (!j.is_object()) throw ParseError("line is not a JSON object", line_number);
    return j;
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_number);
  }
}

// JSON integer 0 or 1 (booleans and strings are rejected).
inline std::optional<std::uint8_t> AsBinary(const Json& v) {
  if (!v.is_number_integer()) return std::nullopt;
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u <= 1) return static_cast<std::uint8_t>(u);
    return std::nullopt;
  }
  const auto i = v.get<std::int64_t>();
  if (i == 0 || i == 1) return static_cast<std::uint8_t>(i);
  return std::nullopt;
}

inline void RequirePlainId(const std::string& id, const char* what) {
  if (!IsPlainField(id))
    throw Error(ErrorKind::kValidation, std::string(what) + " '" + id +
                                            "' cannot be written as a CSV field");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Predictions

inline PredictionMatrix ParsePredictionsCsv(std::istream& in) {
  detail::LineReader reader(in);
  std::string line;
  if (!reader.Next(line)) throw ParseError("empty prediction file", 1);
  std::vector<std::string_view> fields;
  detail::SplitFields(line, fields);
  if (fields.size() < 2)
    throw ParseError("header needs sample_id and at least one model column", 1);
  if (fields[0] != "sample_id")
    throw ParseError("first header column must be 'sample_id'", 1, "1");
  std::vector<std::string> model_ids;
  std::unordered_set<std::string> seen_models;
  for (std::size_t c = 1; c < fields.size(); ++c) {
    detail::CheckIdField(fields[c], 1, c + 1, "model id");
    std::string id(fields[c]);
    if (!seen_models.insert(id).second)
      throw ParseError("duplicate model id '" + id + "'", 1, std::to_string(c + 1));
    model_ids.push_back(std::move(id));
  }
  const std::size_t m = model_ids.size();
  std::vector<std::vector<std::uint8_t>> columns(m);
  std::vector<std::string> sample_ids;
  std::unordered_set<std::string> seen_samples;
  bool saw_blank = false;
  std::size_t blank_line = 0;
  while (reader.Next(line)) {
    const std::size_t ln = reader.line_number();
    if (line.empty()) {
      if (!saw_blank) blank_line = ln;
      saw_blank = true;
      continue;
    }
    if (saw_blank) throw ParseError("blank line inside the table", blank_line);
    detail::SplitFields(line, fields);
    if (fields.size() != m + 1)
      throw ParseError("ragged row: expected " + std::to_string(m + 1) +
                           " fields, found " + std::to_string(fields.size()),
                       ln);
    detail::CheckIdField(fields[0], ln, 1, "sample id");
    std::string id(fields[0]);
    if (!seen_samples.insert(id).second)
      throw ParseError("duplicate sample id '" + id + "'", ln, "1");
    for (std::size_t c = 0; c < m; ++c) {
      const auto cell = fields[c + 1];
      if (cell == "0") {
        columns[c].push_back(0);
      } else if (cell == "1") {
        columns[c].push_back(1);
      } else {
        throw ParseError("cell '" + std::string(cell) + "' is not 0 or 1", ln,
                         std::to_string(c + 2));
      }
    }
    sample_ids.push_back(std::move(id));
  }
  if (saw_blank && blank_line != reader.line_number())
    throw ParseError("blank line inside the table", blank_line);
  if (sample_ids.empty()) throw ParseError("prediction file has no rows", 2);
  std::vector<std::uint8_t> values;
  values.reserve(m * sample_ids.size());
  for (auto& col : columns) {
    values.insert(values.end(), col.begin(), col.end());
    std::vector<std::uint8_t>().swap(col);
  }
  return PredictionMatrix(std::move(model_ids), std::move(sample_ids),
                          std::move(values));
}

inline PredictionMatrix ParsePredictionsJsonl(std::istream& in) {
  detail::LineReader reader(in);
  std::string line;
  std::vector<std::string> model_ids;
  std::unordered_map<std::string, std::size_t> model_pos;
  std::vector<std::vector<std::uint8_t>> columns;
  std::vector<std::string> sample_ids;
  std::unordered_set<std::string> seen_samples;
  std::size_t pending_blank = 0;
  while (reader.Next(line)) {
    const std::size_t ln = reader.line_number();
    if (line.empty()) {
      if (pending_blank == 0) pending_blank = ln;
      continue;
    }
    if (pending_blank) throw ParseError("blank line", pending_blank);
    const Json j = detail::ParseJsonLine(line, ln);
    for (const auto& [key, _] : j.items()) {
      if (key != "sample_id" && key != "predictions")
        throw ParseError("unknown key", ln, key);
    }
    if (!j.contains("sample_id")) throw ParseError("missing key", ln, "sample_id");
    if (!j.contains("predictions")) throw ParseError("missing key", ln, "predictions");
    const auto& sid = j["sample_id"];
    if (!sid.is_string() || sid.get_ref<const std::string&>().empty())
      throw ParseError("sample_id must be a non-empty string", ln, "sample_id");
    const auto& preds = j["predictions"];
    if (!preds.is_object() || preds.empty())
      throw ParseError("predictions must be a non-empty object", ln, "predictions");
    if (model_ids.empty()) {
      for (const auto& [key, _] : preds.items()) {
        if (key.empty()) throw ParseError("empty model id", ln, "predictions");
        model_pos.emplace(key, model_ids.size());
        model_ids.push_back(key);
      }
      columns.resize(model_ids.size());
    }
    if (preds.size() != model_ids.size())
      throw ParseError("ragged row: expected " + std::to_string(model_ids.size()) +
                           " models, found " + std::to_string(preds.size()),
                       ln);
    for (const auto& [key, value] : preds.items()) {
      auto it = model_pos.find(key);
      if (it == model_pos.end()) throw ParseError("unknown model id", ln, key);
      auto bit = detail::AsBinary(value);
      if (!bit) throw ParseError("value '" + value.dump() + "' is not 0 or 1", ln, key);
      columns[it->second].push_back(*bit);
    }
    std::string id = sid.get<std::string>();
    if (!seen_samples.insert(id).second)
      throw ParseError("duplicate sample id '" + id + "'", ln, "sample_id");
    sample_ids.push_back(std::move(id));
  }
  if (pending_blank && pending_blank != reader.line_number())
    throw ParseError("blank line", pending_blank);
  if (sample_ids.empty()) throw ParseError("prediction file has no rows", 1);
  std::vector<std::uint8_t> values;
  values.reserve(model_ids.size() * sample_ids.size());
  for (const auto& col : columns) values.insert(values.end(), col.begin(), col.end());
  return PredictionMatrix(std::move(model_ids), std::move(sample_ids),
                          std::move(values));
}

inline PredictionMatrix ParsePredictions(std::istream& in, PredictionFormat format) {
  return format == PredictionFormat::kCsv ? ParsePredictionsCsv(in)
                                          : ParsePredictionsJsonl(in);
}

inline PredictionMatrix ParsePredictions(std::string_view bytes,
                                         PredictionFormat format) {
  std::istringstream in{std::string(bytes)};
  return ParsePredictions(in, format);
}

inline std::string EmitPredictions(const PredictionMatrix& preds,
                                   PredictionFormat format) {
  std::string out;
  if (format == PredictionFormat::kCsv) {
    out += "sample_id";
    for (const auto& id : preds.model_ids()) {
      detail::RequirePlainId(id, "model id");
      out += ',';
      out += id;
    }
    out += '\n';
    for (std::size_t s = 0; s < preds.n_samples(); ++s) {
      detail::RequirePlainId(preds.sample_ids()[s], "sample id");
      out += preds.sample_ids()[s];
      for (std::size_t m = 0; m < preds.n_models(); ++m) {
        out += ',';
        out += preds.at(m, s) ? '1' : '0';
      }
      out += '\n';
    }
    return out;
  }
  for (std::size_t s = 0; s < preds.n_samples(); ++s) {
    Json row;
    row["sample_id"] = preds.sample_ids()[s];
    Json values = Json::object();
    for (std::size_t m = 0; m < preds.n_models(); ++m)
      values[preds.model_ids()[m]] = static_cast<int>(preds.at(m, s));
    row["predictions"] = std::move(values);
    out += row.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

inline SampleRecord ParseManifestRecord(const Json& j, std::size_t ln) {
  static const std::unordered_set<std::string> kKeys = {
      "sample_id", "label", "split", "dataset", "groups", "annotator_labels", "text"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw ParseError("unknown key", ln, key);
  }
  for (const char* key : {"sample_id", "label", "split"}) {
    if (!j.contains(key)) throw ParseError("missing required key", ln, key);
  }
  SampleRecord r;
  const auto& sid = j["sample_id"];
  if (!sid.is_string() || sid.get_ref<const std::string&>().empty())
    throw ParseError("sample_id must be a non-empty string", ln, "sample_id");
  r.sample_id = sid.get<std::string>();
  auto label = detail::AsBinary(j["label"]);
  if (!label) throw ParseError("label must be 0 or 1", ln, "label");
  r.gold_label = *label;
  const auto& split = j["split"];
  std::optional<Split> s;
  if (split.is_string()) s = ParseSplit(split.get_ref<const std::string&>());
  if (!s) throw ParseError("split must be train, val or test", ln, "split");
  r.split = *s;
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    if (!d.is_string() || d.get_ref<const std::string&>().empty())
      throw ParseError("dataset must be a non-empty string", ln, "dataset");
    r.dataset_tag = d.get<std::string>();
  }
  if (j.contains("groups")) {
    const auto& g = j["groups"];
    if (!g.is_array()) throw ParseError("groups must be an array", ln, "groups");
    for (const auto& tag : g) {
      if (!tag.is_string() || tag.get_ref<const std::string&>().empty())
        throw ParseError("group tags must be non-empty strings", ln, "groups");
      r.group_tags.insert(tag.get<std::string>());
    }
  }
  if (j.contains("annotator_labels")) {
    const auto& a = j["annotator_labels"];
    if (!a.is_array())
      throw ParseError("annotator_labels must be an array", ln, "annotator_labels");
    for (const auto& v : a) {
      auto bit = detail::AsBinary(v);
      if (!bit)
        throw ParseError("annotator labels must be 0 or 1", ln, "annotator_labels");
      r.annotator_labels.push_back(*bit);
    }
  }
  if (j.contains("text")) {
    if (!j["text"].is_string()) throw ParseError("text must be a string", ln, "text");
    r.text = j["text"].get<std::string>();
  }
  return r;
}

inline SampleManifest ParseManifest(std::istream& in) {
  detail::LineReader reader(in);
  std::string line;
  std::vector<SampleRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t pending_blank = 0;
  while (reader.Next(line)) {
    const std::size_t ln = reader.line_number();
    if (line.empty()) {
      if (pending_blank == 0) pending_blank = ln;
      continue;
    }
    if (pending_blank) throw ParseError("blank line", pending_blank);
    SampleRecord r = ParseManifestRecord(detail::ParseJsonLine(line, ln), ln);
    if (!seen.insert(r.sample_id).second)
      throw ParseError("duplicate sample id '" + r.sample_id + "'", ln, "sample_id");
    records.push_back(std::move(r));
  }
  if (pending_blank && pending_blank != reader.line_number())
    throw ParseError("blank line", pending_blank);
  if (records.empty()) throw ParseError("manifest has no records", 1);
  return SampleManifest(std::move(records));
}

inline SampleManifest ParseManifest(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  return ParseManifest(in);
}

// Optional keys are written only when they differ from their defaults.
inline std::string EmitManifest(const SampleManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records()) {
    Json j;
    j["sample_id"] = r.sample_id;
    j["label"] = static_cast<int>(r.gold_label);
    j["split"] = SplitName(r.split);
    if (r.dataset_tag != kDefaultDataset) j["dataset"] = r.dataset_tag;
    if (!r.group_tags.empty()) {
      j["groups"] = Json::array();
      for (const auto& g : r.group_tags) j["groups"].push_back(g);
    }
    if (!r.annotator_labels.empty()) {
      j["annotator_labels"] = Json::array();
      for (auto a : r.annotator_labels) j["annotator_labels"].push_back(static_cast<int>(a));
    }
    if (r.text) j["text"] = *r.text;
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report JSON

inline const char* EpsilonKindName(EpsilonKind k) {
  return k == EpsilonKind::kFixed ? "fixed" : "cp_bound";
}

inline Json MetricValueToJson(const MetricValue& v) {
  Json j;
  j["point"] = v.point;
  j["ci_low"] = v.ci_low;
  j["ci_high"] = v.ci_high;
  j["ci_method"] = CiMethodName(v.ci_method);
  j["n_effective"] = v.n_effective;
  return j;
}

inline Json MetricBlockToJson(const MetricBlock& block) {
  Json j = Json::object();
  for (auto name : kMetricNames) {
    auto it = block.find(std::string(name));
    if (it != block.end()) j[std::string(name)] = MetricValueToJson(it->second);
  }
  // Names outside the registry are kept so validation can report them.
  for (const auto& [name, v] : block) {
    if (!IsKnownMetric(name)) j[name] = MetricValueToJson(v);
  }
  return j;
}

inline Json BreakdownToJson(const Breakdown& b) {
  Json j = Json::object();
  for (const auto& [label, block] : b) j[label] = MetricBlockToJson(block);
  return j;
}

inline Json SelectionToJson(const RashomonSelection& s) {
  Json j;
  j["reference_model_id"] = s.reference_model_id;
  j["policy"] = EpsilonKindName(s.policy);
  j["confidence"] = s.confidence ? Json(*s.confidence) : Json(nullptr);
  j["epsilon"] = s.epsilon;
  j["reference_error"] = s.reference_error;
  j["absolute_slack"] = s.absolute_slack ? Json(*s.absolute_slack) : Json(nullptr);
  j["error_split"] = s.error_split;
  j["per_model_train_error"] = Json::object();
  for (const auto& [id, e] : s.per_model_train_error) j["per_model_train_error"][id] = e;
  j["included_model_ids"] = s.included_model_ids;
  j["excluded_model_ids"] = s.excluded_model_ids;
  return j;
}

inline Json ProvenanceToJson(const Provenance& p) {
  Json j;
  j["schema_version"] = p.schema_version;
  j["tool_version"] = p.tool_version;
  j["seed"] = p.seed;
  j["input_digests"] = Json::object();
  for (const auto& [k, v] : p.input_digests) j["input_digests"][k] = v;
  j["settings"] = Json::object();
  for (const auto& [k, v] : p.settings) j["settings"][k] = v;
  j["n_models"] = p.n_models;
  j["single_annotator_samples"] = p.single_annotator_samples;
  j["samples_without_annotators"] = p.samples_without_annotators;
  j["warnings"] = p.warnings;
  return j;
}

inline Json ReportToJson(const AuditReport& r) {
  Json j;
  j["selection"] = SelectionToJson(r.selection);
  j["overall"] = MetricBlockToJson(r.overall);
  j["per_dataset"] = BreakdownToJson(r.per_dataset);
  j["per_group"] = BreakdownToJson(r.per_group);
  j["per_stratum"] = BreakdownToJson(r.per_stratum);
  j["provenance"] = ProvenanceToJson(r.provenance);
  return j;
}

namespace detail {

// Typed accessors that turn schema mismatches into ParseError with a path.
inline const Json& Field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + " is not an object", 1);
  auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing key " + path + "/" + key, 1);
  return *it;
}

inline double Number(const Json& j, const std::string& key, const std::string& path) {
  const auto& v = Field(j, key, path);
  if (!v.is_number()) throw ParseError(path + "/" + key + " is not a number", 1);
  return v.get<double>();
}

inline std::optional<double> OptNumber(const Json& j, const std::string& key,
                                       const std::string& path) {
  const auto& v = Field(j, key, path);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw ParseError(path + "/" + key + " is not a number", 1);
  return v.get<double>();
}

inline std::uint64_t Unsigned(const Json& j, const std::string& key,
                              const std::string& path) {
  const auto& v = Field(j, key, path);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ParseError(path + "/" + key + " is not a non-negative integer", 1);
  return v.get<std::uint64_t>();
}

inline std::string String(const Json& j, const std::string& key, const std::string& path) {
  const auto& v = Field(j, key, path);
  if (!v.is_string()) throw ParseError(path + "/" + key + " is not a string", 1);
  return v.get<std::string>();
}

inline std::vector<std::string> StringList(const Json& j, const std::string& key,
                                           const std::string& path) {
  const auto& v = Field(j, key, path);
  if (!v.is_array()) throw ParseError(path + "/" + key + " is not an array", 1);
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ParseError(path + "/" + key + " holds a non-string", 1);
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline MetricValue MetricValueFromJson(const Json& j, const std::string& path) {
  MetricValue v;
  v.point = Number(j, "point", path);
  v.ci_low = Number(j, "ci_low", path);
  v.ci_high = Number(j, "ci_high", path);
  auto method = ParseCiMethod(String(j, "ci_method", path));
  if (!method) throw ParseError(path + "/ci_method is not a known method", 1);
  v.ci_method = *method;
  v.n_effective = Unsigned(j, "n_effective", path);
  return v;
}

inline MetricBlock MetricBlockFromJson(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + " is not an object", 1);
  MetricBlock block;
  for (const auto& [name, v] : j.items())
    block[name] = MetricValueFromJson(v, path + "/" + name);
  return block;
}

inline Breakdown BreakdownFromJson(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + " is not an object", 1);
  Breakdown b;
  for (const auto& [label, block] : j.items())
    b[label] = MetricBlockFromJson(block, path + "/" + label);
  return b;
}

inline std::map<std::string, std::string> StringMap(const Json& j, const std::string& key,
                                                    const std::string& path) {
  const auto& v = Field(j, key, path);
  if (!v.is_object()) throw ParseError(path + "/" + key + " is not an object", 1);
  std::map<std::string, std::string> out;
  for (const auto& [k, e] : v.items()) {
    if (!e.is_string()) throw ParseError(path + "/" + key + "/" + k + " is not a string", 1);
    out[k] = e.get<std::string>();
  }
  return out;
}

}  // namespace detail

inline AuditReport ReportFromJson(const Json& j) {
  using namespace detail;
  AuditReport r;
  const auto& s = Field(j, "selection", "");
  auto& sel = r.selection;
  sel.reference_model_id = String(s, "reference_model_id", "/selection");
  const std::string policy = String(s, "policy", "/selection");
  if (policy == "fixed") {
    sel.policy = EpsilonKind::kFixed;
  } else if (policy == "cp_bound") {
    sel.policy = EpsilonKind::kCpBound;
  } else {
    throw ParseError("/selection/policy is not fixed or cp_bound", 1);
  }
  sel.confidence = OptNumber(s, "confidence", "/selection");
  sel.epsilon = Number(s, "epsilon", "/selection");
  sel.reference_error = Number(s, "reference_error", "/selection");
  sel.absolute_slack = OptNumber(s, "absolute_slack", "/selection");
  sel.error_split = String(s, "error_split", "/selection");
  const auto& errors = Field(s, "per_model_train_error", "/selection");
  if (!errors.is_object())
    throw ParseError("/selection/per_model_train_error is not an object", 1);
  for (const auto& [id, e] : errors.items()) {
    if (!e.is_number())
      throw ParseError("/selection/per_model_train_error/" + id + " is not a number", 1);
    sel.per_model_train_error[id] = e.get<double>();
  }
  sel.included_model_ids = StringList(s, "included_model_ids", "/selection");
  sel.excluded_model_ids = StringList(s, "excluded_model_ids", "/selection");

  r.overall = MetricBlockFromJson(Field(j, "overall", ""), "/overall");
  r.per_dataset = BreakdownFromJson(Field(j, "per_dataset", ""), "/per_dataset");
  r.per_group = BreakdownFromJson(Field(j, "per_group", ""), "/per_group");
  r.per_stratum = BreakdownFromJson(Field(j, "per_stratum", ""), "/per_stratum");

  const auto& p = Field(j, "provenance", "");
  auto& prov = r.provenance;
  prov.schema_version = String(p, "schema_version", "/provenance");
  prov.tool_version = String(p, "tool_version", "/provenance");
  prov.seed = Unsigned(p, "seed", "/provenance");
  prov.input_digests = StringMap(p, "input_digests", "/provenance");
  prov.settings = StringMap(p, "settings", "/provenance");
  prov.n_models = Unsigned(p, "n_models", "/provenance");
  prov.single_annotator_samples = Unsigned(p, "single_annotator_samples", "/provenance");
  prov.samples_without_annotators =
      Unsigned(p, "samples_without_annotators", "/provenance");
  prov.warnings = StringList(p, "warnings", "/provenance");
  return r;
}

inline AuditReport ParseReport(std::string_view bytes) {
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 1);
  }
  return ReportFromJson(j);
}

// ---------------------------------------------------------------------------
// Report renderings

enum class ReportFormat { kJson, kCsvTables, kMarkdown };

struct CsvTable {
  std::string name;     // "overall", "per_dataset/<tag>", ...
  std::string content;  // header metric,point,ci_low,ci_high,n plus rows
};

inline std::string MetricBlockCsv(const MetricBlock& block) {
  std::string out = "metric,point,ci_low,ci_high,n\n";
  for (auto name : kMetricNames) {
    auto it = block.find(std::string(name));
    if (it == block.end()) continue;
    const auto& v = it->second;
    out += std::string(name) + ',' + FormatDouble(v.point) + ',' +
           FormatDouble(v.ci_low) + ',' + FormatDouble(v.ci_high) + ',' +
           std::to_string(v.n_effective) + '\n';
  }
  return out;
}

// One table for the overall block and one per stratum of every non-empty
// breakdown.
inline std::vector<CsvTable> EmitReportTables(const AuditReport& r) {
  std::vector<CsvTable> tables;
  tables.push_back({"overall", MetricBlockCsv(r.overall)});
  auto add = [&](const char* name, const Breakdown& b) {
    for (const auto& [label, block] : b)
      tables.push_back({std::string(name) + "/" + label, MetricBlockCsv(block)});
  };
  add("per_dataset", r.per_dataset);
  add("per_group", r.per_group);
  add("per_stratum", r.per_stratum);
  return tables;
}

namespace detail {

inline std::string Percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * v);
  return buf;
}

inline std::string MarkdownCell(const MetricBlock& block, std::string_view metric) {
  auto it = block.find(std::string(metric));
  if (it == block.end()) return "n/a";
  const auto& v = it->second;
  if (v.ci_method == CiMethod::kNone) return Percent(v.point);
  return Percent(v.point) + " [" + Percent(v.ci_low) + ", " + Percent(v.ci_high) + "]";
}

inline std::size_t BlockN(const MetricBlock& block) {
  auto it = block.find(std::string(kArbitrariness));
  return it == block.end() ? 0 : it->second.n_effective;
}

inline void MarkdownTable(std::string& out, const std::string& axis, const Breakdown& b) {
  out += "| " + axis +
         " | n | arbitrariness | avg pairwise disagreement | ambiguity | minority fraction |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& [label, block] : b) {
    out += "| " + label + " | " + std::to_string(BlockN(block)) + " | " +
           MarkdownCell(block, kArbitrariness) + " | " +
           MarkdownCell(block, kAvgPairwiseDisagreement) + " | " +
           MarkdownCell(block, kAmbiguity) + " | " +
           MarkdownCell(block, kMinorityFraction) + " |\n";
  }
}

}  // namespace detail

inline std::string EmitReport(const AuditReport& r, ReportFormat format) {
  if (format == ReportFormat::kJson) return ReportToJson(r).dump(2) + "\n";
  if (format == ReportFormat::kCsvTables) {
    std::string out;
    bool first = true;
    for (const auto& t : EmitReportTables(r)) {
      if (!first) out += '\n';
      first = false;
      out += "# " + t.name + "\n" + t.content;
    }
    return out;
  }
  const auto& s = r.selection;
  std::string out = "# Multiplicity audit\n\n";
  out += "- Reference model: `" + s.reference_model_id + "`\n";
  out += "- Rashomon set: " + std::to_string(s.included_model_ids.size()) + " of " +
         std::to_string(s.included_model_ids.size() + s.excluded_model_ids.size()) +
         " models\n";
  out += "- Epsilon: " + FormatDouble(s.epsilon) + " (" + EpsilonKindName(s.policy);
  if (s.confidence) out += ", confidence " + FormatDouble(*s.confidence);
  out += ", errors on " + s.error_split + ")\n";
  if (s.absolute_slack)
    out += "- Zero reference error: absolute slack " + FormatDouble(*s.absolute_slack) + "\n";
  out += "- Seed: " + std::to_string(r.provenance.seed) + "\n\n";
  Breakdown overall{{"all", r.overall}};
  out += "## Overall\n\n";
  detail::MarkdownTable(out, "samples", overall);
  if (!r.per_dataset.empty()) {
    out += "\n## Per dataset\n\n";
    detail::MarkdownTable(out, "dataset", r.per_dataset);
  }
  if (!r.per_group.empty()) {
    out += "\n## Per target group\n\n";
    detail::MarkdownTable(out, "group", r.per_group);
  }
  if (!r.per_stratum.empty()) {
    out += "\n## Annotator agreement\n\n";
    detail::MarkdownTable(out, "stratum", r.per_stratum);
  }
  if (!r.provenance.warnings.empty()) {
    out += "\n## Warnings\n\n";
    for (const auto& w : r.provenance.warnings) out += "- " + w + "\n";
  }
  return out;
}

}  // namespace multiplicity

#endif  // MULTIPLICITY_INGEST_HPP_
