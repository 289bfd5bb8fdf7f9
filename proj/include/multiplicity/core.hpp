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

// Domain types shared by every audit stage: prediction matrices, sample
// manifests, Rashomon selections and audit reports, plus the error hierarchy
// and the id-alignment contract.

#ifndef MULTIPLICITY_CORE_HPP_
#define MULTIPLICITY_CORE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace multiplicity {

inline constexpr std::string_view kToolVersion = "1.0.0";

// Error categories double as CLI exit-code classes.
enum class ErrorKind {
  kUsage,          // bad flags or arguments
  kParse,          // malformed input bytes
  kValidation,     // well-formed input that violates a type invariant
  kAlignment,      // prediction and manifest ids cannot be joined
  kConfiguration,  // inconsistent policy / plan parameters
  kDomain,         // mathematically undefined request
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse failures carry a 1-based line and an optional column, which is a
// field index for CSV or a key name for JSONL.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line,
             std::string column = {})
      : Error(ErrorKind::kParse, Locate(message, line, column)),
        line_(line),
        column_(std::move(column)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  static std::string Locate(const std::string& message, std::size_t line,
                            const std::string& column) {
    std::string out = "line " + std::to_string(line);
    if (!column.empty()) out += ", column " + column;
    return out + ": " + message;
  }
  std::size_t line_;
  std::string column_;
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kConfiguration: return "configuration";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kInternal: return "internal";
  }
  return "internal";
}

// ---------------------------------------------------------------------------
// PredictionMatrix

// Dense M x n matrix of binary predictions, stored model-major.
// 1 marks "toxic", 0 "not toxic".
class PredictionMatrix {
 public:
  PredictionMatrix() = default;

  PredictionMatrix(std::vector<std::string> model_ids,
                   std::vector<std::string> sample_ids,
                   std::vector<std::uint8_t> values)
      : model_ids_(std::move(model_ids)),
        sample_ids_(std::move(sample_ids)),
        values_(std::move(values)) {
    if (model_ids_.empty())
      throw Error(ErrorKind::kValidation, "prediction matrix has no models");
    if (sample_ids_.empty())
      throw Error(ErrorKind::kValidation, "prediction matrix has no samples");
    if (values_.size() != model_ids_.size() * sample_ids_.size())
      throw Error(ErrorKind::kValidation,
                  "prediction matrix shape does not match its id lists");
    for (auto v : values_) {
      if (v > 1)
        throw Error(ErrorKind::kValidation, "prediction value is not 0 or 1");
    }
    BuildIndex(model_ids_, model_index_, "model");
    BuildIndex(sample_ids_, sample_index_, "sample");
  }

  std::size_t n_models() const noexcept { return model_ids_.size(); }
  std::size_t n_samples() const noexcept { return sample_ids_.size(); }
  const std::vector<std::string>& model_ids() const noexcept {
    return model_ids_;
  }
  const std::vector<std::string>& sample_ids() const noexcept {
    return sample_ids_;
  }
  const std::vector<std::uint8_t>& values() const noexcept { return values_; }

  std::uint8_t at(std::size_t model, std::size_t sample) const {
    return values_[model * sample_ids_.size() + sample];
  }
  std::span<const std::uint8_t> row(std::size_t model) const {
    return {values_.data() + model * sample_ids_.size(), sample_ids_.size()};
  }

  std::optional<std::size_t> model_index(std::string_view id) const {
    auto it = model_index_.find(std::string(id));
    if (it == model_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> sample_index(std::string_view id) const {
    auto it = sample_index_.find(std::string(id));
    if (it == sample_index_.end()) return std::nullopt;
    return it->second;
  }

  // Keeps the listed models, in the order given.
  PredictionMatrix SelectModels(const std::vector<std::string>& ids) const {
    std::vector<std::uint8_t> out;
    out.reserve(ids.size() * n_samples());
    for (const auto& id : ids) {
      auto m = model_index(id);
      if (!m) throw Error(ErrorKind::kValidation, "unknown model id '" + id + "'");
      auto r = row(*m);
      out.insert(out.end(), r.begin(), r.end());
    }
    return PredictionMatrix(ids, sample_ids_, std::move(out));
  }

  // Keeps the listed sample columns, in the order given.
  PredictionMatrix SelectSamples(std::span<const std::size_t> columns) const {
    std::vector<std::string> ids;
    ids.reserve(columns.size());
    for (auto c : columns) ids.push_back(sample_ids_.at(c));
    std::vector<std::uint8_t> out;
    out.reserve(n_models() * columns.size());
    for (std::size_t m = 0; m < n_models(); ++m) {
      for (auto c : columns) out.push_back(at(m, c));
    }
    return PredictionMatrix(model_ids_, std::move(ids), std::move(out));
  }

  friend bool operator==(const PredictionMatrix& a, const PredictionMatrix& b) {
    return a.model_ids_ == b.model_ids_ && a.sample_ids_ == b.sample_ids_ &&
           a.values_ == b.values_;
  }

 private:
  static void BuildIndex(const std::vector<std::string>& ids,
                         std::unordered_map<std::string, std::size_t>& index,
                         const char* what) {
    index.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!index.emplace(ids[i], i).second)
        throw Error(ErrorKind::kValidation,
                    std::string("duplicate ") + what + " id '" + ids[i] + "'");
    }
  }

  std::vector<std::string> model_ids_;
  std::vector<std::string> sample_ids_;
  std::vector<std::uint8_t> values_;
  std::unordered_map<std::string, std::size_t> model_index_;
  std::unordered_map<std::string, std::size_t> sample_index_;
};

// ---------------------------------------------------------------------------
// SampleManifest

enum class Split { kTrain, kVal, kTest };

inline const char* SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

inline std::optional<Split> ParseSplit(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

inline constexpr std::string_view kDefaultDataset = "default";

struct SampleRecord {
  std::string sample_id;
  std::uint8_t gold_label = 0;
  Split split = Split::kTrain;
  std::string dataset_tag = std::string(kDefaultDataset);
  std::set<std::string> group_tags;
  std::vector<std::uint8_t> annotator_labels;
  // Raw text is carried through untouched; no metric reads it.
  std::optional<std::string> text;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

class SampleManifest {
 public:
  SampleManifest() = default;

  explicit SampleManifest(std::vector<SampleRecord> records)
      : records_(std::move(records)) {
    index_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (r.gold_label > 1)
        throw Error(ErrorKind::kValidation,
                    "gold label of '" + r.sample_id + "' is not 0 or 1");
      for (auto a : r.annotator_labels) {
        if (a > 1)
          throw Error(ErrorKind::kValidation, "annotator label of '" +
                                                  r.sample_id +
                                                  "' is not 0 or 1");
      }
      if (!index_.emplace(r.sample_id, i).second)
        throw Error(ErrorKind::kValidation,
                    "duplicate sample id '" + r.sample_id + "'");
    }
  }

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  const SampleRecord& operator[](std::size_t i) const { return records_[i]; }

  std::optional<std::size_t> index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> sample_ids() const {
    std::vector<std::string> ids;
    ids.reserve(records_.size());
    for (const auto& r : records_) ids.push_back(r.sample_id);
    return ids;
  }

  // Indices of the samples in the given split, in manifest order.
  std::vector<std::size_t> indices_in(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (records_[i].split == split) out.push_back(i);
    }
    return out;
  }

  SampleManifest Select(std::span<const std::size_t> rows) const {
    std::vector<SampleRecord> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(records_.at(r));
    return SampleManifest(std::move(out));
  }

  friend bool operator==(const SampleManifest& a, const SampleManifest& b) {
    return a.records_ == b.records_;
  }

 private:
  std::vector<SampleRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Alignment

// Predictions and manifest restricted to their common sample ids; both hold
// the same ids in the same (manifest) order.
struct AlignedView {
  PredictionMatrix predictions;
  SampleManifest manifest;
  std::size_t dropped_prediction_only = 0;
  std::size_t dropped_manifest_only = 0;
};

inline AlignedView Align(const PredictionMatrix& preds,
                         const SampleManifest& manifest) {
  std::vector<std::size_t> columns;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (auto c = preds.sample_index(manifest[i].sample_id)) {
      columns.push_back(*c);
      rows.push_back(i);
    }
  }
  if (columns.empty())
    throw Error(ErrorKind::kAlignment,
                "predictions and manifest share no sample ids");
  AlignedView view{preds.SelectSamples(columns), manifest.Select(rows), 0, 0};
  view.dropped_prediction_only = preds.n_samples() - columns.size();
  view.dropped_manifest_only = manifest.size() - rows.size();
  return view;
}

inline AlignedView Align(const AlignedView& view,
                         const SampleManifest& manifest) {
  AlignedView again = Align(view.predictions, manifest);
  again.dropped_prediction_only += view.dropped_prediction_only;
  again.dropped_manifest_only = view.dropped_manifest_only;
  return again;
}

// ---------------------------------------------------------------------------
// Rashomon selection

enum class EpsilonKind { kFixed, kCpBound };

struct RashomonSelection {
  std::string reference_model_id;
  EpsilonKind policy = EpsilonKind::kFixed;
  std::optional<double> confidence;  // set for kCpBound
  double epsilon = 0.0;
  double reference_error = 0.0;
  // Set only when the reference has zero error and membership falls back
  // to Err(h) <= absolute_slack.
  std::optional<double> absolute_slack;
  std::string error_split = "train";
  std::map<std::string, double> per_model_train_error;
  std::vector<std::string> included_model_ids;
  std::vector<std::string> excluded_model_ids;

  // Largest error a model may have and still be a member.
  double error_bound() const {
    if (absolute_slack) return *absolute_slack;
    return (1.0 + epsilon) * reference_error;
  }

  friend bool operator==(const RashomonSelection&,
                         const RashomonSelection&) = default;
};

// ---------------------------------------------------------------------------
// Report values

enum class CiMethod { kSem, kBootstrapPercentile, kNone };

inline const char* CiMethodName(CiMethod m) {
  switch (m) {
    case CiMethod::kSem: return "sem";
    case CiMethod::kBootstrapPercentile: return "bootstrap_percentile";
    case CiMethod::kNone: return "none";
  }
  return "none";
}

inline std::optional<CiMethod> ParseCiMethod(std::string_view s) {
  if (s == "sem") return CiMethod::kSem;
  if (s == "bootstrap_percentile") return CiMethod::kBootstrapPercentile;
  if (s == "none") return CiMethod::kNone;
  return std::nullopt;
}

struct MetricValue {
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  CiMethod ci_method = CiMethod::kNone;
  std::size_t n_effective = 0;

  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

inline constexpr std::string_view kArbitrariness = "arbitrariness";
inline constexpr std::string_view kAvgPairwiseDisagreement =
    "avg_pairwise_disagreement";
inline constexpr std::string_view kAmbiguity = "ambiguity";
inline constexpr std::string_view kMinorityFraction = "minority_fraction";

// Fixed metric registry, in canonical emission order.
inline constexpr std::array<std::string_view, 4> kMetricNames = {
    kArbitrariness, kAvgPairwiseDisagreement, kAmbiguity, kMinorityFraction};

inline bool IsKnownMetric(std::string_view name) {
  for (auto m : kMetricNames) {
    if (m == name) return true;
  }
  return false;
}

using MetricBlock = std::map<std::string, MetricValue>;
using Breakdown = std::map<std::string, MetricBlock>;

struct Provenance {
  std::string schema_version = "1.0.0";
  std::string tool_version = std::string(kToolVersion);
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::string> settings;
  std::size_t n_models = 0;
  std::size_t single_annotator_samples = 0;
  std::size_t samples_without_annotators = 0;
  std::vector<std::string> warnings;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct AuditReport {
  RashomonSelection selection;
  MetricBlock overall;
  Breakdown per_dataset;
  Breakdown per_group;
  Breakdown per_stratum;
  Provenance provenance;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

}  // namespace multiplicity

#endif  // MULTIPLICITY_CORE_HPP_
