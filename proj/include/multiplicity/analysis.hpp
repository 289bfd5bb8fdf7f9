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

// Disaggregation of multiplicity metrics (dataset, target group, annotator
// agreement, split) and their confidence intervals, assembled into an
// AuditReport.

#ifndef MULTIPLICITY_ANALYSIS_HPP_
#define MULTIPLICITY_ANALYSIS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "multiplicity/core.hpp"
#include "multiplicity/metrics.hpp"
#include "multiplicity/random.hpp"

namespace multiplicity {

// ---------------------------------------------------------------------------
// Stratification

enum class StratificationKind {
  kByDataset,
  kByGroup,
  kByAnnotatorAgreement,
  kBySplit,
};

inline constexpr std::string_view kClear = "clear";
inline constexpr std::string_view kUnclear = "unclear";

// Stratum labels per sample. by_group may give a sample zero or several
// labels; every other kind gives exactly one.
struct Stratification {
  StratificationKind kind = StratificationKind::kByDataset;
  std::vector<std::string> sample_ids;
  std::vector<std::vector<std::string>> labels;
  std::size_t excluded_samples = 0;   // left out (no annotator labels)
  std::size_t single_annotator = 0;   // "clear" by vacuous unanimity

  // Sorted distinct stratum labels.
  std::vector<std::string> strata() const {
    std::set<std::string> s;
    for (const auto& l : labels) s.insert(l.begin(), l.end());
    return {s.begin(), s.end()};
  }

  // Positions (into sample_ids) of the samples carrying `label`.
  std::vector<std::size_t> members(std::string_view label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (const auto& l : labels[i]) {
        if (l == label) {
          out.push_back(i);
          break;
        }
      }
    }
    return out;
  }
};

inline Stratification StratifyByDataset(const SampleManifest& manifest) {
  Stratification s{StratificationKind::kByDataset, {}, {}, 0, 0};
  for (const auto& r : manifest.records()) {
    s.sample_ids.push_back(r.sample_id);
    s.labels.push_back({r.dataset_tag});
  }
  return s;
}

inline Stratification StratifyBySplit(const SampleManifest& manifest) {
  Stratification s{StratificationKind::kBySplit, {}, {}, 0, 0};
  for (const auto& r : manifest.records()) {
    s.sample_ids.push_back(r.sample_id);
    s.labels.push_back({SplitName(r.split)});
  }
  return s;
}

inline Stratification StratifyByGroup(const SampleManifest& manifest) {
  Stratification s{StratificationKind::kByGroup, {}, {}, 0, 0};
  for (const auto& r : manifest.records()) {
    s.sample_ids.push_back(r.sample_id);
    s.labels.emplace_back(r.group_tags.begin(), r.group_tags.end());
  }
  return s;
}

// "unclear" iff the annotators gave both labels, "clear" otherwise. Samples
// without annotator labels are left out and counted.
inline Stratification StratifyByAnnotatorAgreement(
    const SampleManifest& manifest) {
  Stratification s{StratificationKind::kByAnnotatorAgreement, {}, {}, 0, 0};
  for (const auto& r : manifest.records()) {
    if (r.annotator_labels.empty()) {
      ++s.excluded_samples;
      continue;
    }
    const bool has_one = std::find(r.annotator_labels.begin(),
                                   r.annotator_labels.end(),
                                   1) != r.annotator_labels.end();
    const bool has_zero = std::find(r.annotator_labels.begin(),
                                    r.annotator_labels.end(),
                                    0) != r.annotator_labels.end();
    if (r.annotator_labels.size() == 1) ++s.single_annotator;
    s.sample_ids.push_back(r.sample_id);
    s.labels.push_back({std::string(has_one && has_zero ? kUnclear : kClear)});
  }
  if (s.sample_ids.empty())
    throw Error(ErrorKind::kConfiguration,
                "no sample carries annotator labels; cannot stratify by agreement");
  return s;
}

// ---------------------------------------------------------------------------
// Confidence intervals

enum class ResamplingMethod { kSemNormal, kBootstrapPercentile };

struct ResamplingPlan {
  ResamplingMethod method = ResamplingMethod::kSemNormal;
  std::size_t replicates = 1000;
  std::uint64_t seed = kDefaultSeed;
  double level = 0.95;
  // Worker threads for bootstrap replicates; results do not depend on it.
  std::size_t threads = 1;
};

// Minimum replicate count for intervals that go into a report.
inline constexpr std::size_t kMinReportedReplicates = 100;
// Strata smaller than this get ci_method = none.
inline constexpr std::size_t kMinStratumSize = 2;

// Standard normal quantile: Acklam's rational approximation refined with
// one Halley step against erfc.
inline double NormalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorKind::kDomain, "normal quantile needs p in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  double x;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - kLow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

namespace detail {

inline void CheckLevel(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw Error(ErrorKind::kConfiguration, "interval level must lie in (0, 1)");
}

inline double Mean(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

// Linear interpolation between order statistics at position q * (n - 1).
inline double SortedQuantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace detail

// mean +/- z * s / sqrt(n), s the sample standard deviation, clipped to
// [0, 1].
inline Interval CiSem(std::span<const double> values, double level = 0.95) {
  detail::CheckLevel(level);
  if (values.size() < 2)
    throw Error(ErrorKind::kDomain, "standard error needs at least 2 values");
  const double n = static_cast<double>(values.size());
  const double mean = detail::Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  const double half = NormalQuantile(0.5 + level / 2.0) * se;
  return {std::max(0.0, mean - half), std::min(1.0, mean + half)};
}

// Replicate means of a percentile bootstrap. Replicate r draws from its own
// stream StreamEngine(seed, r), so the output is the same for any thread
// count.
inline std::vector<double> BootstrapMeans(std::span<const double> values,
                                          const ResamplingPlan& plan) {
  if (plan.replicates < 1)
    throw Error(ErrorKind::kConfiguration, "bootstrap needs at least 1 replicate");
  if (values.empty())
    throw Error(ErrorKind::kDomain, "bootstrap of an empty sample");
  std::vector<double> means(plan.replicates);
  const std::uint64_t n = values.size();
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      RandomEngine rng = StreamEngine(plan.seed, r);
      double sum = 0.0;
      for (std::uint64_t i = 0; i < n; ++i) sum += values[UniformIndex(rng, n)];
      means[r] = sum / static_cast<double>(n);
    }
  };
  const std::size_t threads =
      std::max<std::size_t>(1, std::min(plan.threads, plan.replicates));
  if (threads == 1) {
    run(0, plan.replicates);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (plan.replicates + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(plan.replicates, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run, begin, end);
    }
  }
  return means;
}

inline Interval CiBootstrap(std::span<const double> values,
                            const ResamplingPlan& plan) {
  detail::CheckLevel(plan.level);
  if (values.size() < 2)
    throw Error(ErrorKind::kDomain, "bootstrap interval needs at least 2 values");
  std::vector<double> means = BootstrapMeans(values, plan);
  std::sort(means.begin(), means.end());
  return {detail::SortedQuantile(means, (1.0 - plan.level) / 2.0),
          detail::SortedQuantile(means, (1.0 + plan.level) / 2.0)};
}

// ---------------------------------------------------------------------------
// Metric blocks

namespace detail {

inline MetricValue WithInterval(double point, std::span<const double> values,
                                const ResamplingPlan& plan,
                                std::vector<std::string>* warnings,
                                const std::string& where) {
  MetricValue v{point, point, point, CiMethod::kNone, values.size()};
  if (values.size() < kMinStratumSize) {
    if (warnings)
      warnings->push_back(where + ": n=" + std::to_string(values.size()) +
                          " is too small for an interval");
    return v;
  }
  Interval ci;
  if (plan.method == ResamplingMethod::kSemNormal) {
    ci = CiSem(values, plan.level);
    v.ci_method = CiMethod::kSem;
  } else {
    ci = CiBootstrap(values, plan);
    v.ci_method = CiMethod::kBootstrapPercentile;
  }
  // Percentile intervals need not contain the point; widen to keep
  // ci_low <= point <= ci_high.
  v.ci_low = std::min(ci.low, point);
  v.ci_high = std::max(ci.high, point);
  return v;
}

}  // namespace detail

// All registry metrics over `subset`. minority_fraction is omitted when it
// is undefined (no conflicted samples, or the balanced split is exceeded).
inline MetricBlock ComputeMetricBlock(const PerSampleMultiplicity& ps,
                                      std::span<const std::size_t> subset,
                                      const ResamplingPlan& plan,
                                      std::vector<std::string>* warnings = nullptr,
                                      const std::string& where = "overall") {
  detail::RequireNonEmpty(subset);
  std::vector<double> arbitrary, pd, ambiguous;
  arbitrary.reserve(subset.size());
  pd.reserve(subset.size());
  ambiguous.reserve(subset.size());
  for (auto i : subset) {
    const auto& row = ps.rows.at(i);
    arbitrary.push_back(row.arbitrary ? 1.0 : 0.0);
    pd.push_back(row.pd);
    ambiguous.push_back(row.disagrees_with_reference ? 1.0 : 0.0);
  }
  const double a = Arbitrariness(ps, subset);
  const double p = AvgPairwiseDisagreement(ps, subset);
  MetricBlock block;
  block[std::string(kArbitrariness)] =
      detail::WithInterval(a, arbitrary, plan, warnings, where);
  block[std::string(kAvgPairwiseDisagreement)] =
      detail::WithInterval(p, pd, plan, nullptr, where);
  block[std::string(kAmbiguity)] =
      detail::WithInterval(Ambiguity(ps, subset), ambiguous, plan, nullptr, where);
  if (a > 0.0 && p / a <= 0.5 + kMinorityRatioSlack) {
    const double q = MinorityFraction(p, a);
    block[std::string(kMinorityFraction)] =
        MetricValue{q, q, q, CiMethod::kNone, subset.size()};
  } else if (a > 0.0 && warnings) {
    warnings->push_back(where + ": minority fraction undefined (balanced-split exceeded)");
  }
  return block;
}

struct DisaggregationResult {
  Breakdown strata;
  std::vector<std::string> warnings;
};

// Metrics for each stratum label. Samples of the stratification are matched
// to `ps` by id.
inline DisaggregationResult Disaggregate(const PerSampleMultiplicity& ps,
                                         const Stratification& strat,
                                         const ResamplingPlan& plan) {
  std::unordered_map<std::string, std::size_t> position;
  position.reserve(ps.sample_ids.size());
  for (std::size_t i = 0; i < ps.sample_ids.size(); ++i)
    position.emplace(ps.sample_ids[i], i);
  std::vector<std::size_t> to_ps(strat.sample_ids.size());
  for (std::size_t i = 0; i < strat.sample_ids.size(); ++i) {
    auto it = position.find(strat.sample_ids[i]);
    if (it == position.end())
      throw Error(ErrorKind::kAlignment, "stratification references unknown sample '" +
                                             strat.sample_ids[i] + "'");
    to_ps[i] = it->second;
  }
  DisaggregationResult out;
  for (const auto& label : strat.strata()) {
    std::vector<std::size_t> subset;
    for (auto i : strat.members(label)) subset.push_back(to_ps[i]);
    out.strata[label] =
        ComputeMetricBlock(ps, subset, plan, &out.warnings, label);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report assembly

// `manifest` must list the same samples as `ps`, in the same order. The
// overall block is computed over the union of all samples, never as a mean
// of per-dataset values.
inline AuditReport AssembleReport(const RashomonSelection& selection,
                                  const PerSampleMultiplicity& ps,
                                  const SampleManifest& manifest,
                                  const ResamplingPlan& plan) {
  if (manifest.size() != ps.size())
    throw Error(ErrorKind::kAlignment, "manifest and per-sample metrics differ in length");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (manifest[i].sample_id != ps.sample_ids[i])
      throw Error(ErrorKind::kAlignment, "manifest and per-sample metrics are not aligned");
  }
  if (plan.method == ResamplingMethod::kBootstrapPercentile &&
      plan.replicates < kMinReportedReplicates)
    throw Error(ErrorKind::kConfiguration,
                "reported bootstrap intervals need at least " +
                    std::to_string(kMinReportedReplicates) + " replicates");

  AuditReport report;
  report.selection = selection;
  report.provenance.seed = plan.seed;
  report.provenance.n_models = ps.n_models;
  auto& warnings = report.provenance.warnings;
  if (ps.n_models < 2)
    warnings.push_back("Rashomon set has a single model; disagreement is 0 by convention");

  report.overall =
      ComputeMetricBlock(ps, detail::AllIndices(ps.size()), plan, &warnings);

  auto by_dataset = Disaggregate(ps, StratifyByDataset(manifest), plan);
  report.per_dataset = std::move(by_dataset.strata);
  warnings.insert(warnings.end(), by_dataset.warnings.begin(), by_dataset.warnings.end());

  auto by_group = Disaggregate(ps, StratifyByGroup(manifest), plan);
  report.per_group = std::move(by_group.strata);
  warnings.insert(warnings.end(), by_group.warnings.begin(), by_group.warnings.end());

  const bool any_annotated =
      std::any_of(manifest.records().begin(), manifest.records().end(),
                  [](const SampleRecord& r) { return !r.annotator_labels.empty(); });
  if (any_annotated) {
    const auto strat = StratifyByAnnotatorAgreement(manifest);
    report.provenance.single_annotator_samples = strat.single_annotator;
    report.provenance.samples_without_annotators = strat.excluded_samples;
    auto by_stratum = Disaggregate(ps, strat, plan);
    report.per_stratum = std::move(by_stratum.strata);
    warnings.insert(warnings.end(), by_stratum.warnings.begin(),
                    by_stratum.warnings.end());
  } else {
    report.provenance.samples_without_annotators = manifest.size();
  }
  return report;
}

}  // namespace multiplicity

#endif  // MULTIPLICITY_ANALYSIS_HPP_
