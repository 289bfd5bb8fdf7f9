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

// Multiplicity kernel: per-sample vote counts and pairwise disagreement, and
// the subset aggregates built on them (arbitrariness, average pairwise
// disagreement, ambiguity), the minority-share estimate and majority voting.
//
// Every aggregate is formed from exact integer counts followed by one
// floating-point division, so results do not depend on evaluation order.

#ifndef MULTIPLICITY_METRICS_HPP_
#define MULTIPLICITY_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "multiplicity/core.hpp"

namespace multiplicity {

struct SampleMultiplicity {
  std::size_t ones = 0;  // models voting 1
  double pd = 0.0;
  bool arbitrary = false;
  bool disagrees_with_reference = false;

  friend bool operator==(const SampleMultiplicity&,
                         const SampleMultiplicity&) = default;
};

struct PerSampleMultiplicity {
  std::vector<std::string> sample_ids;
  std::vector<SampleMultiplicity> rows;
  std::size_t n_models = 0;

  std::size_t size() const noexcept { return rows.size(); }
};

// Ordered-pair disagreement 2a(M-a) / (M(M-1)); zero for a single model.
inline double PairwiseDisagreement(std::size_t ones, std::size_t n_models) {
  if (n_models < 2) return 0.0;
  const std::uint64_t m = n_models;
  const std::uint64_t a = ones;
  return static_cast<double>(2 * a * (m - a)) /
         static_cast<double>(m * (m - 1));
}

// `preds` holds only the Rashomon members. With include_reference = false
// the reference row still anchors ambiguity but does not vote.
inline PerSampleMultiplicity ComputePerSample(const PredictionMatrix& preds,
                                              const std::string& reference_id,
                                              bool include_reference = true) {
  auto ref = preds.model_index(reference_id);
  if (!ref)
    throw Error(ErrorKind::kConfiguration, "reference model '" + reference_id +
                                               "' is not among included models");
  std::vector<std::size_t> voters;
  for (std::size_t m = 0; m < preds.n_models(); ++m) {
    if (include_reference || m != *ref) voters.push_back(m);
  }
  PerSampleMultiplicity out;
  out.sample_ids = preds.sample_ids();
  out.n_models = voters.size();
  out.rows.resize(preds.n_samples());
  const auto ref_row = preds.row(*ref);
  for (auto m : voters) {
    const auto r = preds.row(m);
    for (std::size_t s = 0; s < r.size(); ++s) {
      out.rows[s].ones += r[s];
      if (r[s] != ref_row[s]) out.rows[s].disagrees_with_reference = true;
    }
  }
  for (auto& row : out.rows) {
    row.pd = PairwiseDisagreement(row.ones, out.n_models);
    row.arbitrary = row.ones > 0 && row.ones < out.n_models;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subset aggregates

namespace detail {

inline std::vector<std::size_t> AllIndices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

inline void RequireNonEmpty(std::span<const std::size_t> subset) {
  if (subset.empty())
    throw Error(ErrorKind::kDomain, "metric requested on an empty subset");
}

}  // namespace detail

inline double Arbitrariness(const PerSampleMultiplicity& ps,
                            std::span<const std::size_t> subset) {
  detail::RequireNonEmpty(subset);
  std::size_t hits = 0;
  for (auto i : subset) hits += ps.rows.at(i).arbitrary ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(subset.size());
}

inline double AvgPairwiseDisagreement(const PerSampleMultiplicity& ps,
                                      std::span<const std::size_t> subset) {
  detail::RequireNonEmpty(subset);
  if (ps.n_models < 2) return 0.0;
  const std::uint64_t m = ps.n_models;
  std::uint64_t numerator = 0;
  for (auto i : subset) {
    const std::uint64_t a = ps.rows.at(i).ones;
    numerator += 2 * a * (m - a);
  }
  return static_cast<double>(numerator) /
         (static_cast<double>(m * (m - 1)) * static_cast<double>(subset.size()));
}

inline double Ambiguity(const PerSampleMultiplicity& ps,
                        std::span<const std::size_t> subset) {
  detail::RequireNonEmpty(subset);
  std::size_t hits = 0;
  for (auto i : subset) hits += ps.rows.at(i).disagrees_with_reference ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(subset.size());
}

inline double Arbitrariness(const PerSampleMultiplicity& ps) {
  return Arbitrariness(ps, detail::AllIndices(ps.size()));
}
inline double AvgPairwiseDisagreement(const PerSampleMultiplicity& ps) {
  return AvgPairwiseDisagreement(ps, detail::AllIndices(ps.size()));
}
inline double Ambiguity(const PerSampleMultiplicity& ps) {
  return Ambiguity(ps, detail::AllIndices(ps.size()));
}

// ---------------------------------------------------------------------------
// Minority share

// Ratio slack absorbed at the 2q(1-q) = 1/2 boundary.
inline constexpr double kMinorityRatioSlack = 1e-12;

// Solves 2q(1 - q) = avg_pd / arbitrariness for the root q <= 1/2: the
// average share of models on the losing side of a conflicted sample,
// assuming that share is the same for every conflicted sample.
inline double MinorityFraction(double avg_pd, double arbitrariness) {
  if (!(arbitrariness > 0.0))
    throw Error(ErrorKind::kDomain,
                "minority fraction needs positive arbitrariness");
  if (avg_pd < 0.0)
    throw Error(ErrorKind::kDomain, "negative pairwise disagreement");
  double ratio = avg_pd / arbitrariness;
  if (ratio > 0.5 + kMinorityRatioSlack)
    throw Error(ErrorKind::kDomain,
                "balanced-split exceeded: avg_pd / arbitrariness > 0.5");
  ratio = std::min(ratio, 0.5);
  return 0.5 * (1.0 - std::sqrt(1.0 - 2.0 * ratio));
}

// ---------------------------------------------------------------------------
// Majority vote

enum class Vote : std::uint8_t { kNotToxic = 0, kToxic = 1, kAbstain = 2 };

// Tolerance for counting a vote share as sitting on a margin boundary.
inline constexpr double kVoteBoundaryTolerance = 1e-12;

// Vote share s = a/M: 1 when s >= 0.5 + margin, 0 when s <= 0.5 - margin,
// abstain in between. Boundary shares land on the non-abstain side; when
// both sides qualify (margin 0, s = 0.5) the result is `tie_label`.
inline std::vector<Vote> MajorityVote(const PredictionMatrix& preds,
                                      double abstain_margin,
                                      Vote tie_label = Vote::kNotToxic) {
  if (!(abstain_margin >= 0.0 && abstain_margin <= 0.5))
    throw Error(ErrorKind::kConfiguration, "abstain margin must lie in [0, 0.5]");
  if (tie_label == Vote::kAbstain)
    throw Error(ErrorKind::kConfiguration, "tie label must be 0 or 1");
  const std::size_t m = preds.n_models();
  std::vector<std::size_t> ones(preds.n_samples(), 0);
  for (std::size_t r = 0; r < m; ++r) {
    const auto row = preds.row(r);
    for (std::size_t s = 0; s < row.size(); ++s) ones[s] += row[s];
  }
  std::vector<Vote> out;
  out.reserve(ones.size());
  for (auto a : ones) {
    const double share = static_cast<double>(a) / static_cast<double>(m);
    const bool toxic = share >= 0.5 + abstain_margin - kVoteBoundaryTolerance;
    const bool clean = share <= 0.5 - abstain_margin + kVoteBoundaryTolerance;
    if (toxic && clean) {
      out.push_back(tie_label);
    } else if (toxic) {
      out.push_back(Vote::kToxic);
    } else if (clean) {
      out.push_back(Vote::kNotToxic);
    } else {
      out.push_back(Vote::kAbstain);
    }
  }
  return out;
}

}  // namespace multiplicity

#endif  // MULTIPLICITY_METRICS_HPP_
