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

// 0-1 error, binomial error thresholds and empirical Rashomon filtering.

#ifndef MULTIPLICITY_RASHOMON_HPP_
#define MULTIPLICITY_RASHOMON_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "multiplicity/core.hpp"

namespace multiplicity {

// ---------------------------------------------------------------------------
// Errors

struct ErrorEntry {
  std::string model_id;
  double error = 0.0;  // error_count / sample_count, a single division
  std::size_t error_count = 0;
  std::size_t sample_count = 0;

  friend bool operator==(const ErrorEntry&, const ErrorEntry&) = default;
};

struct ErrorVector {
  std::string split = "train";
  std::vector<ErrorEntry> entries;

  const ErrorEntry* find(std::string_view model_id) const {
    for (const auto& e : entries) {
      if (e.model_id == model_id) return &e;
    }
    return nullptr;
  }
};

// Selects the split errors are measured on; nullopt means every sample.
using SplitSelector = std::optional<Split>;

inline const char* SplitSelectorName(const SplitSelector& s) {
  return s ? SplitName(*s) : "all";
}

// `row` must be aligned with `manifest` (same sample order).
inline ErrorEntry ComputeError(std::string model_id,
                               std::span<const std::uint8_t> row,
                               const SampleManifest& manifest,
                               SplitSelector split) {
  if (row.size() != manifest.size())
    throw Error(ErrorKind::kAlignment,
                "prediction row and manifest have different lengths");
  std::size_t k = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const auto& rec = manifest[i];
    if (split && rec.split != *split) continue;
    ++n;
    if (row[i] != rec.gold_label) ++k;
  }
  if (n == 0)
    throw Error(ErrorKind::kConfiguration,
                std::string("split '") + SplitSelectorName(split) +
                    "' has no samples");
  return {std::move(model_id), static_cast<double>(k) / static_cast<double>(n),
          k, n};
}

inline ErrorVector ComputeErrors(const AlignedView& view, SplitSelector split) {
  ErrorVector out;
  out.split = SplitSelectorName(split);
  const auto& preds = view.predictions;
  out.entries.reserve(preds.n_models());
  for (std::size_t m = 0; m < preds.n_models(); ++m) {
    out.entries.push_back(
        ComputeError(preds.model_ids()[m], preds.row(m), view.manifest, split));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binomial CDF

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIterations = 20000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorKind::kInternal, "incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b) for a, b > 0.
inline double RegularizedIncompleteBeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::BetaContinuedFraction(a, b, x) / a;
  return 1.0 - front * detail::BetaContinuedFraction(b, a, 1.0 - x) / b;
}

// P(X <= k) for X ~ Binomial(n, p).
inline double BinomialCdf(std::size_t k, std::size_t n, double p) {
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  return RegularizedIncompleteBeta(static_cast<double>(n - k),
                                   static_cast<double>(k) + 1.0, 1.0 - p);
}

// ---------------------------------------------------------------------------
// Clopper-Pearson error threshold

// Orientation of the binomial bound. The threshold for confidence c is the
// smallest p with P(X <= k; n, p) <= c * kCpTailFraction, i.e. the upper end
// of the two-sided Clopper-Pearson interval at level 1 - c. Higher
// confidence therefore hugs the observed error and admits fewer models.
inline constexpr double kCpTailFraction = 0.5;

inline constexpr double kCpBisectionTolerance = 1e-9;

inline double CpErrorThreshold(std::size_t k, std::size_t n,
                               double confidence) {
  if (n == 0) throw Error(ErrorKind::kConfiguration, "binomial bound needs n >= 1");
  if (k > n) throw Error(ErrorKind::kConfiguration, "error count exceeds sample count");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw Error(ErrorKind::kConfiguration, "confidence must lie in (0, 1)");
  if (k == n) return 1.0;
  const double tail = confidence * kCpTailFraction;
  // CDF(k; n, k/n) >= 1/2 > tail, and CDF(k; n, 1) = 0 < tail.
  double lo = static_cast<double>(k) / static_cast<double>(n);
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    if (hi - lo <= kCpBisectionTolerance) return hi;
    const double mid = 0.5 * (lo + hi);
    if (BinomialCdf(k, n, mid) <= tail) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  throw Error(ErrorKind::kInternal, "binomial bound bisection did not converge");
}

// ---------------------------------------------------------------------------
// Epsilon policy

struct EpsilonPolicy {
  EpsilonKind kind = EpsilonKind::kFixed;
  std::optional<double> fixed_epsilon;
  std::optional<double> confidence;
  // Absolute error slack used when the reference error is exactly zero.
  std::optional<double> zero_error_fallback;

  static EpsilonPolicy Fixed(double epsilon,
                             std::optional<double> fallback = std::nullopt) {
    return {EpsilonKind::kFixed, epsilon, std::nullopt, fallback};
  }
  static EpsilonPolicy CpBound(double confidence,
                               std::optional<double> fallback = std::nullopt) {
    return {EpsilonKind::kCpBound, std::nullopt, confidence, fallback};
  }

  void Validate() const {
    if (kind == EpsilonKind::kFixed) {
      if (!fixed_epsilon || confidence)
        throw Error(ErrorKind::kConfiguration,
                    "fixed epsilon policy needs exactly fixed_epsilon");
      if (!(*fixed_epsilon >= 0.0) || !std::isfinite(*fixed_epsilon))
        throw Error(ErrorKind::kConfiguration, "epsilon must be >= 0");
    } else {
      if (!confidence || fixed_epsilon)
        throw Error(ErrorKind::kConfiguration,
                    "cp_bound policy needs exactly a confidence");
      if (!(*confidence > 0.0 && *confidence < 1.0))
        throw Error(ErrorKind::kConfiguration, "confidence must lie in (0, 1)");
    }
    if (zero_error_fallback && !(*zero_error_fallback >= 0.0))
      throw Error(ErrorKind::kConfiguration, "zero-error slack must be >= 0");
  }
};

struct EpsilonDecision {
  double epsilon = 0.0;
  std::optional<double> absolute_slack;  // zero-reference-error fallback
};

inline EpsilonDecision SelectEpsilon(const ErrorEntry& reference,
                                     const EpsilonPolicy& policy) {
  policy.Validate();
  if (reference.error_count == 0) {
    // (1 + eps) * 0 admits only perfect models; switch to absolute slack.
    if (!policy.zero_error_fallback)
      throw Error(ErrorKind::kConfiguration,
                  "reference error is 0 and no zero-error slack is configured");
    return {policy.fixed_epsilon.value_or(0.0), policy.zero_error_fallback};
  }
  if (policy.kind == EpsilonKind::kFixed) return {*policy.fixed_epsilon, {}};
  const double threshold = CpErrorThreshold(
      reference.error_count, reference.sample_count, *policy.confidence);
  return {std::max(0.0, threshold / reference.error - 1.0), {}};
}

// Members are models with Err(h) <= (1 + eps) * Err(ref); equality counts as
// inside. The reference is always a member. Input order is preserved.
inline RashomonSelection FilterRashomon(const ErrorVector& errors,
                                        const std::string& reference_model_id,
                                        const EpsilonPolicy& policy) {
  const ErrorEntry* ref = errors.find(reference_model_id);
  if (!ref)
    throw Error(ErrorKind::kConfiguration,
                "reference model '" + reference_model_id + "' not found");
  const EpsilonDecision decision = SelectEpsilon(*ref, policy);

  RashomonSelection sel;
  sel.reference_model_id = reference_model_id;
  sel.policy = policy.kind;
  sel.confidence = policy.confidence;
  sel.epsilon = decision.epsilon;
  sel.absolute_slack = decision.absolute_slack;
  sel.reference_error = ref->error;
  sel.error_split = errors.split;
  const double bound = sel.error_bound();
  for (const auto& e : errors.entries) {
    sel.per_model_train_error[e.model_id] = e.error;
    if (e.model_id == reference_model_id || e.error <= bound) {
      sel.included_model_ids.push_back(e.model_id);
    } else {
      sel.excluded_model_ids.push_back(e.model_id);
    }
  }
  return sel;
}

}  // namespace multiplicity

#endif  // MULTIPLICITY_RASHOMON_HPP_
