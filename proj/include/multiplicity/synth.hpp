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

// Synthetic ensembles with known multiplicity.
//
// Each sample belongs to one group. With the group's conflict rate the
// sample is conflicted and exactly round(q * M) models, drawn afresh per
// sample, flip away from the consensus label; otherwise every model agrees.
// The consensus differs from gold with probability base_error. Optional
// "bad" models copy the consensus but flip extra cells so their error is
// inflated past any sensible Rashomon bound. GroundTruth holds the realized
// counts, so audits of generated data can be checked exactly.

#ifndef MULTIPLICITY_SYNTH_HPP_
#define MULTIPLICITY_SYNTH_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "multiplicity/core.hpp"
#include "multiplicity/ingest.hpp"
#include "multiplicity/random.hpp"

namespace multiplicity {

struct GroupSpec {
  std::string tag;
  double weight = 1.0;
  double conflict_rate = 0.0;
  double minority_share = 0.5;
};

struct DatasetSpec {
  std::string tag;
  double weight = 1.0;
};

struct AnnotatorSpec {
  std::size_t n_annotators = 0;
  double disagreement_rate = 0.0;
};

struct SyntheticSpec {
  std::size_t n_models = 10;
  std::size_t n_samples = 1000;
  std::uint64_t seed = kDefaultSeed;
  double base_error = 0.1;
  double positive_rate = 0.5;
  std::vector<GroupSpec> groups = {{"all", 1.0, 0.3, 0.2}};
  std::vector<DatasetSpec> datasets = {{"synthetic", 1.0}};
  AnnotatorSpec annotators;
  std::size_t excluded_models = 0;
  double error_inflation = 3.0;
  // train / val / test weights.
  double split_weights[3] = {0.7, 0.1, 0.2};
};

struct TruthBlock {
  std::size_t n = 0;
  std::size_t conflicted = 0;
  double arbitrariness = 0.0;
  double avg_pairwise_disagreement = 0.0;
  friend bool operator==(const TruthBlock&, const TruthBlock&) = default;
};

struct GroundTruth {
  std::string reference_model_id;
  std::vector<std::string> included_model_ids;  // the well-behaved models
  std::vector<std::string> excluded_model_ids;  // deliberately inflated
  TruthBlock overall;
  std::map<std::string, TruthBlock> per_group;
  std::map<std::string, TruthBlock> per_dataset;
  std::vector<std::string> unclear_sample_ids;
  std::size_t annotated_samples = 0;
  std::vector<std::size_t> flips;  // per sample, models flipped from consensus
};

struct SyntheticData {
  PredictionMatrix predictions;
  SampleManifest manifest;
  GroundTruth truth;
};

namespace detail {

inline constexpr double kWeightTolerance = 1e-9;

template <class T>
void CheckWeights(const std::vector<T>& items, const char* what) {
  if (items.empty())
    throw Error(ErrorKind::kConfiguration, std::string("synthetic spec needs at least one ") + what);
  double total = 0.0;
  std::set<std::string> tags;
  for (const auto& it : items) {
    if (!(it.weight >= 0.0))
      throw Error(ErrorKind::kConfiguration, std::string(what) + " weight must be >= 0");
    if (it.tag.empty() || !tags.insert(it.tag).second)
      throw Error(ErrorKind::kConfiguration, std::string(what) + " tags must be unique and non-empty");
    total += it.weight;
  }
  if (std::fabs(total - 1.0) > kWeightTolerance)
    throw Error(ErrorKind::kConfiguration, std::string(what) + " weights must sum to 1");
}

inline bool InUnit(double v) { return v >= 0.0 && v <= 1.0; }

// Index drawn with probability proportional to weights[i].
inline std::size_t DrawWeighted(RandomEngine& rng, std::span<const double> weights) {
  const double u = Uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  return weights.size() - 1;
}

inline std::string PaddedId(const char* prefix, std::size_t i, std::size_t count) {
  const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::string digits = std::to_string(i);
  return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

inline std::size_t FlipCount(const GroupSpec& g, std::size_t n_models) {
  return static_cast<std::size_t>(std::llround(g.minority_share * static_cast<double>(n_models)));
}

}  // namespace detail

inline void ValidateSpec(const SyntheticSpec& spec) {
  if (spec.n_models < 1) throw Error(ErrorKind::kConfiguration, "n_models must be >= 1");
  if (spec.n_samples < 1) throw Error(ErrorKind::kConfiguration, "n_samples must be >= 1");
  if (!detail::InUnit(spec.base_error) || !detail::InUnit(spec.positive_rate))
    throw Error(ErrorKind::kConfiguration, "rates must lie in [0, 1]");
  detail::CheckWeights(spec.groups, "group");
  detail::CheckWeights(spec.datasets, "dataset");
  for (const auto& g : spec.groups) {
    if (!detail::InUnit(g.conflict_rate))
      throw Error(ErrorKind::kConfiguration, "conflict rate of '" + g.tag + "' must lie in [0, 1]");
    if (!(g.minority_share > 0.0 && g.minority_share <= 0.5))
      throw Error(ErrorKind::kConfiguration, "minority share of '" + g.tag + "' must lie in (0, 0.5]");
    if (g.conflict_rate > 0.0 && detail::FlipCount(g, spec.n_models) == 0)
      throw Error(ErrorKind::kConfiguration, "group '" + g.tag +
                                                 "': round(q * M) = 0, conflicts are impossible");
  }
  const double split_total = spec.split_weights[0] + spec.split_weights[1] + spec.split_weights[2];
  for (double w : spec.split_weights) {
    if (!(w >= 0.0)) throw Error(ErrorKind::kConfiguration, "split weights must be >= 0");
  }
  if (std::fabs(split_total - 1.0) > detail::kWeightTolerance)
    throw Error(ErrorKind::kConfiguration, "split weights must sum to 1");
  if (!detail::InUnit(spec.annotators.disagreement_rate))
    throw Error(ErrorKind::kConfiguration, "annotator disagreement rate must lie in [0, 1]");
  if (spec.annotators.disagreement_rate > 0.0 && spec.annotators.n_annotators < 2)
    throw Error(ErrorKind::kConfiguration, "annotator disagreement needs at least 2 annotators");
  if (spec.excluded_models > 0 && !(spec.error_inflation > 1.0))
    throw Error(ErrorKind::kConfiguration, "error inflation must exceed 1");
}

inline SyntheticData Generate(const SyntheticSpec& spec) {
  ValidateSpec(spec);
  const std::size_t m = spec.n_models;
  const std::size_t n = spec.n_samples;
  const std::size_t m_bad = spec.excluded_models;
  RandomEngine rng = StreamEngine(spec.seed, 0);

  // Extra flip probability that lifts a consensus copy's expected error
  // from e_good to inflation * e_good.
  double bad_flip = 0.0;
  if (m_bad > 0) {
    double expected_conflict_error = 0.0;
    for (const auto& g : spec.groups) {
      const double q = static_cast<double>(detail::FlipCount(g, m)) / static_cast<double>(m);
      expected_conflict_error += g.weight * g.conflict_rate * q;
    }
    const double e = spec.base_error;
    const double e_good = e + expected_conflict_error * (1.0 - 2.0 * e);
    const double e_bad = std::min(0.5, spec.error_inflation * e_good);
    if (!(e < 0.5) || !(e_bad > e))
      throw Error(ErrorKind::kConfiguration,
                  "error inflation cannot produce worse models for this spec");
    bad_flip = (e_bad - e) / (1.0 - 2.0 * e);
  }

  std::vector<double> group_w, dataset_w;
  for (const auto& g : spec.groups) group_w.push_back(g.weight);
  for (const auto& d : spec.datasets) dataset_w.push_back(d.weight);
  const std::span<const double> split_w(spec.split_weights, 3);
  constexpr Split kSplits[3] = {Split::kTrain, Split::kVal, Split::kTest};

  std::vector<std::string> model_ids;
  for (std::size_t i = 0; i < m; ++i) model_ids.push_back(detail::PaddedId("m", i, m));
  std::vector<std::string> bad_ids;
  for (std::size_t i = 0; i < m_bad; ++i) bad_ids.push_back(detail::PaddedId("bad", i, m_bad));
  const std::size_t total_models = m + m_bad;
  std::vector<std::uint8_t> values(total_models * n);

  std::vector<SampleRecord> records;
  records.reserve(n);
  GroundTruth truth;
  truth.reference_model_id = model_ids.front();
  truth.included_model_ids = model_ids;
  truth.excluded_model_ids = bad_ids;
  truth.flips.assign(n, 0);
  std::vector<std::size_t> order(m);
  std::vector<std::string> sample_groups(n), sample_datasets(n);

  for (std::size_t s = 0; s < n; ++s) {
    SampleRecord rec;
    rec.sample_id = detail::PaddedId("s", s, n);
    const std::size_t gi = detail::DrawWeighted(rng, group_w);
    const auto& group = spec.groups[gi];
    rec.group_tags.insert(group.tag);
    rec.dataset_tag = spec.datasets[detail::DrawWeighted(rng, dataset_w)].tag;
    rec.split = kSplits[detail::DrawWeighted(rng, split_w)];
    rec.gold_label = Bernoulli(rng, spec.positive_rate) ? 1 : 0;
    const std::uint8_t consensus =
        rec.gold_label ^ static_cast<std::uint8_t>(Bernoulli(rng, spec.base_error));
    for (std::size_t i = 0; i < total_models; ++i) values[i * n + s] = consensus;

    if (Bernoulli(rng, group.conflict_rate)) {
      const std::size_t f = detail::FlipCount(group, m);
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t k = 0; k < f; ++k) {
        const std::size_t j = k + UniformIndex(rng, m - k);
        std::swap(order[k], order[j]);
        values[order[k] * n + s] ^= 1;
      }
      truth.flips[s] = f;
    }
    for (std::size_t b = 0; b < m_bad; ++b) {
      if (Bernoulli(rng, bad_flip)) values[(m + b) * n + s] ^= 1;
    }

    const auto& ann = spec.annotators;
    if (ann.n_annotators > 0) {
      rec.annotator_labels.assign(ann.n_annotators, rec.gold_label);
      ++truth.annotated_samples;
      if (Bernoulli(rng, ann.disagreement_rate)) {
        const std::size_t dissent = 1 + UniformIndex(rng, ann.n_annotators - 1);
        std::vector<std::size_t> slots(ann.n_annotators);
        std::iota(slots.begin(), slots.end(), std::size_t{0});
        for (std::size_t k = 0; k < dissent; ++k) {
          const std::size_t j = k + UniformIndex(rng, ann.n_annotators - k);
          std::swap(slots[k], slots[j]);
          rec.annotator_labels[slots[k]] ^= 1;
        }
        truth.unclear_sample_ids.push_back(rec.sample_id);
      }
    }
    sample_groups[s] = group.tag;
    sample_datasets[s] = rec.dataset_tag;
    records.push_back(std::move(rec));
  }

  // Realized truth: a conflicted sample has pd = 2f(M-f) / (M(M-1)).
  auto accumulate = [&](TruthBlock& block, std::size_t s) {
    ++block.n;
    if (truth.flips[s] > 0) ++block.conflicted;
  };
  auto finish = [&](TruthBlock& block, const std::vector<std::size_t>& members) {
    block.arbitrariness = static_cast<double>(block.conflicted) / static_cast<double>(block.n);
    std::uint64_t numerator = 0;
    for (auto s : members) {
      const std::uint64_t f = truth.flips[s];
      numerator += 2 * f * (m - f);
    }
    block.avg_pairwise_disagreement =
        m >= 2 ? static_cast<double>(numerator) /
                     (static_cast<double>(m * (m - 1)) * static_cast<double>(block.n))
               : 0.0;
  };
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::map<std::string, std::vector<std::size_t>> by_group, by_dataset;
  for (std::size_t s = 0; s < n; ++s) {
    accumulate(truth.overall, s);
    accumulate(truth.per_group[sample_groups[s]], s);
    accumulate(truth.per_dataset[sample_datasets[s]], s);
    by_group[sample_groups[s]].push_back(s);
    by_dataset[sample_datasets[s]].push_back(s);
  }
  finish(truth.overall, all);
  for (auto& [tag, block] : truth.per_group) finish(block, by_group[tag]);
  for (auto& [tag, block] : truth.per_dataset) finish(block, by_dataset[tag]);

  std::vector<std::string> sample_ids;
  sample_ids.reserve(n);
  for (const auto& r : records) sample_ids.push_back(r.sample_id);
  std::vector<std::string> all_models = model_ids;
  all_models.insert(all_models.end(), bad_ids.begin(), bad_ids.end());
  return {PredictionMatrix(std::move(all_models), std::move(sample_ids), std::move(values)),
          SampleManifest(std::move(records)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Spec and truth files

inline SyntheticSpec SpecFromJson(const Json& j) {
  SyntheticSpec spec;
  auto num = [&](const char* key, double& out) {
    if (j.contains(key)) {
      if (!j[key].is_number()) throw ParseError(std::string(key) + " must be a number", 1, key);
      out = j[key].get<double>();
    }
  };
  auto count = [&](const Json& obj, const char* key, auto& out) {
    if (obj.contains(key)) {
      if (!obj[key].is_number_unsigned())
        throw ParseError(std::string(key) + " must be a non-negative integer", 1, key);
      out = obj[key].template get<std::remove_reference_t<decltype(out)>>();
    }
  };
  static const std::set<std::string> kKeys = {
      "n_models", "n_samples", "seed", "base_error", "positive_rate", "groups", "datasets",
      "annotators", "excluded_models", "error_inflation", "split_weights"};
  if (!j.is_object()) throw ParseError("synthetic spec must be a JSON object", 1);
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw ParseError("unknown key", 1, key);
  }
  count(j, "n_models", spec.n_models);
  count(j, "n_samples", spec.n_samples);
  count(j, "seed", spec.seed);
  count(j, "excluded_models", spec.excluded_models);
  num("base_error", spec.base_error);
  num("positive_rate", spec.positive_rate);
  num("error_inflation", spec.error_inflation);
  if (j.contains("groups")) {
    spec.groups.clear();
    for (const auto& g : j["groups"]) {
      GroupSpec gs;
      gs.tag = g.at("tag").get<std::string>();
      gs.weight = g.at("weight").get<double>();
      gs.conflict_rate = g.at("conflict_rate").get<double>();
      gs.minority_share = g.at("minority_share").get<double>();
      spec.groups.push_back(gs);
    }
  }
  if (j.contains("datasets")) {
    spec.datasets.clear();
    for (const auto& d : j["datasets"])
      spec.datasets.push_back({d.at("tag").get<std::string>(), d.at("weight").get<double>()});
  }
  if (j.contains("annotators")) {
    const auto& a = j["annotators"];
    count(a, "n_annotators", spec.annotators.n_annotators);
    if (a.contains("disagreement_rate"))
      spec.annotators.disagreement_rate = a["disagreement_rate"].get<double>();
  }
  if (j.contains("split_weights")) {
    const auto& w = j["split_weights"];
    spec.split_weights[0] = w.at("train").get<double>();
    spec.split_weights[1] = w.at("val").get<double>();
    spec.split_weights[2] = w.at("test").get<double>();
  }
  return spec;
}

inline Json TruthToJson(const GroundTruth& t) {
  auto block = [](const TruthBlock& b) {
    Json j;
    j["n"] = b.n;
    j["conflicted"] = b.conflicted;
    j["arbitrariness"] = b.arbitrariness;
    j["avg_pairwise_disagreement"] = b.avg_pairwise_disagreement;
    return j;
  };
  Json j;
  j["schema_version"] = "1.0.0";
  j["reference_model_id"] = t.reference_model_id;
  j["included_model_ids"] = t.included_model_ids;
  j["excluded_model_ids"] = t.excluded_model_ids;
  j["overall"] = block(t.overall);
  j["per_group"] = Json::object();
  for (const auto& [k, b] : t.per_group) j["per_group"][k] = block(b);
  j["per_dataset"] = Json::object();
  for (const auto& [k, b] : t.per_dataset) j["per_dataset"][k] = block(b);
  j["annotated_samples"] = t.annotated_samples;
  j["unclear_sample_ids"] = t.unclear_sample_ids;
  return j;
}

// Writes via a temporary sibling and a rename so readers never see a
// partial file.
inline void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kInternal, "cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kInternal, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline void WriteSynthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WriteFileAtomic(dir / "predictions.csv", EmitPredictions(data.predictions, PredictionFormat::kCsv));
  WriteFileAtomic(dir / "manifest.jsonl", EmitManifest(data.manifest));
  WriteFileAtomic(dir / "ground_truth.json", TruthToJson(data.truth).dump(2) + "\n");
}

}  // namespace multiplicity

#endif  // MULTIPLICITY_SYNTH_HPP_
