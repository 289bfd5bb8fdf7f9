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

#include <gtest/gtest.h>

#include <map>

#include "fixtures.hpp"
#include "multiplicity/multiplicity.hpp"
#include "oracles.hpp"

namespace mp = multiplicity;

namespace {

mp::PerSampleMultiplicity GoodModels(const mp::SyntheticData& d) {
  return mp::ComputePerSample(d.predictions.SelectModels(d.truth.included_model_ids),
                              d.truth.reference_model_id);
}

}  // namespace

TEST(Generate, NoConflictsMeansNoArbitrariness) {
  auto spec = fixture::SmallSpec();
  for (auto& g : spec.groups) g.conflict_rate = 0.0;
  const auto d = mp::Generate(spec);
  const auto ps = GoodModels(d);
  EXPECT_EQ(mp::Arbitrariness(ps), 0.0);
  for (const auto& [tag, block] : d.truth.per_group) EXPECT_EQ(block.arbitrariness, 0.0);
}

TEST(Generate, FullConflictGivesClosedFormPd) {
  mp::SyntheticSpec spec;
  spec.n_models = 20;
  spec.n_samples = 200;
  spec.groups = {{"all", 1.0, 1.0, 0.25}};
  const auto d = mp::Generate(spec);
  const auto ps = GoodModels(d);
  const double want = 2.0 * 5 * 15 / (20.0 * 19.0);
  for (const auto& r : ps.rows) {
    EXPECT_EQ(r.pd, want);
    EXPECT_TRUE(r.arbitrary);
  }
  EXPECT_EQ(d.truth.overall.avg_pairwise_disagreement, want);
}

TEST(Generate, AuditEqualsGroundTruth) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto d = mp::Generate(fixture::SmallSpec(seed));
    const auto ps = GoodModels(d);
    const auto groups = mp::StratifyByGroup(d.manifest);
    for (const auto& [tag, truth] : d.truth.per_group) {
      const auto rows = groups.members(tag);
      EXPECT_EQ(rows.size(), truth.n);
      EXPECT_EQ(mp::Arbitrariness(ps, rows), truth.arbitrariness);
      EXPECT_NEAR(mp::AvgPairwiseDisagreement(ps, rows), truth.avg_pairwise_disagreement, 1e-12);
    }
    EXPECT_EQ(mp::Arbitrariness(ps), d.truth.overall.arbitrariness);
    const auto datasets = mp::StratifyByDataset(d.manifest);
    for (const auto& [tag, truth] : d.truth.per_dataset)
      EXPECT_EQ(mp::Arbitrariness(ps, datasets.members(tag)), truth.arbitrariness);
  }
}

TEST(Generate, FlippedModelsRotate) {
  mp::SyntheticSpec spec;
  spec.n_models = 10;
  spec.n_samples = 2000;
  spec.groups = {{"all", 1.0, 1.0, 0.2}};
  const auto d = mp::Generate(spec);
  // Each model should sit in the minority on roughly 20% of samples.
  for (std::size_t m = 0; m < spec.n_models; ++m) {
    std::size_t minority = 0;
    for (std::size_t s = 0; s < spec.n_samples; ++s) {
      std::size_t ones = 0;
      for (std::size_t k = 0; k < spec.n_models; ++k) ones += d.predictions.at(k, s);
      const bool vote_one = ones * 2 > spec.n_models;
      minority += (d.predictions.at(m, s) == 1) != vote_one;
    }
    EXPECT_NEAR(static_cast<double>(minority) / spec.n_samples, 0.2, 0.04);
  }
}

TEST(Generate, BadModelsFallOutsideTheSet) {
  const auto d = mp::Generate(fixture::SmallSpec());
  const auto view = mp::Align(d.predictions, d.manifest);
  const auto sel = mp::FilterRashomon(mp::ComputeErrors(view, mp::Split::kTrain),
                                      d.truth.reference_model_id, mp::EpsilonPolicy::Fixed(0.5));
  EXPECT_EQ(sel.excluded_model_ids, d.truth.excluded_model_ids);
}

TEST(Generate, AnnotatorDisagreementMatchesTruth) {
  const auto d = mp::Generate(fixture::SmallSpec());
  const auto strat = mp::StratifyByAnnotatorAgreement(d.manifest);
  const auto unclear = strat.members("unclear");
  std::vector<std::string> ids;
  for (auto i : unclear) ids.push_back(strat.sample_ids[i]);
  EXPECT_EQ(ids, d.truth.unclear_sample_ids);
  EXPECT_EQ(d.truth.annotated_samples, d.manifest.size());
}

TEST(Generate, SameSeedSameFiles) {
  const auto dir_a = fixture::TempDir("synth_a");
  const auto dir_b = fixture::TempDir("synth_b");
  mp::WriteSynthetic(mp::Generate(fixture::SmallSpec(21)), dir_a);
  mp::WriteSynthetic(mp::Generate(fixture::SmallSpec(21)), dir_b);
  for (const char* f : {"predictions.csv", "manifest.jsonl", "ground_truth.json"}) {
    EXPECT_EQ(oracle::Slurp(dir_a / f), oracle::Slurp(dir_b / f)) << f;
    EXPECT_FALSE(std::filesystem::exists(dir_a / (std::string(f) + ".tmp")));
  }
  EXPECT_NE(mp::EmitPredictions(mp::Generate(fixture::SmallSpec(22)).predictions,
                                mp::PredictionFormat::kCsv),
            oracle::Slurp(dir_a / "predictions.csv"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST(ValidateSpec, RejectsImpossibleConflicts) {
  mp::SyntheticSpec spec;
  spec.n_models = 3;
  spec.groups = {{"g", 1.0, 0.5, 0.1}};
  EXPECT_THROW(mp::Generate(spec), mp::Error);
  spec.groups = {{"g", 0.7, 0.5, 0.5}};
  EXPECT_THROW(mp::Generate(spec), mp::Error);
  spec.groups = {{"g", 1.0, 1.5, 0.5}};
  EXPECT_THROW(mp::Generate(spec), mp::Error);
}

TEST(SpecFromJson, ReadsFields) {
  const auto j = mp::Json::parse(R"({
    "n_models": 7, "n_samples": 50, "seed": 3,
    "groups": [{"tag": "a", "weight": 1.0, "conflict_rate": 0.2, "minority_share": 0.3}],
    "annotators": {"n_annotators": 2, "disagreement_rate": 0.1},
    "split_weights": {"train": 0.5, "val": 0.25, "test": 0.25}
  })");
  const auto spec = mp::SpecFromJson(j);
  EXPECT_EQ(spec.n_models, 7u);
  EXPECT_EQ(spec.groups.at(0).minority_share, 0.3);
  EXPECT_EQ(spec.annotators.n_annotators, 2u);
  EXPECT_EQ(spec.split_weights[1], 0.25);
  EXPECT_THROW(mp::SpecFromJson(mp::Json::parse(R"({"n_modles": 3})")), mp::ParseError);
}
