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

#include "fixtures.hpp"
#include "multiplicity/multiplicity.hpp"
#include "oracles.hpp"

namespace mp = multiplicity;

namespace {

mp::Json GoodReport() {
  const auto audit = fixture::RunAudit(fixture::SmallSpec());
  return mp::ReportToJson(audit.report);
}

bool HasViolation(const std::vector<mp::Violation>& vs, const std::string& path) {
  for (const auto& v : vs) {
    if (v.path == path) return true;
  }
  return false;
}

std::string Paths(const std::vector<mp::Violation>& vs) {
  std::string out;
  for (const auto& v : vs) out += v.path + ": " + v.message + "\n";
  return out;
}

}  // namespace

TEST(ValidateReport, GoldenFixturesAreValid) {
  const std::filesystem::path dir = MULTIPLICITY_GOLDEN_DIR;
  std::size_t checked = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().filename().string().rfind("report", 0) != 0 ||
        entry.path().extension() != ".json")
      continue;
    const auto vs = mp::ValidateReport(oracle::Slurp(entry.path()));
    EXPECT_TRUE(vs.empty()) << entry.path() << "\n" << Paths(vs);
    ++checked;
  }
  EXPECT_GE(checked, 2u);
}

TEST(ValidateReport, EmittedReportsAreValid) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    mp::ResamplingPlan plan;
    plan.method = seed % 2 ? mp::ResamplingMethod::kSemNormal
                           : mp::ResamplingMethod::kBootstrapPercentile;
    plan.replicates = 200;
    const auto audit = fixture::RunAudit(fixture::SmallSpec(seed), plan, 0.1 * seed);
    const auto vs = mp::ValidateReport(mp::EmitReport(audit.report, mp::ReportFormat::kJson));
    EXPECT_TRUE(vs.empty()) << Paths(vs);
  }
}

TEST(ValidateReport, PointOutsideInterval) {
  auto j = GoodReport();
  j["overall"]["ambiguity"]["ci_high"] = j["overall"]["ambiguity"]["point"].get<double>() / 2;
  const auto vs = mp::ValidateReport(j.dump());
  EXPECT_TRUE(HasViolation(vs, "/overall/ambiguity/point")) << Paths(vs);
}

TEST(ValidateReport, UnknownMetricName) {
  auto j = GoodReport();
  j["per_group"]["lgbtq"]["accuracy"] = j["overall"]["arbitrariness"];
  const auto vs = mp::ValidateReport(j.dump());
  EXPECT_TRUE(HasViolation(vs, "/per_group/lgbtq/accuracy")) << Paths(vs);
}

TEST(ValidateReport, StructuralViolations) {
  {
    auto j = GoodReport();
    j.erase("provenance");
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()), "/provenance"));
  }
  {
    auto j = GoodReport();
    j["extra"] = 1;
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()), "/extra"));
  }
  {
    auto j = GoodReport();
    j["overall"]["arbitrariness"]["point"] = 1.5;
    j["overall"]["arbitrariness"]["ci_high"] = 1.6;
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()), "/overall/arbitrariness/point"));
  }
  {
    auto j = GoodReport();
    j["overall"]["arbitrariness"]["ci_method"] = "wald";
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()), "/overall/arbitrariness/ci_method"));
  }
  {
    auto j = GoodReport();
    j["per_dataset"]["toxigen"]["arbitrariness"]["n_effective"] = 1u << 30;
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()),
                             "/per_dataset/toxigen/arbitrariness/n_effective"));
  }
  {
    auto j = GoodReport();
    j["provenance"]["schema_version"] = "2.0.0";
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()), "/provenance/schema_version"));
  }
  {
    auto j = GoodReport();
    j["selection"]["included_model_ids"].erase(0);
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()), "/selection/included_model_ids"));
  }
  {
    auto j = GoodReport();
    auto& inc = j["selection"]["included_model_ids"];
    j["selection"]["excluded_model_ids"].push_back(inc.back());
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()), "/selection/excluded_model_ids"));
  }
  {
    auto j = GoodReport();
    j["selection"]["epsilon"] = 0.0;
    EXPECT_TRUE(HasViolation(mp::ValidateReport(j.dump()), "/selection/included_model_ids"));
  }
  EXPECT_TRUE(HasViolation(mp::ValidateReport("{not json"), ""));
  EXPECT_TRUE(HasViolation(mp::ValidateReport("[]"), ""));
}

TEST(ValidateReport, GoodReportHasNoViolations) {
  EXPECT_TRUE(mp::ValidateReport(GoodReport().dump()).empty());
}
