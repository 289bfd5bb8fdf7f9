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

// Shared test fixtures built through the public pipeline.

#ifndef MULTIPLICITY_TESTS_FIXTURES_HPP_
#define MULTIPLICITY_TESTS_FIXTURES_HPP_

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "multiplicity/multiplicity.hpp"

namespace fixture {

inline multiplicity::SyntheticSpec SmallSpec(std::uint64_t seed = 11) {
  multiplicity::SyntheticSpec spec;
  spec.n_models = 12;
  spec.n_samples = 300;
  spec.seed = seed;
  spec.excluded_models = 3;
  spec.groups = {{"lgbtq", 0.4, 0.35, 0.25}, {"women", 0.6, 0.30, 0.25}};
  spec.datasets = {{"toxigen", 0.5}, {"dynahate", 0.5}};
  spec.annotators = {3, 0.3};
  return spec;
}

struct Audit {
  multiplicity::SyntheticData data;
  multiplicity::RashomonSelection selection;
  multiplicity::PerSampleMultiplicity per_sample;
  multiplicity::AuditReport report;
};

// Synthetic ensemble filtered at a fixed epsilon and audited over all
// samples.
inline Audit RunAudit(const multiplicity::SyntheticSpec& spec,
                      multiplicity::ResamplingPlan plan = {}, double epsilon = 0.5) {
  using namespace multiplicity;
  Audit a{Generate(spec), {}, {}, {}};
  const AlignedView view = Align(a.data.predictions, a.data.manifest);
  a.selection = FilterRashomon(ComputeErrors(view, Split::kTrain),
                               a.data.truth.reference_model_id, EpsilonPolicy::Fixed(epsilon));
  a.per_sample = ComputePerSample(view.predictions.SelectModels(a.selection.included_model_ids),
                                  a.selection.reference_model_id);
  a.report = AssembleReport(a.selection, a.per_sample, view.manifest, plan);
  a.report.provenance.settings["policy"] = "fixed";
  return a;
}

// Fresh directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("multiplicity_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture

#endif  // MULTIPLICITY_TESTS_FIXTURES_HPP_
