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

// Generates a small synthetic ensemble, filters it with a fixed epsilon and
// prints per-group arbitrariness next to the generator's realized values.

#include <iostream>

#include "multiplicity/multiplicity.hpp"

int main() {
  using namespace multiplicity;
  SyntheticSpec spec;
  spec.n_models = 20;
  spec.n_samples = 2000;
  spec.excluded_models = 4;
  spec.groups = {{"a", 0.5, 0.35, 0.2}, {"b", 0.5, 0.30, 0.2}};
  const SyntheticData data = Generate(spec);

  const AlignedView view = Align(data.predictions, data.manifest);
  const ErrorVector errors = ComputeErrors(view, Split::kTrain);
  const RashomonSelection sel =
      FilterRashomon(errors, data.truth.reference_model_id, EpsilonPolicy::Fixed(0.5));
  std::cout << "kept " << sel.included_model_ids.size() << " of "
            << data.predictions.n_models() << " models\n";

  const PerSampleMultiplicity ps =
      ComputePerSample(view.predictions.SelectModels(sel.included_model_ids),
                       sel.reference_model_id);
  const Stratification groups = StratifyByGroup(view.manifest);
  for (const auto& label : groups.strata()) {
    const auto rows = groups.members(label);
    std::cout << label << ": arbitrariness " << Arbitrariness(ps, rows) << " (truth "
              << data.truth.per_group.at(label).arbitrariness << ")\n";
  }
  std::cout << "minority fraction "
            << MinorityFraction(AvgPairwiseDisagreement(ps), Arbitrariness(ps)) << "\n";
}
