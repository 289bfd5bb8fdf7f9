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

// Umbrella header.

#ifndef MULTIPLICITY_MULTIPLICITY_HPP_
#define MULTIPLICITY_MULTIPLICITY_HPP_

#include "multiplicity/analysis.hpp"
#include "multiplicity/core.hpp"
#include "multiplicity/ingest.hpp"
#include "multiplicity/metrics.hpp"
#include "multiplicity/random.hpp"
#include "multiplicity/rashomon.hpp"
#include "multiplicity/schema.hpp"
#include "multiplicity/synth.hpp"

#endif  // MULTIPLICITY_MULTIPLICITY_HPP_
