/*
 * Copyright 2026 The ecgdx Authors.
 *
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

#ifndef ECGDX_SYNTH_H_
#define ECGDX_SYNTH_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ecgdx/cohort.h"
#include "ecgdx/kv_config.h"

namespace ecgdx {

// Location-scale marginal described by its median and IQR. Sampled from a
// logistic distribution with location = median and scale = IQR / (2 ln 3).
struct Marginal {
  double median = 0.0;
  double iqr = 1.0;
  double missing_rate = 0.0;
};

struct PlantedEffect {
  std::size_t feature = 0;
  int direction = +1;  // +1 or -1
  double strength = 0.0;
};

struct SynthTarget {
  std::string code;
  double prevalence = 0.01;
  std::vector<PlantedEffect> effects;
};

struct SynthSpec {
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  double male_fraction = 0.5149;
  // Round continuous draws to whole years / ms / degrees, as recorded by
  // ECG machines.
  bool round_values = true;
  std::string id_prefix = "s";
  // Indexed by Feature; the sex entry is unused.
  std::array<Marginal, kNumFeatures> marginals;
  std::vector<SynthTarget> targets;

  // Reference medians/IQRs of a US hospital cohort (internal) and a South
  // Korean hospital cohort (external).
  static SynthSpec internal_defaults();
  static SynthSpec external_defaults();

  // Throws Error on an invalid spec.
  void validate() const;

  // Copy with every continuous median moved by fraction * IQR.
  SynthSpec shifted(double iqr_fraction) const;
};

// Keys: preset (internal|external), n_samples, seed, male_fraction,
// round_values, id_prefix, missing_rate (all ECG features),
// shift_iqr_fraction, feature.<name>.{median,iqr,missing_rate},
// target.<CODE>.prevalence, target.<CODE>.effects = <feature>:<+|-><strength>,...
SynthSpec parse_synth_spec(const KeyValueFile& file);

// Deterministic under spec.seed. Labels follow a logistic model on
// standardized features; the intercept is bisected so the realized
// positive count equals round(prevalence * n).
Cohort generate_synth(const SynthSpec& spec);

// Standard deviation of the logistic marginal implied by (median, IQR).
double marginal_sd(const Marginal& m);

}  // namespace ecgdx

#endif  // ECGDX_SYNTH_H_
