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

#include "ecgdx/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace ecgdx {

namespace {

constexpr int kMaxRedraws = 1000;
constexpr int kBisectionSteps = 200;
constexpr double kInterceptBound = 60.0;

std::array<Marginal, kNumFeatures> make_marginals(
    std::initializer_list<std::pair<double, double>> median_iqr) {
  std::array<Marginal, kNumFeatures> out{};
  std::size_t i = 0;
  for (const auto& [median, iqr] : median_iqr) out[i++] = Marginal{median, iqr, 0.0};
  return out;
}

double scale_of(const Marginal& m) { return m.iqr / (2.0 * std::log(3.0)); }

bool in_domain(std::size_t feature, double v) {
  switch (FeatureSchema::standard().info(feature).kind) {
    case FeatureKind::kAge:
      return v >= kMinAdultAge && v <= kMaxSynthAge;
    case FeatureKind::kIntervalMs:
      return v > 0.0;
    case FeatureKind::kAxisDeg:
      return v >= kMinAxisDeg && v <= kMaxAxisDeg;
    case FeatureKind::kBinarySex:
      return v == 0.0 || v == 1.0;
  }
  return false;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double marginal_sd(const Marginal& m) {
  return scale_of(m) * std::numbers::pi / std::sqrt(3.0);
}

SynthSpec SynthSpec::internal_defaults() {
  SynthSpec spec;
  spec.male_fraction = 240837.0 / (226892.0 + 240837.0);
  spec.marginals = make_marginals({{66, 25},
                                   {0, 1},
                                   {769, 264},
                                   {158, 38},
                                   {94, 23},
                                   {394, 68},
                                   {447, 47},
                                   {51, 32},
                                   {13, 61},
                                   {42, 58}});
  return spec;
}

SynthSpec SynthSpec::external_defaults() {
  SynthSpec spec;
  spec.male_fraction = 399802.0 / (375733.0 + 399802.0);
  spec.id_prefix = "x";
  spec.marginals = make_marginals({{52, 25},
                                   {0, 1},
                                   {857, 227},
                                   {158, 28},
                                   {90, 14},
                                   {392, 48},
                                   {421, 37},
                                   {53, 28},
                                   {48, 49},
                                   {44, 33}});
  return spec;
}

void SynthSpec::validate() const {
  const auto& schema = FeatureSchema::standard();
  if (n_samples == 0) throw Error("synth spec: n_samples must be positive");
  if (!(male_fraction >= 0.0 && male_fraction <= 1.0)) {
    throw Error("synth spec: male_fraction must lie in [0, 1]");
  }
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (f == index_of(Feature::kSex)) continue;
    const auto& m = marginals[f];
    const std::string name(schema.info(f).name);
    if (!std::isfinite(m.median)) throw Error("synth spec: " + name + " median is not finite");
    if (!(m.iqr > 0.0) || !std::isfinite(m.iqr)) {
      throw Error("synth spec: " + name + " IQR must be positive");
    }
    if (!(m.missing_rate >= 0.0 && m.missing_rate < 1.0)) {
      throw Error("synth spec: " + name + " missing_rate must lie in [0, 1)");
    }
    if (schema.info(f).required && m.missing_rate != 0.0) {
      throw Error("synth spec: " + name + " is required and cannot be missing");
    }
  }
  std::unordered_map<std::string, int> seen;
  for (const auto& t : targets) {
    if (t.code.empty()) throw Error("synth spec: empty target code");
    if (seen[t.code]++ > 0) throw Error("synth spec: duplicate target " + t.code);
    if (!(t.prevalence > 0.0 && t.prevalence < 1.0)) {
      throw Error("synth spec: target " + t.code + " prevalence must lie in (0, 1)");
    }
    for (const auto& e : t.effects) {
      if (e.feature >= kNumFeatures) throw Error("synth spec: effect on unknown feature");
      if (e.direction != 1 && e.direction != -1) {
        throw Error("synth spec: effect direction must be + or -");
      }
      if (!std::isfinite(e.strength) || e.strength < 0.0) {
        throw Error("synth spec: effect strength must be finite and non-negative");
      }
    }
  }
}

SynthSpec SynthSpec::shifted(double iqr_fraction) const {
  SynthSpec out = *this;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (f == index_of(Feature::kSex)) continue;
    out.marginals[f].median += iqr_fraction * out.marginals[f].iqr;
  }
  return out;
}

namespace {

PlantedEffect parse_effect(std::string_view item, const std::string& code) {
  const auto colon = item.find(':');
  if (colon == std::string_view::npos) {
    throw Error("synth spec: target " + code + " effect '" + std::string(item) +
                "' must look like feature:+strength");
  }
  const auto name = trim(item.substr(0, colon));
  auto rest = trim(item.substr(colon + 1));
  auto feature = FeatureSchema::standard().index_of(name);
  if (!feature) throw Error("synth spec: unknown effect feature '" + std::string(name) + "'");
  PlantedEffect effect;
  effect.feature = *feature;
  if (!rest.empty() && (rest.front() == '+' || rest.front() == '-')) {
    effect.direction = rest.front() == '-' ? -1 : 1;
    rest.remove_prefix(1);
    // Allow "+:2.0" as well as "+2.0".
    if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
  }
  auto strength = parse_double(rest);
  if (!strength) {
    throw Error("synth spec: bad effect strength '" + std::string(rest) + "' for " + code);
  }
  effect.strength = *strength;
  return effect;
}

}  // namespace

SynthSpec parse_synth_spec(const KeyValueFile& file) {
  SynthSpec spec = SynthSpec::internal_defaults();
  if (auto preset = file.get("preset")) {
    if (*preset == "external") {
      spec = SynthSpec::external_defaults();
    } else if (*preset != "internal") {
      throw Error("synth spec: preset must be internal or external");
    }
  }
  if (auto v = file.get_int("n_samples")) {
    if (*v <= 0) throw Error("synth spec: n_samples must be positive");
    spec.n_samples = static_cast<std::size_t>(*v);
  }
  if (auto v = file.get_int("seed")) spec.seed = static_cast<std::uint64_t>(*v);
  if (auto v = file.get_double("male_fraction")) spec.male_fraction = *v;
  if (auto v = file.get_bool("round_values")) spec.round_values = *v;
  if (auto v = file.get("id_prefix")) spec.id_prefix = *v;
  if (auto v = file.get_double("missing_rate")) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (!FeatureSchema::standard().info(f).required) spec.marginals[f].missing_rate = *v;
    }
  }

  const auto& schema = FeatureSchema::standard();
  for (const auto& e : file.with_prefix("feature.")) {
    const auto parts = split(e.key, '.');
    if (parts.size() != 3) throw Error("synth spec: bad key " + e.key);
    auto feature = schema.index_of(parts[1]);
    if (!feature || *feature == index_of(Feature::kSex)) {
      throw Error("synth spec: unknown continuous feature in key " + e.key);
    }
    auto& m = spec.marginals[*feature];
    const auto value = file.get_double(e.key).value();
    if (parts[2] == "median") {
      m.median = value;
    } else if (parts[2] == "iqr") {
      m.iqr = value;
    } else if (parts[2] == "missing_rate") {
      m.missing_rate = value;
    } else {
      throw Error("synth spec: unknown field in key " + e.key);
    }
  }

  std::vector<std::string> order;
  std::unordered_map<std::string, SynthTarget> targets;
  for (const auto& e : file.with_prefix("target.")) {
    const auto parts = split(e.key, '.');
    if (parts.size() != 3) throw Error("synth spec: bad key " + e.key);
    const std::string& code = parts[1];
    if (!targets.count(code)) {
      order.push_back(code);
      targets[code].code = code;
    }
    auto& target = targets[code];
    if (parts[2] == "prevalence") {
      target.prevalence = file.get_double(e.key).value();
    } else if (parts[2] == "effects") {
      const auto items = file.get_list(e.key).value();
      for (const auto& item : items) {
        target.effects.push_back(parse_effect(item, code));
      }
    } else {
      throw Error("synth spec: unknown field in key " + e.key);
    }
  }
  for (const auto& code : order) spec.targets.push_back(targets[code]);

  if (auto v = file.get_double("shift_iqr_fraction")) spec = spec.shifted(*v);
  spec.validate();
  return spec;
}

Cohort generate_synth(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_samples;
  const std::size_t sex = index_of(Feature::kSex);

  // Features.
  std::vector<FeatureVector> features(n);
  Rng feature_rng(derive_seed(spec.seed, 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (f == sex) {
        features[i][f] = feature_rng.uniform() < spec.male_fraction ? 1.0 : 0.0;
        continue;
      }
      const auto& m = spec.marginals[f];
      const double scale = scale_of(m);
      double value = 0.0;
      int attempt = 0;
      do {
        if (++attempt > kMaxRedraws) {
          throw Error("synth spec: marginal of " +
                      std::string(FeatureSchema::standard().info(f).name) +
                      " rarely yields valid values");
        }
        double u = feature_rng.uniform();
        while (u <= 0.0) u = feature_rng.uniform();
        value = m.median + scale * std::log(u / (1.0 - u));
        if (spec.round_values) value = std::round(value);
      } while (!in_domain(f, value));
      features[i][f] = value;
    }
  }

  // Missingness: exactly round(rate * n) cells per feature, positions drawn by
  // a seeded partial Fisher-Yates shuffle.
  std::vector<std::size_t> order(n);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const double rate = spec.marginals[f].missing_rate;
    if (f == sex || rate <= 0.0) continue;
    const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
    Rng rng(derive_seed(spec.seed, 100 + f));
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < count && k < n; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.uniform_index(n - k));
      std::swap(order[k], order[j]);
      features[order[k]][f] = kMissing;
    }
  }

  // Labels.
  std::vector<std::vector<std::uint8_t>> labels(spec.targets.size());
  std::vector<double> logit(n);
  std::vector<double> u(n);
  for (std::size_t t = 0; t < spec.targets.size(); ++t) {
    const auto& target = spec.targets[t];
    std::fill(logit.begin(), logit.end(), 0.0);
    for (const auto& effect : target.effects) {
      double center = 0.0;
      double sd = 1.0;
      if (effect.feature == sex) {
        center = spec.male_fraction;
        sd = std::sqrt(std::max(spec.male_fraction * (1.0 - spec.male_fraction), 1e-12));
      } else {
        center = spec.marginals[effect.feature].median;
        sd = marginal_sd(spec.marginals[effect.feature]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double x = features[i][effect.feature];
        if (is_missing(x)) continue;
        logit[i] += effect.direction * effect.strength * (x - center) / sd;
      }
    }
    Rng rng(derive_seed(spec.seed, 1000 + t));
    for (auto& v : u) v = rng.uniform();

    const auto wanted = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(target.prevalence * static_cast<double>(n)), 1,
        static_cast<long long>(std::max<std::size_t>(n, 2) - 1)));
    auto positives = [&](double intercept) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) count += u[i] < sigmoid(intercept + logit[i]);
      return count;
    };
    double lo = -kInterceptBound;
    double hi = kInterceptBound;
    for (int step = 0; step < kBisectionSteps && hi - lo > 1e-13; ++step) {
      const double mid = 0.5 * (lo + hi);
      if (positives(mid) >= wanted) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    labels[t].resize(n);
    for (std::size_t i = 0; i < n; ++i) labels[t][i] = u[i] < sigmoid(hi + logit[i]);
  }

  std::vector<Sample> samples(n);
  const int width = std::max<int>(6, static_cast<int>(std::to_string(n).size()));
  for (std::size_t i = 0; i < n; ++i) {
    std::string index = std::to_string(i + 1);
    samples[i].id = spec.id_prefix + std::string(width - index.size(), '0') + index;
    samples[i].features = features[i];
    samples[i].labels.reserve(spec.targets.size());
    for (const auto& column : labels) samples[i].labels.push_back(column[i]);
  }
  std::vector<std::string> codes;
  for (const auto& t : spec.targets) codes.push_back(t.code);
  return Cohort(std::move(codes), std::move(samples));
}

}  // namespace ecgdx
