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

#include "ecgdx/matrix.h"

#include <cstdio>

namespace ecgdx {

std::string schema_fingerprint(std::span<const std::string> feature_names) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](unsigned char c) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  };
  for (const auto& name : feature_names) {
    for (unsigned char c : name) mix(c);
    mix(',');
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> feature_names,
                             std::vector<double> values)
    : feature_names_(std::move(feature_names)), values_(std::move(values)) {
  if (feature_names_.empty()) throw Error("feature matrix needs at least one column");
  if (values_.size() % feature_names_.size() != 0) {
    throw Error("feature matrix value count is not a multiple of the column count");
  }
  fingerprint_ = schema_fingerprint(feature_names_);
}

}  // namespace ecgdx
