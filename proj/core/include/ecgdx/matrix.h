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

#ifndef ECGDX_MATRIX_H_
#define ECGDX_MATRIX_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecgdx/common.h"

namespace ecgdx {

// Stable fingerprint of an ordered feature-name list (FNV-1a, hex).
std::string schema_fingerprint(std::span<const std::string> feature_names);

// Dense row-major feature matrix. Missing cells hold kMissing.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> feature_names, std::vector<double> values);

  std::size_t rows() const { return cols() == 0 ? 0 : values_.size() / cols(); }
  std::size_t cols() const { return feature_names_.size(); }

  double operator()(std::size_t row, std::size_t col) const {
    return values_[row * cols() + col];
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols(), cols()};
  }
  std::span<const double> values() const { return values_; }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::vector<std::string> feature_names_;
  std::vector<double> values_;
  std::string fingerprint_;
};

struct LabeledData {
  FeatureMatrix x;
  std::vector<std::uint8_t> y;
};

}  // namespace ecgdx

#endif  // ECGDX_MATRIX_H_
