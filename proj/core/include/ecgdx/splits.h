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

#ifndef ECGDX_SPLITS_H_
#define ECGDX_SPLITS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecgdx/cohort.h"

namespace ecgdx {

inline constexpr int kNumFolds = 20;
inline constexpr int kValidationFold = 18;
inline constexpr int kTestFold = 19;

enum class FoldRole { kTrain, kValidation, kTest };

FoldRole role_of_fold(int fold);
std::string_view role_name(FoldRole role);

// Seeded 20-way partition: folds 0-17 train, 18 validation, 19 test.
class FoldAssignment {
 public:
  FoldAssignment() = default;
  FoldAssignment(std::vector<std::string> sample_ids, std::vector<int> folds,
                 std::uint64_t seed, std::vector<std::string> unsplittable_targets = {});

  std::optional<int> fold_of(std::string_view sample_id) const;
  const std::vector<std::string>& sample_ids() const { return ids_; }
  const std::vector<int>& folds() const { return folds_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return ids_.size(); }

  std::array<std::size_t, kNumFolds> fold_sizes() const;
  std::size_t role_size(FoldRole role) const;

  // Targets with >= 20 positives for which some fold received none.
  const std::vector<std::string>& unsplittable_targets() const { return unsplittable_; }

 private:
  std::vector<std::string> ids_;
  std::vector<int> folds_;
  std::uint64_t seed_ = 0;
  std::vector<std::string> unsplittable_;
  std::unordered_map<std::string, int> index_;
};

// Greedy iterative stratification over pseudo-labels {each target positive}
// u {age quartile bin} u {sex}. The rarest pseudo-label with unassigned
// samples is processed first; each of its samples goes to the fold with the
// greatest remaining need for that label. Ties: greatest summed need over the
// sample's other pseudo-labels, then fewest samples assigned, then a seeded
// uniform draw.
FoldAssignment stratified_split(const Cohort& cohort, std::uint64_t seed);

// Sub-cohort of `role`, preserving the original order. Throws Error when a
// sample is not covered by the assignment.
Cohort materialize(const Cohort& cohort, const FoldAssignment& assignment, FoldRole role);

// Audit sidecar: sample_id,fold,role.
void write_fold_csv(const FoldAssignment& assignment, std::ostream& out);

}  // namespace ecgdx

#endif  // ECGDX_SPLITS_H_
