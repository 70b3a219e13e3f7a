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

#include "ecgdx/splits.h"

#include <algorithm>
#include <limits>
#include <ostream>

namespace ecgdx {

FoldRole role_of_fold(int fold) {
  if (fold < 0 || fold >= kNumFolds) throw Error("fold index out of range");
  if (fold == kValidationFold) return FoldRole::kValidation;
  if (fold == kTestFold) return FoldRole::kTest;
  return FoldRole::kTrain;
}

std::string_view role_name(FoldRole role) {
  switch (role) {
    case FoldRole::kTrain:
      return "train";
    case FoldRole::kValidation:
      return "validation";
    case FoldRole::kTest:
      return "test";
  }
  return "unknown";
}

FoldAssignment::FoldAssignment(std::vector<std::string> sample_ids, std::vector<int> folds,
                               std::uint64_t seed, std::vector<std::string> unsplittable_targets)
    : ids_(std::move(sample_ids)),
      folds_(std::move(folds)),
      seed_(seed),
      unsplittable_(std::move(unsplittable_targets)) {
  if (ids_.size() != folds_.size()) throw Error("fold assignment: id/fold length mismatch");
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (folds_[i] < 0 || folds_[i] >= kNumFolds) {
      throw Error("fold assignment: fold index out of range for " + ids_[i]);
    }
    if (!index_.emplace(ids_[i], folds_[i]).second) {
      throw Error("fold assignment: duplicate sample id " + ids_[i]);
    }
  }
}

std::optional<int> FoldAssignment::fold_of(std::string_view sample_id) const {
  auto it = index_.find(std::string(sample_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::array<std::size_t, kNumFolds> FoldAssignment::fold_sizes() const {
  std::array<std::size_t, kNumFolds> sizes{};
  for (int f : folds_) ++sizes[f];
  return sizes;
}

std::size_t FoldAssignment::role_size(FoldRole role) const {
  std::size_t count = 0;
  for (int f : folds_) count += role_of_fold(f) == role;
  return count;
}

FoldAssignment stratified_split(const Cohort& cohort, std::uint64_t seed) {
  const std::size_t n = cohort.size();
  const std::size_t num_targets = cohort.targets().size();
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& s : cohort.samples()) ids.push_back(s.id);
  if (n == 0) return FoldAssignment({}, {}, seed);

  // Pseudo-labels: [0, T) target positives, [T, T+4) age bins, [T+4, T+6) sex.
  const std::size_t age_base = num_targets;
  const std::size_t sex_base = num_targets + 4;
  const std::size_t num_labels = num_targets + 6;
  const AgeQuartiles quartiles = age_quartiles(cohort);

  std::vector<std::vector<std::size_t>> labels_of(n);
  std::vector<std::vector<std::size_t>> members(num_labels);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = cohort.sample(i);
    for (std::size_t t = 0; t < num_targets; ++t) {
      if (s.labels[t] == 1) labels_of[i].push_back(t);
    }
    labels_of[i].push_back(age_base + quartiles.bin_of(s.features[index_of(Feature::kAge)]));
    labels_of[i].push_back(sex_base + (s.features[index_of(Feature::kSex)] == 1.0 ? 1 : 0));
    for (auto l : labels_of[i]) members[l].push_back(i);
  }

  const double fold_share = 1.0 / kNumFolds;
  std::vector<std::array<double, kNumFolds>> need(num_labels);
  std::vector<std::size_t> remaining(num_labels);
  for (std::size_t l = 0; l < num_labels; ++l) {
    need[l].fill(static_cast<double>(members[l].size()) * fold_share);
    remaining[l] = members[l].size();
  }
  std::array<std::size_t, kNumFolds> assigned_count{};
  std::vector<int> fold(n, -1);
  Rng rng(derive_seed(seed, 0x53504c4954ULL));

  // Fold sizes end at floor(n/20) or floor(n/20) + 1.
  const std::size_t base_size = n / kNumFolds;
  const std::size_t extra_slots = n % kNumFolds;
  std::size_t extra_used = 0;

  std::array<int, kNumFolds> candidates{};
  std::size_t left = n;
  while (left > 0) {
    // Rarest pseudo-label that still has unassigned samples.
    std::size_t label = num_labels;
    for (std::size_t l = 0; l < num_labels; ++l) {
      if (remaining[l] > 0 && (label == num_labels || remaining[l] < remaining[label])) label = l;
    }
    for (std::size_t i : members[label]) {
      if (fold[i] >= 0) continue;

      double best_need = -std::numeric_limits<double>::infinity();
      double best_other = -std::numeric_limits<double>::infinity();
      std::size_t best_count = std::numeric_limits<std::size_t>::max();
      std::size_t num_candidates = 0;
      for (int f = 0; f < kNumFolds; ++f) {
        const std::size_t count = assigned_count[f];
        if (count > base_size || (count == base_size && extra_used == extra_slots)) continue;
        const double primary = need[label][f];
        double other = 0.0;
        for (auto l : labels_of[i]) {
          if (l != label) other += need[l][f];
        }
        bool better = false;
        bool tie = false;
        if (primary != best_need) {
          better = primary > best_need;
        } else if (other != best_other) {
          better = other > best_other;
        } else if (count != best_count) {
          better = count < best_count;
        } else {
          tie = true;
        }
        if (better) {
          best_need = primary;
          best_other = other;
          best_count = count;
          num_candidates = 0;
          candidates[num_candidates++] = f;
        } else if (tie) {
          candidates[num_candidates++] = f;
        }
      }
      const int chosen =
          num_candidates == 1 ? candidates[0] : candidates[rng.uniform_index(num_candidates)];
      fold[i] = chosen;
      if (++assigned_count[chosen] > base_size) ++extra_used;
      for (auto l : labels_of[i]) {
        need[l][chosen] -= 1.0;
        --remaining[l];
      }
      --left;
    }
  }

  std::vector<std::string> unsplittable;
  for (std::size_t t = 0; t < num_targets; ++t) {
    if (members[t].size() < static_cast<std::size_t>(kNumFolds)) continue;
    std::array<std::size_t, kNumFolds> positives{};
    for (auto i : members[t]) ++positives[fold[i]];
    if (std::find(positives.begin(), positives.end(), 0) != positives.end()) {
      unsplittable.push_back(cohort.targets()[t]);
    }
  }
  return FoldAssignment(std::move(ids), std::move(fold), seed, std::move(unsplittable));
}

Cohort materialize(const Cohort& cohort, const FoldAssignment& assignment, FoldRole role) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    auto fold = assignment.fold_of(cohort.sample(i).id);
    if (!fold) throw Error("fold assignment does not cover sample " + cohort.sample(i).id);
    if (role_of_fold(*fold) == role) picked.push_back(i);
  }
  return cohort.subset(picked);
}

void write_fold_csv(const FoldAssignment& assignment, std::ostream& out) {
  out << "sample_id,fold,role\n";
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int f = assignment.folds()[i];
    out << assignment.sample_ids()[i] << ',' << f << ',' << role_name(role_of_fold(f)) << '\n';
  }
}

}  // namespace ecgdx
