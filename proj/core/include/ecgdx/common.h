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

#ifndef ECGDX_COMMON_H_
#define ECGDX_COMMON_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ecgdx {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing feature values are stored as quiet NaN. Present values are always
// finite (enforced at ingestion), so the marker is unambiguous.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double value) { return std::isnan(value); }

// Shortest decimal representation that parses back to the same double.
std::string format_shortest(double value);

// Fixed-point formatting ("%.*f").
std::string format_fixed(double value, int decimals);

// Strict full-string parse; rejects empty input, trailing junk, inf and nan.
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);

// Linear-interpolation quantile (position q * (n - 1)) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

// Lower median: element at index (n - 1) / 2 of sorted data.
double lower_median_sorted(std::span<const double> sorted);

// Deterministic 64-bit mixing; used to derive independent seeds for streams.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Small seeded generator with a platform-independent output sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform in [0, n). Requires n > 0.
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t state_[4];
};

}  // namespace ecgdx

#endif  // ECGDX_COMMON_H_
