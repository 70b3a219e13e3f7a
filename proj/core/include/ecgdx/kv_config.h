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

#ifndef ECGDX_KV_CONFIG_H_
#define ECGDX_KV_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ecgdx {

// Flat `key = value` text file. Blank lines and lines starting with '#' are
// ignored; keys may contain dots (gbm.max_depth). Duplicate keys are an error.
class KeyValueFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  static KeyValueFile parse(std::string_view text, std::string source = "<string>");
  static KeyValueFile load(const std::filesystem::path& path);

  const std::vector<Entry>& entries() const { return entries_; }
  bool contains(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;

  // Typed accessors; throw Error naming the key and line on bad values.
  std::optional<double> get_double(std::string_view key) const;
  std::optional<std::int64_t> get_int(std::string_view key) const;
  std::optional<bool> get_bool(std::string_view key) const;
  // Comma-separated list with surrounding spaces trimmed; empty items dropped.
  std::optional<std::vector<std::string>> get_list(std::string_view key) const;

  // Keys starting with `prefix`, in file order.
  std::vector<Entry> with_prefix(std::string_view prefix) const;

  const std::string& source() const { return source_; }

 private:
  const Entry* find(std::string_view key) const;

  std::string source_;
  std::vector<Entry> entries_;
};

}  // namespace ecgdx

#endif  // ECGDX_KV_CONFIG_H_
