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

#include "ecgdx/kv_config.h"

#include <fstream>
#include <sstream>

#include "ecgdx/common.h"

namespace ecgdx {

KeyValueFile KeyValueFile::parse(std::string_view text, std::string source) {
  KeyValueFile file;
  file.source_ = std::move(source);
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(file.source_ + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw Error(file.source_ + ":" + std::to_string(line_no) + ": empty key");
    }
    if (file.find(key) != nullptr) {
      throw Error(file.source_ + ":" + std::to_string(line_no) + ": duplicate key " + key);
    }
    file.entries_.push_back({std::move(key), std::move(value), line_no});
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

const KeyValueFile::Entry* KeyValueFile::find(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

bool KeyValueFile::contains(std::string_view key) const { return find(key) != nullptr; }

std::optional<std::string> KeyValueFile::get(std::string_view key) const {
  const Entry* e = find(key);
  if (e == nullptr) return std::nullopt;
  return e->value;
}

namespace {
[[noreturn]] void bad_value(const std::string& source, const KeyValueFile::Entry& e,
                            std::string_view expected) {
  throw Error(source + ":" + std::to_string(e.line) + ": " + e.key + " expects " +
              std::string(expected) + ", got '" + e.value + "'");
}
}  // namespace

std::optional<double> KeyValueFile::get_double(std::string_view key) const {
  const Entry* e = find(key);
  if (e == nullptr) return std::nullopt;
  auto v = parse_double(e->value);
  if (!v) bad_value(source_, *e, "a number");
  return v;
}

std::optional<std::int64_t> KeyValueFile::get_int(std::string_view key) const {
  const Entry* e = find(key);
  if (e == nullptr) return std::nullopt;
  auto v = parse_int(e->value);
  if (!v) bad_value(source_, *e, "an integer");
  return v;
}

std::optional<bool> KeyValueFile::get_bool(std::string_view key) const {
  const Entry* e = find(key);
  if (e == nullptr) return std::nullopt;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  bad_value(source_, *e, "a boolean");
}

std::optional<std::vector<std::string>> KeyValueFile::get_list(std::string_view key) const {
  const Entry* e = find(key);
  if (e == nullptr) return std::nullopt;
  std::vector<std::string> items;
  for (const auto& part : split(e->value, ',')) {
    const auto item = trim(part);
    if (!item.empty()) items.emplace_back(item);
  }
  return items;
}

std::vector<KeyValueFile::Entry> KeyValueFile::with_prefix(std::string_view prefix) const {
  std::vector<Entry> out;
  for (const auto& e : entries_) {
    if (e.key.size() >= prefix.size() && e.key.compare(0, prefix.size(), prefix) == 0) {
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace ecgdx
