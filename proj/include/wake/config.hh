// include/wake/config.hh

// Copyright 2026  WAKE contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef WAKE_CONFIG_HH
#define WAKE_CONFIG_HH

#include <map>
#include <string>
#include <vector>

namespace wake {

// Flat sectioned key/value text:
//   [section]
//   key = value     # comment
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& sec, const std::string& key) const;
  std::string get(const std::string& sec, const std::string& key,
                  const std::string& fallback) const;
  double get_num(const std::string& sec, const std::string& key, double fallback) const;
  int get_int(const std::string& sec, const std::string& key, int fallback) const;
  void set(const std::string& sec, const std::string& key, const std::string& value);
};

std::vector<std::string> split_list(const std::string& csv);

}  // namespace wake

#endif  // WAKE_CONFIG_HH
