// config/manifest.cc

// Copyright 2026  cmkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "config/manifest.h"

#include <filesystem>
#include <fstream>
#include <set>

namespace cmkit {

std::vector<ManifestEntry> ReadManifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) CMKIT_ERR(IoError) << "cannot open manifest: " << path;
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> out;
  std::set<std::string> seen;
  std::string line;
  int32 line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      size_t tab = line.find('\t', pos);
      cols.push_back(line.substr(
          pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 3 && cols.size() != 4)
      CMKIT_ERR(ParseError) << path << ":" << line_no
                            << ": expected 3 or 4 tab-separated columns, got "
                            << cols.size();
    ManifestEntry e;
    e.utt_id = cols[0];
    e.rel_path = cols[1];
    std::filesystem::path p(cols[1]);
    e.path = p.is_absolute() ? p.string() : (base / p).string();
    e.label = cols[2];
    if (e.label != "bonafide" && e.label != "spoof")
      CMKIT_ERR(ParseError) << path << ":" << line_no << ": unknown label '"
                            << e.label << "'";
    if (cols.size() == 4) e.corruption_json = cols[3];
    if (!seen.insert(e.utt_id).second)
      CMKIT_ERR(ParseError) << path << ":" << line_no
                            << ": duplicate utt_id '" << e.utt_id << "'";
    out.push_back(std::move(e));
  }
  return out;
}

void WriteManifest(const std::string &path,
                   const std::vector<ManifestEntry> &entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) CMKIT_ERR(IoError) << "cannot open manifest for writing: " << path;
  for (const auto &e : entries) {
    os << e.utt_id << '\t' << e.rel_path << '\t' << e.label;
    if (!e.corruption_json.empty()) os << '\t' << e.corruption_json;
    os << '\n';
  }
  if (!os) CMKIT_ERR(IoError) << "short write: " << path;
}

}  // namespace cmkit
