// config/protocol.cc

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

#include "config/protocol.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace cmkit {

std::vector<ProtocolEntry> ParseProtocol(const std::string &path) {
  std::ifstream in(path);
  if (!in) CMKIT_ERR(IoError) << "cannot open protocol: " << path;
  std::vector<ProtocolEntry> out;
  std::set<std::string> seen;
  std::string line;
  int32 line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> cols;
    std::string tok;
    while (ss >> tok) cols.push_back(tok);
    if (cols.size() != 5)
      CMKIT_ERR(ParseError) << path << ":" << line_no
                            << ": expected 5 whitespace-separated columns, "
                            << "got " << cols.size();
    ProtocolEntry e;
    e.speaker_id = cols[0];
    e.utt_id = cols[1];
    e.system_id = cols[3];
    e.key = cols[4];
    if (e.key != "bonafide" && e.key != "spoof")
      CMKIT_ERR(ParseError) << path << ":" << line_no << ": unknown key '"
                            << e.key << "' (expected bonafide or spoof)";
    if (!seen.insert(e.utt_id).second)
      CMKIT_ERR(ParseError) << path << ":" << line_no
                            << ": duplicate utt_id '" << e.utt_id << "'";
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> ManifestFromProtocol(
    const std::vector<ProtocolEntry> &entries, const std::string &wav_dir) {
  std::vector<ManifestEntry> out;
  for (const auto &e : entries) {
    ManifestEntry m;
    m.utt_id = e.utt_id;
    m.rel_path = e.utt_id + ".wav";
    m.path = (std::filesystem::path(wav_dir) / m.rel_path).string();
    m.label = e.key;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace cmkit
