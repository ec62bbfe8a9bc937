// config/protocol.h

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

#ifndef CMKIT_CONFIG_PROTOCOL_H_
#define CMKIT_CONFIG_PROTOCOL_H_

#include <string>
#include <vector>

#include "config/manifest.h"

namespace cmkit {

// One line of a five-column trial protocol: `SPK UTT - SYS KEY` with KEY
// restricted to the literals bonafide and spoof.
struct ProtocolEntry {
  std::string speaker_id;
  std::string utt_id;
  std::string system_id;  // attack tag, or "-"
  std::string key;        // "bonafide" | "spoof"

  bool IsBonafide() const { return key == "bonafide"; }
};

// Order-preserving parse; duplicate utt_id or an unknown key literal is a
// ParseError carrying the line number.
std::vector<ProtocolEntry> ParseProtocol(const std::string &path);

// Pairs protocol entries with `<wav_dir>/<utt_id>.wav`.
std::vector<ManifestEntry> ManifestFromProtocol(
    const std::vector<ProtocolEntry> &entries, const std::string &wav_dir);

}  // namespace cmkit

#endif  // CMKIT_CONFIG_PROTOCOL_H_
