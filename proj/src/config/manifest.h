// config/manifest.h

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

#ifndef CMKIT_CONFIG_MANIFEST_H_
#define CMKIT_CONFIG_MANIFEST_H_

#include <string>
#include <vector>

#include "base/common.h"

namespace cmkit {

// One utterance of a dataset manifest:
//   utt_id <TAB> relative_path <TAB> label [<TAB> corruption_json]
// Labels are restricted to "bonafide" and "spoof".
struct ManifestEntry {
  std::string utt_id;
  std::string path;       // resolved against the manifest directory on read
  std::string rel_path;   // as written in the file
  std::string label;
  std::string corruption_json;  // empty when absent
};

std::vector<ManifestEntry> ReadManifest(const std::string &path);
// Writes rel_path (not the resolved path).
void WriteManifest(const std::string &path,
                   const std::vector<ManifestEntry> &entries);

}  // namespace cmkit

#endif  // CMKIT_CONFIG_MANIFEST_H_
