// backend/manifest.h

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

#ifndef CMKIT_BACKEND_MANIFEST_H_
#define CMKIT_BACKEND_MANIFEST_H_

#include <map>
#include <string>
#include <vector>

#include "nnet/layers.h"

namespace cmkit {

// On-disk weight store: a directory holding index.txt with one line per
// array (`name<TAB>dtype<TAB>shape`, shape as comma-separated dims) and a
// little-endian flat f64 binary `<name>.bin` per array.  Dotted parameter
// paths map directly to array names.
class WeightManifest {
 public:
  static WeightManifest Open(const std::string &dir);

  const std::vector<std::string> &Names() const { return names_; }
  bool Has(const std::string &name) const;
  const std::vector<int64> &Shape(const std::string &name) const;
  // Lazily reads and caches the array payload.
  const Tensor &Get(const std::string &name) const;
  const std::string &dir() const { return dir_; }

 private:
  std::string dir_;
  std::vector<std::string> names_;
  std::map<std::string, std::vector<int64>> shapes_;
  mutable std::map<std::string, Tensor> cache_;
};

// Writes every (name, tensor) pair; bit-exact round trip with Open/Get.
void WriteManifestArrays(
    const std::vector<std::pair<std::string, nn::Variable>> &arrays,
    const std::string &dir);

// All parameters and buffers of a module, optionally restricted to names
// starting with `prefix`.
void ExportModule(const nn::Module &module, const std::string &dir,
                  const std::string &prefix = "");

// Two-column text file `external_name<TAB>internal_name`.
std::map<std::string, std::string> ReadNameMap(const std::string &path);

struct LoadReport {
  std::vector<std::string> loaded;
  std::vector<std::string> skipped;  // manifest arrays not used
  std::vector<std::string> missing;  // wanted but absent from the manifest
  std::string Summary() const;
};

// Overwrites every model array named by the mapping (external manifest
// name -> internal parameter path).  An empty mapping means identity over
// the manifest names.  Arrays under `required_prefix` in the model that
// receive no value are reported missing, and abort the load unless
// allow_partial.  A shape mismatch is always a hard error naming the
// parameter.
LoadReport LoadPretrained(const WeightManifest &manifest, nn::Module *model,
                          const std::map<std::string, std::string> &name_map,
                          const std::string &required_prefix,
                          bool allow_partial);

}  // namespace cmkit

#endif  // CMKIT_BACKEND_MANIFEST_H_
