// backend/manifest.cc

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

#include "backend/manifest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace cmkit {

namespace fs = std::filesystem;

namespace {

std::string ShapeToString(const std::vector<int64> &shape) {
  if (shape.empty()) return "scalar";
  std::string s;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s;
}

std::vector<int64> ShapeFromString(const std::string &s) {
  if (s == "scalar") return {};
  std::vector<int64> shape;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) shape.push_back(std::stoll(tok));
  return shape;
}

// Doubles are written as little-endian raw bytes; this code assumes a
// little-endian host (asserted at manifest open).
void CheckLittleEndian() {
  uint32 x = 1;
  unsigned char b;
  std::memcpy(&b, &x, 1);
  if (b != 1)
    CMKIT_ERR(IoError) << "weight manifests require a little-endian host";
}

}  // namespace

WeightManifest WeightManifest::Open(const std::string &dir) {
  CheckLittleEndian();
  WeightManifest m;
  m.dir_ = dir;
  std::ifstream in(fs::path(dir) / "index.txt");
  if (!in)
    CMKIT_ERR(IoError) << "cannot open weight manifest index: " << dir
                       << "/index.txt";
  std::string line;
  int32 line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = (t1 == std::string::npos) ? std::string::npos
                                          : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      CMKIT_ERR(ParseError) << dir << "/index.txt:" << line_no
                            << ": expected name<TAB>dtype<TAB>shape";
    std::string name = line.substr(0, t1);
    std::string dtype = line.substr(t1 + 1, t2 - t1 - 1);
    std::string shape = line.substr(t2 + 1);
    if (dtype != "f64")
      CMKIT_ERR(FormatError) << "unsupported dtype '" << dtype
                             << "' for array " << name;
    if (m.shapes_.count(name))
      CMKIT_ERR(ParseError) << dir << "/index.txt:" << line_no
                            << ": duplicate array name " << name;
    m.names_.push_back(name);
    m.shapes_[name] = ShapeFromString(shape);
  }
  return m;
}

bool WeightManifest::Has(const std::string &name) const {
  return shapes_.count(name) > 0;
}

const std::vector<int64> &WeightManifest::Shape(
    const std::string &name) const {
  auto it = shapes_.find(name);
  if (it == shapes_.end())
    CMKIT_ERR(InvalidInputError) << "manifest has no array named " << name;
  return it->second;
}

const Tensor &WeightManifest::Get(const std::string &name) const {
  auto it = cache_.find(name);
  if (it != cache_.end()) return it->second;
  const std::vector<int64> &shape = Shape(name);
  fs::path path = fs::path(dir_) / (name + ".bin");
  std::ifstream in(path, std::ios::binary);
  if (!in) CMKIT_ERR(IoError) << "cannot open array payload: " << path.string();
  Tensor t(shape);
  int64 n = t.NumElements();
  in.read(reinterpret_cast<char *>(t.data()),
          static_cast<std::streamsize>(n * sizeof(real)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(real)))
    CMKIT_ERR(FormatError) << "array payload " << path.string()
                           << " shorter than its declared shape";
  return cache_.emplace(name, std::move(t)).first->second;
}

void WriteManifestArrays(
    const std::vector<std::pair<std::string, nn::Variable>> &arrays,
    const std::string &dir) {
  CheckLittleEndian();
  fs::create_directories(dir);
  std::ofstream index(fs::path(dir) / "index.txt", std::ios::trunc);
  if (!index) CMKIT_ERR(IoError) << "cannot write manifest index in " << dir;
  std::set<std::string> seen;
  for (const auto &[name, var] : arrays) {
    if (!seen.insert(name).second)
      CMKIT_ERR(InvalidInputError) << "duplicate array name on export: "
                                   << name;
    const Tensor &t = var.Value();
    index << name << '\t' << "f64" << '\t' << ShapeToString(t.shape())
          << '\n';
    std::ofstream bin(fs::path(dir) / (name + ".bin"),
                      std::ios::binary | std::ios::trunc);
    if (!bin) CMKIT_ERR(IoError) << "cannot write array payload for " << name;
    bin.write(reinterpret_cast<const char *>(t.data()),
              static_cast<std::streamsize>(t.NumElements() *
                                           static_cast<int64>(sizeof(real))));
    if (!bin) CMKIT_ERR(IoError) << "short write for array " << name;
  }
}

void ExportModule(const nn::Module &module, const std::string &dir,
                  const std::string &prefix) {
  std::vector<std::pair<std::string, nn::Variable>> arrays;
  for (const auto &entry : module.NamedArrays())
    if (prefix.empty() || entry.first.rfind(prefix, 0) == 0)
      arrays.push_back(entry);
  if (arrays.empty())
    CMKIT_ERR(InvalidInputError)
        << "no arrays to export under prefix '" << prefix << "'";
  WriteManifestArrays(arrays, dir);
}

std::map<std::string, std::string> ReadNameMap(const std::string &path) {
  std::ifstream in(path);
  if (!in) CMKIT_ERR(IoError) << "cannot open name map: " << path;
  std::map<std::string, std::string> map;
  std::string line;
  int32 line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      CMKIT_ERR(ParseError) << path << ":" << line_no
                            << ": expected external<TAB>internal";
    map[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return map;
}

std::string LoadReport::Summary() const {
  std::ostringstream os;
  os << "loaded " << loaded.size() << ", skipped " << skipped.size()
     << ", missing " << missing.size();
  return os.str();
}

LoadReport LoadPretrained(const WeightManifest &manifest, nn::Module *model,
                          const std::map<std::string, std::string> &name_map,
                          const std::string &required_prefix,
                          bool allow_partial) {
  std::map<std::string, std::string> mapping = name_map;
  if (mapping.empty())
    for (const std::string &name : manifest.Names()) mapping[name] = name;

  std::map<std::string, nn::Variable> arrays;
  for (auto &entry : model->NamedArrays()) arrays.emplace(entry.first, entry.second);

  LoadReport report;
  std::set<std::string> assigned;
  for (const auto &[external, internal] : mapping) {
    if (!manifest.Has(external)) {
      report.missing.push_back(external);
      continue;
    }
    auto it = arrays.find(internal);
    if (it == arrays.end()) {
      report.skipped.push_back(external);
      continue;
    }
    const Tensor &src = manifest.Get(external);
    Tensor &dst = it->second.MutableValue();
    if (src.shape() != dst.shape())
      CMKIT_ERR(ShapeError)
          << "shape mismatch for parameter '" << internal << "': manifest "
          << src.ShapeString() << " vs model " << dst.ShapeString();
    dst = src;
    assigned.insert(internal);
    report.loaded.push_back(internal);
  }
  for (const std::string &name : manifest.Names())
    if (!mapping.count(name)) report.skipped.push_back(name);
  if (!required_prefix.empty()) {
    for (const auto &[name, var] : arrays)
      if (name.rfind(required_prefix, 0) == 0 && !assigned.count(name))
        report.missing.push_back(name);
  }
  if (!report.missing.empty() && !allow_partial) {
    std::string first = report.missing.front();
    CMKIT_ERR(InvalidInputError)
        << "pretrained load incomplete (" << report.missing.size()
        << " missing, first: " << first << "); pass --allow-partial to accept";
  }
  return report;
}

}  // namespace cmkit
