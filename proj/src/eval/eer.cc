// eval/eer.cc

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

#include "eval/eer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace cmkit {

int64 ScoreSet::CountBonafide() const {
  int64 n = 0;
  for (const auto &e : entries) n += e.bonafide ? 1 : 0;
  return n;
}

int64 ScoreSet::CountSpoof() const {
  return static_cast<int64>(entries.size()) - CountBonafide();
}

void ScoreSet::ValidateForEer() const {
  for (const auto &e : entries)
    if (!std::isfinite(e.score))
      CMKIT_ERR(InvalidInputError) << "non-finite score for trial " << e.utt_id;
  if (CountBonafide() == 0)
    CMKIT_ERR(InvalidInputError) << "no bona fide trials in score set";
  if (CountSpoof() == 0)
    CMKIT_ERR(InvalidInputError) << "no spoof trials in score set";
}

EerResult ComputeEer(const ScoreSet &scores) {
  scores.ValidateForEer();
  // one pass over the distinct score values with running class counts
  std::map<real, std::pair<int64, int64>> by_value;  // value -> (bona, spoof)
  for (const auto &e : scores.entries) {
    auto &c = by_value[e.score];
    (e.bonafide ? c.first : c.second)++;
  }
  std::vector<real> values;
  std::vector<std::pair<int64, int64>> counts;
  for (const auto &[v, c] : by_value) {
    values.push_back(v);
    counts.push_back(c);
  }
  int64 m = static_cast<int64>(values.size());
  int64 n_bona = scores.CountBonafide();
  int64 n_spoof = scores.CountSpoof();

  // cut c = number of distinct values <= threshold; thresholds sit below
  // the minimum (c = 0), at midpoints (0 < c < m), and at the maximum.
  auto threshold_at = [&](int64 c) {
    if (c == 0) return values[0] - 1.0;
    if (c == m) return values[static_cast<size_t>(m - 1)];
    return 0.5 * (values[static_cast<size_t>(c - 1)] +
                  values[static_cast<size_t>(c)]);
  };

  int64 bona_le = 0, spoof_le = 0;
  real prev_fa = 1.0, prev_miss = 0.0, prev_thr = threshold_at(0);
  for (int64 c = 0; c <= m; ++c) {
    if (c > 0) {
      bona_le += counts[static_cast<size_t>(c - 1)].first;
      spoof_le += counts[static_cast<size_t>(c - 1)].second;
    }
    real fa =
        static_cast<real>(n_spoof - spoof_le) / static_cast<real>(n_spoof);
    real miss = static_cast<real>(bona_le) / static_cast<real>(n_bona);
    real d = fa - miss;
    if (d <= 0.0) {
      real thr = threshold_at(c);
      if (d == 0.0) return {fa, thr};
      real d_prev = prev_fa - prev_miss;
      real t = d_prev / (d_prev - d);
      EerResult res;
      res.eer = prev_fa + t * (fa - prev_fa);
      res.threshold = prev_thr + t * (thr - prev_thr);
      return res;
    }
    prev_fa = fa;
    prev_miss = miss;
    prev_thr = threshold_at(c);
  }
  // d starts at +1 and ends at -1, so the crossing always exists.
  CMKIT_ERR(NumericError) << "equal-error crossing not found";
}

void WriteScores(const std::string &path, const ScoreSet &scores) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) CMKIT_ERR(IoError) << "cannot open score file for writing: " << path;
  char buf[64];
  for (const auto &e : scores.entries) {
    std::snprintf(buf, sizeof(buf), "%.6f", e.score);
    os << e.utt_id << ' ' << buf << '\n';
  }
  if (!os) CMKIT_ERR(IoError) << "short write: " << path;
}

ScoreSet ReadScores(const std::string &path,
                    const std::vector<std::pair<std::string, bool>> &labels) {
  std::ifstream in(path);
  if (!in) CMKIT_ERR(IoError) << "cannot open score file: " << path;
  std::map<std::string, bool> label_map(labels.begin(), labels.end());
  ScoreSet set;
  std::set<std::string> seen;
  std::string line;
  int32 line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t sp = line.find(' ');
    if (sp == std::string::npos)
      CMKIT_ERR(ParseError) << path << ":" << line_no
                            << ": expected `utt_id score`";
    ScoreEntry e;
    e.utt_id = line.substr(0, sp);
    try {
      e.score = std::stod(line.substr(sp + 1));
    } catch (const std::exception &) {
      CMKIT_ERR(ParseError) << path << ":" << line_no
                            << ": score is not a number";
    }
    auto it = label_map.find(e.utt_id);
    if (it == label_map.end())
      CMKIT_ERR(ParseError) << path << ":" << line_no << ": trial '"
                            << e.utt_id << "' has no label";
    e.bonafide = it->second;
    if (!seen.insert(e.utt_id).second)
      CMKIT_ERR(ParseError) << path << ":" << line_no
                            << ": duplicate trial '" << e.utt_id << "'";
    set.entries.push_back(std::move(e));
  }
  return set;
}

}  // namespace cmkit
