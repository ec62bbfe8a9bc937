// eval/report.h

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

#ifndef CMKIT_EVAL_REPORT_H_
#define CMKIT_EVAL_REPORT_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eval/eer.h"

namespace cmkit {

// Condition-by-system EER table in the canonical condition order
// (babble/music/noise at 20..0 dB, then RT60 0.25..1 s).
struct ReportTable {
  std::vector<std::string> systems;     // column order as given
  std::vector<std::string> conditions;  // canonical order
  // cells[row][col]: EER fraction; missing cells are empty optionals
  std::vector<std::vector<std::optional<real>>> cells;
  std::vector<std::string> warnings;
};

// "babble_20db" -> "Babble 20 dB", "rt60_050" -> "RT60 0.50 s".
std::string ConditionDisplayName(const std::string &condition);

// eers[system][condition] = EER fraction.  Conditions that appear for no
// system are dropped; a hole for one system only becomes a blank cell and
// a warning.
ReportTable BuildConditionReport(
    const std::vector<std::string> &systems,
    const std::map<std::string, std::map<std::string, real>> &eers);

// Aligned text, EER as percent with 2 decimals.
std::string RenderReportText(const ReportTable &table);
// Tab-separated variant with identical content.
std::string RenderReportTsv(const ReportTable &table);

}  // namespace cmkit

#endif  // CMKIT_EVAL_REPORT_H_
