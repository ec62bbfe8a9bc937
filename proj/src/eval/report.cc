// eval/report.cc

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

#include "eval/report.h"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "aug/testsets.h"

namespace cmkit {

std::string ConditionDisplayName(const std::string &condition) {
  if (condition.rfind("rt60_", 0) == 0) {
    int value = std::atoi(condition.substr(5).c_str());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "RT60 %.2f s", value / 100.0);
    return buf;
  }
  size_t us = condition.rfind('_');
  if (us != std::string::npos && condition.size() > us + 2 &&
      condition.substr(condition.size() - 2) == "db") {
    std::string kind = condition.substr(0, us);
    std::string db = condition.substr(us + 1, condition.size() - us - 3);
    kind[0] = static_cast<char>(std::toupper(kind[0]));
    return kind + " " + db + " dB";
  }
  return condition;
}

ReportTable BuildConditionReport(
    const std::vector<std::string> &systems,
    const std::map<std::string, std::map<std::string, real>> &eers) {
  ReportTable table;
  table.systems = systems;
  for (const std::string &cond : CanonicalConditionNames()) {
    bool any = false;
    for (const std::string &sys : systems) {
      auto sit = eers.find(sys);
      if (sit != eers.end() && sit->second.count(cond)) any = true;
    }
    if (!any) continue;
    table.conditions.push_back(cond);
    std::vector<std::optional<real>> row;
    for (const std::string &sys : systems) {
      auto sit = eers.find(sys);
      if (sit != eers.end() && sit->second.count(cond)) {
        row.push_back(sit->second.at(cond));
      } else {
        row.push_back(std::nullopt);
        table.warnings.push_back("missing condition '" + cond +
                                 "' for system '" + sys + "'");
      }
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

namespace {

std::string Cell(const std::optional<real> &eer) {
  if (!eer.has_value()) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * (*eer));
  return buf;
}

}  // namespace

std::string RenderReportText(const ReportTable &table) {
  size_t label_width = 12;
  for (const auto &cond : table.conditions)
    label_width = std::max(label_width, ConditionDisplayName(cond).size());
  std::vector<size_t> widths;
  for (const auto &sys : table.systems)
    widths.push_back(std::max<size_t>(sys.size(), 6));

  std::ostringstream os;
  os << "%EER by condition\n";
  os << std::string(label_width, ' ');
  for (size_t c = 0; c < table.systems.size(); ++c) {
    os << "  ";
    os << std::string(widths[c] - table.systems[c].size(), ' ')
       << table.systems[c];
  }
  os << '\n';
  for (size_t r = 0; r < table.conditions.size(); ++r) {
    std::string label = ConditionDisplayName(table.conditions[r]);
    os << label << std::string(label_width - label.size(), ' ');
    for (size_t c = 0; c < table.systems.size(); ++c) {
      std::string cell = Cell(table.cells[r][c]);
      os << "  " << std::string(widths[c] - cell.size(), ' ') << cell;
    }
    os << '\n';
  }
  for (const auto &w : table.warnings) os << "# warning: " << w << '\n';
  return os.str();
}

std::string RenderReportTsv(const ReportTable &table) {
  std::ostringstream os;
  os << "condition";
  for (const auto &sys : table.systems) os << '\t' << sys;
  os << '\n';
  for (size_t r = 0; r < table.conditions.size(); ++r) {
    os << table.conditions[r];
    for (size_t c = 0; c < table.systems.size(); ++c)
      os << '\t' << Cell(table.cells[r][c]);
    os << '\n';
  }
  return os.str();
}

}  // namespace cmkit
