// Copyright 2026 The sqlpref Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SQLPREF_CORE_SVG_CHART_HPP_
#define SQLPREF_CORE_SVG_CHART_HPP_

#include <string>
#include <vector>

namespace sqlpref {

struct ChartSeries {
  std::string name;
  std::vector<double> values;  // one per x label
};

// Minimal standalone SVG line chart with a legend.
std::string LineChartSvg(const std::string& title, const std::vector<std::string>& x_labels,
                         const std::vector<ChartSeries>& series);

}  // namespace sqlpref

#endif  // SQLPREF_CORE_SVG_CHART_HPP_
