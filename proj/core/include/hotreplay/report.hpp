#pragma once

#include <string>
#include <vector>

#include "hotreplay/search.hpp"

namespace hotreplay::report {

// Figure-data CSVs, one file per experiment family:
//   speedups.csv          speedup per sampled variant
//   agreement.csv         replay vs normal hot cycles per verified variant
//   overhead.csv          normal vs captured run cycles
//   storage.csv           full-state vs snapshot bytes
//   replays_per_exec.csv  replays fitting in one full execution
// Every cell is computed from the report JSON alone.
struct FigureData {
  std::string filename;
  std::string csv;
};

std::vector<FigureData> figure_csvs(const std::vector<search::SearchReport>& reports);
void write_figure_csvs(const std::vector<search::SearchReport>& reports,
                       const std::string& out_dir);

std::string human_summary(const search::SearchReport& report);

}  // namespace hotreplay::report
