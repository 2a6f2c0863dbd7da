#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "compgrid/analysis.hpp"
#include "compgrid/baselines.hpp"
#include "compgrid/records.hpp"
#include "compgrid/store.hpp"

namespace compgrid {

/// Everything `analyze` consumes. Trajectories name their test-set board in
/// `board_id` and their player in `actor_id`; within one actor they are in
/// play order.
struct AnalysisInputs {
  std::map<Distribution, TestSet> test_sets;
  /// actor kind (e.g. "agent", "human") -> distribution -> trajectories
  std::map<std::string, std::map<Distribution, std::vector<Trajectory>>> trajectories;
  /// distribution -> heuristic runs keyed by board id
  std::map<Distribution, std::map<std::string, HeuristicRun>> heuristic;
};

struct CsvRow {
  std::string board_id;
  std::string group;
  std::string metric;
  double value = 0.0;
};

struct AnalysisReport {
  std::vector<Comparison> tables;
  std::vector<CsvRow> rows;
  /// Boards whose heuristic std is zero (excluded from z-score aggregates).
  std::size_t degenerate_boards = 0;
};

/// Builds the comparison tables: blue counts per distribution, trial-half
/// success rates, the compositional-passing split of the null test set,
/// z-scores against the neighbour heuristic, and trial-number correlations.
AnalysisReport analyze(const AnalysisInputs& inputs, std::uint64_t seed, std::size_t resamples = kDefaultResamples);

std::vector<Json> report_records(const AnalysisReport& report);
std::string report_csv(const AnalysisReport& report);
/// Fixed-width human-readable table.
std::string report_table(const AnalysisReport& report);

}  // namespace compgrid
