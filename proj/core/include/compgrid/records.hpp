#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "compgrid/analysis.hpp"
#include "compgrid/baselines.hpp"
#include "compgrid/board.hpp"
#include "compgrid/env.hpp"

namespace compgrid {

using Json = nlohmann::json;

/// FNV-1a 64-bit hash of the compact JSON text, as 16 hex digits.
std::string config_hash(const Json& config);

/// {"header": {"command", "config", "config_hash"}}; every artifact starts with one.
Json make_header(const std::string& command, const Json& config);
bool is_header(const Json& record);

/// A board plus any fields the reader did not recognise (kept for round-trips).
struct BoardRecord {
  Board board;
  Json extra = Json::object();

  friend bool operator==(const BoardRecord&, const BoardRecord&) = default;
};

Json board_to_json(const Board& board);
Json board_record_to_json(const BoardRecord& record);
/// Throws ParseError naming the offending field, ValidationError if the start is not red.
BoardRecord board_record_from_json(const Json& j, std::size_t line = 0);

Json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j, std::size_t line = 0);

Json heuristic_run_to_json(const HeuristicRun& run);
HeuristicRun heuristic_run_from_json(const Json& j, std::size_t line = 0);

Json comparison_to_json(const Comparison& c);
Json ising_to_json(const IsingStats& s);

// ---------------------------------------------------------------------------
// Line-record files: one JSON object per line.

/// Writes the header (if non-null) then every record, each on its own line.
void write_records(const std::filesystem::path& path, const Json& header, const std::vector<Json>& records);
void write_records(std::ostream& out, const Json& header, const std::vector<Json>& records);

struct LineRecord {
  std::size_t line = 0;
  Json value;
};

/// Non-header records with their 1-based line numbers. Blank lines are skipped;
/// malformed JSON throws ParseError with the line number. A missing file throws Error.
std::vector<LineRecord> read_records(const std::filesystem::path& path);
std::vector<LineRecord> read_records(std::istream& in);

/// The header record of a file, or null when it has none.
Json read_header(const std::filesystem::path& path);

}  // namespace compgrid
