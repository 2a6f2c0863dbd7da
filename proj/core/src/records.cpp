#include "compgrid/records.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "compgrid/error.hpp"

namespace compgrid {

std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json make_header(const std::string& command, const Json& config) {
  return Json{{"header", {{"command", command}, {"config", config}, {"config_hash", config_hash(config)}}}};
}

bool is_header(const Json& record) { return record.is_object() && record.contains("header"); }

namespace {

template <class T>
T field(const Json& j, const char* name, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "<record>", "expected an object");
  const auto it = j.find(name);
  if (it == j.end()) throw ParseError(line, name, "missing");
  try {
    return it->template get<T>();
  } catch (const Json::exception& e) {
    throw ParseError(line, name, e.what());
  }
}

Json pos_to_json(Pos p) { return Json::array({p.row, p.col}); }

Pos pos_from_json(const Json& j, const char* name, std::size_t line) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw ParseError(line, name, "expected [row, col]");
  }
  const Pos p{j[0].get<int>(), j[1].get<int>()};
  if (!p.in_bounds()) throw ParseError(line, name, "position outside the 7x7 grid");
  return p;
}

}  // namespace

Json board_to_json(const Board& board) {
  return Json{{"grid", grid_string(board.red)},
              {"start", pos_to_json(board.start)},
              {"provenance", std::string(to_string(board.provenance))}};
}

Json board_record_to_json(const BoardRecord& record) {
  Json j = record.extra.is_object() ? record.extra : Json::object();
  const Json board = board_to_json(record.board);
  for (const auto& [k, v] : board.items()) j[k] = v;
  return j;
}

BoardRecord board_record_from_json(const Json& j, std::size_t line) {
  BoardRecord r;
  const auto grid = field<std::string>(j, "grid", line);
  const auto mask = parse_grid_string(grid);
  if (!mask) throw ParseError(line, "grid", "expected 49 characters of 'R'/'B', got " + std::to_string(grid.size()));
  r.board.red = *mask;
  if (!j.contains("start")) throw ParseError(line, "start", "missing");
  r.board.start = pos_from_json(j["start"], "start", line);
  const auto prov = provenance_from_string(field<std::string>(j, "provenance", line));
  if (!prov) throw ParseError(line, "provenance", "unknown provenance");
  r.board.provenance = *prov;
  try {
    validate_board(r.board);
  } catch (const Error& e) {
    throw ValidationError("line " + std::to_string(line) + ": " + e.what());
  }
  for (auto& [k, v] : j.items()) {
    if (k != "grid" && k != "start" && k != "provenance") r.extra[k] = v;
  }
  return r;
}

Json trajectory_to_json(const Trajectory& t) {
  Json moves = Json::array();
  for (const Move& m : t.moves) moves.push_back({m.pos.row, m.pos.col, std::string(to_string(m.outcome)), m.reward});
  return Json{{"board_id", t.board_id},   {"actor_id", t.actor_id},       {"moves", moves},
              {"total_reward", t.total_reward}, {"blue_count", t.blue_count}, {"truncated", t.truncated}};
}

Trajectory trajectory_from_json(const Json& j, std::size_t line) {
  Trajectory t;
  t.board_id = field<std::string>(j, "board_id", line);
  t.actor_id = field<std::string>(j, "actor_id", line);
  const auto moves = field<Json>(j, "moves", line);
  if (!moves.is_array()) throw ParseError(line, "moves", "expected an array");
  for (const Json& m : moves) {
    if (!m.is_array() || m.size() != 4) throw ParseError(line, "moves", "expected [row, col, outcome, reward]");
    const Pos p = pos_from_json(Json::array({m[0], m[1]}), "moves", line);
    const auto outcome = m[2].is_string() ? outcome_from_string(m[2].get<std::string>()) : std::nullopt;
    if (!outcome || !m[3].is_number_integer()) throw ParseError(line, "moves", "bad outcome or reward");
    t.moves.push_back(Move{p, *outcome, m[3].get<int>()});
  }
  t.total_reward = field<int>(j, "total_reward", line);
  t.blue_count = field<int>(j, "blue_count", line);
  t.truncated = field<bool>(j, "truncated", line);
  return t;
}

Json heuristic_run_to_json(const HeuristicRun& run) {
  return Json{{"board_id", run.board_id}, {"n", run.repetitions}, {"mean", run.mean},
              {"std", run.std},           {"scores", run.scores}};
}

HeuristicRun heuristic_run_from_json(const Json& j, std::size_t line) {
  HeuristicRun run;
  run.board_id = field<std::string>(j, "board_id", line);
  run.repetitions = field<int>(j, "n", line);
  run.mean = field<double>(j, "mean", line);
  run.std = field<double>(j, "std", line);
  run.scores = field<std::vector<int>>(j, "scores", line);
  return run;
}

Json comparison_to_json(const Comparison& c) {
  auto group = [](const GroupSummary& g) {
    Json j{{"name", g.name}, {"n", g.n}};
    if (g.n > 0) {
      j["mean"] = g.mean;
      j["ci"] = {g.ci.lower, g.ci.upper};
    }
    return j;
  };
  Json j{{"metric", c.metric}, {"a", group(c.a)}, {"b", group(c.b)}};
  j["p_value"] = c.p_value ? Json(*c.p_value) : Json(nullptr);
  return j;
}

Json ising_to_json(const IsingStats& s) { return Json::array({s.order0, s.order1, s.order2}); }

void write_records(std::ostream& out, const Json& header, const std::vector<Json>& records) {
  if (!header.is_null()) out << header.dump() << '\n';
  for (const Json& r : records) out << r.dump() << '\n';
}

void write_records(const std::filesystem::path& path, const Json& header, const std::vector<Json>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_records(out, header, records);
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<LineRecord> read_records(std::istream& in) {
  std::vector<LineRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError(line, "<record>", e.what());
    }
    if (is_header(j)) continue;
    out.push_back({line, std::move(j)});
  }
  return out;
}

std::vector<LineRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_records(in);
}

Json read_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string text;
  while (std::getline(in, text)) {
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(text);
      return is_header(j) ? j : Json();
    } catch (const Json::parse_error&) {
      return Json();
    }
  }
  return Json();
}

}  // namespace compgrid
