#include "compgrid/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "compgrid/error.hpp"

namespace compgrid {

void save_board_records(const std::filesystem::path& path, const std::vector<BoardRecord>& boards,
                        const Json& header) {
  std::vector<Json> records;
  records.reserve(boards.size());
  for (const auto& b : boards) records.push_back(board_record_to_json(b));
  write_records(path, header, records);
}

void save_boards(const std::filesystem::path& path, const std::vector<Board>& boards, const Json& header) {
  std::vector<Json> records;
  records.reserve(boards.size());
  for (std::size_t i = 0; i < boards.size(); ++i) {
    Json j = board_to_json(boards[i]);
    j["id"] = std::to_string(i);
    records.push_back(std::move(j));
  }
  write_records(path, header, records);
}

std::vector<BoardRecord> load_board_records(const std::filesystem::path& path) {
  std::vector<BoardRecord> out;
  for (const auto& rec : read_records(path)) out.push_back(board_record_from_json(rec.value, rec.line));
  return out;
}

std::vector<Board> load_boards(const std::filesystem::path& path) {
  std::vector<Board> out;
  for (auto& r : load_board_records(path)) out.push_back(r.board);
  return out;
}

std::string_view to_string(Distribution d) { return d == Distribution::Compositional ? "compositional" : "null"; }

std::optional<Distribution> distribution_from_string(std::string_view s) {
  if (s == "compositional" || s == "comp") return Distribution::Compositional;
  if (s == "null") return Distribution::Null;
  return std::nullopt;
}

void save_test_set(const std::filesystem::path& path, const TestSet& set, const Json& header) {
  std::vector<Json> records;
  records.push_back({{"testset",
                      {{"name", set.name},
                       {"distribution", std::string(to_string(set.distribution))},
                       {"seed", set.seed},
                       {"n", set.boards.size()}}}});
  for (std::size_t i = 0; i < set.boards.size(); ++i) {
    Json j = board_to_json(set.boards[i]);
    j["id"] = std::to_string(i);
    records.push_back(std::move(j));
  }
  write_records(path, header, records);
}

TestSet load_test_set(const std::filesystem::path& path) {
  const auto records = read_records(path);
  if (records.empty() || !records.front().value.contains("testset")) {
    throw ParseError(records.empty() ? 1 : records.front().line, "testset", "missing test-set record");
  }
  const Json& meta = records.front().value["testset"];
  TestSet set;
  try {
    set.name = meta.at("name").get<std::string>();
    const auto d = distribution_from_string(meta.at("distribution").get<std::string>());
    if (!d) throw ParseError(records.front().line, "distribution", "unknown distribution");
    set.distribution = *d;
    set.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw ParseError(records.front().line, "testset", e.what());
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    set.boards.push_back(board_record_from_json(records[i].value, records[i].line).board);
  }
  return set;
}

MaskSet masks_of(const std::vector<Board>& boards) {
  MaskSet out;
  for (const Board& b : boards) out.insert(b.red);
  return out;
}

namespace {

std::vector<Board> draw_distinct(const BoardSampler& sampler, Rng& rng, std::size_t n, MaskSet& used) {
  std::vector<Board> out;
  int misses = 0;
  while (out.size() < n) {
    Board b = sampler(rng);
    if (used.insert(b.red).second) {
      out.push_back(b);
      misses = 0;
    } else if (++misses >= kSamplerRetryCap) {
      throw RetryCapError("could not draw enough boards with distinct red masks");
    }
  }
  return out;
}

}  // namespace

TestSets build_test_sets(const BoardSampler& comp, const BoardSampler& null, std::uint64_t seed, std::size_t n_test,
                         std::size_t n_validation) {
  const Rng base(seed);
  TestSets sets;
  auto build = [&](const BoardSampler& sampler, Distribution d, std::uint64_t stream, TestSet& test, TestSet& val) {
    Rng rng = base.split(stream);
    MaskSet used;
    test = TestSet{std::string(to_string(d)) + "-test", d, seed, draw_distinct(sampler, rng, n_test, used)};
    val = TestSet{std::string(to_string(d)) + "-validation", d, seed, draw_distinct(sampler, rng, n_validation, used)};
  };
  build(comp, Distribution::Compositional, 0, sets.comp_test, sets.comp_validation);
  build(null, Distribution::Null, 1, sets.null_test, sets.null_validation);
  return sets;
}

BoardSampler excluding(BoardSampler sampler, MaskSet excluded) {
  return [sampler = std::move(sampler), excluded = std::move(excluded)](Rng& rng) {
    for (int i = 0; i < kSamplerRetryCap; ++i) {
      Board b = sampler(rng);
      if (!excluded.contains(b.red)) return b;
    }
    throw RetryCapError("training sampler only produced excluded boards");
  };
}

// ---------------------------------------------------------------------------
// Sessions

namespace {

const Board& board_at(const SessionRecord& r, const TestSet& set, int position) {
  const int idx = r.board_order.at(static_cast<std::size_t>(position));
  if (idx < 0 || static_cast<std::size_t>(idx) >= set.boards.size()) {
    throw ValidationError("session board order refers past the test set");
  }
  return set.boards[static_cast<std::size_t>(idx)];
}

/// Moves past finished boards (including ones already done at reset).
void settle(SessionProgress& p, const SessionRecord& r, const TestSet& set) {
  while (!p.completed && p.state.finished()) {
    ++p.board;
    if (static_cast<std::size_t>(p.board) >= r.board_order.size()) {
      p.completed = true;
      p.board = static_cast<int>(r.board_order.size()) - 1;
    } else {
      p.state = reset(board_at(r, set, p.board));
    }
  }
}

SessionProgress initial_progress(const SessionRecord& r, const TestSet& set) {
  if (r.board_order.empty()) throw ValidationError("session has no boards");
  std::vector<int> sorted = r.board_order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != static_cast<int>(i)) throw ValidationError("board order is not a permutation");
  }
  SessionProgress p;
  p.state = reset(board_at(r, set, 0));
  settle(p, r, set);
  return p;
}

/// Applies one click; returns the event it produces.
SessionEvent apply_click(SessionProgress& p, const SessionRecord& r, const TestSet& set, Pos pos, double t) {
  if (p.completed) throw EpisodeFinishedError("session already completed");
  SessionEvent ev;
  ev.timestamp = t;
  ev.board = p.board;
  ev.pos = pos;
  ev.reward = apply(p.state, pos, &ev.outcome);
  p.points += ev.reward;
  settle(p, r, set);
  return ev;
}

Json event_to_json(const SessionEvent& e) {
  return Json::array({e.timestamp, e.board, e.pos.row, e.pos.col, std::string(to_string(e.outcome)), e.reward});
}

SessionEvent event_from_json(const Json& j, std::size_t line) {
  if (!j.is_array() || j.size() != 6) throw ParseError(line, "event", "expected [t, board, row, col, outcome, reward]");
  try {
    SessionEvent e;
    e.timestamp = j[0].get<double>();
    e.board = j[1].get<int>();
    e.pos = Pos{j[2].get<int>(), j[3].get<int>()};
    const auto o = outcome_from_string(j[4].get<std::string>());
    if (!o) throw ParseError(line, "event", "unknown outcome");
    e.outcome = *o;
    e.reward = j[5].get<int>();
    return e;
  } catch (const Json::exception& ex) {
    throw ParseError(line, "event", ex.what());
  }
}

}  // namespace

SessionProgress replay_session(const SessionRecord& record, const TestSet& set) {
  SessionProgress p = initial_progress(record, set);
  for (const SessionEvent& e : record.events) {
    if (p.completed) throw ValidationError("event after session completion");
    if (e.board != p.board) throw ValidationError("event names board " + std::to_string(e.board) + ", expected " +
                                                  std::to_string(p.board));
    const SessionEvent got = apply_click(p, record, set, e.pos, e.timestamp);
    if (got.outcome != e.outcome || got.reward != e.reward) {
      throw ValidationError("event outcome disagrees with the hidden board");
    }
  }
  return p;
}

std::vector<Trajectory> session_trajectories(const SessionRecord& record, const TestSet& set) {
  std::vector<Trajectory> out;
  for (std::size_t pos = 0; pos < record.board_order.size(); ++pos) {
    Trajectory t;
    t.board_id = std::to_string(record.board_order[pos]);
    t.actor_id = record.id;
    RevealState state = reset(board_at(record, set, static_cast<int>(pos)));
    bool any = false;
    for (const SessionEvent& e : record.events) {
      if (e.board != static_cast<int>(pos)) continue;
      any = true;
      Outcome o{};
      const int reward = apply(state, e.pos, &o);
      t.record(Move{e.pos, o, reward});
    }
    t.truncated = state.truncated;
    if (any || state.done) out.push_back(std::move(t));
  }
  return out;
}

Json session_to_json(const SessionRecord& record, const TestSet* set) {
  Json events = Json::array();
  for (const auto& e : record.events) events.push_back(event_to_json(e));
  Json j{{"session",
          {{"id", record.id},
           {"distribution", std::string(to_string(record.distribution))},
           {"board_order", record.board_order},
           {"completed", record.completed},
           {"events", events}}}};
  if (set) {
    Json boards = Json::array();
    for (const Board& b : set->boards) boards.push_back(board_to_json(b));
    j["testset"] = set->name;
    j["boards"] = boards;
  }
  return j;
}

SessionRecord session_from_json(const Json& j, std::size_t line) {
  if (!j.contains("session")) throw ParseError(line, "session", "missing");
  const Json& s = j["session"];
  SessionRecord r;
  try {
    r.id = s.at("id").get<std::string>();
    const auto d = distribution_from_string(s.at("distribution").get<std::string>());
    if (!d) throw ParseError(line, "distribution", "unknown distribution");
    r.distribution = *d;
    r.board_order = s.at("board_order").get<std::vector<int>>();
    r.completed = s.value("completed", false);
  } catch (const Json::exception& e) {
    throw ParseError(line, "session", e.what());
  }
  if (s.contains("events")) {
    for (const Json& e : s["events"]) r.events.push_back(event_from_json(e, line));
  }
  return r;
}

namespace {

void append_line_durably(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw Error("cannot open " + path.string());
  const std::string text = line + "\n";
  const char* data = text.data();
  std::size_t left = text.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, data, left);
    if (n < 0) {
      ::close(fd);
      throw Error("write failed for " + path.string());
    }
    data += n;
    left -= static_cast<std::size_t>(n);
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw Error("fsync failed for " + path.string());
}

std::string random_id(Rng& rng) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path dir, std::map<Distribution, TestSet> test_sets)
    : dir_(std::move(dir)), test_sets_(std::move(test_sets)) {
  std::filesystem::create_directories(dir_);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const auto records = read_records(file);
    if (records.empty()) continue;
    SessionRecord r = session_from_json(records.front().value, records.front().line);
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (!records[i].value.contains("event")) throw ParseError(records[i].line, "event", "missing");
      r.events.push_back(event_from_json(records[i].value["event"], records[i].line));
    }
    const auto it = test_sets_.find(r.distribution);
    if (it == test_sets_.end()) continue;
    auto s = std::make_shared<Slot>();
    s->progress = replay_session(r, it->second);
    r.completed = s->progress.completed;
    s->record = std::move(r);
    slots_[s->record.id] = s;
  }
}

std::filesystem::path SessionStore::file_for(const std::string& id) const { return dir_ / (id + ".jsonl"); }

std::shared_ptr<SessionStore::Slot> SessionStore::slot(const std::string& id) const {
  std::lock_guard lock(map_mutex_);
  const auto it = slots_.find(id);
  if (it == slots_.end()) throw UnknownSession("unknown session '" + id + "'");
  return it->second;
}

SessionRecord SessionStore::create(Distribution distribution, Rng& rng) {
  const auto it = test_sets_.find(distribution);
  if (it == test_sets_.end()) throw Error("no test set loaded for " + std::string(to_string(distribution)));
  auto s = std::make_shared<Slot>();
  s->record.distribution = distribution;
  s->record.board_order.resize(it->second.boards.size());
  std::iota(s->record.board_order.begin(), s->record.board_order.end(), 0);
  rng.shuffle(s->record.board_order.begin(), s->record.board_order.end());
  s->progress = initial_progress(s->record, it->second);
  s->record.completed = s->progress.completed;

  std::lock_guard lock(map_mutex_);
  do {
    s->record.id = random_id(rng);
  } while (slots_.contains(s->record.id) || std::filesystem::exists(file_for(s->record.id)));
  Json head = session_to_json(s->record);
  head["session"].erase("events");
  head["session"].erase("completed");
  append_line_durably(file_for(s->record.id), head.dump());
  slots_[s->record.id] = s;
  return s->record;
}

AppendResult SessionStore::append_event(const std::string& id, Pos pos, double timestamp) {
  if (!pos.in_bounds()) throw InvalidActionError("tile outside the 7x7 grid");
  const auto s = slot(id);
  std::lock_guard lock(s->mutex);
  if (s->progress.completed) throw SessionCompleted("session '" + id + "' is already complete");
  const TestSet& set = test_sets_.at(s->record.distribution);
  SessionProgress next = s->progress;
  const int board_before = next.board;
  AppendResult res;
  res.event = apply_click(next, s->record, set, pos, timestamp);
  append_line_durably(file_for(id), Json{{"event", event_to_json(res.event)}}.dump());
  s->progress = std::move(next);
  s->record.events.push_back(res.event);
  s->record.completed = s->progress.completed;
  res.board_done = s->progress.completed || s->progress.board != board_before;
  res.session_done = s->progress.completed;
  res.points = s->progress.points;
  return res;
}

std::optional<SessionRecord> SessionStore::record(const std::string& id) const {
  try {
    const auto s = slot(id);
    std::lock_guard lock(s->mutex);
    return s->record;
  } catch (const UnknownSession&) {
    return std::nullopt;
  }
}

SessionProgress SessionStore::progress(const std::string& id) const {
  const auto s = slot(id);
  std::lock_guard lock(s->mutex);
  return s->progress;
}

std::vector<SessionRecord> SessionStore::sessions(bool include_incomplete) const {
  std::vector<std::shared_ptr<Slot>> all;
  {
    std::lock_guard lock(map_mutex_);
    for (const auto& [id, s] : slots_) all.push_back(s);
  }
  std::vector<SessionRecord> out;
  for (const auto& s : all) {
    std::lock_guard lock(s->mutex);
    if (include_incomplete || s->record.completed) out.push_back(s->record);
  }
  return out;
}

std::vector<Json> SessionStore::export_records(bool include_incomplete) const {
  std::vector<Json> out;
  for (const SessionRecord& r : sessions(include_incomplete)) {
    out.push_back(session_to_json(r, &test_sets_.at(r.distribution)));
  }
  return out;
}

std::vector<ExportedSession> load_export(const std::filesystem::path& path) {
  std::vector<ExportedSession> out;
  for (const auto& rec : read_records(path)) {
    ExportedSession es;
    es.record = session_from_json(rec.value, rec.line);
    es.boards.distribution = es.record.distribution;
    es.boards.name = rec.value.value("testset", "");
    if (!rec.value.contains("boards") || !rec.value["boards"].is_array()) {
      throw ParseError(rec.line, "boards", "export record has no boards");
    }
    for (const Json& b : rec.value["boards"]) es.boards.boards.push_back(board_record_from_json(b, rec.line).board);
    out.push_back(std::move(es));
  }
  return out;
}

}  // namespace compgrid
