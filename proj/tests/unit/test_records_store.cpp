#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "compgrid/error.hpp"
#include "compgrid/grammar.hpp"
#include "compgrid/records.hpp"
#include "compgrid/store.hpp"
#include "fixtures.hpp"

using namespace compgrid;
using compgrid::testing::board_of;
using compgrid::testing::TempDir;

namespace {

Board random_null_board(Rng& rng) {
  Board b;
  b.red = Mask::from_bits(rng());
  if (b.red.empty()) b.red.set(0);
  std::vector<int> reds;
  for (int i = 0; i < kTileCount; ++i) {
    if (b.red.test(i)) reds.push_back(i);
  }
  b.start = Pos::from_index(reds[rng.uniform_index(reds.size())]);
  return b;
}

TestSet small_set() {
  TestSet s;
  s.name = "compositional-test";
  s.distribution = Distribution::Compositional;
  s.seed = 1;
  s.boards = {board_of({{0, 0}, {0, 1}, {0, 2}}, Provenance::Chain), board_of({{3, 3}, {4, 3}}, Provenance::Tree),
              board_of({{6, 6}, {6, 5}}, Provenance::Loop)};
  return s;
}

/// Clicks every unrevealed red tile of the session's current board.
void finish_current_board(SessionStore& store, const std::string& id, const TestSet& set) {
  const SessionProgress p = store.progress(id);
  const SessionRecord r = *store.record(id);
  const Board& b = set.boards[static_cast<std::size_t>(r.board_order[static_cast<std::size_t>(p.board)])];
  for (int i = 0; i < kTileCount; ++i) {
    if (b.red.test(i) && p.state.at(Pos::from_index(i)) == Tile::Unrevealed) {
      store.append_event(id, Pos::from_index(i), 100.0 + i);
    }
  }
}

}  // namespace

TEST(Records, BoardRoundTripKeepsExtraFields) {
  BoardRecord r{board_of({{2, 2}, {2, 3}, {2, 4}}, Provenance::Chain), Json{{"probability", 0.25}, {"note", "x"}}};
  const Json j = board_record_to_json(r);
  EXPECT_EQ(j["grid"].get<std::string>().size(), 49u);
  EXPECT_EQ(board_record_from_json(j), r);
  EXPECT_EQ(board_record_from_json(Json::parse(j.dump())), r);
}

TEST(Records, BoardParseErrorsNameTheField) {
  Json j = board_to_json(board_of({{2, 2}, {2, 3}}));
  Json bad = j;
  bad["grid"] = std::string(50, 'B');
  try {
    board_record_from_json(bad, 7);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "grid");
    EXPECT_EQ(e.line(), 7u);
  }
  bad = j;
  bad.erase("start");
  try {
    board_record_from_json(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "start");
  }
  bad = j;
  bad["provenance"] = "spiral";
  EXPECT_THROW(board_record_from_json(bad), ParseError);
  bad = j;
  bad["start"] = Json::array({0, 0});  // a blue tile
  EXPECT_THROW(board_record_from_json(bad), ValidationError);
}

TEST(Records, TrajectoryAndHeuristicRoundTrip) {
  const Board b = board_of({{2, 2}, {2, 3}});
  RevealState s = reset(b);
  Trajectory t;
  t.board_id = "3";
  t.actor_id = "agent";
  for (Pos p : {Pos{0, 0}, Pos{0, 0}, Pos{2, 3}}) {
    Outcome o;
    const int r = apply(s, p, &o);
    t.record({p, o, r});
  }
  EXPECT_EQ(trajectory_from_json(Json::parse(trajectory_to_json(t).dump())), t);

  HeuristicRun run{"5", 3, {1, 2, 4}, 7.0 / 3, 1.2472191289246473};
  const HeuristicRun back = heuristic_run_from_json(Json::parse(heuristic_run_to_json(run).dump()));
  EXPECT_EQ(back.board_id, run.board_id);
  EXPECT_EQ(back.scores, run.scores);
  EXPECT_DOUBLE_EQ(back.mean, run.mean);
  EXPECT_DOUBLE_EQ(back.std, run.std);
}

TEST(Records, HeaderHashIsStable) {
  const Json cfg{{"seed", 1}, {"n", 10}};
  const Json h = make_header("generate", cfg);
  EXPECT_TRUE(is_header(h));
  EXPECT_EQ(h["header"]["config_hash"], config_hash(cfg));
  EXPECT_EQ(config_hash(cfg).size(), 16u);
  EXPECT_NE(config_hash(cfg), config_hash(Json{{"seed", 2}, {"n", 10}}));
  EXPECT_FALSE(is_header(Json{{"grid", "x"}}));
}

TEST(LineFiles, WriteAndRead) {
  TempDir dir;
  const auto path = dir / "r.jsonl";
  write_records(path, make_header("x", Json::object()), {Json{{"a", 1}}, Json{{"a", 2}}});
  const auto recs = read_records(path);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].line, 2u);
  EXPECT_EQ(recs[1].value["a"], 2);
  EXPECT_EQ(read_header(path)["header"]["command"], "x");
}

TEST(LineFiles, EmptyAndMalformedInput) {
  std::istringstream empty("");
  EXPECT_TRUE(read_records(empty).empty());
  std::istringstream blanks("\n\n{\"a\":1}\n\n");
  EXPECT_EQ(read_records(blanks).size(), 1u);
  std::istringstream broken("{\"a\":1}\n{not json\n");
  try {
    read_records(broken);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  TempDir dir;
  EXPECT_THROW(read_records(dir / "missing.jsonl"), Error);
}

TEST(BoardFiles, SaveLoad) {
  TempDir dir;
  Rng rng(1);
  std::vector<Board> boards;
  for (int i = 0; i < 10; ++i) boards.push_back(generate_compositional(rng));
  save_boards(dir / "b.jsonl", boards, make_header("generate", Json::object()));
  EXPECT_EQ(load_boards(dir / "b.jsonl"), boards);
  std::ofstream(dir / "empty.jsonl").close();
  EXPECT_TRUE(load_boards(dir / "empty.jsonl").empty());
}

TEST(TestSets, DisjointDistinctAndDeterministic) {
  const TestSets a = build_test_sets(generate_compositional, random_null_board, 5);
  const TestSets b = build_test_sets(generate_compositional, random_null_board, 5);
  EXPECT_EQ(a.comp_test, b.comp_test);
  EXPECT_EQ(a.null_validation, b.null_validation);
  for (const TestSet* s : {&a.comp_test, &a.null_test, &a.comp_validation, &a.null_validation}) {
    EXPECT_EQ(s->boards.size(), kTestSetSize);
    EXPECT_EQ(masks_of(s->boards).size(), s->boards.size());
  }
  const MaskSet ct = masks_of(a.comp_test.boards);
  for (const Board& v : a.comp_validation.boards) EXPECT_FALSE(ct.contains(v.red));
  const MaskSet nt = masks_of(a.null_test.boards);
  for (const Board& v : a.null_validation.boards) EXPECT_FALSE(nt.contains(v.red));
  for (const Board& board : a.comp_test.boards) EXPECT_TRUE(is_compositional_passing(board));
  EXPECT_NE(build_test_sets(generate_compositional, random_null_board, 6).comp_test.boards, a.comp_test.boards);
}

TEST(TestSets, FileRoundTrip) {
  TempDir dir;
  const TestSets s = build_test_sets(generate_compositional, random_null_board, 7, 4, 4);
  save_test_set(dir / "t.jsonl", s.null_test);
  EXPECT_EQ(load_test_set(dir / "t.jsonl"), s.null_test);
  EXPECT_EQ(distribution_from_string("comp"), Distribution::Compositional);
  EXPECT_EQ(distribution_from_string("null"), Distribution::Null);
  EXPECT_FALSE(distribution_from_string("other"));
}

TEST(TestSets, ExcludingNeverReturnsHeldOutMasks) {
  Rng g(1);
  std::vector<Board> held;
  for (int i = 0; i < 50; ++i) held.push_back(generate_board(Form::Loop, g));
  const MaskSet excluded = masks_of(held);
  const BoardSampler s = excluding([](Rng& r) { return generate_board(Form::Loop, r); }, excluded);
  Rng rng(2);
  for (int i = 0; i < 300; ++i) EXPECT_FALSE(excluded.contains(s(rng).red));
  const Board only = board_of({{1, 1}, {1, 2}});
  const BoardSampler impossible = excluding([&](Rng&) { return only; }, MaskSet{only.red});
  EXPECT_THROW(impossible(rng), RetryCapError);
}

TEST(Sessions, PlayPersistReplayAndExport) {
  TempDir dir;
  const TestSet set = small_set();
  std::string id;
  {
    SessionStore store(dir / "sessions", {{Distribution::Compositional, set}});
    Rng rng(3);
    const SessionRecord r = store.create(Distribution::Compositional, rng);
    id = r.id;
    EXPECT_EQ(r.board_order.size(), 3u);
    EXPECT_TRUE(std::is_permutation(r.board_order.begin(), r.board_order.end(), std::vector<int>{0, 1, 2}.begin()));
    const AppendResult first = store.append_event(id, {5, 0}, 1.0);
    EXPECT_EQ(first.event.outcome, Outcome::Blue);
    EXPECT_EQ(first.points, -1);
    finish_current_board(store, id, set);
    EXPECT_EQ(store.progress(id).board, 1);
  }
  // A fresh store reloads the session from its file and continues it.
  SessionStore store(dir / "sessions", {{Distribution::Compositional, set}});
  ASSERT_TRUE(store.record(id));
  EXPECT_EQ(store.progress(id).board, 1);
  EXPECT_TRUE(store.sessions(false).empty());
  EXPECT_EQ(store.sessions(true).size(), 1u);
  finish_current_board(store, id, set);
  finish_current_board(store, id, set);
  const SessionRecord done = *store.record(id);
  EXPECT_TRUE(done.completed);
  EXPECT_THROW(store.append_event(id, {0, 0}, 9.0), SessionStore::SessionCompleted);
  EXPECT_THROW(store.append_event("nope", {0, 0}, 9.0), SessionStore::UnknownSession);

  const SessionProgress replayed = replay_session(done, set);
  EXPECT_TRUE(replayed.completed);
  EXPECT_EQ(replayed.points, store.progress(id).points);
  const auto trajs = session_trajectories(done, set);
  ASSERT_EQ(trajs.size(), 3u);
  for (const Trajectory& t : trajs) {
    EXPECT_TRUE(replays_exactly(set.boards[std::stoul(t.board_id)], t));
  }

  SessionRecord tampered = done;
  tampered.events[0].outcome = Outcome::Red;
  EXPECT_THROW(replay_session(tampered, set), ValidationError);

  write_records(dir / "export.jsonl", make_header("export", Json::object()), store.export_records());
  const auto exported = load_export(dir / "export.jsonl");
  ASSERT_EQ(exported.size(), 1u);
  EXPECT_EQ(exported[0].record, done);
  EXPECT_EQ(exported[0].boards.boards, set.boards);
  EXPECT_EQ(session_from_json(session_to_json(done)), done);
}
