#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "compgrid/board.hpp"
#include "compgrid/env.hpp"
#include "compgrid/error.hpp"
#include "compgrid/records.hpp"
#include "compgrid/rng.hpp"

namespace compgrid {

inline constexpr std::size_t kTestSetSize = 24;
inline constexpr std::size_t kValidationSetSize = 24;
inline constexpr int kSamplerRetryCap = 100000;

// ---------------------------------------------------------------------------
// Board files

void save_boards(const std::filesystem::path& path, const std::vector<Board>& boards, const Json& header = {});
void save_board_records(const std::filesystem::path& path, const std::vector<BoardRecord>& boards,
                        const Json& header = {});
std::vector<Board> load_boards(const std::filesystem::path& path);
std::vector<BoardRecord> load_board_records(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Test and validation sets

enum class Distribution : std::uint8_t { Compositional, Null };
std::string_view to_string(Distribution d);
/// Accepts "compositional"/"comp" and "null".
std::optional<Distribution> distribution_from_string(std::string_view s);

struct TestSet {
  std::string name;
  Distribution distribution = Distribution::Compositional;
  std::uint64_t seed = 0;
  std::vector<Board> boards;

  friend bool operator==(const TestSet&, const TestSet&) = default;
};

/// First record {"testset": {name, distribution, seed, n}}, then one board per line.
void save_test_set(const std::filesystem::path& path, const TestSet& set, const Json& header = {});
TestSet load_test_set(const std::filesystem::path& path);

struct TestSets {
  TestSet comp_test;
  TestSet null_test;
  TestSet comp_validation;
  TestSet null_validation;
};

using BoardSampler = std::function<Board(Rng&)>;

/// Draws boards with distinct red masks per distribution; test and validation
/// sets never share a mask. Deterministic per seed.
TestSets build_test_sets(const BoardSampler& comp, const BoardSampler& null, std::uint64_t seed,
                         std::size_t n_test = kTestSetSize, std::size_t n_validation = kValidationSetSize);

using MaskSet = std::unordered_set<Mask>;
MaskSet masks_of(const std::vector<Board>& boards);

/// Rejects boards whose red mask is in `excluded` (test boards never reach training).
/// Throws RetryCapError after kSamplerRetryCap consecutive rejections.
BoardSampler excluding(BoardSampler sampler, MaskSet excluded);

// ---------------------------------------------------------------------------
// Sessions

struct SessionEvent {
  double timestamp = 0.0;  ///< Seconds since the Unix epoch.
  int board = 0;           ///< Position in the session's play order (0-based).
  Pos pos;
  Outcome outcome = Outcome::Repeat;
  int reward = 0;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

struct SessionRecord {
  std::string id;
  Distribution distribution = Distribution::Compositional;
  std::vector<int> board_order;  ///< Permutation of test-set indices.
  std::vector<SessionEvent> events;
  bool completed = false;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// Where a session currently stands, rebuilt from its events.
struct SessionProgress {
  int board = 0;  ///< Position in play order of the board being played.
  RevealState state;
  int points = 0;
  bool completed = false;
};

/// Replays the events against the test set. Throws ValidationError if an event
/// disagrees with what the environment produces.
SessionProgress replay_session(const SessionRecord& record, const TestSet& set);

/// One trajectory per board played, in play order (board_id = test-set index).
std::vector<Trajectory> session_trajectories(const SessionRecord& record, const TestSet& set);

Json session_to_json(const SessionRecord& record, const TestSet* set = nullptr);
SessionRecord session_from_json(const Json& j, std::size_t line = 0);

struct AppendResult {
  SessionEvent event;
  bool board_done = false;
  bool session_done = false;
  int points = 0;
};

/// Append-only session files under `dir` (one file per session), with
/// per-session serialisation. Each event line is flushed and fsync'd before
/// append_event returns.
class SessionStore {
 public:
  class UnknownSession : public Error {
   public:
    using Error::Error;
  };
  class SessionCompleted : public Error {
   public:
    using Error::Error;
  };

  /// Loads any sessions already present in `dir`.
  SessionStore(std::filesystem::path dir, std::map<Distribution, TestSet> test_sets);

  bool has_test_set(Distribution d) const { return test_sets_.contains(d); }
  const TestSet& test_set(Distribution d) const { return test_sets_.at(d); }

  /// New session with a fresh id and a random board order, persisted immediately.
  SessionRecord create(Distribution distribution, Rng& rng);

  /// Applies the click on the session's current board.
  /// Throws UnknownSession, SessionCompleted, or InvalidActionError.
  AppendResult append_event(const std::string& id, Pos pos, double timestamp);

  std::optional<SessionRecord> record(const std::string& id) const;
  /// Throws UnknownSession.
  SessionProgress progress(const std::string& id) const;

  std::vector<SessionRecord> sessions(bool include_incomplete = false) const;

  /// Consolidated export: one self-contained session record (with its test-set boards) per line.
  std::vector<Json> export_records(bool include_incomplete = false) const;

  const std::filesystem::path& directory() const { return dir_; }

 private:
  struct Slot {
    mutable std::mutex mutex;
    SessionRecord record;
    SessionProgress progress;
  };

  std::shared_ptr<Slot> slot(const std::string& id) const;
  std::filesystem::path file_for(const std::string& id) const;

  std::filesystem::path dir_;
  std::map<Distribution, TestSet> test_sets_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
};

/// Sessions from a consolidated export, each paired with its embedded boards.
struct ExportedSession {
  SessionRecord record;
  TestSet boards;  ///< Boards indexed like the original test set.
};
std::vector<ExportedSession> load_export(const std::filesystem::path& path);

}  // namespace compgrid
