#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "compgrid/board.hpp"

namespace compgrid {

enum class Tile : std::uint8_t { Unrevealed, Red, Blue };
enum class Outcome : std::uint8_t { Red, Blue, Repeat };

std::string_view to_string(Outcome o);
std::optional<Outcome> outcome_from_string(std::string_view s);

inline constexpr int kRedReward = 1;
inline constexpr int kBlueReward = -1;
inline constexpr int kLastRedReward = 10;
inline constexpr int kRepeatReward = -2;
/// Episodes are force-terminated after this many actions.
inline constexpr int kStepCap = 500;

/// What the player can see, plus the hidden board it is played on.
struct RevealState {
  Board board;
  std::array<Tile, kTileCount> revealed{};
  int steps_taken = 0;
  int blue_revealed = 0;
  int red_remaining = 0;  ///< Red tiles not yet revealed.
  bool done = false;       ///< Every red tile revealed.
  bool truncated = false;  ///< Hit kStepCap before finishing.

  bool finished() const { return done || truncated; }
  Tile at(Pos p) const { return revealed[static_cast<std::size_t>(p.index())]; }
  int revealed_count() const;
};

struct StepResult {
  RevealState state;
  Outcome outcome = Outcome::Repeat;
  int reward = 0;
  bool finished = false;
};

/// Throws InvalidBoardError for boards without red tiles or with a non-red start.
RevealState reset(const Board& board);

/// Pure transition. Throws InvalidActionError (off-grid) or EpisodeFinishedError.
StepResult step(const RevealState& state, Pos action);

/// In-place variant of step() for hot loops; returns the reward.
int apply(RevealState& state, Pos action, Outcome* outcome = nullptr);

struct Move {
  Pos pos;
  Outcome outcome = Outcome::Repeat;
  int reward = 0;

  friend bool operator==(const Move&, const Move&) = default;
};

/// Ordered record of one episode.
struct Trajectory {
  std::string board_id;
  std::string actor_id;
  std::vector<Move> moves;
  int total_reward = 0;
  int blue_count = 0;
  bool truncated = false;

  void record(const Move& m);
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Unique blue tiles revealed (repeat clicks are not counted twice).
int score(const Trajectory& trajectory);

/// The evaluation metric: score() for finished episodes; an episode cut off
/// at the step cap never revealed every red tile, so it gets the worst
/// possible score, the board's total number of blue tiles.
int evaluation_score(const Board& board, const Trajectory& trajectory);

/// Replays the moves against `board`; true if every outcome, reward and total
/// matches what the environment would produce.
bool replays_exactly(const Board& board, const Trajectory& trajectory);

}  // namespace compgrid
