#include "compgrid/env.hpp"

#include <algorithm>
#include <set>

#include "compgrid/error.hpp"

namespace compgrid {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Red: return "red";
    case Outcome::Blue: return "blue";
    case Outcome::Repeat: return "repeat";
  }
  return "?";
}

std::optional<Outcome> outcome_from_string(std::string_view s) {
  for (auto o : {Outcome::Red, Outcome::Blue, Outcome::Repeat}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

int RevealState::revealed_count() const {
  return static_cast<int>(std::count_if(revealed.begin(), revealed.end(),
                                        [](Tile t) { return t != Tile::Unrevealed; }));
}

RevealState reset(const Board& board) {
  if (board.red.empty()) throw InvalidBoardError("board has no red tiles");
  validate_board(board);
  RevealState s;
  s.board = board;
  s.revealed.fill(Tile::Unrevealed);
  s.revealed[static_cast<std::size_t>(board.start.index())] = Tile::Red;
  s.red_remaining = board.red.count() - 1;
  s.done = s.red_remaining == 0;
  return s;
}

int apply(RevealState& s, Pos action, Outcome* outcome) {
  if (!action.in_bounds()) throw InvalidActionError("action off the grid");
  if (s.finished()) throw EpisodeFinishedError("episode already finished");

  ++s.steps_taken;
  Tile& tile = s.revealed[static_cast<std::size_t>(action.index())];
  Outcome o;
  int reward;
  if (tile != Tile::Unrevealed) {
    o = Outcome::Repeat;
    reward = kRepeatReward;
  } else if (s.board.red.test(action)) {
    tile = Tile::Red;
    o = Outcome::Red;
    --s.red_remaining;
    if (s.red_remaining == 0) {
      s.done = true;
      reward = kLastRedReward;
    } else {
      reward = kRedReward;
    }
  } else {
    tile = Tile::Blue;
    o = Outcome::Blue;
    ++s.blue_revealed;
    reward = kBlueReward;
  }
  if (!s.done && s.steps_taken >= kStepCap) s.truncated = true;
  if (outcome) *outcome = o;
  return reward;
}

StepResult step(const RevealState& state, Pos action) {
  StepResult r{state};
  r.reward = apply(r.state, action, &r.outcome);
  r.finished = r.state.finished();
  return r;
}

void Trajectory::record(const Move& m) {
  moves.push_back(m);
  total_reward += m.reward;
  if (m.outcome == Outcome::Blue) ++blue_count;
}

int score(const Trajectory& t) {
  std::set<Pos> blue;
  for (const Move& m : t.moves) {
    if (m.outcome == Outcome::Blue) blue.insert(m.pos);
  }
  return static_cast<int>(blue.size());
}

int evaluation_score(const Board& board, const Trajectory& t) {
  return t.truncated ? kTileCount - board.red.count() : score(t);
}

bool replays_exactly(const Board& board, const Trajectory& t) {
  RevealState s = reset(board);
  int total = 0;
  for (const Move& m : t.moves) {
    if (s.finished() || !m.pos.in_bounds()) return false;
    Outcome o;
    const int reward = apply(s, m.pos, &o);
    if (o != m.outcome || reward != m.reward) return false;
    total += reward;
  }
  return total == t.total_reward && s.truncated == t.truncated &&
         s.blue_revealed == score(t);
}

}  // namespace compgrid
