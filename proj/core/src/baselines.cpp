#include "compgrid/baselines.hpp"

#include <cmath>

#include "compgrid/error.hpp"

namespace compgrid {

namespace {

void require_live(const RevealState& state) {
  if (state.finished()) throw EpisodeFinishedError("policy asked to act on a finished episode");
}

std::vector<int> unrevealed_neighbours(const RevealState& state, Pos p) {
  std::vector<int> out;
  for_each_neighbour(p, [&](Pos q) {
    if (state.at(q) == Tile::Unrevealed) out.push_back(q.index());
  });
  return out;
}

}  // namespace

Pos neighbor_heuristic_step(const RevealState& state, Rng& rng) {
  require_live(state);
  std::vector<int> frontier_reds;
  for (int i = 0; i < kTileCount; ++i) {
    const Pos p = Pos::from_index(i);
    if (state.at(p) == Tile::Red && !unrevealed_neighbours(state, p).empty()) frontier_reds.push_back(i);
  }
  if (frontier_reds.empty()) return uniform_random_step(state, rng);
  const Pos red = Pos::from_index(frontier_reds[rng.uniform_index(frontier_reds.size())]);
  const auto options = unrevealed_neighbours(state, red);
  return Pos::from_index(options[rng.uniform_index(options.size())]);
}

Pos uniform_random_step(const RevealState& state, Rng& rng) {
  require_live(state);
  std::vector<int> options;
  for (int i = 0; i < kTileCount; ++i) {
    if (state.revealed[static_cast<std::size_t>(i)] == Tile::Unrevealed) options.push_back(i);
  }
  if (options.empty()) throw EpisodeFinishedError("no unrevealed tile left");
  return Pos::from_index(options[rng.uniform_index(options.size())]);
}

Trajectory run_policy_episode(const Board& board, const Policy& policy, Rng& rng, std::string actor_id) {
  Trajectory traj;
  traj.actor_id = std::move(actor_id);
  RevealState state = reset(board);
  while (!state.finished()) {
    const Pos pos = policy(state, rng);
    Outcome outcome{};
    const int reward = apply(state, pos, &outcome);
    traj.record(Move{pos, outcome, reward});
  }
  traj.truncated = state.truncated;
  return traj;
}

HeuristicRun run_baseline(const Board& board, const Policy& policy, int repetitions, Rng& rng,
                          std::string board_id) {
  if (repetitions < 1) throw ValidationError("repetitions must be >= 1");
  HeuristicRun run;
  run.board_id = std::move(board_id);
  run.repetitions = repetitions;
  double sum = 0.0;
  for (int i = 0; i < repetitions; ++i) {
    const int s = evaluation_score(board, run_policy_episode(board, policy, rng));
    run.scores.push_back(s);
    sum += s;
  }
  run.mean = sum / repetitions;
  double ss = 0.0;
  for (int s : run.scores) ss += (s - run.mean) * (s - run.mean);
  run.std = std::sqrt(ss / repetitions);
  return run;
}

HeuristicRun run_heuristic(const Board& board, int repetitions, Rng& rng, std::string board_id) {
  return run_baseline(board, neighbor_heuristic_step, repetitions, rng, std::move(board_id));
}

double random_policy_expected_blue(const Board& board) {
  const int r = board.red.count();
  if (r == 0) throw InvalidBoardError("board has no red tiles");
  const int b = kTileCount - r;
  return static_cast<double>(b) * (r - 1) / r;
}

}  // namespace compgrid
