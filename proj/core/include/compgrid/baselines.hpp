#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compgrid/board.hpp"
#include "compgrid/env.hpp"
#include "compgrid/rng.hpp"

namespace compgrid {

inline constexpr int kDefaultHeuristicRuns = 1000;

/// Chooses the next tile for an unfinished state.
using Policy = std::function<Pos(const RevealState&, Rng&)>;

/// A revealed red tile chosen uniformly among those with an unrevealed
/// 4-neighbour, then one of those neighbours uniformly. Falls back to a
/// uniform unrevealed tile when no red tile has one.
Pos neighbor_heuristic_step(const RevealState& state, Rng& rng);

/// Uniform over unrevealed tiles.
Pos uniform_random_step(const RevealState& state, Rng& rng);

/// Plays `policy` from reset until the episode finishes.
Trajectory run_policy_episode(const Board& board, const Policy& policy, Rng& rng, std::string actor_id = {});

struct HeuristicRun {
  std::string board_id;
  int repetitions = 0;
  std::vector<int> scores;
  double mean = 0.0;
  double std = 0.0;  ///< Population standard deviation.
};

HeuristicRun run_baseline(const Board& board, const Policy& policy, int repetitions, Rng& rng,
                          std::string board_id = {});
HeuristicRun run_heuristic(const Board& board, int repetitions, Rng& rng, std::string board_id = {});

/// Exact expected blue count of the uniform-random policy: b * (r - 1) / r
/// for r red and b blue tiles.
double random_policy_expected_blue(const Board& board);

}  // namespace compgrid
