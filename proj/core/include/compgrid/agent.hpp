#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "compgrid/board.hpp"
#include "compgrid/env.hpp"
#include "compgrid/nn.hpp"
#include "compgrid/rng.hpp"

namespace compgrid {

inline constexpr int kBoardChannels = 3;  ///< unrevealed, red, blue
inline constexpr int kObservationSize = kBoardChannels * kTileCount;
inline constexpr int kFrontEndUnits = 49;
inline constexpr int kConvChannels = 4;
inline constexpr int kConvKernel = 3;
inline constexpr int kLstmUnits = 120;
inline constexpr int kLstmInputSize = kFrontEndUnits + kTileCount + 1;
inline constexpr int kActionCount = kTileCount;

inline constexpr double kDefaultGamma = 0.9;
inline constexpr double kDefaultValueCoef = 0.0006747109316677081;
inline constexpr double kDefaultEntropyCoef = 0.0006747109316677081;
inline constexpr double kDefaultAgentLearningRate = 0.0023483181861598565;
inline constexpr double kDefaultMaxGradNorm = 0.5;
inline constexpr std::int64_t kDeskEpisodes = 100000;
inline constexpr std::int64_t kPaperEpisodes = 1000000;
inline constexpr const char* kAgentKind = "agent";

enum class FrontEnd : std::uint8_t { Dense, Conv };
enum class AgentOptimizer : std::uint8_t { RmsProp, Sgd };
enum class ActMode : std::uint8_t { Sample, Greedy };

std::string_view to_string(FrontEnd f);
std::optional<FrontEnd> front_end_from_string(std::string_view s);
std::string_view to_string(AgentOptimizer o);
std::optional<AgentOptimizer> optimizer_from_string(std::string_view s);

struct AgentConfig {
  double gamma = kDefaultGamma;
  double value_coef = kDefaultValueCoef;
  double entropy_coef = kDefaultEntropyCoef;
  double learning_rate = kDefaultAgentLearningRate;
  std::int64_t episodes = kDeskEpisodes;
  FrontEnd front_end = FrontEnd::Dense;
  AgentOptimizer optimizer = AgentOptimizer::RmsProp;
  double max_grad_norm = kDefaultMaxGradNorm;
  std::uint64_t seed = 0;

  /// Throws ValidationError when a field is out of range.
  void validate() const;
};

/// Recurrent policy/value network. The front end maps the one-hot board to 49
/// units (two dense layers, or a 3x3 conv then one dense layer); its output,
/// the previous action one-hot and the previous reward feed a 120-unit LSTM
/// with a 49-way policy head and a scalar value head.
struct AgentNet {
  FrontEnd front_end = FrontEnd::Dense;
  nn::NetParams params;

  friend bool operator==(const AgentNet&, const AgentNet&) = default;
};

AgentNet init_agent_net(FrontEnd front_end, std::uint64_t seed);
/// Every parameter zero: the policy is uniform and the value is 0.
AgentNet zero_agent_net(FrontEnd front_end);

/// Board one-hot (channel-major: unrevealed, red, blue) plus previous action and reward.
struct Observation {
  std::array<double, kObservationSize> board{};
  int prev_action = -1;  ///< -1 before the first move.
  double prev_reward = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

Observation encode_observation(const RevealState& state, int prev_action, double prev_reward);
/// The 49 + 1 values appended to the front-end output before the LSTM.
std::array<double, kTileCount + 1> action_reward_features(const Observation& obs);

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  std::vector<double> probabilities;
  nn::LstmState state;
};

/// One policy step. Greedy picks the most probable action, lowest index on ties.
ActResult act(const AgentNet& net, const nn::LstmState& state, const Observation& obs, Rng& rng, ActMode mode);

/// R_t = r_t + gamma * R_{t+1}, with R = 0 after the last step.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

/// What a2c_update needs to replay an episode: observations, chosen actions, rewards.
struct Rollout {
  std::vector<Observation> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
};

struct A2cLosses {
  double policy = 0.0;   ///< sum of -log pi(a_t) * A_t
  double value = 0.0;    ///< sum of (R_t - V_t)^2 (unscaled)
  double entropy = 0.0;  ///< sum of H(pi_t)
  double total = 0.0;    ///< policy + c_v * value - c_e * entropy
};

struct A2cUpdate {
  nn::Gradients grads;
  A2cLosses losses;
  double grad_norm = 0.0;  ///< before clipping
};

/// Loss of the whole episode under the current parameters (no gradients).
/// With `fixed_advantages` (one per step) the policy term uses those constants
/// instead of R_t - V_t: the surrogate whose gradient a2c_update computes.
A2cLosses a2c_loss(const AgentNet& net, const Rollout& rollout, const AgentConfig& config,
                   std::span<const double> fixed_advantages = {});

/// R_t - V_t for every step under the current parameters.
std::vector<double> a2c_advantages(const AgentNet& net, const Rollout& rollout, const AgentConfig& config);

/// Backpropagation through time over the episode. The advantage R_t - V_t is
/// treated as a constant in the policy term. When `clip` is set, gradients
/// are rescaled to config.max_grad_norm. Throws DivergenceError on non-finite loss.
A2cUpdate a2c_update(const AgentNet& net, const Rollout& rollout, const AgentConfig& config, bool clip = true);

/// Plays one episode from reset to termination or the step cap.
struct Episode {
  Trajectory trajectory;
  Rollout rollout;
};
Episode play_episode(const AgentNet& net, const Board& board, Rng& rng, ActMode mode);

using TaskSampler = std::function<Board(Rng&)>;

struct CurvePoint {
  std::int64_t episode = 0;  ///< Episodes completed.
  double mean_reward = 0.0;
  double mean_blue = 0.0;
  double learning_rate = 0.0;
};

struct ValidationPoint {
  std::int64_t episode = 0;
  double mean_blue = 0.0;
};

struct TrainHooks {
  std::int64_t curve_every = 1000;
  std::function<void(const CurvePoint&)> on_curve;
  std::int64_t checkpoint_every = 0;
  std::function<void(std::int64_t episode, const AgentNet&)> on_checkpoint;
  std::int64_t validate_every = 0;
  std::vector<Board> validation_boards;
  std::function<void(const ValidationPoint&)> on_validation;
};

struct TrainResult {
  AgentNet net;
  std::vector<CurvePoint> curve;
  std::vector<ValidationPoint> validation;
};

/// One A2C update per episode with a linearly decaying learning rate.
/// Deterministic given config.seed.
TrainResult train_agent(const TaskSampler& sampler, const AgentConfig& config, const TrainHooks& hooks = {});

struct BoardEvaluation {
  std::size_t board_index = 0;
  std::vector<int> scores;  ///< Blue count per episode.
  double mean_blue = 0.0;
  std::vector<Trajectory> trajectories;
};

struct EvaluationTable {
  std::vector<BoardEvaluation> boards;
  double mean_blue = 0.0;
};

EvaluationTable evaluate(const AgentNet& net, std::span<const Board> boards, int episodes_per_board, Rng& rng,
                         ActMode mode = ActMode::Greedy);

/// Grid search over value coefficient, entropy coefficient and learning rate;
/// each candidate is trained then scored on the validation boards, and the
/// best (lowest mean blue count, first on ties) is evaluated on the test boards.
struct SweepGrid {
  std::vector<double> value_coefs{kDefaultValueCoef};
  std::vector<double> entropy_coefs{kDefaultEntropyCoef};
  std::vector<double> learning_rates{kDefaultAgentLearningRate};
};

struct SweepEntry {
  AgentConfig config;
  double validation_blue = 0.0;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::size_t best = 0;
  AgentNet best_net;
  EvaluationTable test;
};

SweepResult hyperparameter_sweep(const TaskSampler& sampler, const AgentConfig& base, const SweepGrid& grid,
                                 std::span<const Board> validation, std::span<const Board> test);

void save_agent(const std::filesystem::path& path, const AgentNet& net, const std::string& header_json = {});
AgentNet load_agent(const std::filesystem::path& path);

}  // namespace compgrid
