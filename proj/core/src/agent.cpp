#include "compgrid/agent.hpp"

#include <algorithm>
#include <cmath>

#include "compgrid/error.hpp"

namespace compgrid {

namespace {

using nn::Activation;

nn::ParamSet make_params(FrontEnd front_end) {
  nn::ParamSet p;
  if (front_end == FrontEnd::Dense) {
    p.add("fc1.w", {kFrontEndUnits, kObservationSize});
    p.add("fc1.b", {kFrontEndUnits});
    p.add("fc2.w", {kFrontEndUnits, kFrontEndUnits});
  } else {
    p.add("conv.w", {kConvChannels, kBoardChannels, kConvKernel, kConvKernel});
    p.add("conv.b", {kConvChannels});
    p.add("fc2.w", {kFrontEndUnits, kConvChannels * kTileCount});
  }
  p.add("fc2.b", {kFrontEndUnits});
  p.add("lstm.wx", {4 * kLstmUnits, kLstmInputSize});
  p.add("lstm.wh", {4 * kLstmUnits, kLstmUnits});
  p.add("lstm.b", {4 * kLstmUnits});
  p.add("pi.w", {kActionCount, kLstmUnits});
  p.add("pi.b", {kActionCount});
  p.add("v.w", {1, kLstmUnits});
  p.add("v.b", {1});
  return p;
}

struct StepCache {
  nn::DenseCache fc1;
  nn::ConvCache conv;
  nn::DenseCache fc2;
  nn::LstmCache lstm;
  nn::DenseCache pi;
  nn::DenseCache v;
};

struct StepOutput {
  std::vector<double> log_probs;
  std::vector<double> probs;
  double value = 0.0;
  nn::LstmState state;
};

StepOutput forward_step(const AgentNet& net, const nn::LstmState& state, const Observation& obs,
                        StepCache* cache) {
  const auto& p = net.params.tensors;
  std::vector<double> a1;
  if (net.front_end == FrontEnd::Dense) {
    a1 = nn::dense_forward(p.at("fc1.w"), p.at("fc1.b"), obs.board, Activation::Relu, cache ? &cache->fc1 : nullptr);
  } else {
    a1 = nn::conv_forward(p.at("conv.w"), p.at("conv.b"), obs.board, Activation::Relu, cache ? &cache->conv : nullptr);
  }
  std::vector<double> x =
      nn::dense_forward(p.at("fc2.w"), p.at("fc2.b"), a1, Activation::Relu, cache ? &cache->fc2 : nullptr);
  const auto extra = action_reward_features(obs);
  x.insert(x.end(), extra.begin(), extra.end());

  StepOutput out;
  out.state = nn::lstm_step(p.at("lstm.wx"), p.at("lstm.wh"), p.at("lstm.b"), x, state, cache ? &cache->lstm : nullptr);
  const auto logits =
      nn::dense_forward(p.at("pi.w"), p.at("pi.b"), out.state.hidden, Activation::Identity, cache ? &cache->pi : nullptr);
  out.value = nn::dense_forward(p.at("v.w"), p.at("v.b"), out.state.hidden, Activation::Identity,
                                cache ? &cache->v : nullptr)[0];
  out.log_probs = nn::log_softmax(logits);
  out.probs.resize(out.log_probs.size());
  std::transform(out.log_probs.begin(), out.log_probs.end(), out.probs.begin(), [](double l) { return std::exp(l); });
  return out;
}

int argmax_lowest(std::span<const double> xs) {
  return static_cast<int>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

}  // namespace

std::string_view to_string(FrontEnd f) { return f == FrontEnd::Dense ? "dense" : "conv"; }

std::optional<FrontEnd> front_end_from_string(std::string_view s) {
  if (s == "dense") return FrontEnd::Dense;
  if (s == "conv") return FrontEnd::Conv;
  return std::nullopt;
}

std::string_view to_string(AgentOptimizer o) { return o == AgentOptimizer::RmsProp ? "rmsprop" : "sgd"; }

std::optional<AgentOptimizer> optimizer_from_string(std::string_view s) {
  if (s == "rmsprop") return AgentOptimizer::RmsProp;
  if (s == "sgd") return AgentOptimizer::Sgd;
  return std::nullopt;
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("discount must lie in [0, 1)");
  if (!(value_coef >= 0.0) || !(entropy_coef >= 0.0)) throw ValidationError("loss coefficients must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be >= 0");
  if (episodes < 0) throw ValidationError("episode budget must be >= 0");
  if (!(max_grad_norm > 0.0)) throw ValidationError("gradient clip norm must be positive");
}

AgentNet init_agent_net(FrontEnd front_end, std::uint64_t seed) {
  AgentNet net;
  net.front_end = front_end;
  net.params.seed = seed;
  net.params.tensors = make_params(front_end);
  Rng rng(seed);
  auto& p = net.params.tensors;
  auto init_layer = [&](const std::string& w, const std::string& b, std::size_t fan_in) {
    nn::init_uniform_fan_in(p.at(w), fan_in, rng);
    nn::init_uniform_fan_in(p.at(b), fan_in, rng);
  };
  if (front_end == FrontEnd::Dense) {
    init_layer("fc1.w", "fc1.b", kObservationSize);
    nn::init_uniform_fan_in(p.at("fc2.w"), kFrontEndUnits, rng);
    nn::init_uniform_fan_in(p.at("fc2.b"), kFrontEndUnits, rng);
  } else {
    init_layer("conv.w", "conv.b", kBoardChannels * kConvKernel * kConvKernel);
    nn::init_uniform_fan_in(p.at("fc2.w"), kConvChannels * kTileCount, rng);
    nn::init_uniform_fan_in(p.at("fc2.b"), kConvChannels * kTileCount, rng);
  }
  nn::init_uniform_fan_in(p.at("lstm.wx"), kLstmUnits, rng);
  nn::init_uniform_fan_in(p.at("lstm.wh"), kLstmUnits, rng);
  nn::init_uniform_fan_in(p.at("lstm.b"), kLstmUnits, rng);
  init_layer("pi.w", "pi.b", kLstmUnits);
  init_layer("v.w", "v.b", kLstmUnits);
  return net;
}

AgentNet zero_agent_net(FrontEnd front_end) {
  AgentNet net;
  net.front_end = front_end;
  net.params.tensors = make_params(front_end);
  return net;
}

Observation encode_observation(const RevealState& state, int prev_action, double prev_reward) {
  if (prev_action < -1 || prev_action >= kActionCount) throw InvalidActionError("previous action out of range");
  Observation obs;
  for (int i = 0; i < kTileCount; ++i) {
    const int channel = static_cast<int>(state.revealed[static_cast<std::size_t>(i)]);
    obs.board[static_cast<std::size_t>(channel * kTileCount + i)] = 1.0;
  }
  obs.prev_action = prev_action;
  obs.prev_reward = prev_reward;
  return obs;
}

std::array<double, kTileCount + 1> action_reward_features(const Observation& obs) {
  std::array<double, kTileCount + 1> f{};
  if (obs.prev_action >= 0) f[static_cast<std::size_t>(obs.prev_action)] = 1.0;
  f[kTileCount] = obs.prev_reward;
  return f;
}

ActResult act(const AgentNet& net, const nn::LstmState& state, const Observation& obs, Rng& rng, ActMode mode) {
  StepOutput out = forward_step(net, state, obs, nullptr);
  ActResult r;
  r.action = mode == ActMode::Greedy ? argmax_lowest(out.probs) : static_cast<int>(rng.categorical(out.probs));
  r.log_prob = out.log_probs[static_cast<std::size_t>(r.action)];
  r.value = out.value;
  r.probabilities = std::move(out.probs);
  r.state = std::move(out.state);
  return r;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> returns(rewards.size());
  double running = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    running = rewards[i] + gamma * running;
    returns[i] = running;
  }
  return returns;
}

namespace {

void check_rollout(const Rollout& r) {
  if (r.observations.size() != r.actions.size() || r.actions.size() != r.rewards.size()) {
    throw ShapeError("rollout observations, actions and rewards differ in length");
  }
}

void accumulate_losses(A2cLosses& l, const StepOutput& out, int action, double ret, const AgentConfig& c,
                       const double* fixed_advantage = nullptr) {
  const double advantage = ret - out.value;
  l.policy += -out.log_probs[static_cast<std::size_t>(action)] * (fixed_advantage ? *fixed_advantage : advantage);
  l.value += advantage * advantage;
  l.entropy += nn::entropy(out.probs);
  l.total = l.policy + c.value_coef * l.value - c.entropy_coef * l.entropy;
}

}  // namespace

A2cLosses a2c_loss(const AgentNet& net, const Rollout& rollout, const AgentConfig& config,
                   std::span<const double> fixed_advantages) {
  check_rollout(rollout);
  if (!fixed_advantages.empty() && fixed_advantages.size() != rollout.actions.size()) {
    throw ShapeError("one fixed advantage per step required");
  }
  const auto returns = discounted_returns(rollout.rewards, config.gamma);
  A2cLosses losses;
  nn::LstmState state = nn::LstmState::zeros(kLstmUnits);
  for (std::size_t t = 0; t < rollout.actions.size(); ++t) {
    StepOutput out = forward_step(net, state, rollout.observations[t], nullptr);
    accumulate_losses(losses, out, rollout.actions[t], returns[t], config,
                      fixed_advantages.empty() ? nullptr : &fixed_advantages[t]);
    state = std::move(out.state);
  }
  return losses;
}

std::vector<double> a2c_advantages(const AgentNet& net, const Rollout& rollout, const AgentConfig& config) {
  check_rollout(rollout);
  const auto returns = discounted_returns(rollout.rewards, config.gamma);
  std::vector<double> out;
  nn::LstmState state = nn::LstmState::zeros(kLstmUnits);
  for (std::size_t t = 0; t < rollout.actions.size(); ++t) {
    StepOutput step = forward_step(net, state, rollout.observations[t], nullptr);
    out.push_back(returns[t] - step.value);
    state = std::move(step.state);
  }
  return out;
}

A2cUpdate a2c_update(const AgentNet& net, const Rollout& rollout, const AgentConfig& config, bool clip) {
  check_rollout(rollout);
  const std::size_t steps = rollout.actions.size();
  const auto returns = discounted_returns(rollout.rewards, config.gamma);
  const auto& p = net.params.tensors;

  std::vector<StepCache> caches(steps);
  std::vector<StepOutput> outs;
  outs.reserve(steps);
  A2cUpdate upd;
  nn::LstmState state = nn::LstmState::zeros(kLstmUnits);
  for (std::size_t t = 0; t < steps; ++t) {
    outs.push_back(forward_step(net, state, rollout.observations[t], &caches[t]));
    accumulate_losses(upd.losses, outs.back(), rollout.actions[t], returns[t], config);
    state = outs.back().state;
  }
  if (!std::isfinite(upd.losses.total)) throw DivergenceError("non-finite A2C loss");

  upd.grads = p.zeros_like();
  auto& g = upd.grads;
  std::vector<double> dh_next(kLstmUnits, 0.0);
  std::vector<double> dc_next(kLstmUnits, 0.0);
  std::vector<double> dlogits(kActionCount);
  for (std::size_t t = steps; t-- > 0;) {
    const StepOutput& out = outs[t];
    const StepCache& cache = caches[t];
    const double advantage = returns[t] - out.value;
    const double h = nn::entropy(out.probs);
    for (std::size_t j = 0; j < kActionCount; ++j) {
      const double onehot = static_cast<int>(j) == rollout.actions[t] ? 1.0 : 0.0;
      dlogits[j] = advantage * (out.probs[j] - onehot) + config.entropy_coef * out.probs[j] * (out.log_probs[j] + h);
    }
    const double dv = -2.0 * config.value_coef * advantage;

    auto dh = nn::dense_backward(p.at("pi.w"), cache.pi, Activation::Identity, dlogits, g.at("pi.w"), g.at("pi.b"));
    const auto dh_v = nn::dense_backward(p.at("v.w"), cache.v, Activation::Identity, std::span<const double>(&dv, 1),
                                         g.at("v.w"), g.at("v.b"));
    for (std::size_t i = 0; i < kLstmUnits; ++i) dh[i] += dh_v[i] + dh_next[i];

    auto lg = nn::lstm_backward(p.at("lstm.wx"), p.at("lstm.wh"), cache.lstm, dh, dc_next, g.at("lstm.wx"),
                                g.at("lstm.wh"), g.at("lstm.b"));
    dh_next = std::move(lg.hidden_prev);
    dc_next = std::move(lg.cell_prev);

    const std::span<const double> dfront(lg.input.data(), kFrontEndUnits);
    const auto da1 = nn::dense_backward(p.at("fc2.w"), cache.fc2, Activation::Relu, dfront, g.at("fc2.w"), g.at("fc2.b"));
    if (net.front_end == FrontEnd::Dense) {
      nn::dense_backward(p.at("fc1.w"), cache.fc1, Activation::Relu, da1, g.at("fc1.w"), g.at("fc1.b"));
    } else {
      nn::conv_backward(p.at("conv.w"), cache.conv, Activation::Relu, da1, g.at("conv.w"), g.at("conv.b"));
    }
  }
  if (!g.all_finite()) throw DivergenceError("non-finite A2C gradient");
  upd.grad_norm = clip ? nn::clip_global_norm(g, config.max_grad_norm) : nn::global_norm(g);
  return upd;
}

Episode play_episode(const AgentNet& net, const Board& board, Rng& rng, ActMode mode) {
  Episode ep;
  RevealState state = reset(board);
  nn::LstmState lstm = nn::LstmState::zeros(kLstmUnits);
  int prev_action = -1;
  double prev_reward = 0.0;
  while (!state.finished()) {
    Observation obs = encode_observation(state, prev_action, prev_reward);
    ActResult r = act(net, lstm, obs, rng, mode);
    Outcome outcome{};
    const Pos pos = Pos::from_index(r.action);
    const int reward = apply(state, pos, &outcome);
    ep.trajectory.record(Move{pos, outcome, reward});
    ep.rollout.observations.push_back(std::move(obs));
    ep.rollout.actions.push_back(r.action);
    ep.rollout.rewards.push_back(reward);
    lstm = std::move(r.state);
    prev_action = r.action;
    prev_reward = reward;
  }
  ep.trajectory.truncated = state.truncated;
  return ep;
}

TrainResult train_agent(const TaskSampler& sampler, const AgentConfig& config, const TrainHooks& hooks) {
  config.validate();
  TrainResult result;
  result.net = init_agent_net(config.front_end, mix_seed(config.seed));
  AgentNet& net = result.net;
  const Rng root(config.seed);
  Rng board_rng = root.split(1);
  Rng act_rng = root.split(2);
  nn::RmsProp rmsprop(net.params.tensors, nn::RmsPropConfig{});

  double window_reward = 0.0;
  double window_blue = 0.0;
  std::int64_t window = 0;
  auto validate = [&](std::int64_t episode) {
    Rng eval_rng(0);
    const EvaluationTable table = evaluate(net, hooks.validation_boards, 1, eval_rng, ActMode::Greedy);
    ValidationPoint vp{episode, table.mean_blue};
    result.validation.push_back(vp);
    if (hooks.on_validation) hooks.on_validation(vp);
  };

  for (std::int64_t ep = 0; ep < config.episodes; ++ep) {
    const double lr = nn::linear_schedule(config.learning_rate, ep, config.episodes);
    const Board board = sampler(board_rng);
    const Episode episode = play_episode(net, board, act_rng, ActMode::Sample);
    const A2cUpdate upd = a2c_update(net, episode.rollout, config, true);
    if (config.optimizer == AgentOptimizer::RmsProp) {
      rmsprop.step(net.params.tensors, upd.grads, lr);
    } else {
      nn::sgd_step(net.params.tensors, upd.grads, lr);
    }
    if (!net.params.tensors.all_finite()) throw DivergenceError("agent parameters became non-finite");

    window_reward += episode.trajectory.total_reward;
    window_blue += evaluation_score(board, episode.trajectory);
    ++window;
    const std::int64_t done = ep + 1;
    if ((hooks.curve_every > 0 && done % hooks.curve_every == 0) || done == config.episodes) {
      CurvePoint pt{done, window_reward / static_cast<double>(window), window_blue / static_cast<double>(window), lr};
      result.curve.push_back(pt);
      if (hooks.on_curve) hooks.on_curve(pt);
      window_reward = window_blue = 0.0;
      window = 0;
    }
    if (hooks.checkpoint_every > 0 && hooks.on_checkpoint && done % hooks.checkpoint_every == 0) {
      hooks.on_checkpoint(done, net);
    }
    if (hooks.validate_every > 0 && !hooks.validation_boards.empty() && done % hooks.validate_every == 0) {
      validate(done);
    }
  }
  return result;
}

EvaluationTable evaluate(const AgentNet& net, std::span<const Board> boards, int episodes_per_board, Rng& rng,
                         ActMode mode) {
  if (episodes_per_board < 1) throw ValidationError("episodes per board must be >= 1");
  EvaluationTable table;
  double total = 0.0;
  for (std::size_t i = 0; i < boards.size(); ++i) {
    BoardEvaluation be;
    be.board_index = i;
    double sum = 0.0;
    for (int e = 0; e < episodes_per_board; ++e) {
      Episode ep = play_episode(net, boards[i], rng, mode);
      ep.trajectory.board_id = std::to_string(i);
      const int s = evaluation_score(boards[i], ep.trajectory);
      be.scores.push_back(s);
      sum += s;
      be.trajectories.push_back(std::move(ep.trajectory));
    }
    be.mean_blue = sum / episodes_per_board;
    total += be.mean_blue;
    table.boards.push_back(std::move(be));
  }
  table.mean_blue = boards.empty() ? 0.0 : total / static_cast<double>(boards.size());
  return table;
}

SweepResult hyperparameter_sweep(const TaskSampler& sampler, const AgentConfig& base, const SweepGrid& grid,
                                 std::span<const Board> validation, std::span<const Board> test) {
  if (grid.value_coefs.empty() || grid.entropy_coefs.empty() || grid.learning_rates.empty()) {
    throw ValidationError("sweep grid has an empty axis");
  }
  SweepResult result;
  double best_score = 0.0;
  for (double vc : grid.value_coefs) {
    for (double ec : grid.entropy_coefs) {
      for (double lr : grid.learning_rates) {
        AgentConfig cfg = base;
        cfg.value_coef = vc;
        cfg.entropy_coef = ec;
        cfg.learning_rate = lr;
        TrainResult trained = train_agent(sampler, cfg);
        Rng eval_rng(0);
        const double v = evaluate(trained.net, validation, 1, eval_rng).mean_blue;
        result.entries.push_back({cfg, v});
        if (result.entries.size() == 1 || v < best_score) {
          best_score = v;
          result.best = result.entries.size() - 1;
          result.best_net = std::move(trained.net);
        }
      }
    }
  }
  Rng eval_rng(0);
  result.test = evaluate(result.best_net, test, 1, eval_rng);
  return result;
}

void save_agent(const std::filesystem::path& path, const AgentNet& net, const std::string& header_json) {
  nn::NetParams params = net.params;
  params.info["front_end"] = net.front_end == FrontEnd::Dense ? 0.0 : 1.0;
  nn::save_checkpoint(path, params, kAgentKind, header_json);
}

AgentNet load_agent(const std::filesystem::path& path) {
  AgentNet net;
  net.params = nn::load_checkpoint(path, kAgentKind);
  const auto it = net.params.info.find("front_end");
  net.front_end = it != net.params.info.end() && it->second == 1.0 ? FrontEnd::Conv : FrontEnd::Dense;
  net.params.info.clear();
  net.params.tensors.check_compatible(make_params(net.front_end));
  return net;
}

}  // namespace compgrid
