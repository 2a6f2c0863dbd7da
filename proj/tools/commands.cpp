#include "commands.hpp"

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <pthread.h>
#include <set>
#include <thread>

#include "compgrid/agent.hpp"
#include "compgrid/analysis.hpp"
#include "compgrid/baselines.hpp"
#include "compgrid/error.hpp"
#include "compgrid/grammar.hpp"
#include "compgrid/http_server.hpp"
#include "compgrid/nullgen.hpp"
#include "compgrid/records.hpp"
#include "compgrid/report.hpp"
#include "compgrid/service.hpp"
#include "compgrid/store.hpp"

namespace compgrid::cli {

namespace {

fs::path resolve(const Global& g, const fs::path& p) {
  if (p.empty() || p.is_absolute() || g.data.empty()) return p;
  return g.data / p;
}

/// Header config: the command's own options plus the global seed and scale.
Json with_globals(const Global& g, Json config) {
  config["seed"] = g.seed;
  config["paper_scale"] = g.paper_scale;
  return config;
}

Json start(const Global& g, const std::string& command, const Json& config) {
  Json full = with_globals(g, config);
  if (!g.quiet) std::cerr << "compgrid " << command << " " << full.dump() << "\n";
  return make_header(command, full);
}

void log(const Global& g, const std::string& line) {
  if (!g.quiet) std::cerr << line << "\n";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::string> strings(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.generic_string());
  return out;
}

Distribution parse_distribution(const std::string& s) {
  const auto d = distribution_from_string(s);
  if (!d) throw ValidationError("unknown distribution '" + s + "' (expected compositional or null)");
  return *d;
}

fs::path testset_path(const fs::path& dir, Distribution d, const char* split) {
  return dir / (std::string(to_string(d)) + "-" + split + ".jsonl");
}

std::map<Distribution, TestSet> load_test_sets_if_present(const fs::path& dir) {
  std::map<Distribution, TestSet> sets;
  for (Distribution d : {Distribution::Compositional, Distribution::Null}) {
    const fs::path p = testset_path(dir, d, "test");
    if (fs::exists(p)) sets.emplace(d, load_test_set(p));
  }
  return sets;
}

MaskedModel require_model(const Global& g, const fs::path& p) {
  const fs::path path = resolve(g, p);
  if (!fs::exists(path)) throw Error("masked model not found: " + path.string() + " (run train-null-model)");
  return load_masked_model(path);
}

/// Every mask of the enumerated corpus with the lowest red tile as the start.
Board board_of(Mask m, Provenance prov) {
  Board b;
  b.red = m;
  b.provenance = prov;
  for (int i = 0; i < kTileCount; ++i) {
    if (m.test(i)) {
      b.start = Pos::from_index(i);
      break;
    }
  }
  return b;
}

nn::Activation parse_activation(const std::string& s) {
  if (s == "relu") return nn::Activation::Relu;
  if (s == "tanh") return nn::Activation::Tanh;
  if (s == "sigmoid") return nn::Activation::Sigmoid;
  throw ValidationError("unknown activation '" + s + "' (expected relu, tanh or sigmoid)");
}

}  // namespace

// ---------------------------------------------------------------------------

int run_generate(const Global& g, const GenerateOptions& o) {
  const Json header = start(g, "generate",
                            {{"distribution", o.distribution},
                             {"n", o.n},
                             {"model", o.model.generic_string()},
                             {"sweeps", o.sweeps}});
  std::vector<Board> boards;
  boards.reserve(o.n);
  const Rng root(g.seed);
  if (o.distribution == "null") {
    if (o.model.empty()) throw ValidationError("--distribution null requires --model");
    boards = sample_null_boards(require_model(g, o.model), o.n, o.sweeps, g.seed);
  } else if (o.distribution == "comp" || o.distribution == "compositional") {
    for (std::size_t i = 0; i < o.n; ++i) {
      Rng rng = root.split(i);
      boards.push_back(generate_compositional(rng));
    }
  } else if (const auto form = form_from_string(o.distribution)) {
    for (std::size_t i = 0; i < o.n; ++i) {
      Rng rng = root.split(i);
      boards.push_back(generate_board(*form, rng));
    }
  } else {
    throw ValidationError("unknown distribution '" + o.distribution + "' (expected comp, chain, tree, loop or null)");
  }
  save_boards(resolve(g, o.out), boards, header);
  log(g, "wrote " + std::to_string(boards.size()) + " boards to " + resolve(g, o.out).string());
  return 0;
}

int run_enumerate(const Global& g, const EnumerateOptions& o) {
  const Json header = start(g, "enumerate", {{"form", o.form}});
  std::vector<BoardRecord> records;
  if (o.form == "all") {
    // Provenance is the first form (chain, tree, loop) able to produce the mask.
    std::map<Mask, Provenance> owner;
    for (Form f : kAllForms) {
      for (const WeightedMask& wm : enumerate_form(default_rule_set(f))) owner.try_emplace(wm.mask, provenance_of(f));
    }
    const auto masks = enumerate_compositional();
    const auto probs = compositional_probabilities();
    for (std::size_t i = 0; i < masks.size(); ++i) {
      records.push_back({board_of(masks[i], owner.at(masks[i])), Json{{"probability", probs[i]}}});
    }
  } else {
    const auto form = form_from_string(o.form);
    if (!form) throw ValidationError("unknown form '" + o.form + "' (expected all, chain, tree or loop)");
    for (const WeightedMask& wm : enumerate_form(default_rule_set(*form))) {
      records.push_back({board_of(wm.mask, provenance_of(*form)), Json{{"probability", wm.probability}}});
    }
  }
  save_board_records(resolve(g, o.out), records, header);
  log(g, "wrote " + std::to_string(records.size()) + " masks to " + resolve(g, o.out).string());
  return 0;
}

int run_train_null(const Global& g, const TrainNullOptions& o) {
  const int epochs = o.epochs > 0 ? o.epochs : (g.paper_scale ? kPaperEpochs : kDeskEpochs);
  const Json header = start(g, "train-null-model",
                            {{"epochs", epochs},
                             {"batch_size", o.batch_size},
                             {"learning_rate", o.learning_rate},
                             {"hidden", o.hidden},
                             {"corpus", o.corpus.generic_string()},
                             {"uniform_corpus", o.uniform_corpus}});
  std::vector<Mask> corpus;
  std::vector<double> weights;
  if (o.corpus.empty()) {
    const auto masks = enumerate_compositional();
    const auto probs = compositional_probabilities();
    corpus.assign(masks.begin(), masks.end());
    weights.assign(probs.begin(), probs.end());
  } else {
    for (const BoardRecord& r : load_board_records(resolve(g, o.corpus))) {
      corpus.push_back(r.board.red);
      const auto it = r.extra.find("probability");
      weights.push_back(it != r.extra.end() && it->is_number() ? it->get<double>() : 1.0);
    }
  }
  if (corpus.empty()) throw ValidationError("empty training corpus");
  if (o.uniform_corpus) weights.clear();

  MaskedTrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = o.batch_size;
  cfg.hidden = parse_activation(o.hidden);
  cfg.learning_rate = o.learning_rate;
  cfg.seed = g.seed;
  cfg.weights = weights;
  cfg.report_every = o.report_every;
  cfg.on_report = [&](int epoch, double loss) {
    log(g, "epoch " + std::to_string(epoch) + " loss " + fmt("%.6f", loss));
  };
  const MaskedModel model = train_masked_model(corpus, cfg);
  save_masked_model(resolve(g, o.out), model, header.dump());
  log(g, "masked-tile accuracy " + fmt("%.4f", model.accuracy) + " over " + std::to_string(corpus.size()) +
             " masks; wrote " + resolve(g, o.out).string());
  std::cout << Json{{"accuracy", model.accuracy}, {"epochs", model.epochs}, {"corpus", corpus.size()}}.dump() << "\n";
  return 0;
}

int run_sample_null(const Global& g, const SampleNullOptions& o) {
  const Json header =
      start(g, "sample-null", {{"model", o.model.generic_string()}, {"n", o.n}, {"sweeps", o.sweeps}});
  const auto boards = sample_null_boards(require_model(g, o.model), o.n, o.sweeps, g.seed);
  save_boards(resolve(g, o.out), boards, header);
  log(g, "wrote " + std::to_string(boards.size()) + " null boards to " + resolve(g, o.out).string());
  return 0;
}

int run_stats(const Global& g, const StatsOptions& o) {
  if (o.inputs.empty()) throw ValidationError("stats needs at least one --in file");
  const Json header = start(g, "stats", {{"in", strings(o.inputs)}, {"resamples", o.resamples}});
  std::vector<std::vector<Board>> groups;
  std::vector<std::string> names;
  for (const auto& p : o.inputs) {
    groups.push_back(load_boards(resolve(g, p)));
    names.push_back(p.stem().string());
  }
  std::vector<Json> records;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& boards = groups[i];
    std::size_t passing = 0;
    double red = 0;
    for (const Board& b : boards) {
      passing += is_compositional_passing(b) ? 1 : 0;
      red += b.red.count();
    }
    const double n = static_cast<double>(boards.size());
    records.push_back(Json{{"group", names[i]},
                           {"n", boards.size()},
                           {"mean_red", boards.empty() ? 0.0 : red / n},
                           {"passing_fraction", boards.empty() ? 0.0 : static_cast<double>(passing) / n}});
  }
  std::string table;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const auto cmp = compare_ising(groups[i], groups[j], mix_seed(g.seed + i * groups.size() + j), names[i],
                                     names[j], o.resamples);
      AnalysisReport rep;
      rep.tables = cmp;
      table += report_table(rep);
      for (const Comparison& c : cmp) records.push_back(comparison_to_json(c));
    }
  }
  if (groups.size() == 1) {
    Rng rng(g.seed);
    for (int order = 0; order < 3; ++order) {
      std::vector<double> xs;
      for (const Board& b : groups[0]) xs.push_back(ising_stats(b)[order]);
      const GroupSummary s = summarize(names[0], xs, rng, o.resamples);
      records.push_back(Json{{"metric", "ising_order" + std::to_string(order)},
                             {"group", s.name},
                             {"n", s.n},
                             {"mean", s.mean},
                             {"ci", {s.ci.lower, s.ci.upper}}});
    }
  }
  write_records(resolve(g, o.out), header, records);
  for (std::size_t i = 0; i < groups.size(); ++i) std::cout << records[i].dump() << "\n";
  std::cout << table;
  return 0;
}

int run_build_testsets(const Global& g, const BuildTestsetsOptions& o) {
  const Json header = start(g, "build-testsets",
                            {{"model", o.model.generic_string()},
                             {"sweeps", o.sweeps},
                             {"n", o.n},
                             {"n_validation", o.n_validation}});
  const MaskedModel model = require_model(g, o.model);
  const int sweeps = o.sweeps;
  const TestSets sets = build_test_sets([](Rng& rng) { return generate_compositional(rng); },
                                        [&model, sweeps](Rng& rng) { return gibbs_sample(model, sweeps, rng); },
                                        g.seed, o.n, o.n_validation);
  const fs::path dir = resolve(g, o.out_dir);
  save_test_set(testset_path(dir, Distribution::Compositional, "test"), sets.comp_test, header);
  save_test_set(testset_path(dir, Distribution::Null, "test"), sets.null_test, header);
  save_test_set(testset_path(dir, Distribution::Compositional, "validation"), sets.comp_validation, header);
  save_test_set(testset_path(dir, Distribution::Null, "validation"), sets.null_validation, header);
  log(g, "wrote test and validation sets to " + dir.string());
  return 0;
}

int run_train_agent(const Global& g, const TrainAgentOptions& o) {
  const Distribution dist = parse_distribution(o.distribution);
  const std::int64_t episodes = o.episodes > 0 ? o.episodes : (g.paper_scale ? kPaperEpisodes : kDeskEpisodes);
  const auto front_end = front_end_from_string(o.front_end);
  if (!front_end) throw ValidationError("unknown front end '" + o.front_end + "' (expected dense or conv)");
  const auto optimizer = optimizer_from_string(o.optimizer);
  if (!optimizer) throw ValidationError("unknown optimizer '" + o.optimizer + "' (expected rmsprop or sgd)");
  const Json header = start(g, "train-agent",
                            {{"distribution", std::string(to_string(dist))},
                             {"testsets", o.testsets.generic_string()},
                             {"model", o.model.generic_string()},
                             {"null_pool", o.null_pool.generic_string()},
                             {"pool_size", o.pool_size},
                             {"sweeps", o.sweeps},
                             {"episodes", episodes},
                             {"front_end", o.front_end},
                             {"optimizer", o.optimizer},
                             {"learning_rate", o.learning_rate},
                             {"value_coef", o.value_coef},
                             {"entropy_coef", o.entropy_coef},
                             {"gamma", o.gamma},
                             {"curve_every", o.curve_every},
                             {"checkpoint_every", o.checkpoint_every},
                             {"validate_every", o.validate_every},
                             {"sweep_learning_rates", o.sweep_lrs},
                             {"sweep_value_coefs", o.sweep_value_coefs},
                             {"sweep_entropy_coefs", o.sweep_entropy_coefs}});

  AgentConfig cfg;
  cfg.gamma = o.gamma;
  cfg.value_coef = o.value_coef;
  cfg.entropy_coef = o.entropy_coef;
  cfg.learning_rate = o.learning_rate;
  cfg.episodes = episodes;
  cfg.front_end = *front_end;
  cfg.optimizer = *optimizer;
  cfg.seed = g.seed;
  cfg.validate();

  // Test and validation boards never appear during training.
  const fs::path dir = resolve(g, o.testsets);
  MaskSet held_out;
  std::map<std::string, TestSet> sets;
  for (Distribution d : {Distribution::Compositional, Distribution::Null}) {
    for (const char* split : {"test", "validation"}) {
      const fs::path p = testset_path(dir, d, split);
      if (!fs::exists(p)) continue;
      TestSet s = load_test_set(p);
      for (const Board& b : s.boards) held_out.insert(b.red);
      sets.emplace(std::string(to_string(d)) + "-" + split, std::move(s));
    }
  }
  const std::string own = std::string(to_string(dist));
  const TestSet* test = sets.contains(own + "-test") ? &sets.at(own + "-test") : nullptr;
  const TestSet* validation = sets.contains(own + "-validation") ? &sets.at(own + "-validation") : nullptr;

  BoardSampler base;
  if (dist == Distribution::Compositional) {
    base = [](Rng& rng) { return generate_compositional(rng); };
  } else {
    std::vector<Board> pool;
    if (!o.null_pool.empty()) {
      pool = load_boards(resolve(g, o.null_pool));
    } else {
      const MaskedModel model = require_model(g, o.model);
      log(g, "sampling a pool of " + std::to_string(o.pool_size) + " null boards");
      pool = sample_null_boards(model, o.pool_size, o.sweeps, mix_seed(g.seed ^ 0x6e756c6cULL));
    }
    std::erase_if(pool, [&](const Board& b) { return held_out.contains(b.red); });
    if (pool.empty()) throw ValidationError("null training pool is empty after removing held-out boards");
    base = [pool = std::move(pool)](Rng& rng) { return pool[rng.uniform_index(pool.size())]; };
  }
  const BoardSampler sampler = excluding(base, held_out);

  std::vector<Json> curve;
  TrainHooks hooks;
  hooks.curve_every = o.curve_every;
  hooks.on_curve = [&](const CurvePoint& p) {
    curve.push_back(Json{{"episode", p.episode},
                         {"mean_reward", p.mean_reward},
                         {"mean_blue", p.mean_blue},
                         {"learning_rate", p.learning_rate}});
    log(g, "episode " + std::to_string(p.episode) + " reward " + fmt("%.3f", p.mean_reward) + " blue " +
               fmt("%.3f", p.mean_blue));
  };
  const fs::path out = resolve(g, o.out);
  if (o.checkpoint_every > 0) {
    hooks.checkpoint_every = o.checkpoint_every;
    hooks.on_checkpoint = [&](std::int64_t ep, const AgentNet& net) {
      fs::path p = out;
      p += ".ep" + std::to_string(ep);
      save_agent(p, net, header.dump());
    };
  }
  if (o.validate_every > 0) {
    if (!validation) throw ValidationError("--validate-every needs a validation set in " + dir.string());
    hooks.validate_every = o.validate_every;
    hooks.validation_boards = validation->boards;
    hooks.on_validation = [&](const ValidationPoint& p) {
      curve.push_back(Json{{"episode", p.episode}, {"validation_blue", p.mean_blue}});
    };
  }

  const bool sweeping = !o.sweep_lrs.empty() || !o.sweep_value_coefs.empty() || !o.sweep_entropy_coefs.empty();
  if (sweeping) {
    if (!validation || !test) throw ValidationError("a hyperparameter sweep needs test and validation sets");
    SweepGrid grid;
    if (!o.sweep_lrs.empty()) grid.learning_rates = o.sweep_lrs;
    if (!o.sweep_value_coefs.empty()) grid.value_coefs = o.sweep_value_coefs;
    if (!o.sweep_entropy_coefs.empty()) grid.entropy_coefs = o.sweep_entropy_coefs;
    const SweepResult r = hyperparameter_sweep(sampler, cfg, grid, validation->boards, test->boards);
    std::vector<Json> entries;
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
      const auto& e = r.entries[i];
      entries.push_back(Json{{"learning_rate", e.config.learning_rate},
                             {"value_coef", e.config.value_coef},
                             {"entropy_coef", e.config.entropy_coef},
                             {"validation_blue", e.validation_blue},
                             {"best", i == r.best}});
    }
    entries.push_back(Json{{"test_mean_blue", r.test.mean_blue}});
    fs::path sweep_path = out;
    sweep_path += ".sweep.jsonl";
    write_records(sweep_path, header, entries);
    save_agent(out, r.best_net, header.dump());
    log(g, "sweep best validation blue " + fmt("%.3f", r.entries[r.best].validation_blue) + "; test " +
               fmt("%.3f", r.test.mean_blue));
    return 0;
  }

  const TrainResult result = train_agent(sampler, cfg, hooks);
  save_agent(out, result.net, header.dump());
  write_records(resolve(g, o.curve), header, curve);
  log(g, "wrote " + out.string());
  return 0;
}

int run_eval_agent(const Global& g, const EvalAgentOptions& o) {
  if (o.testset.empty()) throw ValidationError("eval-agent needs --testset");
  ActMode mode;
  if (o.mode == "greedy") {
    mode = ActMode::Greedy;
  } else if (o.mode == "sample") {
    mode = ActMode::Sample;
  } else {
    throw ValidationError("unknown mode '" + o.mode + "' (expected greedy or sample)");
  }
  const TestSet set = load_test_set(resolve(g, o.testset));
  const Json header = start(g, "eval-agent",
                            {{"agent", o.agent.generic_string()},
                             {"testset", o.testset.generic_string()},
                             {"distribution", std::string(to_string(set.distribution))},
                             {"episodes_per_board", o.episodes_per_board},
                             {"mode", o.mode},
                             {"actor", o.actor}});
  const AgentNet net = load_agent(resolve(g, o.agent));
  Rng rng(g.seed);
  EvaluationTable table = evaluate(net, set.boards, o.episodes_per_board, rng, mode);
  std::vector<Json> records;
  double random_blue = 0.0;
  int truncated = 0;
  for (std::size_t i = 0; i < table.boards.size(); ++i) {
    for (Trajectory t : table.boards[i].trajectories) {
      t.actor_id = o.actor;
      truncated += t.truncated ? 1 : 0;
      records.push_back(trajectory_to_json(t));
    }
    random_blue += random_policy_expected_blue(set.boards[i]);
  }
  if (!set.boards.empty()) random_blue /= static_cast<double>(set.boards.size());
  const Json summary{{"mean_blue", table.mean_blue}, {"random_expected_blue", random_blue}, {"truncated", truncated}};
  records.push_back(Json{{"summary", summary}});
  write_records(resolve(g, o.out), header, records);
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_heuristic(const Global& g, const HeuristicOptions& o) {
  if (o.testset.empty()) throw ValidationError("heuristic needs --testset");
  if (o.runs <= 0) throw ValidationError("--runs must be positive");
  Policy policy;
  if (o.policy == "neighbor") {
    policy = neighbor_heuristic_step;
  } else if (o.policy == "random") {
    policy = uniform_random_step;
  } else {
    throw ValidationError("unknown policy '" + o.policy + "' (expected neighbor or random)");
  }
  const TestSet set = load_test_set(resolve(g, o.testset));
  const Json header = start(g, "heuristic",
                            {{"testset", o.testset.generic_string()},
                             {"distribution", std::string(to_string(set.distribution))},
                             {"runs", o.runs},
                             {"policy", o.policy}});
  const Rng root(g.seed);
  std::vector<Json> records;
  double total = 0.0;
  for (std::size_t i = 0; i < set.boards.size(); ++i) {
    Rng rng = root.split(i);
    const HeuristicRun run = run_baseline(set.boards[i], policy, o.runs, rng, std::to_string(i));
    total += run.mean;
    records.push_back(heuristic_run_to_json(run));
  }
  write_records(resolve(g, o.out), header, records);
  const double n = static_cast<double>(std::max<std::size_t>(set.boards.size(), 1));
  std::cout << Json{{"mean_blue", total / n}, {"boards", set.boards.size()}}.dump() << "\n";
  return 0;
}

int run_analyze(const Global& g, const AnalyzeOptions& o) {
  const Json header = start(g, "analyze",
                            {{"testsets", o.testsets.generic_string()},
                             {"trajectories", strings(o.trajectories)},
                             {"heuristic", strings(o.heuristic)},
                             {"sessions", strings(o.sessions)},
                             {"resamples", o.resamples}});
  AnalysisInputs in;
  in.test_sets = load_test_sets_if_present(resolve(g, o.testsets));

  auto distribution_of = [&](const fs::path& p) {
    const Json h = read_header(p);
    if (!h.is_object() || !h.contains("header") || !h["header"]["config"].contains("distribution")) {
      throw ValidationError(p.string() + ": header does not name a distribution");
    }
    return parse_distribution(h["header"]["config"]["distribution"].get<std::string>());
  };
  for (const auto& rel : o.trajectories) {
    const fs::path p = resolve(g, rel);
    const Distribution d = distribution_of(p);
    const Json h = read_header(p);
    const std::string actor = h["header"]["config"].value("actor", std::string("agent"));
    auto& dest = in.trajectories[actor][d];
    for (const LineRecord& r : read_records(p)) {
      if (r.value.contains("summary")) continue;
      dest.push_back(trajectory_from_json(r.value, r.line));
    }
  }
  for (const auto& rel : o.heuristic) {
    const fs::path p = resolve(g, rel);
    const Distribution d = distribution_of(p);
    for (const LineRecord& r : read_records(p)) {
      HeuristicRun run = heuristic_run_from_json(r.value, r.line);
      in.heuristic[d][run.board_id] = std::move(run);
    }
  }
  for (const auto& rel : o.sessions) {
    for (const ExportedSession& s : load_export(resolve(g, rel))) {
      const Distribution d = s.record.distribution;
      auto it = in.test_sets.find(d);
      if (it == in.test_sets.end()) {
        it = in.test_sets.emplace(d, s.boards).first;
      } else if (it->second.boards != s.boards.boards) {
        throw ValidationError("session " + s.record.id + " was played on a different " +
                              std::string(to_string(d)) + " test set");
      }
      auto trajs = session_trajectories(s.record, s.boards);
      auto& dest = in.trajectories["human"][d];
      dest.insert(dest.end(), trajs.begin(), trajs.end());
    }
  }
  if (in.trajectories.empty() && in.heuristic.empty()) {
    throw ValidationError("analyze needs --trajectories, --heuristic or --sessions input");
  }
  const AnalysisReport rep = analyze(in, g.seed, o.resamples);
  write_records(resolve(g, o.out), header, report_records(rep));
  if (!o.csv.empty()) {
    const fs::path csv = resolve(g, o.csv);
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    std::ofstream f(csv, std::ios::binary);
    if (!f) throw Error("cannot write " + csv.string());
    f << report_csv(rep);
  }
  std::cout << report_table(rep);
  return 0;
}

namespace {

std::map<Distribution, TestSet> serve_test_sets(const Global& g, const fs::path& rel) {
  auto sets = load_test_sets_if_present(resolve(g, rel));
  for (Distribution d : {Distribution::Compositional, Distribution::Null}) {
    if (!sets.contains(d)) log(g, "warning: no " + std::string(to_string(d)) + " test set; sessions for it will fail");
  }
  return sets;
}

}  // namespace

int run_serve(const Global& g, const ServeOptions& o) {
  start(g, "serve",
        {{"testsets", o.testsets.generic_string()},
         {"sessions", o.sessions.generic_string()},
         {"host", o.host},
         {"port", o.port},
         {"static_dir", o.static_dir.generic_string()},
         {"admin_token", o.admin_token.empty() ? "" : "<set>"}});
  // Block termination signals before any thread starts; a watcher thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  SessionStore store(resolve(g, o.sessions), serve_test_sets(g, o.testsets));
  ServiceConfig cfg;
  cfg.admin_token = o.admin_token;
  cfg.seed = g.seed;
  SessionService service(store, cfg);
  HttpOptions http;
  http.host = o.host;
  http.port = o.port;
  http.static_dir = o.static_dir.empty() ? fs::path{} : resolve(g, o.static_dir);
  HttpServer server(service, http);
  const int port = server.bind();
  log(g, "listening on http://" + o.host + ":" + std::to_string(port));
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  // run() can also return on its own; wake the watcher so it can be joined.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  log(g, "stopped");
  return 0;
}

int run_export(const Global& g, const ExportOptions& o) {
  const Json header = start(g, "export",
                            {{"testsets", o.testsets.generic_string()},
                             {"sessions", o.sessions.generic_string()},
                             {"include_incomplete", o.include_incomplete}});
  const SessionStore store(resolve(g, o.sessions), load_test_sets_if_present(resolve(g, o.testsets)));
  const auto records = store.export_records(o.include_incomplete);
  write_records(resolve(g, o.out), header, records);
  log(g, "exported " + std::to_string(records.size()) + " sessions to " + resolve(g, o.out).string());
  return 0;
}

}  // namespace compgrid::cli
