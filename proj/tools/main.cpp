#include <CLI11.hpp>
#include <exception>
#include <functional>
#include <iostream>

#include "commands.hpp"
#include "compgrid/error.hpp"

using namespace compgrid::cli;

int main(int argc, char** argv) {
  CLI::App app{"Compositional gridworld: board generation, null models, agents and analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "compgrid 0.1.0");

  Global g;
  app.add_option("--seed", g.seed, "Seed that determines every output")->capture_default_str();
  app.add_flag("--paper-scale", g.paper_scale, "Use full-scale defaults (10^4 epochs, 10^6 episodes)");
  app.add_option("--data", g.data, "Data root for relative paths")->envname("COMPGRID_DATA");
  app.add_flag("-q,--quiet", g.quiet, "Do not log to stderr");
  app.fallthrough();

  std::function<int()> run;

  GenerateOptions gen;
  auto* c = app.add_subcommand("generate", "Sample boards from a distribution");
  c->add_option("--distribution", gen.distribution, "comp, chain, tree, loop or null")->capture_default_str();
  c->add_option("--n", gen.n, "Number of boards")->capture_default_str();
  c->add_option("--model", gen.model, "Masked model (null boards only)");
  c->add_option("--sweeps", gen.sweeps, "Gibbs sweeps (null boards only)")->capture_default_str();
  c->add_option("-o,--out", gen.out, "Output board file")->capture_default_str();
  c->callback([&] { run = [&] { return run_generate(g, gen); }; });

  EnumerateOptions en;
  c = app.add_subcommand("enumerate", "Write every mask the grammar can produce");
  c->add_option("--form", en.form, "all, chain, tree or loop")->capture_default_str();
  c->add_option("-o,--out", en.out, "Output board file")->capture_default_str();
  c->callback([&] { run = [&] { return run_enumerate(g, en); }; });

  TrainNullOptions tn;
  c = app.add_subcommand("train-null-model", "Train the masked-tile model on the enumerated corpus");
  c->add_option("--epochs", tn.epochs, "Epochs (default 10^3, or 10^4 with --paper-scale)");
  c->add_option("--batch-size", tn.batch_size)->capture_default_str();
  c->add_option("--lr", tn.learning_rate, "Adam learning rate")->capture_default_str();
  c->add_option("--hidden", tn.hidden, "Hidden activation: relu, tanh or sigmoid")->capture_default_str();
  c->add_option("--corpus", tn.corpus, "Board file to train on instead of the built-in enumeration");
  c->add_flag("--uniform-corpus", tn.uniform_corpus, "Weight every mask equally instead of by its probability");
  c->add_option("--report-every", tn.report_every, "Log the loss every N epochs")->capture_default_str();
  c->add_option("-o,--out", tn.out, "Output checkpoint")->capture_default_str();
  c->callback([&] { run = [&] { return run_train_null(g, tn); }; });

  SampleNullOptions sn;
  c = app.add_subcommand("sample-null", "Gibbs-sample null boards from a masked model");
  c->add_option("--model", sn.model)->capture_default_str();
  c->add_option("--n", sn.n)->capture_default_str();
  c->add_option("--sweeps", sn.sweeps)->capture_default_str();
  c->add_option("-o,--out", sn.out)->capture_default_str();
  c->callback([&] { run = [&] { return run_sample_null(g, sn); }; });

  StatsOptions st;
  c = app.add_subcommand("stats", "Ising statistics of board files, compared pairwise");
  c->add_option("--in", st.inputs, "Board file (repeatable)")->required();
  c->add_option("--resamples", st.resamples, "Bootstrap resamples")->capture_default_str();
  c->add_option("-o,--out", st.out)->capture_default_str();
  c->callback([&] { run = [&] { return run_stats(g, st); }; });

  BuildTestsetsOptions bt;
  c = app.add_subcommand("build-testsets", "Draw the held-out test and validation sets");
  c->add_option("--model", bt.model)->capture_default_str();
  c->add_option("--sweeps", bt.sweeps)->capture_default_str();
  c->add_option("--n", bt.n, "Test boards per distribution")->capture_default_str();
  c->add_option("--n-validation", bt.n_validation, "Validation boards per distribution")->capture_default_str();
  c->add_option("--out-dir", bt.out_dir)->capture_default_str();
  c->callback([&] { run = [&] { return run_build_testsets(g, bt); }; });

  TrainAgentOptions ta;
  c = app.add_subcommand("train-agent", "Train the recurrent A2C agent");
  c->add_option("--distribution", ta.distribution, "compositional or null")->capture_default_str();
  c->add_option("--testsets", ta.testsets, "Held-out sets to exclude from training")->capture_default_str();
  c->add_option("--model", ta.model, "Masked model for the null training pool")->capture_default_str();
  c->add_option("--null-pool", ta.null_pool, "Pre-sampled null boards to train on");
  c->add_option("--pool-size", ta.pool_size, "Null boards sampled when no pool is given")->capture_default_str();
  c->add_option("--sweeps", ta.sweeps)->capture_default_str();
  c->add_option("--episodes", ta.episodes, "Episodes (default 10^5, or 10^6 with --paper-scale)");
  c->add_option("--front-end", ta.front_end, "dense or conv")->capture_default_str();
  c->add_option("--optimizer", ta.optimizer, "rmsprop or sgd")->capture_default_str();
  c->add_option("--lr", ta.learning_rate)->capture_default_str();
  c->add_option("--value-coef", ta.value_coef)->capture_default_str();
  c->add_option("--entropy-coef", ta.entropy_coef)->capture_default_str();
  c->add_option("--gamma", ta.gamma)->capture_default_str();
  c->add_option("--curve-every", ta.curve_every)->capture_default_str();
  c->add_option("--checkpoint-every", ta.checkpoint_every, "0 disables intermediate checkpoints");
  c->add_option("--validate-every", ta.validate_every, "0 disables validation scoring");
  c->add_option("--sweep-lr", ta.sweep_lrs, "Learning rates to search (repeatable)");
  c->add_option("--sweep-value-coef", ta.sweep_value_coefs, "Value coefficients to search (repeatable)");
  c->add_option("--sweep-entropy-coef", ta.sweep_entropy_coefs, "Entropy coefficients to search (repeatable)");
  c->add_option("-o,--out", ta.out, "Output checkpoint")->capture_default_str();
  c->add_option("--curve", ta.curve, "Learning-curve file")->capture_default_str();
  c->callback([&] { run = [&] { return run_train_agent(g, ta); }; });

  EvalAgentOptions ea;
  c = app.add_subcommand("eval-agent", "Play a trained agent on a test set");
  c->add_option("--agent", ea.agent)->capture_default_str();
  c->add_option("--testset", ea.testset)->required();
  c->add_option("--episodes-per-board", ea.episodes_per_board)->capture_default_str();
  c->add_option("--mode", ea.mode, "greedy or sample")->capture_default_str();
  c->add_option("--actor", ea.actor, "Actor label used by analyze")->capture_default_str();
  c->add_option("-o,--out", ea.out)->capture_default_str();
  c->callback([&] { run = [&] { return run_eval_agent(g, ea); }; });

  HeuristicOptions he;
  c = app.add_subcommand("heuristic", "Score a baseline policy on a test set");
  c->add_option("--testset", he.testset)->required();
  c->add_option("--runs", he.runs, "Repetitions per board")->capture_default_str();
  c->add_option("--policy", he.policy, "neighbor or random")->capture_default_str();
  c->add_option("-o,--out", he.out)->capture_default_str();
  c->callback([&] { run = [&] { return run_heuristic(g, he); }; });

  AnalyzeOptions an;
  c = app.add_subcommand("analyze", "Comparison tables with bootstrap CIs and p-values");
  c->add_option("--testsets", an.testsets)->capture_default_str();
  c->add_option("--trajectories", an.trajectories, "eval-agent output (repeatable)");
  c->add_option("--heuristic", an.heuristic, "heuristic output (repeatable)");
  c->add_option("--sessions", an.sessions, "Session export (repeatable)");
  c->add_option("--resamples", an.resamples)->capture_default_str();
  c->add_option("-o,--out", an.out)->capture_default_str();
  c->add_option("--csv", an.csv, "Per-board CSV (empty to skip)")->capture_default_str();
  c->callback([&] { run = [&] { return run_analyze(g, an); }; });

  ServeOptions sv;
  c = app.add_subcommand("serve", "Run the human-play HTTP service until interrupted");
  c->add_option("--testsets", sv.testsets)->capture_default_str();
  c->add_option("--sessions", sv.sessions, "Session directory")->capture_default_str();
  c->add_option("--host", sv.host)->capture_default_str();
  c->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  c->add_option("--admin-token", sv.admin_token, "Token required by /export")->envname("COMPGRID_ADMIN_TOKEN");
  c->add_option("--static", sv.static_dir, "Directory of web assets served at /");
  c->callback([&] { run = [&] { return run_serve(g, sv); }; });

  ExportOptions ex;
  c = app.add_subcommand("export", "Consolidate stored sessions into one file");
  c->add_option("--testsets", ex.testsets)->capture_default_str();
  c->add_option("--sessions", ex.sessions)->capture_default_str();
  c->add_flag("--include-incomplete", ex.include_incomplete);
  c->add_option("-o,--out", ex.out)->capture_default_str();
  c->callback([&] { run = [&] { return run_export(g, ex); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return run();
  } catch (const compgrid::Error& e) {
    std::cerr << "compgrid: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "compgrid: unexpected error: " << e.what() << "\n";
    return 2;
  }
}
