#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace compgrid::cli {

namespace fs = std::filesystem;

/// Options shared by every subcommand.
struct Global {
  std::uint64_t seed = 0;
  bool paper_scale = false;
  fs::path data;  ///< Data root; relative artifact paths resolve against it.
  bool quiet = false;
};

struct GenerateOptions {
  std::string distribution = "comp";  ///< comp | chain | tree | loop | null
  std::size_t n = 10;
  fs::path model;  ///< Masked model, for null boards.
  int sweeps = 20;
  fs::path out = "boards/generated.jsonl";
};

struct EnumerateOptions {
  std::string form = "all";  ///< all | chain | tree | loop
  fs::path out = "boards/enumerated.jsonl";
};

struct TrainNullOptions {
  int epochs = 0;  ///< 0: desk (10^3) or paper (10^4) scale default.
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::string hidden = "relu";
  fs::path corpus;  ///< Board file; empty uses the built-in enumeration.
  bool uniform_corpus = false;
  int report_every = 100;
  fs::path out = "runs/masked-model.ckpt";
};

struct SampleNullOptions {
  fs::path model = "runs/masked-model.ckpt";
  std::size_t n = 500;
  int sweeps = 20;
  fs::path out = "boards/null.jsonl";
};

struct StatsOptions {
  std::vector<fs::path> inputs;
  std::size_t resamples = 10000;
  fs::path out = "runs/stats.jsonl";
};

struct BuildTestsetsOptions {
  fs::path model = "runs/masked-model.ckpt";
  int sweeps = 20;
  std::size_t n = 24;
  std::size_t n_validation = 24;
  fs::path out_dir = "testsets";
};

struct TrainAgentOptions {
  std::string distribution = "comp";
  fs::path testsets = "testsets";
  fs::path model = "runs/masked-model.ckpt";  ///< For the null training pool.
  fs::path null_pool;                         ///< Pre-sampled null boards (overrides --model).
  std::size_t pool_size = 10000;
  int sweeps = 20;
  std::int64_t episodes = 0;  ///< 0: desk (10^5) or paper (10^6) scale default.
  std::string front_end = "dense";
  std::string optimizer = "rmsprop";
  double learning_rate = 0.0023483181861598565;
  double value_coef = 0.0006747109316677081;
  double entropy_coef = 0.0006747109316677081;
  double gamma = 0.9;
  std::int64_t curve_every = 1000;
  std::int64_t checkpoint_every = 0;
  std::int64_t validate_every = 0;
  std::vector<double> sweep_lrs;
  std::vector<double> sweep_value_coefs;
  std::vector<double> sweep_entropy_coefs;
  fs::path out = "runs/agent.ckpt";
  fs::path curve = "runs/agent-curve.jsonl";
};

struct EvalAgentOptions {
  fs::path agent = "runs/agent.ckpt";
  fs::path testset;
  int episodes_per_board = 1;
  std::string mode = "greedy";
  std::string actor = "agent";
  fs::path out = "runs/agent-eval.jsonl";
};

struct HeuristicOptions {
  fs::path testset;
  int runs = 1000;
  std::string policy = "neighbor";  ///< neighbor | random
  fs::path out = "runs/heuristic.jsonl";
};

struct AnalyzeOptions {
  fs::path testsets = "testsets";
  std::vector<fs::path> trajectories;  ///< Trajectory files (eval-agent output).
  std::vector<fs::path> heuristic;     ///< Heuristic run files.
  std::vector<fs::path> sessions;      ///< Session exports.
  std::size_t resamples = 10000;
  fs::path out = "runs/report.jsonl";
  fs::path csv = "runs/report.csv";
};

struct ServeOptions {
  fs::path testsets = "testsets";
  fs::path sessions = "sessions";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string admin_token;
  fs::path static_dir;
};

struct ExportOptions {
  fs::path testsets = "testsets";
  fs::path sessions = "sessions";
  bool include_incomplete = false;
  fs::path out = "runs/sessions-export.jsonl";
};

int run_generate(const Global& g, const GenerateOptions& o);
int run_enumerate(const Global& g, const EnumerateOptions& o);
int run_train_null(const Global& g, const TrainNullOptions& o);
int run_sample_null(const Global& g, const SampleNullOptions& o);
int run_stats(const Global& g, const StatsOptions& o);
int run_build_testsets(const Global& g, const BuildTestsetsOptions& o);
int run_train_agent(const Global& g, const TrainAgentOptions& o);
int run_eval_agent(const Global& g, const EvalAgentOptions& o);
int run_heuristic(const Global& g, const HeuristicOptions& o);
int run_analyze(const Global& g, const AnalyzeOptions& o);
int run_serve(const Global& g, const ServeOptions& o);
int run_export(const Global& g, const ExportOptions& o);

}  // namespace compgrid::cli
