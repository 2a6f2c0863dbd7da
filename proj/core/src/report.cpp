#include "compgrid/report.hpp"

#include <cstdio>
#include <sstream>

#include "compgrid/error.hpp"

namespace compgrid {

namespace {

const Board& board_for(const AnalysisInputs& in, Distribution d, const Trajectory& t) {
  const auto it = in.test_sets.find(d);
  if (it == in.test_sets.end()) throw ValidationError("no test set for " + std::string(to_string(d)));
  std::size_t idx = 0;
  try {
    idx = std::stoul(t.board_id);
  } catch (const std::exception&) {
    throw ValidationError("trajectory board id '" + t.board_id + "' is not a test-set index");
  }
  if (idx >= it->second.boards.size()) throw ValidationError("trajectory board id out of range");
  return it->second.boards[idx];
}

std::string group_name(const std::string& actor, Distribution d) { return actor + "/" + std::string(to_string(d)); }

}  // namespace

AnalysisReport analyze(const AnalysisInputs& in, std::uint64_t seed, std::size_t resamples) {
  AnalysisReport rep;
  std::uint64_t table_seed = seed;
  auto add = [&](Comparison c) {
    rep.tables.push_back(std::move(c));
  };
  auto next_seed = [&] { return mix_seed(++table_seed); };
  const Distribution C = Distribution::Compositional;
  const Distribution N = Distribution::Null;

  // Heuristic blue counts (per-board means).
  if (!in.heuristic.empty()) {
    std::map<Distribution, std::vector<double>> means;
    for (const auto& [d, runs] : in.heuristic) {
      for (const auto& [id, run] : runs) {
        means[d].push_back(run.mean);
        rep.rows.push_back({id, group_name("heuristic", d), "blue_count", run.mean});
      }
    }
    add(compare("blue_count/heuristic", "compositional", means[C], "null", means[N], next_seed(), resamples));
  }

  std::size_t degenerate = 0;
  for (const auto& [actor, by_dist] : in.trajectories) {
    std::map<Distribution, std::vector<double>> blue;
    std::map<Distribution, std::vector<double>> zs;
    std::map<Distribution, std::vector<double>> corr;
    for (const auto& [d, trajs] : by_dist) {
      std::vector<double> first;
      std::vector<double> second;
      std::map<std::string, std::vector<double>> per_actor;
      std::vector<std::string> actor_order;
      for (const Trajectory& t : trajs) {
        const double s = evaluation_score(board_for(in, d, t), t);
        blue[d].push_back(s);
        rep.rows.push_back({t.board_id, group_name(actor, d), "blue_count", s});
        if (const auto h = success_rate_halves(t)) {
          first.push_back(h->first);
          second.push_back(h->second);
          rep.rows.push_back({t.board_id, group_name(actor, d), "success_first_half", h->first});
          rep.rows.push_back({t.board_id, group_name(actor, d), "success_second_half", h->second});
        }
        if (const auto hd = in.heuristic.find(d); hd != in.heuristic.end()) {
          if (const auto run = hd->second.find(t.board_id); run != hd->second.end()) {
            if (const auto z = heuristic_zscore(s, run->second.mean, run->second.std)) {
              zs[d].push_back(*z);
              rep.rows.push_back({t.board_id, group_name(actor, d), "zscore", *z});
            } else {
              ++degenerate;
            }
          }
        }
        if (!per_actor.contains(t.actor_id)) actor_order.push_back(t.actor_id);
        per_actor[t.actor_id].push_back(s);
      }
      add(compare("success_half/" + group_name(actor, d), "first_half", first, "second_half", second, next_seed(),
                  resamples));
      for (const std::string& a : actor_order) {
        const auto& scores = per_actor[a];
        std::vector<double> trial(scores.size());
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = static_cast<double>(i + 1);
        if (const auto r = learning_correlation(trial, scores)) {
          corr[d].push_back(*r);
          rep.rows.push_back({a, group_name(actor, d), "trial_correlation", *r});
        }
      }
    }
    add(compare("blue_count/" + actor, "compositional", blue[C], "null", blue[N], next_seed(), resamples));
    if (by_dist.contains(N)) {
      std::vector<Board> boards;
      std::vector<double> scores;
      for (const Trajectory& t : by_dist.at(N)) {
        boards.push_back(board_for(in, N, t));
        scores.push_back(evaluation_score(boards.back(), t));
      }
      Comparison c = passing_split(boards, scores, next_seed(), resamples);
      c.metric = "passing_split/" + actor;
      add(std::move(c));
    }
    if (!in.heuristic.empty()) {
      add(compare("zscore/" + actor, "compositional", zs[C], "null", zs[N], next_seed(), resamples));
    }
    add(compare("trial_correlation/" + actor, "compositional", corr[C], "null", corr[N], next_seed(), resamples));
  }
  rep.degenerate_boards = degenerate;
  return rep;
}

std::vector<Json> report_records(const AnalysisReport& report) {
  std::vector<Json> out;
  for (const Comparison& c : report.tables) out.push_back(comparison_to_json(c));
  out.push_back(Json{{"degenerate_boards", report.degenerate_boards}});
  return out;
}

std::string report_csv(const AnalysisReport& report) {
  std::ostringstream out;
  out << "board_id,group,metric,value\n";
  char buf[64];
  for (const CsvRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.board_id << ',' << r.group << ',' << r.metric << ',' << buf << '\n';
  }
  return out.str();
}

std::string report_table(const AnalysisReport& report) {
  std::ostringstream out;
  char buf[256];
  auto group = [&](const GroupSummary& g) {
    if (g.n == 0) {
      std::snprintf(buf, sizeof buf, "%-14s n=0", g.name.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%-14s n=%-4zu %8.3f [%8.3f, %8.3f]", g.name.c_str(), g.n, g.mean, g.ci.lower,
                    g.ci.upper);
    }
    return std::string(buf);
  };
  for (const Comparison& c : report.tables) {
    out << c.metric << '\n';
    out << "  " << group(c.a) << '\n';
    out << "  " << group(c.b) << '\n';
    if (c.p_value) {
      std::snprintf(buf, sizeof buf, "  p = %.4f\n", *c.p_value);
      out << buf;
    } else {
      out << "  p = n/a (empty group)\n";
    }
  }
  if (report.degenerate_boards > 0) {
    out << report.degenerate_boards << " trajectories on boards with zero heuristic spread were excluded from z-scores\n";
  }
  return out.str();
}

}  // namespace compgrid
