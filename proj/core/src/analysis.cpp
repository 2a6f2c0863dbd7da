#include "compgrid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "compgrid/error.hpp"
#include "compgrid/grammar.hpp"

namespace compgrid {

IsingStats ising_stats(Mask red) {
  IsingStats s;
  const int reds = red.count();
  s.order0 = reds - (kTileCount - reds);
  for (int i = 0; i < kTileCount; ++i) {
    const Pos p = Pos::from_index(i);
    const bool c = red.test(i);
    // Each adjacent pair is counted once, from its upper/left tile.
    for (const Pos q : {Pos{p.row, p.col + 1}, Pos{p.row + 1, p.col}}) {
      if (!q.in_bounds()) continue;
      s.order1 += red.test(q.index()) == c ? 1 : -1;
    }
    std::array<int, 4> nbrs{};
    int deg = 0;
    for_each_neighbour(p, [&](Pos q) { nbrs[static_cast<std::size_t>(deg++)] = q.index(); });
    for (int x = 0; x < deg; ++x) {
      for (int y = x + 1; y < deg; ++y) {
        const bool agree = red.test(nbrs[static_cast<std::size_t>(x)]) == c &&
                           red.test(nbrs[static_cast<std::size_t>(y)]) == c;
        s.order2 += agree ? 1 : -1;
      }
    }
  }
  return s;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

namespace {

double resampled_mean(std::span<const double> xs, Rng& rng) {
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) sum += xs[rng.uniform_index(xs.size())];
  return sum / static_cast<double>(xs.size());
}

/// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

bool canonical_less(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

Interval bootstrap_ci(std::span<const double> samples, Rng& rng, double level, std::size_t resamples) {
  if (samples.empty()) throw Error("bootstrap of an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must be in (0, 1)");
  if (resamples == 0) throw Error("bootstrap needs at least one resample");
  std::vector<double> means(resamples);
  for (double& m : means) m = resampled_mean(samples, rng);
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  Interval ci{quantile(means, alpha), quantile(means, 1.0 - alpha)};
  // Guard the mean-inside-CI invariant against interpolation round-off.
  const double m = mean(samples);
  ci.lower = std::min(ci.lower, m);
  ci.upper = std::max(ci.upper, m);
  return ci;
}

double bootstrap_pvalue(std::span<const double> a, std::span<const double> b, Rng& rng, std::size_t resamples) {
  if (a.empty() || b.empty()) throw Error("bootstrap p-value needs two non-empty samples");
  if (resamples == 0) throw Error("bootstrap needs at least one resample");
  const Rng streams(rng());
  Rng first = streams.split(0);
  Rng second = streams.split(1);
  const bool swapped = canonical_less(b, a);
  std::span<const double> x = swapped ? b : a;
  std::span<const double> y = swapped ? a : b;
  std::size_t le = 0;
  std::size_t ge = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    const double d = resampled_mean(x, first) - resampled_mean(y, second);
    if (d <= 0.0) ++le;
    if (d >= 0.0) ++ge;
  }
  const double n = static_cast<double>(resamples);
  const double p = 2.0 * static_cast<double>(std::min(le, ge)) / n;
  return std::clamp(p, 1.0 / n, 1.0);
}

std::optional<HalfRates> success_rate_halves(const Trajectory& trajectory) {
  const auto& moves = trajectory.moves;
  if (moves.size() < 2) return std::nullopt;
  const std::size_t split = moves.size() / 2;
  auto rate = [&](std::size_t from, std::size_t to) {
    std::size_t hits = 0;
    for (std::size_t i = from; i < to; ++i) hits += moves[i].outcome == Outcome::Red ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(to - from);
  };
  return HalfRates{rate(0, split), rate(split, moves.size())};
}

std::optional<double> heuristic_zscore(double score, double heuristic_mean, double heuristic_std) {
  if (!(heuristic_std > 0.0)) return std::nullopt;
  return (score - heuristic_mean) / heuristic_std;
}

std::optional<double> learning_correlation(std::span<const double> trials, std::span<const double> scores) {
  if (trials.size() != scores.size()) throw ShapeError("correlation inputs differ in length");
  if (trials.size() < 3) return std::nullopt;
  const double mx = mean(trials);
  const double my = mean(scores);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    sxy += (trials[i] - mx) * (scores[i] - my);
    sxx += (trials[i] - mx) * (trials[i] - mx);
    syy += (scores[i] - my) * (scores[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

GroupSummary summarize(std::string name, std::span<const double> values, Rng& rng, std::size_t resamples) {
  GroupSummary g;
  g.name = std::move(name);
  g.n = values.size();
  if (values.empty()) return g;
  g.mean = mean(values);
  g.ci = bootstrap_ci(values, rng, kDefaultLevel, resamples);
  return g;
}

Comparison compare(std::string metric, std::string name_a, std::span<const double> a, std::string name_b,
                   std::span<const double> b, std::uint64_t seed, std::size_t resamples) {
  const Rng base(seed);
  Rng ra = base.split(0);
  Rng rb = base.split(1);
  Rng rp = base.split(2);
  Comparison c;
  c.metric = std::move(metric);
  c.a = summarize(std::move(name_a), a, ra, resamples);
  c.b = summarize(std::move(name_b), b, rb, resamples);
  if (!a.empty() && !b.empty()) c.p_value = bootstrap_pvalue(a, b, rp, resamples);
  return c;
}

std::vector<Comparison> compare_ising(std::span<const Board> a, std::span<const Board> b, std::uint64_t seed,
                                      std::string name_a, std::string name_b, std::size_t resamples) {
  std::vector<Comparison> out;
  for (int order = 0; order < 3; ++order) {
    std::vector<double> xa;
    std::vector<double> xb;
    for (const Board& board : a) xa.push_back(ising_stats(board)[order]);
    for (const Board& board : b) xb.push_back(ising_stats(board)[order]);
    out.push_back(compare("ising_order" + std::to_string(order), name_a, xa, name_b, xb,
                          mix_seed(seed + static_cast<std::uint64_t>(order)), resamples));
  }
  return out;
}

Comparison passing_split(std::span<const Board> boards, std::span<const double> scores, std::uint64_t seed,
                         std::size_t resamples) {
  if (boards.size() != scores.size()) throw ShapeError("passing split needs one score per board");
  std::vector<double> passing;
  std::vector<double> failing;
  for (std::size_t i = 0; i < boards.size(); ++i) {
    (is_compositional_passing(boards[i]) ? passing : failing).push_back(scores[i]);
  }
  return compare("blue_count", "passing", passing, "non_passing", failing, seed, resamples);
}

}  // namespace compgrid
