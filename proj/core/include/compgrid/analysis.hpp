#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "compgrid/board.hpp"
#include "compgrid/env.hpp"
#include "compgrid/rng.hpp"

namespace compgrid {

inline constexpr int kAdjacentPairs = 84;
/// Simple 3-tile paths (middle tile plus two distinct 4-neighbours), bent ones included.
inline constexpr int kThreeTilePaths = 214;
inline constexpr std::size_t kDefaultResamples = 10000;
inline constexpr double kDefaultLevel = 0.95;

struct IsingStats {
  int order0 = 0;  ///< #red - #blue
  int order1 = 0;  ///< agreeing - disagreeing adjacent pairs
  int order2 = 0;  ///< all-agreeing - other 3-tile paths

  int operator[](int order) const { return order == 0 ? order0 : order == 1 ? order1 : order2; }
  friend bool operator==(const IsingStats&, const IsingStats&) = default;
};

IsingStats ising_stats(Mask red);
inline IsingStats ising_stats(const Board& board) { return ising_stats(board.red); }

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double v) const { return lower <= v && v <= upper; }
  bool overlaps(const Interval& o) const { return lower <= o.upper && o.lower <= upper; }
};

double mean(std::span<const double> xs);
/// Population standard deviation.
double stddev(std::span<const double> xs);

/// Percentile bootstrap CI of the mean. Throws Error on an empty sample.
Interval bootstrap_ci(std::span<const double> samples, Rng& rng, double level = kDefaultLevel,
                      std::size_t resamples = kDefaultResamples);

/// Two-sided bootstrap p-value for a difference in means:
/// 2 * min(P(d <= 0), P(d >= 0)) over resampled mean differences, floored at
/// 1/resamples. The two samples are resampled from streams assigned in a
/// canonical order, so swapping the arguments gives exactly the same p.
double bootstrap_pvalue(std::span<const double> a, std::span<const double> b, Rng& rng,
                        std::size_t resamples = kDefaultResamples);

struct HalfRates {
  double first = 0.0;
  double second = 0.0;
};

/// Success (red outcome) rate in each half of the moves, split at floor(n/2).
/// nullopt for fewer than two moves.
std::optional<HalfRates> success_rate_halves(const Trajectory& trajectory);

/// (score - mean) / std; nullopt when std is not positive.
std::optional<double> heuristic_zscore(double score, double heuristic_mean, double heuristic_std);

/// Pearson correlation; nullopt for fewer than 3 points or zero variance.
std::optional<double> learning_correlation(std::span<const double> trials, std::span<const double> scores);

struct GroupSummary {
  std::string name;
  std::size_t n = 0;
  double mean = 0.0;
  Interval ci;
};

GroupSummary summarize(std::string name, std::span<const double> values, Rng& rng,
                       std::size_t resamples = kDefaultResamples);

/// Two groups of one metric and the bootstrap p-value of their difference
/// (absent when either group is empty).
struct Comparison {
  std::string metric;
  GroupSummary a;
  GroupSummary b;
  std::optional<double> p_value;
};

Comparison compare(std::string metric, std::string name_a, std::span<const double> a, std::string name_b,
                   std::span<const double> b, std::uint64_t seed, std::size_t resamples = kDefaultResamples);

/// Ising orders 0..2 of two board groups.
std::vector<Comparison> compare_ising(std::span<const Board> a, std::span<const Board> b, std::uint64_t seed,
                                      std::string name_a = "a", std::string name_b = "b",
                                      std::size_t resamples = kDefaultResamples);

/// Scores split by compositional-passing membership of the aligned boards.
Comparison passing_split(std::span<const Board> boards, std::span<const double> scores, std::uint64_t seed,
                         std::size_t resamples = kDefaultResamples);

}  // namespace compgrid
