#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "compgrid/board.hpp"
#include "compgrid/rng.hpp"

namespace compgrid {

/// Grammar symbols. `Head`, `Blocked`, `Fork` and `Tip` are the life stages of a
/// growing non-terminal; `Red`/`Blue` are the tile terminals.
enum class Symbol : std::uint8_t { Start, Head, Blocked, Fork, Tip, Red, Blue };

enum class Action : std::uint8_t {
  SeedAxis,  ///< Start -> red start tile + two Heads facing `dir` and its opposite.
  Extend,    ///< Head -> `stride` red tiles ahead; becomes Fork (below depth cap) or Tip.
  Halt,      ///< Blocked -> nothing (the extension would leave the grid).
  Branch,    ///< Fork -> Tip + a perpendicular child Head (turned by `turn`).
  NoBranch,  ///< Fork -> Tip.
  Continue,  ///< Tip -> Head.
  Stop,      ///< Tip -> nothing; this head is finished.
  Frame,     ///< Start -> red perimeter of a `width` x `height` rectangle.
};

struct Rule {
  int id = 0;
  Symbol lhs = Symbol::Start;
  Action action = Action::Stop;
  double probability = 0.0;
  std::string name;
  Dir dir = Dir::East;  ///< SeedAxis: the axis of growth.
  int turn = 0;         ///< Branch: -1 turns left of the parent, +1 right.
  int width = 0;        ///< Frame only.
  int height = 0;       ///< Frame only.
};

struct RuleSet {
  Form form = Form::Chain;
  Symbol start_symbol = Symbol::Start;
  std::vector<Symbol> nonterminals;
  std::vector<Symbol> terminals;
  std::vector<Rule> rules;
  int stride = 1;     ///< Tiles marked per Extend.
  int max_depth = 0;  ///< Heads at this depth never branch.

  const Rule& rule(int id) const { return rules.at(static_cast<std::size_t>(id)); }
  std::vector<const Rule*> rules_for(Symbol lhs) const;
};

/// The built-in rule set for each structural form.
const RuleSet& default_rule_set(Form form);

struct DerivationStep {
  int rule_id = 0;
  Pos pos;                ///< Head position (or rectangle corner for Frame).
  Dir dir = Dir::East;    ///< Head direction (child direction for Branch).

  friend bool operator==(const DerivationStep&, const DerivationStep&) = default;
};

/// A recorded sequence of rule applications. Heads are expanded depth-first:
/// a head is grown until it stops, and spawned children queue behind it.
struct Derivation {
  Form form = Form::Chain;
  std::uint64_t seed = 0;
  Pos start;
  std::vector<DerivationStep> steps;
};

/// Samples one accepted derivation (rejecting degenerate ones).
/// Throws RetryCapError after kGrammarRetryCap rejected attempts.
Derivation derive(const RuleSet& rules, Rng& rng);

/// Re-applies every step; throws ValidationError if the steps are inconsistent
/// with the rule set or leave a non-terminal head unexpanded.
Board replay(const RuleSet& rules, const Derivation& derivation);

Board generate_board(Form form, Rng& rng);
Form sample_form(Rng& rng);
/// Uniform mixture of the three forms.
Board generate_compositional(Rng& rng);

inline constexpr int kGrammarRetryCap = 1000;

struct WeightedMask {
  Mask mask;
  double probability = 0.0;
};

/// Every red mask one form can produce, with its exact sampling probability
/// (start tile marginalised out). Sorted by mask bits.
std::vector<WeightedMask> enumerate_form(const RuleSet& rules);

/// All distinct compositional masks across the three forms, sorted. Cached.
std::span<const Mask> enumerate_compositional();

/// Probability of each enumerated mask under generate_compositional(); aligned
/// with enumerate_compositional(). Cached.
std::span<const double> compositional_probabilities();

bool is_compositional_passing(Mask red);
inline bool is_compositional_passing(const Board& board) {
  return is_compositional_passing(board.red);
}

}  // namespace compgrid
