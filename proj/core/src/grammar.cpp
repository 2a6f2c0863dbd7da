#include "compgrid/grammar.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "compgrid/error.hpp"

namespace compgrid {

std::vector<const Rule*> RuleSet::rules_for(Symbol lhs) const {
  std::vector<const Rule*> out;
  for (const Rule& r : rules) {
    if (r.lhs == lhs) out.push_back(&r);
  }
  return out;
}

namespace {

Rule make_rule(std::vector<Rule>& rules, Symbol lhs, Action action, double p, std::string name) {
  Rule r;
  r.id = static_cast<int>(rules.size());
  r.lhs = lhs;
  r.action = action;
  r.probability = p;
  r.name = std::move(name);
  return r;
}

void add_growth_rules(RuleSet& rs, bool with_branching) {
  auto& rules = rs.rules;
  for (auto [dir, name] : {std::pair{Dir::East, "seed-horizontal"}, std::pair{Dir::South, "seed-vertical"}}) {
    Rule r = make_rule(rules, Symbol::Start, Action::SeedAxis, 0.5, name);
    r.dir = dir;
    rules.push_back(r);
  }
  rules.push_back(make_rule(rules, Symbol::Head, Action::Extend, 1.0, "extend"));
  rules.push_back(make_rule(rules, Symbol::Blocked, Action::Halt, 1.0, "halt-at-border"));
  if (with_branching) {
    Rule left = make_rule(rules, Symbol::Fork, Action::Branch, 0.25, "branch-left");
    left.turn = -1;
    rules.push_back(left);
    Rule right = make_rule(rules, Symbol::Fork, Action::Branch, 0.25, "branch-right");
    right.turn = +1;
    rules.push_back(right);
    rules.push_back(make_rule(rules, Symbol::Fork, Action::NoBranch, 0.5, "no-branch"));
  }
  rules.push_back(make_rule(rules, Symbol::Tip, Action::Continue, 0.5, "continue"));
  rules.push_back(make_rule(rules, Symbol::Tip, Action::Stop, 0.5, "stop"));
}

RuleSet build_chain_rules() {
  RuleSet rs;
  rs.form = Form::Chain;
  rs.nonterminals = {Symbol::Start, Symbol::Head, Symbol::Blocked, Symbol::Tip};
  rs.terminals = {Symbol::Red, Symbol::Blue};
  rs.stride = 1;
  rs.max_depth = 0;
  add_growth_rules(rs, false);
  return rs;
}

RuleSet build_tree_rules() {
  RuleSet rs;
  rs.form = Form::Tree;
  rs.nonterminals = {Symbol::Start, Symbol::Head, Symbol::Blocked, Symbol::Fork, Symbol::Tip};
  rs.terminals = {Symbol::Red, Symbol::Blue};
  // Each extension lays an edge tile and a node tile, so branch points sit two
  // tiles apart and sibling branches never touch.
  rs.stride = 2;
  rs.max_depth = 1;
  add_growth_rules(rs, true);
  return rs;
}

RuleSet build_loop_rules() {
  RuleSet rs;
  rs.form = Form::Loop;
  rs.nonterminals = {Symbol::Start};
  rs.terminals = {Symbol::Red, Symbol::Blue};
  for (int w = 3; w <= 5; ++w) {
    for (int h = 3; h <= 5; ++h) {
      Rule r = make_rule(rs.rules, Symbol::Start, Action::Frame, 1.0 / 9.0,
                         "frame-" + std::to_string(w) + "x" + std::to_string(h));
      r.width = w;
      r.height = h;
      rs.rules.push_back(r);
    }
  }
  return rs;
}

Dir turned(Dir d, int turn) { return turn < 0 ? turn_left(d) : turn_right(d); }

Mask segment(Pos from, Dir d, int length) {
  Mask m;
  for (int k = 1; k <= length; ++k) m.set(step(from, d, k));
  return m;
}

Mask perimeter(Pos corner, int width, int height) {
  Mask m;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (r == 0 || r == height - 1 || c == 0 || c == width - 1) {
        m.set(Pos{corner.row + r, corner.col + c});
      }
    }
  }
  return m;
}

/// Corners of every in-bounds w x h rectangle whose perimeter contains `start`.
std::vector<Pos> frame_placements(Pos start, int width, int height) {
  std::vector<Pos> out;
  for (int r0 = 0; r0 + height <= kGridSize; ++r0) {
    for (int c0 = 0; c0 + width <= kGridSize; ++c0) {
      if (perimeter(Pos{r0, c0}, width, height).test(start)) out.push_back(Pos{r0, c0});
    }
  }
  return out;
}

const Rule& choose(const std::vector<const Rule*>& options, Rng& rng) {
  std::vector<double> weights;
  weights.reserve(options.size());
  for (const Rule* r : options) weights.push_back(r->probability);
  return *options[rng.categorical(weights)];
}

struct Head {
  Pos pos;
  Dir dir;
  int depth;
};

bool accepted(const RuleSet& rules, Mask red, bool branched) {
  if (red.count() < 3) return false;
  return rules.max_depth == 0 || branched;
}

/// One derivation attempt for the growth forms (chain, tree).
Derivation attempt_growth(const RuleSet& rules, Rng& rng, Mask& red, bool& branched) {
  Derivation d;
  d.form = rules.form;
  d.seed = rng.seed();
  d.start = Pos::from_index(static_cast<int>(rng.uniform_index(kTileCount)));
  red = Mask{};
  branched = false;

  const Rule& seed = choose(rules.rules_for(Symbol::Start), rng);
  d.steps.push_back({seed.id, d.start, seed.dir});
  red.set(d.start);

  const auto extend_rules = rules.rules_for(Symbol::Head);
  const auto halt_rules = rules.rules_for(Symbol::Blocked);
  const auto fork_rules = rules.rules_for(Symbol::Fork);
  const auto tip_rules = rules.rules_for(Symbol::Tip);

  std::deque<Head> heads{{d.start, seed.dir, 0}, {d.start, opposite(seed.dir), 0}};
  while (!heads.empty()) {
    Head h = heads.front();
    heads.pop_front();
    for (;;) {
      const Pos end = step(h.pos, h.dir, rules.stride);
      if (!end.in_bounds()) {
        d.steps.push_back({choose(halt_rules, rng).id, h.pos, h.dir});
        break;
      }
      d.steps.push_back({choose(extend_rules, rng).id, h.pos, h.dir});
      red |= segment(h.pos, h.dir, rules.stride);
      if (h.depth > 0) branched = true;
      h.pos = end;
      if (h.depth < rules.max_depth) {
        const Rule& fork = choose(fork_rules, rng);
        if (fork.action == Action::Branch) {
          const Dir child = turned(h.dir, fork.turn);
          d.steps.push_back({fork.id, end, child});
          heads.push_back({end, child, h.depth + 1});
        } else {
          d.steps.push_back({fork.id, end, h.dir});
        }
      }
      const Rule& tip = choose(tip_rules, rng);
      d.steps.push_back({tip.id, h.pos, h.dir});
      if (tip.action == Action::Stop) break;
    }
  }
  return d;
}

Derivation attempt_loop(const RuleSet& rules, Rng& rng) {
  Derivation d;
  d.form = rules.form;
  d.seed = rng.seed();
  d.start = Pos::from_index(static_cast<int>(rng.uniform_index(kTileCount)));
  const auto frames = rules.rules_for(Symbol::Start);
  std::vector<const Rule*> usable;
  std::vector<double> weights;
  for (const Rule* r : frames) {
    if (!frame_placements(d.start, r->width, r->height).empty()) {
      usable.push_back(r);
      weights.push_back(r->probability);
    }
  }
  const Rule& frame = *usable[rng.categorical(weights)];
  const auto placements = frame_placements(d.start, frame.width, frame.height);
  const Pos corner = placements[rng.uniform_index(placements.size())];
  d.steps.push_back({frame.id, corner, Dir::East});
  return d;
}

}  // namespace

const RuleSet& default_rule_set(Form form) {
  static const RuleSet chain = build_chain_rules();
  static const RuleSet tree = build_tree_rules();
  static const RuleSet loop = build_loop_rules();
  switch (form) {
    case Form::Chain: return chain;
    case Form::Tree: return tree;
    case Form::Loop: return loop;
  }
  return chain;
}

Derivation derive(const RuleSet& rules, Rng& rng) {
  if (rules.form == Form::Loop) return attempt_loop(rules, rng);
  for (int attempt = 0; attempt < kGrammarRetryCap; ++attempt) {
    Mask red;
    bool branched = false;
    Derivation d = attempt_growth(rules, rng, red, branched);
    if (accepted(rules, red, branched)) return d;
  }
  throw RetryCapError("grammar rejected " + std::to_string(kGrammarRetryCap) +
                      " consecutive derivations; rule set cannot produce valid boards");
}

namespace {
[[noreturn]] void fail(const std::string& msg) { throw ValidationError("derivation replay: " + msg); }
}  // namespace

Board replay(const RuleSet& rules, const Derivation& d) {
  if (!d.start.in_bounds()) fail("start off grid");
  if (d.steps.empty()) fail("no steps");
  auto rule_at = [&](std::size_t i) -> const Rule& {
    if (i >= d.steps.size()) fail("derivation leaves non-terminal heads unexpanded");
    const int id = d.steps[i].rule_id;
    if (id < 0 || static_cast<std::size_t>(id) >= rules.rules.size()) fail("unknown rule id");
    return rules.rule(id);
  };

  Board board;
  board.start = d.start;
  board.provenance = provenance_of(rules.form);

  const Rule& first = rule_at(0);
  if (first.lhs != Symbol::Start) fail("first step must rewrite the start symbol");
  if (first.action == Action::Frame) {
    if (d.steps.size() != 1) fail("frame derivations have exactly one step");
    const Pos corner = d.steps[0].pos;
    const Pos far{corner.row + first.height - 1, corner.col + first.width - 1};
    if (!corner.in_bounds() || !far.in_bounds()) fail("frame out of bounds");
    board.red = perimeter(corner, first.width, first.height);
    if (!board.red.test(d.start)) fail("start not on frame perimeter");
    return board;
  }

  if (d.steps[0].pos != d.start) fail("seed step not at start");
  board.red.set(d.start);
  std::deque<Head> heads{{d.start, first.dir, 0}, {d.start, opposite(first.dir), 0}};
  std::size_t i = 1;
  while (!heads.empty()) {
    Head h = heads.front();
    heads.pop_front();
    for (;;) {
      const Rule& r = rule_at(i);
      const DerivationStep& s = d.steps[i];
      const Pos end = step(h.pos, h.dir, rules.stride);
      if (s.pos != h.pos || s.dir != h.dir) fail("step does not match the active head");
      if (r.action == Action::Halt) {
        if (end.in_bounds()) fail("halt applied to an unblocked head");
        ++i;
        break;
      }
      if (r.action != Action::Extend) fail("expected extend or halt");
      if (!end.in_bounds()) fail("extension leaves the grid");
      board.red |= segment(h.pos, h.dir, rules.stride);
      h.pos = end;
      ++i;
      if (h.depth < rules.max_depth) {
        const Rule& fork = rule_at(i);
        if (fork.lhs != Symbol::Fork) fail("expected a fork rule");
        if (d.steps[i].pos != end) fail("fork not at head");
        if (fork.action == Action::Branch) {
          const Dir child = turned(h.dir, fork.turn);
          if (d.steps[i].dir != child) fail("branch direction mismatch");
          heads.push_back({end, child, h.depth + 1});
        }
        ++i;
      }
      const Rule& tip = rule_at(i);
      if (tip.lhs != Symbol::Tip) fail("expected continue or stop");
      if (d.steps[i].pos != h.pos) fail("tip rule not at head");
      ++i;
      if (tip.action == Action::Stop) break;
    }
  }
  if (i != d.steps.size()) fail("trailing steps after all heads terminated");
  return board;
}

Board generate_board(Form form, Rng& rng) {
  const RuleSet& rules = default_rule_set(form);
  return replay(rules, derive(rules, rng));
}

Form sample_form(Rng& rng) { return kAllForms[rng.uniform_index(kAllForms.size())]; }

Board generate_compositional(Rng& rng) { return generate_board(sample_form(rng), rng); }

namespace {

// Outcome distributions pack the added-tile mask in the low 49 bits and a
// "produced branch tiles" flag in bit 63.
constexpr std::uint64_t kBranchFlag = std::uint64_t{1} << 63;
using Outcome = std::unordered_map<std::uint64_t, double>;

Outcome combine(const Outcome& a, const Outcome& b) {
  Outcome out;
  out.reserve(a.size() * b.size());
  for (const auto& [ka, pa] : a) {
    for (const auto& [kb, pb] : b) out[ka | kb] += pa * pb;
  }
  return out;
}

void accumulate(Outcome& into, const Outcome& from, double weight) {
  for (const auto& [k, p] : from) into[k] += weight * p;
}

class GrowthEnumerator {
 public:
  explicit GrowthEnumerator(const RuleSet& rules)
      : rules_(rules),
        fork_(rules.rules_for(Symbol::Fork)),
        tip_(rules.rules_for(Symbol::Tip)),
        memo_(static_cast<std::size_t>(kTileCount * 4 * (rules.max_depth + 1))),
        done_(memo_.size(), false) {}

  const Outcome& head(Pos pos, Dir dir, int depth) {
    const std::size_t key = static_cast<std::size_t>((pos.index() * 4 + static_cast<int>(dir)) *
                                                         (rules_.max_depth + 1) + depth);
    if (done_[key]) return memo_[key];
    Outcome result;
    const Pos end = step(pos, dir, rules_.stride);
    if (!end.in_bounds()) {
      result[0] = 1.0;
    } else {
      std::uint64_t base = segment(pos, dir, rules_.stride).bits();
      if (depth > 0) base |= kBranchFlag;
      Outcome forked;
      if (depth < rules_.max_depth) {
        for (const Rule* r : fork_) {
          if (r->action == Action::Branch) {
            Outcome child = head(end, turned(dir, r->turn), depth + 1);
            accumulate(forked, combine(Outcome{{base, 1.0}}, child), r->probability);
          } else {
            forked[base] += r->probability;
          }
        }
      } else {
        forked[base] = 1.0;
      }
      for (const Rule* r : tip_) {
        if (r->action == Action::Continue) {
          Outcome rest = head(end, dir, depth);
          accumulate(result, combine(forked, rest), r->probability);
        } else {
          accumulate(result, forked, r->probability);
        }
      }
    }
    memo_[key] = std::move(result);
    done_[key] = true;
    return memo_[key];
  }

 private:
  const RuleSet& rules_;
  std::vector<const Rule*> fork_;
  std::vector<const Rule*> tip_;
  std::vector<Outcome> memo_;
  std::vector<bool> done_;
};

std::vector<WeightedMask> finalize(const std::unordered_map<std::uint64_t, double>& mass) {
  double total = 0.0;
  for (const auto& [bits, p] : mass) total += p;
  std::vector<WeightedMask> out;
  out.reserve(mass.size());
  for (const auto& [bits, p] : mass) out.push_back({Mask::from_bits(bits), p / total});
  std::sort(out.begin(), out.end(),
            [](const WeightedMask& a, const WeightedMask& b) { return a.mask < b.mask; });
  return out;
}

struct CompositionalIndex {
  std::vector<Mask> masks;
  std::vector<double> probabilities;
  std::unordered_set<std::uint64_t> members;
};

const CompositionalIndex& compositional_index() {
  static const CompositionalIndex index = [] {
    std::unordered_map<std::uint64_t, double> mixed;
    for (Form f : kAllForms) {
      for (const auto& wm : enumerate_form(default_rule_set(f))) {
        mixed[wm.mask.bits()] += wm.probability / static_cast<double>(kAllForms.size());
      }
    }
    CompositionalIndex idx;
    for (const auto& wm : finalize(mixed)) {
      idx.masks.push_back(wm.mask);
      idx.probabilities.push_back(wm.probability);
      idx.members.insert(wm.mask.bits());
    }
    return idx;
  }();
  return index;
}

}  // namespace

std::vector<WeightedMask> enumerate_form(const RuleSet& rules) {
  std::unordered_map<std::uint64_t, double> mass;
  const double p_start = 1.0 / kTileCount;
  const auto seeds = rules.rules_for(Symbol::Start);

  if (rules.form == Form::Loop) {
    for (int i = 0; i < kTileCount; ++i) {
      const Pos start = Pos::from_index(i);
      double usable = 0.0;
      for (const Rule* r : seeds) {
        if (!frame_placements(start, r->width, r->height).empty()) usable += r->probability;
      }
      for (const Rule* r : seeds) {
        const auto placements = frame_placements(start, r->width, r->height);
        for (Pos corner : placements) {
          mass[perimeter(corner, r->width, r->height).bits()] +=
              p_start * (r->probability / usable) / static_cast<double>(placements.size());
        }
      }
    }
    return finalize(mass);
  }

  GrowthEnumerator heads(rules);
  for (int i = 0; i < kTileCount; ++i) {
    const Pos start = Pos::from_index(i);
    Mask start_mask;
    start_mask.set(start);
    for (const Rule* seed : seeds) {
      const Outcome both = combine(heads.head(start, seed->dir, 0), heads.head(start, opposite(seed->dir), 0));
      for (const auto& [key, p] : both) {
        const Mask red = Mask::from_bits(key & ~kBranchFlag) | start_mask;
        if (accepted(rules, red, (key & kBranchFlag) != 0)) {
          mass[red.bits()] += p_start * seed->probability * p;
        }
      }
    }
  }
  return finalize(mass);
}

std::span<const Mask> enumerate_compositional() { return compositional_index().masks; }

std::span<const double> compositional_probabilities() { return compositional_index().probabilities; }

bool is_compositional_passing(Mask red) { return compositional_index().members.contains(red.bits()); }

}  // namespace compgrid
