#include <gtest/gtest.h>

#include "compgrid/env.hpp"
#include "compgrid/error.hpp"
#include "compgrid/rng.hpp"
#include "fixtures.hpp"

using namespace compgrid;
using compgrid::testing::board_of;

namespace {

Trajectory play(const Board& board, const std::vector<Pos>& clicks) {
  RevealState s = reset(board);
  Trajectory t;
  for (Pos p : clicks) {
    Outcome o;
    const int r = apply(s, p, &o);
    t.record({p, o, r});
  }
  t.truncated = s.truncated;
  return t;
}

}  // namespace

TEST(Env, ResetRevealsStartOnly) {
  const Board b = board_of({{2, 2}, {2, 3}, {2, 4}});
  const RevealState s = reset(b);
  EXPECT_EQ(s.at({2, 2}), Tile::Red);
  EXPECT_EQ(s.revealed_count(), 1);
  EXPECT_EQ(s.red_remaining, 2);
  EXPECT_EQ(s.steps_taken, 0);
  EXPECT_FALSE(s.finished());
}

TEST(Env, SingleRedBoardIsDoneAtReset) {
  RevealState s = reset(board_of({{4, 4}}));
  EXPECT_TRUE(s.done);
  EXPECT_THROW(apply(s, Pos{0, 0}), EpisodeFinishedError);
}

TEST(Env, RejectsInvalidBoards) {
  Board empty;
  EXPECT_THROW(reset(empty), InvalidBoardError);
  Board b = board_of({{1, 1}, {1, 2}});
  b.start = {0, 0};
  EXPECT_THROW(reset(b), InvalidBoardError);
}

TEST(Env, RewardExamples) {
  const Board b = board_of({{2, 2}, {2, 3}, {2, 4}});
  RevealState s = reset(b);
  StepResult r = step(s, {0, 0});
  EXPECT_EQ(r.outcome, Outcome::Blue);
  EXPECT_EQ(r.reward, -1);
  EXPECT_EQ(r.state.blue_revealed, 1);
  EXPECT_EQ(s.steps_taken, 0);  // step() is pure

  r = step(r.state, {0, 0});
  EXPECT_EQ(r.outcome, Outcome::Repeat);
  EXPECT_EQ(r.reward, -2);
  EXPECT_EQ(r.state.blue_revealed, 1);

  r = step(r.state, {2, 2});  // the pre-revealed start counts as a repeat
  EXPECT_EQ(r.outcome, Outcome::Repeat);
  EXPECT_EQ(r.reward, -2);

  r = step(r.state, {2, 3});
  EXPECT_EQ(r.outcome, Outcome::Red);
  EXPECT_EQ(r.reward, 1);
  EXPECT_FALSE(r.finished);

  r = step(r.state, {2, 4});
  EXPECT_EQ(r.outcome, Outcome::Red);
  EXPECT_EQ(r.reward, 10);
  EXPECT_TRUE(r.finished);
  EXPECT_TRUE(r.state.done);
  EXPECT_THROW(step(r.state, {5, 5}), EpisodeFinishedError);
}

TEST(Env, OffGridActionRejected) {
  const RevealState s = reset(board_of({{2, 2}, {2, 3}}));
  EXPECT_THROW(step(s, {7, 0}), InvalidActionError);
  EXPECT_THROW(step(s, {0, -1}), InvalidActionError);
}

TEST(Env, TruncatesAtStepCap) {
  const Board b = board_of({{0, 0}, {0, 1}});
  RevealState s = reset(b);
  for (int i = 0; i < kStepCap - 1; ++i) apply(s, {6, 6});
  EXPECT_FALSE(s.finished());
  apply(s, {6, 6});
  EXPECT_TRUE(s.truncated);
  EXPECT_FALSE(s.done);
  EXPECT_THROW(apply(s, {0, 1}), EpisodeFinishedError);
}

TEST(Env, FinishingOnTheCapIsDoneNotTruncated) {
  const Board b = board_of({{0, 0}, {0, 1}});
  RevealState s = reset(b);
  for (int i = 0; i < kStepCap - 1; ++i) apply(s, {6, 6});
  EXPECT_EQ(apply(s, {0, 1}), kLastRedReward);
  EXPECT_TRUE(s.done);
  EXPECT_FALSE(s.truncated);
}

TEST(Env, RewardLedgerIdentityUnderRandomPlay) {
  Rng rng(17);
  for (int episode = 0; episode < 300; ++episode) {
    const Board b = board_of({{3, 1}, {3, 2}, {3, 3}, {3, 4}, {2, 4}});
    RevealState s = reset(b);
    Trajectory t;
    int reds = 0, blues = 0, repeats = 0;
    while (!s.finished()) {
      const Pos p = Pos::from_index(static_cast<int>(rng.uniform_index(kTileCount)));
      Outcome o;
      const int r = apply(s, p, &o);
      t.record({p, o, r});
      reds += o == Outcome::Red;
      blues += o == Outcome::Blue;
      repeats += o == Outcome::Repeat;
    }
    t.truncated = s.truncated;
    const int bonus = s.done ? kLastRedReward - kRedReward : 0;
    EXPECT_EQ(t.total_reward, reds * kRedReward + bonus + blues * kBlueReward + repeats * kRepeatReward);
    EXPECT_EQ(score(t), s.blue_revealed);
    EXPECT_EQ(blues, s.blue_revealed);
    EXPECT_TRUE(replays_exactly(b, t));
    EXPECT_EQ(s.revealed_count(), 1 + reds + blues);
  }
}

TEST(Env, ReplayDetectsTampering) {
  const Board b = board_of({{2, 2}, {2, 3}, {2, 4}});
  Trajectory t = play(b, {{0, 0}, {2, 3}, {2, 4}});
  EXPECT_TRUE(replays_exactly(b, t));
  Trajectory wrong_reward = t;
  wrong_reward.moves[0].reward = -2;
  EXPECT_FALSE(replays_exactly(b, wrong_reward));
  Trajectory wrong_outcome = t;
  wrong_outcome.moves[1].outcome = Outcome::Blue;
  EXPECT_FALSE(replays_exactly(b, wrong_outcome));
  Trajectory past_end = t;
  past_end.moves.push_back({{5, 5}, Outcome::Blue, -1});
  EXPECT_FALSE(replays_exactly(b, past_end));
}

TEST(Env, ScoreCountsUniqueBlueAndEvaluationPenalisesTruncation) {
  const Board b = board_of({{2, 2}, {2, 3}, {2, 4}});
  Trajectory t = play(b, {{0, 0}, {0, 0}, {0, 1}, {2, 3}, {2, 4}});
  EXPECT_EQ(score(t), 2);
  EXPECT_EQ(evaluation_score(b, t), 2);
  t.truncated = true;
  EXPECT_EQ(evaluation_score(b, t), kTileCount - 3);
}

TEST(Env, OutcomeStrings) {
  for (Outcome o : {Outcome::Red, Outcome::Blue, Outcome::Repeat}) EXPECT_EQ(outcome_from_string(to_string(o)), o);
  EXPECT_FALSE(outcome_from_string("green"));
}
