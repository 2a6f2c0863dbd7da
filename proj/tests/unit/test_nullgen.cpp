#include <gtest/gtest.h>

#include <cmath>

#include "compgrid/error.hpp"
#include "compgrid/grammar.hpp"
#include "compgrid/nullgen.hpp"
#include "fixtures.hpp"

using namespace compgrid;
using compgrid::testing::mask_of;
using compgrid::testing::TempDir;

TEST(Masked, EncodingUsesFixedCodes) {
  const GridValues v = encode_mask(mask_of({{0, 0}, {6, 6}}));
  EXPECT_DOUBLE_EQ(v[0], kRedCode);
  EXPECT_DOUBLE_EQ(v[48], kRedCode);
  EXPECT_DOUBLE_EQ(v[1], kBlueCode);
}

TEST(Masked, ZeroModelPredictsOneHalf) {
  const MaskedModel m = zero_masked_model();
  for (int i = 0; i < kTileCount; ++i) {
    EXPECT_DOUBLE_EQ(conditional(m, mask_of({{3, 3}}), Pos::from_index(i)), 0.5);
  }
  const GridValues out = masked_forward(m, encode_mask(Mask::full()));
  for (double p : out) EXPECT_DOUBLE_EQ(p, 0.5);
}

TEST(Masked, ConditionalIgnoresTargetColour) {
  const MaskedModel m = init_masked_model(3);
  const Mask with = mask_of({{1, 1}, {1, 2}, {1, 3}});
  const Mask without = mask_of({{1, 1}, {1, 3}});
  EXPECT_DOUBLE_EQ(conditional(m, with, {1, 2}), conditional(m, without, {1, 2}));
}

TEST(Masked, MemorisesASingleBoard) {
  const Mask target = mask_of({{2, 1}, {2, 2}, {2, 3}, {2, 4}, {2, 5}});
  const std::vector<Mask> corpus(32, target);
  MaskedTrainConfig cfg;
  cfg.epochs = 500;
  cfg.learning_rate = 1e-2;
  cfg.seed = 4;
  int reports = 0;
  double last_loss = 1e9;
  cfg.report_every = 100;
  cfg.on_report = [&](int, double loss) {
    ++reports;
    last_loss = loss;
  };
  const MaskedModel m = train_masked_model(corpus, cfg);
  EXPECT_EQ(reports, 5);
  EXPECT_LT(last_loss, 0.05);
  EXPECT_DOUBLE_EQ(masked_accuracy(m, corpus), 1.0);
  EXPECT_EQ(m.epochs, 500);
}

TEST(Masked, TrainingIsDeterministic) {
  std::vector<Mask> corpus(enumerate_compositional().begin(), enumerate_compositional().begin() + 64);
  MaskedTrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 8;
  EXPECT_EQ(train_masked_model(corpus, cfg).params, train_masked_model(corpus, cfg).params);
}

TEST(Masked, SaveLoadRoundTrip) {
  TempDir dir;
  MaskedModel m = init_masked_model(5, nn::Activation::Sigmoid);
  m.epochs = 12;
  m.accuracy = 0.75;
  save_masked_model(dir / "m.ckpt", m);
  const MaskedModel back = load_masked_model(dir / "m.ckpt");
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.hidden, nn::Activation::Sigmoid);
  EXPECT_EQ(back.epochs, 12);
  EXPECT_DOUBLE_EQ(back.accuracy, 0.75);
}

TEST(Gibbs, AllRedConditionalGivesFullBoard) {
  Rng rng(1);
  const Board b = gibbs_sample([](const GridValues&, Pos) { return 1.0; }, 3, rng);
  EXPECT_EQ(b.red, Mask::full());
  EXPECT_TRUE(b.red.test(b.start));
  EXPECT_EQ(b.provenance, Provenance::Null);
}

TEST(Gibbs, AllBlueConditionalHitsRetryCap) {
  Rng rng(2);
  EXPECT_THROW(gibbs_sample([](const GridValues&, Pos) { return 0.0; }, 2, rng), RetryCapError);
}

TEST(Gibbs, IndependentConditionalMatchesMarginal) {
  // With a constant conditional p the stationary distribution is i.i.d. Bernoulli(p).
  Rng rng(3);
  const int n = 400;
  double reds = 0;
  for (int i = 0; i < n; ++i) reds += gibbs_sample([](const GridValues&, Pos) { return 0.3; }, 5, rng).red.count();
  const double mean = reds / (n * kTileCount);
  EXPECT_NEAR(mean, 0.3, 4 * std::sqrt(0.3 * 0.7 / (n * kTileCount)));
}

TEST(Gibbs, StartIsUniformOverRedTiles) {
  Rng rng(4);
  int corner = 0;
  const int n = 4000;
  const Mask two = mask_of({{0, 0}, {6, 6}});
  const auto cond = [&](const GridValues&, Pos p) { return two.test(p) ? 1.0 : 0.0; };
  for (int i = 0; i < n; ++i) {
    const Board b = gibbs_sample(cond, 1, rng);
    ASSERT_EQ(b.red, two);
    corner += b.start == Pos{0, 0};
  }
  EXPECT_NEAR(corner, n / 2.0, 4 * std::sqrt(n / 4.0));
}

TEST(Gibbs, SamplesAreDeterministicPerSeed) {
  const MaskedModel m = init_masked_model(9);
  EXPECT_EQ(sample_null_boards(m, 5, 4, 11), sample_null_boards(m, 5, 4, 11));
  EXPECT_NE(sample_null_boards(m, 5, 4, 11), sample_null_boards(m, 5, 4, 12));
  const auto boards = sample_null_boards(m, 5, 4, 11);
  for (const Board& b : boards) EXPECT_NO_THROW(validate_board(b));
}
