#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>

#include "compgrid/board.hpp"
#include "compgrid/nn.hpp"
#include "compgrid/rng.hpp"

namespace compgrid {

inline constexpr int kMaskedHidden = 49;
inline constexpr double kBlueCode = 0.0;
inline constexpr double kRedCode = 1.0;
inline constexpr double kMaskCode = 0.5;
inline constexpr int kDeskEpochs = 1000;
inline constexpr int kPaperEpochs = 10000;
inline constexpr int kDefaultSweeps = 20;
inline constexpr int kNullRetryCap = 1000;
inline constexpr const char* kMaskedModelKind = "masked-model";

using GridValues = std::array<double, kTileCount>;

/// Dense 49 -> 49 -> 49 -> 49 network (ReLU hidden, sigmoid output) predicting
/// every tile of a board from a copy with one tile masked out.
struct MaskedModel {
  nn::NetParams params;
  nn::Activation hidden = nn::Activation::Relu;
  int epochs = 0;
  double accuracy = 0.0;  ///< Masked-tile accuracy on the training corpus.
};

/// Fan-in initialised model.
MaskedModel init_masked_model(std::uint64_t seed, nn::Activation hidden = nn::Activation::Relu);
/// All parameters zero: every output is exactly 0.5.
MaskedModel zero_masked_model();

GridValues encode_mask(Mask red);
/// Per-tile red probabilities for an encoded board.
GridValues masked_forward(const MaskedModel& model, const GridValues& input);

/// P(target is red | other tiles): forward pass with the target input set to the mask code.
double conditional(const MaskedModel& model, GridValues values, Pos target);
double conditional(const MaskedModel& model, Mask red, Pos target);

struct MaskedTrainConfig {
  int epochs = kDeskEpochs;
  std::size_t batch_size = 32;
  nn::Activation hidden = nn::Activation::Relu;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  /// Optional per-example loss weights aligned with the corpus (normalised to mean 1).
  std::span<const double> weights;
  /// Called after every `report_every` epochs (and the last) with the mean loss.
  int report_every = 0;
  std::function<void(int epoch, double mean_loss)> on_report;
};

/// Each epoch visits every corpus mask once in shuffled order, masking one
/// uniformly chosen tile; the loss is binary cross entropy at that tile only.
/// Throws DivergenceError if the loss or gradients become non-finite.
MaskedModel train_masked_model(std::span<const Mask> corpus, const MaskedTrainConfig& config);

/// Fraction of (mask, tile) pairs, over every tile of every corpus mask, whose
/// conditional thresholded at 0.5 reproduces the true colour.
double masked_accuracy(const MaskedModel& model, std::span<const Mask> corpus);

/// Conditional red probability of `target` given the current board values.
using TileConditional = std::function<double(const GridValues& values, Pos target)>;

/// Gibbs sampling from random 50% red initialisation; each sweep resamples all
/// tiles in a fresh random order. A uniform red tile becomes the start.
/// Boards with no red tile are redrawn; throws RetryCapError after kNullRetryCap.
Board gibbs_sample(const TileConditional& conditional, int sweeps, Rng& rng);
Board gibbs_sample(const MaskedModel& model, int sweeps, Rng& rng);

/// n independent null boards; board i uses rng stream i of `seed`.
std::vector<Board> sample_null_boards(const MaskedModel& model, std::size_t n, int sweeps, std::uint64_t seed);

void save_masked_model(const std::filesystem::path& path, const MaskedModel& model,
                       const std::string& header_json = {});
MaskedModel load_masked_model(const std::filesystem::path& path);

}  // namespace compgrid
