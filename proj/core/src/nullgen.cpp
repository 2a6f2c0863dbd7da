#include "compgrid/nullgen.hpp"

#include <cmath>
#include <numeric>

#include "compgrid/error.hpp"

namespace compgrid {

namespace {

using nn::Activation;

struct Layers {
  const nn::Tensor& w1;
  const nn::Tensor& b1;
  const nn::Tensor& w2;
  const nn::Tensor& b2;
  const nn::Tensor& w3;
  const nn::Tensor& b3;
  Activation act;

  explicit Layers(const MaskedModel& m) : Layers(m.params.tensors, m.hidden) {}
  Layers(const nn::ParamSet& p, Activation hidden)
      : w1(p.at("l1.w")), b1(p.at("l1.b")), w2(p.at("l2.w")), b2(p.at("l2.b")), w3(p.at("out.w")),
        b3(p.at("out.b")), act(hidden) {}
};

nn::ParamSet make_params() {
  nn::ParamSet p;
  p.add("l1.w", {kMaskedHidden, kTileCount});
  p.add("l1.b", {kMaskedHidden});
  p.add("l2.w", {kMaskedHidden, kMaskedHidden});
  p.add("l2.b", {kMaskedHidden});
  p.add("out.w", {kTileCount, kMaskedHidden});
  p.add("out.b", {kTileCount});
  return p;
}

double logit_at(const Layers& l, std::span<const double> h2, std::size_t target) {
  double z = l.b3[target];
  const double* row = l.w3.data() + target * kMaskedHidden;
  for (std::size_t i = 0; i < kMaskedHidden; ++i) z += row[i] * h2[i];
  return z;
}

double conditional_logit(const Layers& l, const GridValues& values, std::size_t target) {
  const auto h1 = nn::dense_forward(l.w1, l.b1, values, l.act);
  const auto h2 = nn::dense_forward(l.w2, l.b2, h1, l.act);
  return logit_at(l, h2, target);
}

}  // namespace

MaskedModel init_masked_model(std::uint64_t seed, Activation hidden) {
  MaskedModel model;
  model.hidden = hidden;
  model.params.seed = seed;
  model.params.tensors = make_params();
  Rng rng(seed);
  auto& t = model.params.tensors;
  nn::init_uniform_fan_in(t.at("l1.w"), kTileCount, rng);
  nn::init_uniform_fan_in(t.at("l1.b"), kTileCount, rng);
  nn::init_uniform_fan_in(t.at("l2.w"), kMaskedHidden, rng);
  nn::init_uniform_fan_in(t.at("l2.b"), kMaskedHidden, rng);
  nn::init_uniform_fan_in(t.at("out.w"), kMaskedHidden, rng);
  nn::init_uniform_fan_in(t.at("out.b"), kMaskedHidden, rng);
  return model;
}

MaskedModel zero_masked_model() {
  MaskedModel model;
  model.params.tensors = make_params();
  return model;
}

GridValues encode_mask(Mask red) {
  GridValues v{};
  for (int i = 0; i < kTileCount; ++i) v[static_cast<std::size_t>(i)] = red.test(i) ? kRedCode : kBlueCode;
  return v;
}

GridValues masked_forward(const MaskedModel& model, const GridValues& input) {
  const Layers l(model);
  const auto h1 = nn::dense_forward(l.w1, l.b1, input, l.act);
  const auto h2 = nn::dense_forward(l.w2, l.b2, h1, l.act);
  const auto out = nn::dense_forward(l.w3, l.b3, h2, Activation::Sigmoid);
  GridValues result{};
  std::copy(out.begin(), out.end(), result.begin());
  return result;
}

double conditional(const MaskedModel& model, GridValues values, Pos target) {
  if (!target.in_bounds()) throw InvalidActionError("conditional target outside the grid");
  const auto t = static_cast<std::size_t>(target.index());
  values[t] = kMaskCode;
  return nn::sigmoid(conditional_logit(Layers(model), values, t));
}

double conditional(const MaskedModel& model, Mask red, Pos target) {
  return conditional(model, encode_mask(red), target);
}

MaskedModel train_masked_model(std::span<const Mask> corpus, const MaskedTrainConfig& config) {
  if (corpus.empty()) throw Error("masked-model corpus is empty");
  if (config.epochs < 1) throw Error("masked-model training needs at least one epoch");
  if (config.batch_size < 1) throw Error("batch size must be positive");
  if (!config.weights.empty() && config.weights.size() != corpus.size()) {
    throw ShapeError("training weights must align with the corpus");
  }

  std::vector<double> weights(corpus.size(), 1.0);
  if (!config.weights.empty()) {
    const double total = std::accumulate(config.weights.begin(), config.weights.end(), 0.0);
    if (!(total > 0.0)) throw Error("training weights must have a positive sum");
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      weights[i] = config.weights[i] * static_cast<double>(corpus.size()) / total;
    }
  }

  MaskedModel model = init_masked_model(config.seed, config.hidden);
  auto& params = model.params.tensors;
  nn::Gradients grads = params.zeros_like();
  nn::Adam adam(params, nn::AdamConfig{.learning_rate = config.learning_rate});
  Rng rng = Rng(config.seed).split(1);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::DenseCache c1;
  nn::DenseCache c2;
  std::vector<double> grad_h2(kMaskedHidden);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      grads.set_zero();
      const Layers l(params, model.hidden);
      auto& gw3 = grads.at("out.w");
      auto& gb3 = grads.at("out.b");
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        const auto target = static_cast<std::size_t>(rng.uniform_index(kTileCount));
        GridValues input = encode_mask(corpus[idx]);
        const double label = input[target];
        input[target] = kMaskCode;

        const auto h1 = nn::dense_forward(l.w1, l.b1, input, l.act, &c1);
        const auto h2 = nn::dense_forward(l.w2, l.b2, h1, l.act, &c2);
        const double z = logit_at(l, h2, target);
        const double loss = weights[idx] * nn::bce_with_logit(z, label);
        if (!std::isfinite(loss)) throw DivergenceError("non-finite masked-model loss");
        epoch_loss += loss;

        const double dz = weights[idx] * (nn::sigmoid(z) - label);
        double* gw_row = gw3.data() + target * kMaskedHidden;
        const double* w_row = l.w3.data() + target * kMaskedHidden;
        for (std::size_t i = 0; i < kMaskedHidden; ++i) {
          gw_row[i] += dz * h2[i];
          grad_h2[i] = dz * w_row[i];
        }
        gb3[target] += dz;
        const auto grad_h1 =
            nn::dense_backward(l.w2, c2, l.act, grad_h2, grads.at("l2.w"), grads.at("l2.b"));
        nn::dense_backward(l.w1, c1, l.act, grad_h1, grads.at("l1.w"), grads.at("l1.b"));
      }
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t t = 0; t < grads.count(); ++t) {
        for (double& g : grads.tensor(t).values()) g *= scale;
      }
      adam.step(params, grads);
    }
    if (config.on_report && config.report_every > 0 &&
        (epoch % config.report_every == 0 || epoch == config.epochs)) {
      config.on_report(epoch, epoch_loss / static_cast<double>(corpus.size()));
    }
  }
  model.epochs = config.epochs;
  model.accuracy = masked_accuracy(model, corpus);
  return model;
}

double masked_accuracy(const MaskedModel& model, std::span<const Mask> corpus) {
  if (corpus.empty()) return 0.0;
  const Layers l(model);
  std::size_t correct = 0;
  for (const Mask m : corpus) {
    GridValues input = encode_mask(m);
    for (std::size_t t = 0; t < kTileCount; ++t) {
      const double label = input[t];
      input[t] = kMaskCode;
      const bool red = conditional_logit(l, input, t) >= 0.0;
      if (red == (label == kRedCode)) ++correct;
      input[t] = label;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.size() * kTileCount);
}

Board gibbs_sample(const TileConditional& conditional_fn, int sweeps, Rng& rng) {
  if (sweeps < 1) throw Error("Gibbs sampling needs at least one sweep");
  std::array<int, kTileCount> order{};
  std::iota(order.begin(), order.end(), 0);
  for (int attempt = 0; attempt < kNullRetryCap; ++attempt) {
    GridValues values{};
    for (double& v : values) v = rng.bernoulli(0.5) ? kRedCode : kBlueCode;
    for (int s = 0; s < sweeps; ++s) {
      rng.shuffle(order.begin(), order.end());
      for (int idx : order) {
        const auto t = static_cast<std::size_t>(idx);
        values[t] = kMaskCode;
        const double p = conditional_fn(values, Pos::from_index(idx));
        values[t] = rng.bernoulli(p) ? kRedCode : kBlueCode;
      }
    }
    Mask red;
    std::vector<int> reds;
    for (int i = 0; i < kTileCount; ++i) {
      if (values[static_cast<std::size_t>(i)] == kRedCode) {
        red.set(i);
        reds.push_back(i);
      }
    }
    if (reds.empty()) continue;
    const int start = reds[rng.uniform_index(reds.size())];
    return Board{red, Pos::from_index(start), Provenance::Null};
  }
  throw RetryCapError("Gibbs sampler produced no red tile in " + std::to_string(kNullRetryCap) + " attempts");
}

Board gibbs_sample(const MaskedModel& model, int sweeps, Rng& rng) {
  const Layers l(model);
  return gibbs_sample(
      [&l](const GridValues& values, Pos target) {
        return nn::sigmoid(conditional_logit(l, values, static_cast<std::size_t>(target.index())));
      },
      sweeps, rng);
}

std::vector<Board> sample_null_boards(const MaskedModel& model, std::size_t n, int sweeps, std::uint64_t seed) {
  std::vector<Board> boards;
  boards.reserve(n);
  const Rng base(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = base.split(i);
    boards.push_back(gibbs_sample(model, sweeps, rng));
  }
  return boards;
}

void save_masked_model(const std::filesystem::path& path, const MaskedModel& model, const std::string& header_json) {
  nn::NetParams params = model.params;
  params.info["epochs"] = model.epochs;
  params.info["accuracy"] = model.accuracy;
  params.info["hidden_activation"] = static_cast<double>(model.hidden);
  nn::save_checkpoint(path, params, kMaskedModelKind, header_json);
}

MaskedModel load_masked_model(const std::filesystem::path& path) {
  MaskedModel model;
  model.params = nn::load_checkpoint(path, kMaskedModelKind);
  model.params.tensors.check_compatible(make_params());
  if (auto it = model.params.info.find("epochs"); it != model.params.info.end()) {
    model.epochs = static_cast<int>(it->second);
  }
  if (auto it = model.params.info.find("hidden_activation"); it != model.params.info.end()) {
    model.hidden = static_cast<Activation>(static_cast<int>(it->second));
  }
  if (auto it = model.params.info.find("accuracy"); it != model.params.info.end()) model.accuracy = it->second;
  model.params.info.clear();
  return model;
}

}  // namespace compgrid
