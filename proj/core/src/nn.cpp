#include "compgrid/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "compgrid/board.hpp"
#include "compgrid/error.hpp"

namespace compgrid::nn {

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  const std::size_t n = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  data_.assign(n, fill);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& ParamSet::add(const std::string& name, std::vector<std::size_t> shape) {
  if (contains(name)) throw ShapeError("duplicate parameter '" + name + "'");
  names_.push_back(name);
  tensors_.emplace_back(std::move(shape));
  return tensors_.back();
}

bool ParamSet::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

Tensor& ParamSet::at(const std::string& name) {
  return const_cast<Tensor&>(static_cast<const ParamSet&>(*this).at(name));
}

const Tensor& ParamSet::at(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ShapeError("no parameter named '" + name + "'");
  return tensors_[static_cast<std::size_t>(it - names_.begin())];
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (std::size_t i = 0; i < count(); ++i) out.add(names_[i], tensors_[i].shape());
  return out;
}

void ParamSet::check_compatible(const ParamSet& other) const {
  if (count() != other.count()) throw ShapeError("parameter sets differ in tensor count");
  for (std::size_t i = 0; i < count(); ++i) {
    if (names_[i] != other.names_[i] || tensors_[i].shape() != other.tensors_[i].shape()) {
      throw ShapeError("parameter '" + names_[i] + "' does not match '" + other.names_[i] + "'");
    }
  }
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& t : tensors_) {
    for (double v : t.values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void ParamSet::set_zero() {
  for (auto& t : tensors_) t.fill(0.0);
}

void init_uniform_fan_in(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Tanh: return std::tanh(x);
  }
  return x;
}

double activate_grad_from_output(Activation a, double y) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Tanh: return 1.0 - y * y;
  }
  return 1.0;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

std::vector<double> dense_forward(const Tensor& weight, const Tensor& bias, std::span<const double> input,
                                  Activation act, DenseCache* cache) {
  require(weight.shape().size() == 2, "dense weight must be 2-D");
  const std::size_t out_dim = weight.shape()[0];
  const std::size_t in_dim = weight.shape()[1];
  require(input.size() == in_dim, "dense input length does not match weight columns");
  require(bias.size() == out_dim, "dense bias length does not match weight rows");

  std::vector<double> out(out_dim);
  const double* w = weight.data();
  for (std::size_t o = 0; o < out_dim; ++o) {
    double acc = bias[o];
    const double* row = w + o * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * input[i];
    out[o] = activate(act, acc);
  }
  if (cache) {
    cache->input.assign(input.begin(), input.end());
    cache->output = out;
  }
  return out;
}

std::vector<double> dense_backward(const Tensor& weight, const DenseCache& cache, Activation act,
                                   std::span<const double> grad_output, Tensor& grad_weight, Tensor& grad_bias) {
  const std::size_t out_dim = weight.shape()[0];
  const std::size_t in_dim = weight.shape()[1];
  require(grad_output.size() == out_dim, "dense grad length mismatch");

  std::vector<double> grad_input(in_dim, 0.0);
  const double* w = weight.data();
  double* gw = grad_weight.data();
  for (std::size_t o = 0; o < out_dim; ++o) {
    const double dz = grad_output[o] * activate_grad_from_output(act, cache.output[o]);
    if (dz == 0.0) continue;
    grad_bias[o] += dz;
    const double* row = w + o * in_dim;
    double* grow = gw + o * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) {
      grow[i] += dz * cache.input[i];
      grad_input[i] += dz * row[i];
    }
  }
  return grad_input;
}

std::vector<double> conv_forward(const Tensor& weight, const Tensor& bias, std::span<const double> input,
                                 Activation act, ConvCache* cache) {
  require(weight.shape().size() == 4, "conv weight must be 4-D");
  const std::size_t k_out = weight.shape()[0];
  const std::size_t c_in = weight.shape()[1];
  const int kh = static_cast<int>(weight.shape()[2]);
  const int kw = static_cast<int>(weight.shape()[3]);
  require(kh % 2 == 1 && kw % 2 == 1, "conv kernel must have odd extents for same padding");
  require(kh <= kGridSize && kw <= kGridSize, "conv kernel larger than the grid");
  require(input.size() == c_in * kTileCount, "conv input must be C x 7 x 7");
  require(bias.size() == k_out, "conv bias length mismatch");

  const int ph = kh / 2;
  const int pw = kw / 2;
  std::vector<double> out(k_out * kTileCount);
  for (std::size_t k = 0; k < k_out; ++k) {
    for (int r = 0; r < kGridSize; ++r) {
      for (int c = 0; c < kGridSize; ++c) {
        double acc = bias[k];
        for (std::size_t ch = 0; ch < c_in; ++ch) {
          for (int i = 0; i < kh; ++i) {
            const int rr = r + i - ph;
            if (rr < 0 || rr >= kGridSize) continue;
            for (int j = 0; j < kw; ++j) {
              const int cc = c + j - pw;
              if (cc < 0 || cc >= kGridSize) continue;
              acc += weight[((k * c_in + ch) * static_cast<std::size_t>(kh) + static_cast<std::size_t>(i)) *
                                static_cast<std::size_t>(kw) + static_cast<std::size_t>(j)] *
                     input[ch * kTileCount + static_cast<std::size_t>(rr * kGridSize + cc)];
            }
          }
        }
        out[k * kTileCount + static_cast<std::size_t>(r * kGridSize + c)] = activate(act, acc);
      }
    }
  }
  if (cache) {
    cache->input.assign(input.begin(), input.end());
    cache->output = out;
    cache->in_channels = c_in;
  }
  return out;
}

std::vector<double> conv_backward(const Tensor& weight, const ConvCache& cache, Activation act,
                                  std::span<const double> grad_output, Tensor& grad_weight, Tensor& grad_bias) {
  const std::size_t k_out = weight.shape()[0];
  const std::size_t c_in = weight.shape()[1];
  const int kh = static_cast<int>(weight.shape()[2]);
  const int kw = static_cast<int>(weight.shape()[3]);
  require(grad_output.size() == k_out * kTileCount, "conv grad length mismatch");
  const int ph = kh / 2;
  const int pw = kw / 2;

  std::vector<double> grad_input(c_in * kTileCount, 0.0);
  for (std::size_t k = 0; k < k_out; ++k) {
    for (int r = 0; r < kGridSize; ++r) {
      for (int c = 0; c < kGridSize; ++c) {
        const std::size_t o = k * kTileCount + static_cast<std::size_t>(r * kGridSize + c);
        const double dz = grad_output[o] * activate_grad_from_output(act, cache.output[o]);
        if (dz == 0.0) continue;
        grad_bias[k] += dz;
        for (std::size_t ch = 0; ch < c_in; ++ch) {
          for (int i = 0; i < kh; ++i) {
            const int rr = r + i - ph;
            if (rr < 0 || rr >= kGridSize) continue;
            for (int j = 0; j < kw; ++j) {
              const int cc = c + j - pw;
              if (cc < 0 || cc >= kGridSize) continue;
              const std::size_t wi = ((k * c_in + ch) * static_cast<std::size_t>(kh) + static_cast<std::size_t>(i)) *
                                         static_cast<std::size_t>(kw) + static_cast<std::size_t>(j);
              const std::size_t ii = ch * kTileCount + static_cast<std::size_t>(rr * kGridSize + cc);
              grad_weight[wi] += dz * cache.input[ii];
              grad_input[ii] += dz * weight[wi];
            }
          }
        }
      }
    }
  }
  return grad_input;
}

LstmState lstm_step(const Tensor& w_input, const Tensor& w_hidden, const Tensor& bias,
                    std::span<const double> input, const LstmState& state, LstmCache* cache) {
  require(w_input.shape().size() == 2 && w_hidden.shape().size() == 2, "lstm weights must be 2-D");
  const std::size_t hidden = w_hidden.shape()[1];
  const std::size_t in_dim = w_input.shape()[1];
  require(w_input.shape()[0] == 4 * hidden && w_hidden.shape()[0] == 4 * hidden, "lstm gate rows must be 4H");
  require(bias.size() == 4 * hidden, "lstm bias must be 4H");
  require(input.size() == in_dim, "lstm input length mismatch");
  require(state.hidden.size() == hidden && state.cell.size() == hidden, "lstm state size mismatch");

  std::vector<double> gates(4 * hidden);
  const double* wx = w_input.data();
  const double* wh = w_hidden.data();
  for (std::size_t g = 0; g < 4 * hidden; ++g) {
    double acc = bias[g];
    const double* rx = wx + g * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) acc += rx[i] * input[i];
    const double* rh = wh + g * hidden;
    for (std::size_t i = 0; i < hidden; ++i) acc += rh[i] * state.hidden[i];
    gates[g] = acc;
  }
  LstmState next{std::vector<double>(hidden), std::vector<double>(hidden)};
  std::vector<double> cell_tanh(hidden);
  for (std::size_t u = 0; u < hidden; ++u) {
    const double i = sigmoid(gates[u]);
    const double f = sigmoid(gates[hidden + u]);
    const double g = std::tanh(gates[2 * hidden + u]);
    const double o = sigmoid(gates[3 * hidden + u]);
    gates[u] = i;
    gates[hidden + u] = f;
    gates[2 * hidden + u] = g;
    gates[3 * hidden + u] = o;
    next.cell[u] = f * state.cell[u] + i * g;
    cell_tanh[u] = std::tanh(next.cell[u]);
    next.hidden[u] = o * cell_tanh[u];
  }
  if (cache) {
    cache->input.assign(input.begin(), input.end());
    cache->hidden_prev = state.hidden;
    cache->cell_prev = state.cell;
    cache->gates = std::move(gates);
    cache->cell = next.cell;
    cache->cell_tanh = std::move(cell_tanh);
  }
  return next;
}

LstmGrads lstm_backward(const Tensor& w_input, const Tensor& w_hidden, const LstmCache& cache,
                        std::span<const double> grad_hidden, std::span<const double> grad_cell,
                        Tensor& grad_w_input, Tensor& grad_w_hidden, Tensor& grad_bias) {
  const std::size_t hidden = w_hidden.shape()[1];
  const std::size_t in_dim = w_input.shape()[1];
  require(grad_hidden.size() == hidden && grad_cell.size() == hidden, "lstm grad size mismatch");

  std::vector<double> dz(4 * hidden);
  LstmGrads out{std::vector<double>(in_dim, 0.0), std::vector<double>(hidden, 0.0),
                std::vector<double>(hidden, 0.0)};
  for (std::size_t u = 0; u < hidden; ++u) {
    const double i = cache.gates[u];
    const double f = cache.gates[hidden + u];
    const double g = cache.gates[2 * hidden + u];
    const double o = cache.gates[3 * hidden + u];
    const double tc = cache.cell_tanh[u];
    const double d_o = grad_hidden[u] * tc;
    const double dc = grad_cell[u] + grad_hidden[u] * o * (1.0 - tc * tc);
    dz[u] = dc * g * i * (1.0 - i);
    dz[hidden + u] = dc * cache.cell_prev[u] * f * (1.0 - f);
    dz[2 * hidden + u] = dc * i * (1.0 - g * g);
    dz[3 * hidden + u] = d_o * o * (1.0 - o);
    out.cell_prev[u] = dc * f;
  }
  const double* wx = w_input.data();
  const double* wh = w_hidden.data();
  double* gwx = grad_w_input.data();
  double* gwh = grad_w_hidden.data();
  for (std::size_t gidx = 0; gidx < 4 * hidden; ++gidx) {
    const double d = dz[gidx];
    if (d == 0.0) continue;
    grad_bias[gidx] += d;
    const double* rx = wx + gidx * in_dim;
    double* grx = gwx + gidx * in_dim;
    for (std::size_t k = 0; k < in_dim; ++k) {
      grx[k] += d * cache.input[k];
      out.input[k] += d * rx[k];
    }
    const double* rh = wh + gidx * hidden;
    double* grh = gwh + gidx * hidden;
    for (std::size_t k = 0; k < hidden; ++k) {
      grh[k] += d * cache.hidden_prev[k];
      out.hidden_prev[k] += d * rh[k];
    }
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {
double clamp_probability(double p) { return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon); }
}  // namespace

double bce_loss(double probability, double label) {
  const double p = clamp_probability(probability);
  return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

double bce_grad(double probability, double label) {
  const double p = clamp_probability(probability);
  return -label / p + (1.0 - label) / (1.0 - p);
}

double bce_with_logit(double logit, double label) {
  // softplus(z) - y z, written to avoid overflow for large |z|.
  const double softplus = logit > 0.0 ? logit + std::log1p(std::exp(-logit)) : std::log1p(std::exp(logit));
  return softplus - label * logit;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double log_z = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  auto out = log_softmax(logits);
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

double entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

bool all_finite(const Gradients& grads) { return grads.all_finite(); }

Adam::Adam(const ParamSet& params, AdamConfig config)
    : config_(config), m_(params.zeros_like()), v_(params.zeros_like()) {}

void Adam::step(ParamSet& params, const Gradients& grads) {
  params.check_compatible(grads);
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient in Adam step");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.count(); ++k) {
    auto p = params.tensor(k).values();
    const auto g = grads.tensor(k).values();
    auto m = m_.tensor(k).values();
    auto v = v_.tensor(k).values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

RmsProp::RmsProp(const ParamSet& params, RmsPropConfig config)
    : config_(config), square_avg_(params.zeros_like()) {}

void RmsProp::step(ParamSet& params, const Gradients& grads, double learning_rate) {
  params.check_compatible(grads);
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient in RMSProp step");
  for (std::size_t k = 0; k < params.count(); ++k) {
    auto p = params.tensor(k).values();
    const auto g = grads.tensor(k).values();
    auto s = square_avg_.tensor(k).values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      s[i] = config_.alpha * s[i] + (1.0 - config_.alpha) * g[i] * g[i];
      p[i] -= learning_rate * g[i] / (std::sqrt(s[i]) + config_.epsilon);
    }
  }
}

void sgd_step(ParamSet& params, const Gradients& grads, double learning_rate) {
  params.check_compatible(grads);
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient in SGD step");
  for (std::size_t k = 0; k < params.count(); ++k) {
    auto p = params.tensor(k).values();
    const auto g = grads.tensor(k).values();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * g[i];
  }
}

double linear_schedule(double initial, std::int64_t t, std::int64_t total) {
  if (total <= 0) return 0.0;
  const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(total);
  return initial * std::max(0.0, frac);
}

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (std::size_t k = 0; k < grads.count(); ++k) {
    for (double g : grads.tensor(k).values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (std::size_t k = 0; k < grads.count(); ++k) {
      for (double& g : grads.tensor(k).values()) g *= scale;
    }
  }
  return norm;
}

void save_checkpoint(const std::filesystem::path& path, const NetParams& params, const std::string& kind,
                     const std::string& header_json) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  if (!header_json.empty()) out << header_json << '\n';
  nlohmann::json meta = {{"format", "compgrid-checkpoint"},
                         {"version", kCheckpointVersion},
                         {"kind", kind},
                         {"seed", params.seed},
                         {"info", params.info}};
  out << meta.dump() << '\n';
  for (std::size_t k = 0; k < params.tensors.count(); ++k) {
    const Tensor& t = params.tensors.tensor(k);
    nlohmann::json rec = {{"name", params.tensors.name(k)},
                          {"shape", t.shape()},
                          {"values", std::vector<double>(t.values().begin(), t.values().end())}};
    out << rec.dump() << '\n';
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

NetParams load_checkpoint(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  NetParams params;
  bool have_meta = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, "<record>", e.what());
    }
    if (rec.contains("header")) continue;
    if (!have_meta) {
      if (rec.value("format", "") != "compgrid-checkpoint") throw ParseError(line_no, "format", "not a checkpoint");
      if (rec.value("version", 0) != kCheckpointVersion) throw ParseError(line_no, "version", "unsupported version");
      if (rec.value("kind", "") != expected_kind) {
        throw ParseError(line_no, "kind", "expected '" + expected_kind + "', found '" + rec.value("kind", "") + "'");
      }
      params.seed = rec.value("seed", std::uint64_t{0});
      if (rec.contains("info")) params.info = rec["info"].get<std::map<std::string, double>>();
      have_meta = true;
      continue;
    }
    try {
      auto shape = rec.at("shape").get<std::vector<std::size_t>>();
      auto values = rec.at("values").get<std::vector<double>>();
      Tensor& t = params.tensors.add(rec.at("name").get<std::string>(), std::move(shape));
      if (values.size() != t.size()) throw ParseError(line_no, "values", "length does not match shape");
      std::copy(values.begin(), values.end(), t.values().begin());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, "tensor", e.what());
    }
  }
  if (!have_meta) throw ParseError(line_no, "format", "empty checkpoint");
  return params;
}

}  // namespace compgrid::nn
