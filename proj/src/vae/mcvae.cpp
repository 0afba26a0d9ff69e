#include "mftd/mcvae.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "mftd/error.hpp"
#include "mftd/simd.hpp"

namespace mftd::vae {

void MultiChannelImage::validate() const {
  if (channels < 1 || height < 1 || width < 1) throw ConfigError("image: nonpositive dimension");
  if (pixels.size() != static_cast<std::size_t>(channels) * channel_size()) {
    throw ConfigError("image: pixel count does not match the shape");
  }
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("image: pixel outside [0, 1]");
  }
}

std::size_t VaeShape::parameter_count() const {
  const std::size_t d = static_cast<std::size_t>(input_dim());
  const std::size_t h = static_cast<std::size_t>(hidden), l = static_cast<std::size_t>(latent);
  return (h * d + h) + (2 * l * h + 2 * l) + (h * l + h) + (d * h + d);
}

void VaeShape::validate() const {
  if (channels < 1 || height < 1 || width < 1 || hidden < 1 || latent < 1) {
    throw ConfigError("vae: all layer dimensions must be positive");
  }
}

const char* layer_name(int layer) {
  switch (layer) {
    case kEncoderHidden: return "encoder hidden";
    case kEncoderOut: return "encoder output";
    case kDecoderHidden: return "decoder hidden";
    case kDecoderOut: return "decoder output";
    default: return "unknown";
  }
}

namespace {

// (rows, cols) of each layer.
std::array<std::pair<int, int>, 4> layer_dims(const VaeShape& s) {
  return {{{s.hidden, s.input_dim()}, {2 * s.latent, s.hidden}, {s.hidden, s.latent}, {s.input_dim(), s.hidden}}};
}

}  // namespace

VaeModel::VaeModel(VaeShape shape) : shape_(shape) {
  shape_.validate();
  const auto dims = layer_dims(shape_);
  for (int k = 0; k < 4; ++k) {
    offset_[k + 1] = offset_[k] + static_cast<std::size_t>(dims[k].first) * (dims[k].second + 1);
  }
  params_.assign(offset_[4], 0.0);
}

VaeModel VaeModel::initialized(VaeShape shape, std::uint64_t seed) {
  VaeModel m(shape);
  std::mt19937_64 rng(seed);
  for (int k = 0; k < 4; ++k) {
    const LayerView l = m.layer(k);
    // ReLU-feeding layers get the He scale; linear heads the Glorot-like 1 / fan_in.
    const bool relu_next = k == kEncoderHidden || k == kDecoderHidden;
    std::normal_distribution<double> dist(0.0, std::sqrt((relu_next ? 2.0 : 1.0) / l.cols));
    for (std::size_t i = 0; i < static_cast<std::size_t>(l.rows) * l.cols; ++i) l.w[i] = dist(rng);
  }
  return m;
}

LayerView VaeModel::layer(int k) {
  const auto dims = layer_dims(shape_);
  double* w = params_.data() + offset_[k];
  return {w, w + static_cast<std::size_t>(dims[k].first) * dims[k].second, dims[k].first, dims[k].second};
}

ConstLayerView VaeModel::layer(int k) const {
  const auto dims = layer_dims(shape_);
  const double* w = params_.data() + offset_[k];
  return {w, w + static_cast<std::size_t>(dims[k].first) * dims[k].second, dims[k].first, dims[k].second};
}

std::pair<std::size_t, std::size_t> VaeModel::layer_range(int k) const {
  return {offset_[k], offset_[k + 1] - offset_[k]};
}

namespace {

struct Forward {
  std::vector<double> h1_pre, h1, enc;
  Encoding code;
  std::vector<double> z, h3_pre, h3, y;
};

void dense(const ConstLayerView& l, const double* x, double* y) {
  simd::active().gemv(l.w, x, l.b, y, static_cast<std::size_t>(l.rows), static_cast<std::size_t>(l.cols));
}

void check_finite(const std::vector<double>& v, int layer) {
  for (double a : v) {
    if (!std::isfinite(a)) {
      throw NumericalError(std::string("vae: non-finite activation in layer ") + std::to_string(layer) + " (" +
                           layer_name(layer) + ")");
    }
  }
}

void check_input(const VaeModel& model, const MultiChannelImage& x) {
  const VaeShape& s = model.shape();
  if (x.channels != s.channels || x.height != s.height || x.width != s.width ||
      x.pixels.size() != static_cast<std::size_t>(s.input_dim())) {
    throw ConfigError("vae: image shape does not match the model");
  }
}

Encoding encode_into(const VaeModel& model, const MultiChannelImage& x, Forward& f) {
  check_input(model, x);
  const VaeShape& s = model.shape();
  f.h1_pre.resize(s.hidden);
  dense(model.layer(kEncoderHidden), x.pixels.data(), f.h1_pre.data());
  check_finite(f.h1_pre, kEncoderHidden);
  f.h1.resize(s.hidden);
  for (int i = 0; i < s.hidden; ++i) f.h1[i] = std::max(0.0, f.h1_pre[i]);
  f.enc.resize(2 * s.latent);
  dense(model.layer(kEncoderOut), f.h1.data(), f.enc.data());
  check_finite(f.enc, kEncoderOut);
  Encoding e;
  e.mu.assign(f.enc.begin(), f.enc.begin() + s.latent);
  e.logvar.assign(f.enc.begin() + s.latent, f.enc.end());
  e.sigma.resize(s.latent);
  for (int j = 0; j < s.latent; ++j) e.sigma[j] = std::exp(0.5 * e.logvar[j]);
  check_finite(e.sigma, kEncoderOut);
  return e;
}

void decode_into(const VaeModel& model, std::span<const double> z, Forward& f) {
  const VaeShape& s = model.shape();
  if (z.size() != static_cast<std::size_t>(s.latent)) throw ConfigError("vae: latent size mismatch");
  f.h3_pre.resize(s.hidden);
  dense(model.layer(kDecoderHidden), z.data(), f.h3_pre.data());
  check_finite(f.h3_pre, kDecoderHidden);
  f.h3.resize(s.hidden);
  for (int i = 0; i < s.hidden; ++i) f.h3[i] = std::max(0.0, f.h3_pre[i]);
  f.y.resize(s.input_dim());
  dense(model.layer(kDecoderOut), f.h3.data(), f.y.data());
  check_finite(f.y, kDecoderOut);
  for (double& v : f.y) v = 1.0 / (1.0 + std::exp(-v));
}

void forward(const VaeModel& model, const MultiChannelImage& x, std::span<const double> eps, Forward& f) {
  f.code = encode_into(model, x, f);
  if (eps.size() != f.code.mu.size()) throw ConfigError("vae: noise size does not match the latent size");
  f.z = reparameterize(f.code.mu, f.code.sigma, eps);
  decode_into(model, f.z, f);
}

LossTerms loss_from(const Forward& f, const MultiChannelImage& x, double kl_weight) {
  LossTerms t;
  t.kl = kl_divergence(f.code.mu, f.code.sigma);
  const std::size_t p = x.channel_size();
  const std::span<const double> y(f.y);
  for (int c = 0; c < x.channels; ++c) {
    t.per_channel.push_back(bce(x.channel(c), y.subspan(c * p, p)));
    t.reconstruction += t.per_channel.back();
  }
  t.total = kl_weight * t.kl + t.reconstruction;
  return t;
}

}  // namespace

Encoding encode(const VaeModel& model, const MultiChannelImage& x) {
  Forward f;
  return encode_into(model, x, f);
}

std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> sigma,
                                   std::span<const double> eps) {
  if (sigma.size() != mu.size() || eps.size() != mu.size()) throw ConfigError("reparameterize: size mismatch");
  std::vector<double> z(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) z[j] = mu[j] + sigma[j] * eps[j];
  return z;
}

std::vector<double> decode(const VaeModel& model, std::span<const double> z) {
  Forward f;
  decode_into(model, z, f);
  return std::move(f.y);
}

MultiChannelImage decode_image(const VaeModel& model, std::span<const double> z) {
  const VaeShape& s = model.shape();
  MultiChannelImage img(s.channels, s.height, s.width);
  img.pixels = decode(model, z);
  return img;
}

double kl_divergence(std::span<const double> mu, std::span<const double> sigma) {
  if (sigma.size() != mu.size()) throw ConfigError("kl_divergence: size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double var = sigma[j] * sigma[j];
    s += 1.0 + std::log(var) - mu[j] * mu[j] - var;
  }
  return -0.5 * s;
}

double bce(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ConfigError("bce: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = std::clamp(y[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    s += x[i] * std::log(p) + (1.0 - x[i]) * std::log(1.0 - p);
  }
  return -s / static_cast<double>(x.size());
}

LossTerms vae_loss(const VaeModel& model, const MultiChannelImage& x, std::span<const double> eps,
                   double kl_weight) {
  Forward f;
  forward(model, x, eps, f);
  return loss_from(f, x, kl_weight);
}

LossTerms backward(const VaeModel& model, const MultiChannelImage& x, std::span<const double> eps,
                   double kl_weight, VaeModel& grad, double scale) {
  if (!(grad.shape() == model.shape())) throw ConfigError("backward: gradient buffer shape mismatch");
  Forward f;
  forward(model, x, eps, f);
  const LossTerms loss = loss_from(f, x, kl_weight);
  const VaeShape& s = model.shape();
  const auto& k = simd::active();
  const std::size_t d = static_cast<std::size_t>(s.input_dim());
  const std::size_t hd = static_cast<std::size_t>(s.hidden), lt = static_cast<std::size_t>(s.latent);

  // Sigmoid + BCE collapse to (y - x) per pixel, averaged within a channel.
  std::vector<double> dy(d);
  const double inv_p = scale / static_cast<double>(x.channel_size());
  for (std::size_t i = 0; i < d; ++i) dy[i] = (f.y[i] - x.pixels[i]) * inv_p;

  const ConstLayerView l4 = model.layer(kDecoderOut);
  LayerView g4 = grad.layer(kDecoderOut);
  k.rank1_update(g4.w, 1.0, dy.data(), f.h3.data(), d, hd);
  k.axpy(1.0, dy.data(), g4.b, d);
  std::vector<double> dh3(hd, 0.0);
  k.gemv_t_acc(l4.w, dy.data(), dh3.data(), d, hd);
  for (std::size_t i = 0; i < hd; ++i) {
    if (f.h3_pre[i] <= 0.0) dh3[i] = 0.0;
  }

  const ConstLayerView l3 = model.layer(kDecoderHidden);
  LayerView g3 = grad.layer(kDecoderHidden);
  k.rank1_update(g3.w, 1.0, dh3.data(), f.z.data(), hd, lt);
  k.axpy(1.0, dh3.data(), g3.b, hd);
  std::vector<double> dz(lt, 0.0);
  k.gemv_t_acc(l3.w, dh3.data(), dz.data(), hd, lt);

  std::vector<double> denc(2 * lt);
  for (std::size_t j = 0; j < lt; ++j) {
    const double sg = f.code.sigma[j];
    denc[j] = dz[j] + scale * kl_weight * f.code.mu[j];
    denc[lt + j] = dz[j] * eps[j] * 0.5 * sg + scale * kl_weight * 0.5 * (sg * sg - 1.0);
  }

  const ConstLayerView l2 = model.layer(kEncoderOut);
  LayerView g2 = grad.layer(kEncoderOut);
  k.rank1_update(g2.w, 1.0, denc.data(), f.h1.data(), 2 * lt, hd);
  k.axpy(1.0, denc.data(), g2.b, 2 * lt);
  std::vector<double> dh1(hd, 0.0);
  k.gemv_t_acc(l2.w, denc.data(), dh1.data(), 2 * lt, hd);

  LayerView g1 = grad.layer(kEncoderHidden);
  for (std::size_t i = 0; i < hd; ++i) {
    if (f.h1_pre[i] <= 0.0 || dh1[i] == 0.0) continue;
    // One row of the input-layer outer product; inactive units are skipped.
    k.axpy(dh1[i], x.pixels.data(), g1.w + i * d, d);
    g1.b[i] += dh1[i];
  }

  for (int layer = 0; layer < 4; ++layer) {
    const auto [off, len] = grad.layer_range(layer);
    const auto p = grad.parameters().subspan(off, len);
    if (!std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); })) {
      throw NumericalError(std::string("vae: non-finite gradient in block ") + layer_name(layer));
    }
  }
  return loss;
}

void TrainConfig::validate() const {
  if (max_epochs < 1 || batch_size < 1 || patience < 1) {
    throw ConfigError("train: epochs, batch size and patience must be positive");
  }
  if (patience > max_epochs) throw ConfigError("train: patience exceeds max epochs");
  if (!(learning_rate > 0.0) || !(kl_weight >= 0.0) || !(adam_epsilon > 0.0)) {
    throw ConfigError("train: learning rate and Adam epsilon must be positive, KL weight nonnegative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  }
}

TrainResult train(const std::vector<MultiChannelImage>& data, const TrainConfig& config, VaeModel init) {
  config.validate();
  if (data.empty()) throw ConfigError("train: empty dataset");
  for (const auto& img : data) {
    img.validate();
    check_input(init, img);
  }
  const VaeShape shape = init.shape();
  const std::size_t np = init.parameters().size();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  TrainResult result;
  result.model = init;
  VaeModel model = std::move(init);
  VaeModel grad(shape);
  std::vector<double> m(np, 0.0), v(np, 0.0);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> eps(shape.latent);
  double best = std::numeric_limits<double>::infinity();
  long step = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double w = 1.0 / static_cast<double>(stop - start);
      std::fill(grad.parameters().begin(), grad.parameters().end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        for (double& e : eps) e = normal(rng);
        epoch_loss += backward(model, data[order[b]], eps, config.kl_weight, grad, w).total;
      }
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto p = model.parameters();
      const auto g = grad.parameters();
      for (std::size_t i = 0; i < np; ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
        p[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.adam_epsilon);
      }
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
    }
    result.loss_curve.push_back(epoch_loss);
    if (epoch_loss < best) {
      best = epoch_loss;
      result.best_epoch = epoch;
      result.model = model;
    } else if (epoch - result.best_epoch >= config.patience) {
      spdlog::debug("vae: early stop at epoch {} (best {} at {})", epoch, best, result.best_epoch);
      break;
    }
  }
  return result;
}

std::string training_curve_csv(const std::vector<double>& loss_curve) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,loss\n";
  for (std::size_t e = 0; e < loss_curve.size(); ++e) os << e << ',' << loss_curve[e] << '\n';
  return os.str();
}

std::vector<MultiChannelImage> generate(const VaeModel& model, int n, std::uint64_t seed) {
  if (n < 0) throw ConfigError("generate: negative sample count");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(model.shape().latent);
  std::vector<MultiChannelImage> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    for (double& v : z) v = normal(rng);
    out.push_back(decode_image(model, z));
  }
  return out;
}

void save_checkpoint(std::ostream& out, const VaeModel& model, std::uint64_t seed, int epoch) {
  const VaeShape& s = model.shape();
  out << "mftd-vae 1\n"
      << "channels " << s.channels << " height " << s.height << " width " << s.width << " hidden " << s.hidden
      << " latent " << s.latent << '\n'
      << "seed " << seed << " epoch " << epoch << '\n'
      << "params " << model.parameters().size() << '\n';
  const auto p = model.parameters();
  out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (!out) throw IoError("save_checkpoint: write failed");
}

VaeModel load_checkpoint(std::istream& in) {
  std::string line;
  auto expect = [](std::istream& ls, const char* key) {
    std::string k;
    if (!(ls >> k) || k != key) throw ConfigError(std::string("vae checkpoint: expected '") + key + "'");
  };
  if (!std::getline(in, line) || line != "mftd-vae 1") throw ConfigError("vae checkpoint: bad magic");
  VaeShape s;
  {
    if (!std::getline(in, line)) throw ConfigError("vae checkpoint: missing shape line");
    std::istringstream ls(line);
    expect(ls, "channels"); ls >> s.channels;
    expect(ls, "height"); ls >> s.height;
    expect(ls, "width"); ls >> s.width;
    expect(ls, "hidden"); ls >> s.hidden;
    expect(ls, "latent"); ls >> s.latent;
    if (!ls) throw ConfigError("vae checkpoint: malformed shape line");
  }
  if (!std::getline(in, line)) throw ConfigError("vae checkpoint: missing seed line");
  std::size_t count = 0;
  {
    if (!std::getline(in, line)) throw ConfigError("vae checkpoint: missing parameter count");
    std::istringstream ls(line);
    expect(ls, "params");
    ls >> count;
    if (!ls) throw ConfigError("vae checkpoint: malformed parameter count");
  }
  VaeModel m(s);
  if (count != m.parameters().size()) throw ConfigError("vae checkpoint: parameter count does not match shape");
  auto p = m.parameters();
  in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double))) {
    throw ConfigError("vae checkpoint: truncated parameter block");
  }
  return m;
}

}  // namespace mftd::vae
