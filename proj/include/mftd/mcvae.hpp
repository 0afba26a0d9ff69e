#pragma once
// Multi-channel variational auto-encoder with dense layers and hand-written
// reverse-mode gradients.
//
// Encoder: D -> hidden (ReLU) -> 2 * latent (mean, log-variance)
// Decoder: latent -> hidden (ReLU) -> D (sigmoid)
// with D = channels * height * width.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mftd/density.hpp"

namespace mftd::vae {

// Channel-major pixels: index = (c * height + y) * width + x.
struct MultiChannelImage {
  int channels = 2;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  MultiChannelImage() = default;
  MultiChannelImage(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), pixels(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t channel_size() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  std::span<const double> channel(int c) const {
    return std::span<const double>(pixels).subspan(c * channel_size(), channel_size());
  }
  std::span<double> channel(int c) { return std::span<double>(pixels).subspan(c * channel_size(), channel_size()); }

  // Throws ConfigError when the shape is inconsistent or a pixel leaves [0, 1].
  void validate() const;
  bool operator==(const MultiChannelImage&) const = default;
};

struct VaeShape {
  int channels = 2;
  int height = 64;
  int width = 64;
  int hidden = 512;
  int latent = 16;

  int input_dim() const { return channels * height * width; }
  std::size_t parameter_count() const;
  void validate() const;
  bool operator==(const VaeShape&) const = default;
};

// Weight matrix (rows x cols, row-major) and bias of one dense layer.
struct LayerView {
  double* w;
  double* b;
  int rows;
  int cols;
};
struct ConstLayerView {
  const double* w;
  const double* b;
  int rows;
  int cols;
};

enum Layer : int { kEncoderHidden = 0, kEncoderOut = 1, kDecoderHidden = 2, kDecoderOut = 3 };
const char* layer_name(int layer);

// All parameters live in one flat buffer (layer by layer, weights then bias).
class VaeModel {
 public:
  VaeModel() = default;
  explicit VaeModel(VaeShape shape);  // all zeros

  // He-scaled normal weights, zero biases.
  static VaeModel initialized(VaeShape shape, std::uint64_t seed);

  const VaeShape& shape() const { return shape_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  LayerView layer(int k);
  ConstLayerView layer(int k) const;
  // Offset and length of a layer's block inside parameters().
  std::pair<std::size_t, std::size_t> layer_range(int k) const;

 private:
  VaeShape shape_;
  std::vector<double> params_;
  std::size_t offset_[5] = {0, 0, 0, 0, 0};
};

struct Encoding {
  std::vector<double> mu;
  std::vector<double> logvar;
  std::vector<double> sigma;  // exp(logvar / 2)
};

Encoding encode(const VaeModel& model, const MultiChannelImage& x);
std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> sigma,
                                   std::span<const double> eps);
// Decoded pixels in (0, 1), same layout as MultiChannelImage::pixels.
std::vector<double> decode(const VaeModel& model, std::span<const double> z);
MultiChannelImage decode_image(const VaeModel& model, std::span<const double> z);

// -1/2 sum(1 + log sigma^2 - mu^2 - sigma^2).
double kl_divergence(std::span<const double> mu, std::span<const double> sigma);

inline constexpr double kProbabilityClamp = 1e-7;

// Pixel-averaged binary cross-entropy of one channel; y is clamped to
// [1e-7, 1 - 1e-7] before the logarithm.
double bce(std::span<const double> x, std::span<const double> y);

struct LossTerms {
  double total = 0.0;
  double kl = 0.0;
  double reconstruction = 0.0;  // sum over channels
  std::vector<double> per_channel;
};

// w_kl * KL + sum_c BCE_c for one image with injected noise eps.
LossTerms vae_loss(const VaeModel& model, const MultiChannelImage& x,
                   std::span<const double> eps, double kl_weight);

// Adds d(loss)/d(parameters) * scale into `grad` (same shape as model) and
// returns the loss. The output-layer gradient uses the unclamped form
// (y - x) / pixels.
LossTerms backward(const VaeModel& model, const MultiChannelImage& x,
                   std::span<const double> eps, double kl_weight, VaeModel& grad,
                   double scale = 1.0);

struct TrainConfig {
  int max_epochs = 300;
  double learning_rate = 1e-4;
  int batch_size = 16;
  double kl_weight = 1e-3;
  int patience = 40;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  VaeModel model;                 // parameters of the best epoch
  std::vector<double> loss_curve;  // mean training loss per epoch
  int best_epoch = 0;
};

// Mini-batch Adam; stops after `patience` epochs without improvement.
// Throws NumericalError with the epoch index when the loss diverges.
TrainResult train(const std::vector<MultiChannelImage>& data, const TrainConfig& config,
                  VaeModel init);

std::string training_curve_csv(const std::vector<double>& loss_curve);

// n images decoded from z ~ N(0, I).
std::vector<MultiChannelImage> generate(const VaeModel& model, int n, std::uint64_t seed);

// Text header followed by the raw parameter doubles.
void save_checkpoint(std::ostream& out, const VaeModel& model, std::uint64_t seed, int epoch);
VaeModel load_checkpoint(std::istream& in);

// Scalar HF parameter (de)normalization onto [0, 1].
double normalize_h(double h, double h_min, double h_max);
double denormalize_h(double v, double h_min, double h_max);

// Channel 1 = density, channel 2 = normalized h on the solid pixels
// (density >= 0.5) and 0 elsewhere.
MultiChannelImage make_sample_image(const DensityField& density, double h, double h_min, double h_max);
DensityField channel_field(const MultiChannelImage& image, int channel);

struct ScalarHf {
  double h = 0.0;
  bool has_solid = false;
};
// Mean of the denormalized channel 2 over pixels with channel 1 >= 0.5,
// clamped to [h_min, h_max]; h_min when no pixel is solid.
ScalarHf extract_scalar_hf(const MultiChannelImage& image, double h_min, double h_max);

// Indices of the balanced dataset: all originals in order, then duplicates
// cycling through each under-filled bin until every nonempty bin holds as
// many samples as the largest one. Bins split [h_min, h_max] evenly.
std::vector<std::size_t> oversample_indices(std::span<const double> h, int n_bins,
                                            double h_min, double h_max);

}  // namespace mftd::vae
