#include <algorithm>
#include <cmath>

#include "mftd/error.hpp"
#include "mftd/mcvae.hpp"

namespace mftd::vae {

namespace {

void check_range(double h_min, double h_max) {
  if (!(h_max > h_min)) throw ConfigError("HF range must satisfy h_min < h_max");
}

}  // namespace

double normalize_h(double h, double h_min, double h_max) {
  check_range(h_min, h_max);
  return (h - h_min) / (h_max - h_min);
}

double denormalize_h(double v, double h_min, double h_max) {
  check_range(h_min, h_max);
  return h_min + v * (h_max - h_min);
}

MultiChannelImage make_sample_image(const DensityField& density, double h, double h_min, double h_max) {
  if (density.nx < 1 || density.ny < 1) throw ConfigError("make_sample_image: empty density");
  const double v = std::clamp(normalize_h(h, h_min, h_max), 0.0, 1.0);
  MultiChannelImage img(2, density.ny, density.nx);
  for (int j = 0; j < density.ny; ++j) {
    for (int i = 0; i < density.nx; ++i) {
      const double g = std::clamp(density.at(i, j), 0.0, 1.0);
      img.at(0, j, i) = g;
      img.at(1, j, i) = g >= 0.5 ? v : 0.0;
    }
  }
  return img;
}

DensityField channel_field(const MultiChannelImage& image, int channel) {
  if (channel < 0 || channel >= image.channels) throw ConfigError("channel_field: channel out of range");
  const auto c = image.channel(channel);
  return DensityField(image.width, image.height, std::vector<double>(c.begin(), c.end()));
}

ScalarHf extract_scalar_hf(const MultiChannelImage& image, double h_min, double h_max) {
  check_range(h_min, h_max);
  if (image.channels < 2) throw ConfigError("extract_scalar_hf: image needs two channels");
  const auto mask = image.channel(0);
  const auto hf = image.channel(1);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k] >= 0.5) {
      sum += denormalize_h(hf[k], h_min, h_max);
      ++n;
    }
  }
  if (n == 0) return {h_min, false};
  return {std::clamp(sum / static_cast<double>(n), h_min, h_max), true};
}

std::vector<std::size_t> oversample_indices(std::span<const double> h, int n_bins, double h_min, double h_max) {
  check_range(h_min, h_max);
  if (n_bins < 1) throw ConfigError("oversample: bin count must be positive");
  std::vector<std::vector<std::size_t>> bins(n_bins);
  for (std::size_t k = 0; k < h.size(); ++k) {
    const int b = static_cast<int>(std::floor((h[k] - h_min) / (h_max - h_min) * n_bins));
    bins[std::clamp(b, 0, n_bins - 1)].push_back(k);
  }
  std::size_t target = 0;
  for (const auto& b : bins) target = std::max(target, b.size());
  std::vector<std::size_t> out(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) out[k] = k;
  for (const auto& b : bins) {
    if (b.empty()) continue;
    for (std::size_t k = b.size(); k < target; ++k) out.push_back(b[k % b.size()]);
  }
  return out;
}

}  // namespace mftd::vae
