#include "codevqa/gradcam/gradcam.hpp"

#include <algorithm>

namespace codevqa::gradcam {

void CrossAttention::validate() const {
  if (attention.rows != gradient.rows || attention.cols != gradient.cols) {
    throw GradCamError("attention is " + std::to_string(attention.rows) + "x" + std::to_string(attention.cols) +
                       " but gradient is " + std::to_string(gradient.rows) + "x" + std::to_string(gradient.cols));
  }
  if (attention.data.size() != attention.rows * attention.cols ||
      gradient.data.size() != gradient.rows * gradient.cols) {
    throw GradCamError("matrix storage does not match its shape");
  }
  for (double v : attention.data) {
    if (!(v >= 0.0)) throw GradCamError("attention weights must be non-negative");
  }
  for (std::size_t p : special_positions) {
    if (p >= attention.rows) throw GradCamError("special token position out of range");
  }
}

namespace {

void check_grid(const CrossAttention& ca, int grid_h, int grid_w) {
  if (grid_h < 1 || grid_w < 1 ||
      static_cast<std::size_t>(grid_h) * static_cast<std::size_t>(grid_w) != ca.attention.cols) {
    throw GradCamError("grid " + std::to_string(grid_h) + "x" + std::to_string(grid_w) + " does not match " +
                       std::to_string(ca.attention.cols) + " patches");
  }
}

}  // namespace

GradCamMap token_gradcam(const CrossAttention& ca, std::size_t token, int grid_h, int grid_w) {
  if (token >= ca.attention.rows) {
    throw GradCamError("token index " + std::to_string(token) + " out of range for " +
                       std::to_string(ca.attention.rows) + " tokens");
  }
  check_grid(ca, grid_h, grid_w);
  GradCamMap map{std::vector<double>(ca.attention.cols), grid_h, grid_w};
  const auto c = ca.attention.row(token);
  const auto g = ca.gradient.row(token);
  for (std::size_t j = 0; j < map.values.size(); ++j) map.values[j] = c[j] * std::max(g[j], 0.0);
  return map;
}

GradCamMap averaged_gradcam(const CrossAttention& ca, std::span<const std::size_t> tokens, int grid_h, int grid_w) {
  if (tokens.empty()) throw GradCamError("cannot average over an empty token set");
  GradCamMap sum = token_gradcam(ca, tokens.front(), grid_h, grid_w);
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const GradCamMap next = token_gradcam(ca, tokens[t], grid_h, grid_w);
    for (std::size_t j = 0; j < sum.values.size(); ++j) sum.values[j] += next.values[j];
  }
  const double count = static_cast<double>(tokens.size());
  for (double& v : sum.values) v /= count;
  return sum;
}

std::vector<std::size_t> content_tokens(const CrossAttention& ca) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < ca.num_tokens(); ++t) {
    if (std::find(ca.special_positions.begin(), ca.special_positions.end(), t) == ca.special_positions.end()) {
      out.push_back(t);
    }
  }
  if (out.empty()) {
    for (std::size_t t = 0; t < ca.num_tokens(); ++t) out.push_back(t);
  }
  return out;
}

std::vector<std::size_t> sample_patches(const GradCamMap& map, int n, std::mt19937_64& rng) {
  if (n < 1) throw GradCamError("sample count must be at least 1");
  if (map.values.empty()) throw GradCamError("cannot sample from an empty map");
  std::vector<double> cumulative(map.values.size());
  double total = 0.0;
  for (std::size_t j = 0; j < map.values.size(); ++j) {
    const double v = map.values[j];
    total += (v > 0.0) ? v : 0.0;
    cumulative[j] = total;
  }
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    if (!(total > 0.0)) {
      out.push_back(uniform_index(rng, map.values.size()));
      continue;
    }
    // Zero-mass cells repeat the previous cumulative value, so upper_bound
    // never lands on them.
    const double target = unit_draw(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) {
      // Rounding pushed the target to the total: take the last positive cell.
      it = std::lower_bound(cumulative.begin(), cumulative.end(), total);
    }
    out.push_back(static_cast<std::size_t>(it - cumulative.begin()));
  }
  return out;
}

Position argmax_position(const GradCamMap& map, const CoordinateFrame& frame) {
  if (map.values.empty()) throw GradCamError("argmax of an empty map");
  if (static_cast<std::size_t>(map.grid_h) * static_cast<std::size_t>(map.grid_w) != map.values.size()) {
    throw GradCamError("map values do not match its grid");
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < map.values.size(); ++j) {
    if (map.values[j] > map.values[best]) best = j;
  }
  const auto row = static_cast<double>(best / static_cast<std::size_t>(map.grid_w));
  const auto col = static_cast<double>(best % static_cast<std::size_t>(map.grid_w));
  const double cell_w = (frame.right - frame.left) / map.grid_w;
  const double cell_h = (frame.top - frame.bottom) / map.grid_h;
  return Position{frame.left + (col + 0.5) * cell_w, frame.bottom + (map.grid_h - row - 0.5) * cell_h};
}

}  // namespace codevqa::gradcam
