#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "codevqa/core/error.hpp"
#include "codevqa/core/random.hpp"
#include "codevqa/core/types.hpp"

namespace codevqa::gradcam {

class GradCamError : public Error {
 public:
  using Error::Error;
};

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

// Layer cross-attention C (tokens x patches) and the gradient G of the
// image-text matching score with respect to it.
struct CrossAttention {
  Matrix attention;
  Matrix gradient;
  std::vector<std::string> token_texts;
  // Token positions the backend marks as special ([CLS], [SEP], ...).
  std::vector<std::size_t> special_positions;
  int layer = 6;

  std::size_t num_tokens() const { return attention.rows; }
  // Throws GradCamError on shape disagreement or negative attention.
  void validate() const;
  bool operator==(const CrossAttention&) const = default;
};

struct GradCamMap {
  std::vector<double> values;
  int grid_h = 0;
  int grid_w = 0;
  bool operator==(const GradCamMap&) const = default;
};

// Row i of C * relu(G), laid out on the given grid.
GradCamMap token_gradcam(const CrossAttention& ca, std::size_t token, int grid_h, int grid_w);

// Arithmetic mean of token_gradcam over the indices. Throws on an empty set.
GradCamMap averaged_gradcam(const CrossAttention& ca, std::span<const std::size_t> tokens, int grid_h, int grid_w);

// All token positions not declared special; every position when all of them
// are special.
std::vector<std::size_t> content_tokens(const CrossAttention& ca);

// n draws with replacement, each patch chosen with probability proportional
// to its (unnormalized) map value. An all-zero map samples uniformly.
std::vector<std::size_t> sample_patches(const GradCamMap& map, int n, std::mt19937_64& rng);

// Centre of the highest-valued cell (lowest flat index on ties) in frame
// coordinates, with y measured up from BOTTOM.
Position argmax_position(const GradCamMap& map, const CoordinateFrame& frame);

}  // namespace codevqa::gradcam
