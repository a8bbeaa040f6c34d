#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "divgauge/gaussian.hpp"
#include "divgauge/rng.hpp"
#include "divgauge/samples.hpp"

namespace divgauge {

// Nonlinear lift R^d -> R^target_dim: h_i(x) = x_i for i < d, and for the
// remaining coordinates h_i(x) = a_i . x + a_i0 + cos(x_j1) sin(x_j2) + x_j3 x_j4
// with a ~ U(-1,1)/sqrt(d) and indices uniform on 0..d-1, all drawn from seed.
struct EmbeddingSpec {
  std::size_t target_dim = 200;
  std::uint64_t seed = 0;
};

class Embedding {
 public:
  Embedding(EmbeddingSpec spec, std::size_t source_dim);

  std::size_t source_dim() const { return source_dim_; }
  std::size_t target_dim() const { return spec_.target_dim; }
  SampleMatrix apply(const SampleMatrix& x) const;

 private:
  EmbeddingSpec spec_;
  std::size_t source_dim_;
  std::vector<double> affine_;                  // (target - d) x (d + 1), bias last
  std::vector<std::array<std::size_t, 4>> idx_;  // (target - d)
};

struct MiPairSampler {
  std::size_t d = 1;
  double rho = 0.0;
  std::optional<EmbeddingSpec> embed;

  // Throws DomainError on |rho| >= 1 or d == 0.
  void validate() const;
  // Dimension of one marginal after the optional embedding.
  std::size_t marginal_dim() const { return embed ? embed->target_dim : d; }
};

struct MiBatch {
  SampleMatrix joint;    // rows (x, y) with Corr(x_i, y_i) = rho
  SampleMatrix product;  // independent joint draw with the y rows permuted
};

// The joint draw uses joint_stream; the product draw (including its
// permutation) uses product_stream only.
MiBatch sample_mi_pairs(const MiPairSampler& sampler, std::size_t n, Stream& joint_stream, Stream& product_stream);

// Grayscale images, one row-major image per sample row, pixels in [0, 1].
struct ImageBatch {
  std::size_t height = 28;
  std::size_t width = 28;
  SampleMatrix pixels;
  std::vector<std::uint8_t> labels;

  std::size_t count() const { return pixels.rows(); }
};

// MNIST IDX pair. FormatError on bad magic, dimensions or lengths; IoError
// on unreadable files.
ImageBatch mnist_load(const std::filesystem::path& images, const std::filesystem::path& labels);
// Write an IDX pair (bytes = round(255 * pixel)); used to build fixtures.
void mnist_save(const ImageBatch& batch, const std::filesystem::path& images, const std::filesystem::path& labels);

// Periodic shift of every image by its own (dx, dy): pixel (r, c) moves to
// ((r + dy) mod H, (c + dx) mod W).
ImageBatch shift_images(const ImageBatch& batch, std::span<const int> dx, std::span<const int> dy);
// Independent (dx, dy) ~ N(0, sigma^2), rounded to the nearest integer.
ImageBatch random_translate(const ImageBatch& batch, double sigma, Stream& stream);
// Uniformly drawn images (with replacement) whose label is <= max_label.
ImageBatch draw_images(const ImageBatch& pool, std::size_t n, int max_label, Stream& stream);

// Synthetic stand-in for the digit images: class k has a fixed prototype of
// a few seeded Gaussian strokes, and a sample is prototype + noise * N(0, I).
struct GlyphSpec {
  std::size_t side = 10;
  int classes = 10;
  double noise = 0.15;
  std::uint64_t seed = 0;
};

class GlyphSurrogate {
 public:
  explicit GlyphSurrogate(GlyphSpec spec);

  const GlyphSpec& spec() const { return spec_; }
  std::span<const double> prototype(int label) const;
  // Labels uniform on 0..max_label.
  ImageBatch sample(std::size_t n, int max_label, Stream& stream) const;

 private:
  GlyphSpec spec_;
  std::vector<double> prototypes_;
};

// Sample source for training and evaluation: Q and P are drawn from
// separate streams supplied by the caller.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::size_t dim() const = 0;
  virtual SampleMatrix draw_q(std::size_t n, Stream& stream) const = 0;
  virtual SampleMatrix draw_p(std::size_t n, Stream& stream) const = 0;
  // Rows available per side for fixed datasets; nullopt for generators.
  virtual std::optional<std::size_t> pool_size() const { return std::nullopt; }
};

class GaussianPairSource final : public PairSource {
 public:
  GaussianPairSource(GaussianSpec q, GaussianSpec p);
  std::size_t dim() const override { return q_.dim(); }
  SampleMatrix draw_q(std::size_t n, Stream& stream) const override;
  SampleMatrix draw_p(std::size_t n, Stream& stream) const override;

 private:
  GaussianSpec q_;
  GaussianSpec p_;
};

// Q = joint law, P = product of marginals.
class MiPairSource final : public PairSource {
 public:
  explicit MiPairSource(MiPairSampler sampler);
  std::size_t dim() const override { return 2 * sampler_.marginal_dim(); }
  SampleMatrix draw_q(std::size_t n, Stream& stream) const override;
  SampleMatrix draw_p(std::size_t n, Stream& stream) const override;

 private:
  MiPairSampler sampler_;
  std::optional<Embedding> embedding_;
};

// Fixed Q and P pools; minibatches are uniform draws with replacement.
class DatasetPairSource final : public PairSource {
 public:
  DatasetPairSource(SampleMatrix q, SampleMatrix p);
  std::size_t dim() const override { return q_.cols(); }
  SampleMatrix draw_q(std::size_t n, Stream& stream) const override;
  SampleMatrix draw_p(std::size_t n, Stream& stream) const override;
  std::optional<std::size_t> pool_size() const override { return std::min(q_.rows(), p_.rows()); }

  const SampleMatrix& q() const { return q_; }
  const SampleMatrix& p() const { return p_; }

 private:
  SampleMatrix q_;
  SampleMatrix p_;
};

class FunctionPairSource final : public PairSource {
 public:
  using Draw = std::function<SampleMatrix(std::size_t, Stream&)>;
  FunctionPairSource(std::size_t dim, Draw q, Draw p) : dim_(dim), q_(std::move(q)), p_(std::move(p)) {}
  std::size_t dim() const override { return dim_; }
  SampleMatrix draw_q(std::size_t n, Stream& stream) const override { return q_(n, stream); }
  SampleMatrix draw_p(std::size_t n, Stream& stream) const override { return p_(n, stream); }

 private:
  std::size_t dim_;
  Draw q_;
  Draw p_;
};

}  // namespace divgauge
