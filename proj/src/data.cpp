#include "divgauge/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "divgauge/errors.hpp"

namespace divgauge {

Embedding::Embedding(EmbeddingSpec spec, std::size_t source_dim) : spec_(spec), source_dim_(source_dim) {
  if (source_dim_ == 0) throw DomainError("embedding source dimension must be positive");
  if (spec_.target_dim <= source_dim_) throw DomainError("embedding target dimension must exceed the source dimension");
  const std::size_t extra = spec_.target_dim - source_dim_;
  Stream stream(spec_.seed, StreamRole::kAux, 0xE3B0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(source_dim_));
  affine_.resize(extra * (source_dim_ + 1));
  for (double& a : affine_) a = scale * (2.0 * stream.uniform() - 1.0);
  idx_.resize(extra);
  for (auto& t : idx_) {
    for (auto& j : t) j = static_cast<std::size_t>(stream.below(source_dim_));
  }
}

SampleMatrix Embedding::apply(const SampleMatrix& x) const {
  if (x.cols() != source_dim_) throw DomainError("embedding input has the wrong dimension");
  const std::size_t d = source_dim_;
  SampleMatrix out(x.rows(), spec_.target_dim);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto dst = out.row(r);
    std::copy(in.begin(), in.end(), dst.begin());
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      const double* a = affine_.data() + i * (d + 1);
      double h = a[d];
      for (std::size_t k = 0; k < d; ++k) h += a[k] * in[k];
      const auto& j = idx_[i];
      h += std::cos(in[j[0]]) * std::sin(in[j[1]]) + in[j[2]] * in[j[3]];
      dst[d + i] = h;
    }
  }
  return out;
}

void MiPairSampler::validate() const {
  if (d == 0) throw DomainError("mi sampler dimension must be positive");
  if (!(std::abs(rho) < 1.0)) throw DomainError("mi correlation must lie in (-1, 1)");
  if (embed && embed->target_dim <= d) throw DomainError("embedding target dimension must exceed d");
}

namespace {

// Rows (x, y): x ~ N(0, I), y = rho x + sqrt(1 - rho^2) z.
void draw_joint(std::size_t d, double rho, std::size_t n, Stream& stream, SampleMatrix& x, SampleMatrix& y) {
  x.resize(n, d);
  y.resize(n, d);
  const double s = std::sqrt(1.0 - rho * rho);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      const double a = stream.normal();
      const double b = stream.normal();
      x(r, i) = a;
      y(r, i) = rho * a + s * b;
    }
  }
}

std::uint32_t read_be32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError(what + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

}  // namespace

ImageBatch mnist_load(const std::filesystem::path& images, const std::filesystem::path& labels) {
  std::ifstream is(images, std::ios::binary);
  if (!is) throw IoError("cannot open " + images.string());
  std::ifstream ls(labels, std::ios::binary);
  if (!ls) throw IoError("cannot open " + labels.string());
  const std::string iname = images.string();
  const std::string lname = labels.string();

  if (read_be32(is, iname) != kImageMagic) throw FormatError(iname + ": bad image magic");
  const std::uint32_t n = read_be32(is, iname);
  const std::uint32_t rows = read_be32(is, iname);
  const std::uint32_t cols = read_be32(is, iname);
  if (rows != 28 || cols != 28) throw FormatError(iname + ": expected 28x28 images");
  if (read_be32(ls, lname) != kLabelMagic) throw FormatError(lname + ": bad label magic");
  if (read_be32(ls, lname) != n) throw FormatError(lname + ": label count does not match the image count");

  ImageBatch batch;
  batch.height = rows;
  batch.width = cols;
  const std::size_t pix = std::size_t{rows} * cols;
  batch.pixels.resize(n, pix);
  std::vector<unsigned char> buf(pix);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pix))) {
      throw FormatError(iname + ": truncated pixel data");
    }
    auto row = batch.pixels.row(i);
    for (std::size_t k = 0; k < pix; ++k) row[k] = static_cast<double>(buf[k]) / 255.0;
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError(iname + ": trailing bytes after pixel data");
  batch.labels.resize(n);
  if (!ls.read(reinterpret_cast<char*>(batch.labels.data()), n)) throw FormatError(lname + ": truncated labels");
  if (ls.peek() != std::char_traits<char>::eof()) throw FormatError(lname + ": trailing bytes after labels");
  return batch;
}

void mnist_save(const ImageBatch& batch, const std::filesystem::path& images, const std::filesystem::path& labels) {
  std::ofstream is(images, std::ios::binary | std::ios::trunc);
  std::ofstream ls(labels, std::ios::binary | std::ios::trunc);
  if (!is || !ls) throw IoError("cannot write IDX files");
  const auto n = static_cast<std::uint32_t>(batch.count());
  write_be32(is, kImageMagic);
  write_be32(is, n);
  write_be32(is, static_cast<std::uint32_t>(batch.height));
  write_be32(is, static_cast<std::uint32_t>(batch.width));
  for (double v : batch.pixels.data()) {
    is.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  write_be32(ls, kLabelMagic);
  write_be32(ls, n);
  for (std::size_t i = 0; i < batch.count(); ++i) ls.put(static_cast<char>(i < batch.labels.size() ? batch.labels[i] : 0));
}

ImageBatch shift_images(const ImageBatch& batch, std::span<const int> dx, std::span<const int> dy) {
  if (dx.size() != batch.count() || dy.size() != batch.count()) throw DomainError("one shift per image is required");
  const auto h = static_cast<long>(batch.height);
  const auto w = static_cast<long>(batch.width);
  ImageBatch out = batch;
  for (std::size_t i = 0; i < batch.count(); ++i) {
    const auto src = batch.pixels.row(i);
    auto dst = out.pixels.row(i);
    const long sy = ((dy[i] % h) + h) % h;
    const long sx = ((dx[i] % w) + w) % w;
    for (long r = 0; r < h; ++r) {
      const long tr = (r + sy) % h;
      for (long c = 0; c < w; ++c) dst[static_cast<std::size_t>(tr * w + (c + sx) % w)] = src[static_cast<std::size_t>(r * w + c)];
    }
  }
  return out;
}

ImageBatch random_translate(const ImageBatch& batch, double sigma, Stream& stream) {
  if (!(sigma >= 0.0)) throw DomainError("translation scale must be non-negative");
  std::vector<int> dx(batch.count()), dy(batch.count());
  for (std::size_t i = 0; i < batch.count(); ++i) {
    dx[i] = static_cast<int>(std::lround(sigma * stream.normal()));
    dy[i] = static_cast<int>(std::lround(sigma * stream.normal()));
  }
  return shift_images(batch, dx, dy);
}

ImageBatch draw_images(const ImageBatch& pool, std::size_t n, int max_label, Stream& stream) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.count(); ++i) {
    if (pool.labels.empty() || static_cast<int>(pool.labels[i]) <= max_label) eligible.push_back(i);
  }
  if (eligible.empty()) throw DomainError("no images with the requested labels");
  std::vector<std::size_t> pick(n);
  for (auto& k : pick) k = eligible[stream.below(eligible.size())];
  ImageBatch out;
  out.height = pool.height;
  out.width = pool.width;
  out.pixels = pool.pixels.gather(pick);
  if (!pool.labels.empty()) {
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = pool.labels[pick[i]];
  }
  return out;
}

GlyphSurrogate::GlyphSurrogate(GlyphSpec spec) : spec_(spec) {
  if (spec_.side < 4) throw DomainError("glyph side must be at least 4");
  if (spec_.classes < 1 || spec_.classes > 255) throw DomainError("glyph class count must lie in 1..255");
  if (!(spec_.noise > 0.0)) throw DomainError("glyph noise must be positive");
  const std::size_t s = spec_.side;
  prototypes_.assign(static_cast<std::size_t>(spec_.classes) * s * s, 0.0);
  Stream stream(spec_.seed, StreamRole::kAux, 0x6C79);
  const double lo = 1.0;
  const double span = static_cast<double>(s) - 3.0;
  constexpr double kWidth = 0.8;
  for (int k = 0; k < spec_.classes; ++k) {
    double* img = prototypes_.data() + static_cast<std::size_t>(k) * s * s;
    for (int stroke = 0; stroke < 3; ++stroke) {
      const double ax = lo + span * stream.uniform(), ay = lo + span * stream.uniform();
      const double bx = lo + span * stream.uniform(), by = lo + span * stream.uniform();
      const double vx = bx - ax, vy = by - ay;
      const double len2 = std::max(vx * vx + vy * vy, 1e-12);
      for (std::size_t r = 0; r < s; ++r) {
        for (std::size_t c = 0; c < s; ++c) {
          const double px = static_cast<double>(c), py = static_cast<double>(r);
          const double t = std::clamp(((px - ax) * vx + (py - ay) * vy) / len2, 0.0, 1.0);
          const double ex = px - (ax + t * vx), ey = py - (ay + t * vy);
          const double v = std::exp(-(ex * ex + ey * ey) / (2.0 * kWidth * kWidth));
          img[r * s + c] = std::max(img[r * s + c], v);
        }
      }
    }
  }
}

std::span<const double> GlyphSurrogate::prototype(int label) const {
  if (label < 0 || label >= spec_.classes) throw DomainError("glyph label out of range");
  const std::size_t pix = spec_.side * spec_.side;
  return {prototypes_.data() + static_cast<std::size_t>(label) * pix, pix};
}

ImageBatch GlyphSurrogate::sample(std::size_t n, int max_label, Stream& stream) const {
  if (max_label < 0 || max_label >= spec_.classes) throw DomainError("glyph label out of range");
  ImageBatch out;
  out.height = spec_.side;
  out.width = spec_.side;
  out.pixels.resize(n, spec_.side * spec_.side);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(stream.below(static_cast<std::uint64_t>(max_label) + 1));
    out.labels[i] = static_cast<std::uint8_t>(label);
    const auto proto = prototype(label);
    auto row = out.pixels.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = proto[k] + spec_.noise * stream.normal();
  }
  return out;
}

GaussianPairSource::GaussianPairSource(GaussianSpec q, GaussianSpec p) : q_(std::move(q)), p_(std::move(p)) {
  if (q_.dim() != p_.dim()) throw DomainError("Q and P must have the same dimension");
}

SampleMatrix GaussianPairSource::draw_q(std::size_t n, Stream& stream) const { return sample_gaussian(q_, n, stream); }
SampleMatrix GaussianPairSource::draw_p(std::size_t n, Stream& stream) const { return sample_gaussian(p_, n, stream); }

MiPairSource::MiPairSource(MiPairSampler sampler) : sampler_(std::move(sampler)) {
  sampler_.validate();
  if (sampler_.embed) embedding_.emplace(*sampler_.embed, sampler_.d);
}

SampleMatrix MiPairSource::draw_q(std::size_t n, Stream& stream) const {
  SampleMatrix x, y;
  draw_joint(sampler_.d, sampler_.rho, n, stream, x, y);
  if (embedding_) return SampleMatrix::hconcat(embedding_->apply(x), embedding_->apply(y));
  return SampleMatrix::hconcat(x, y);
}

SampleMatrix MiPairSource::draw_p(std::size_t n, Stream& stream) const {
  SampleMatrix x, y;
  draw_joint(sampler_.d, sampler_.rho, n, stream, x, y);
  const auto perm = random_permutation(n, stream);
  const auto yp = y.gather(perm);
  if (embedding_) return SampleMatrix::hconcat(embedding_->apply(x), embedding_->apply(yp));
  return SampleMatrix::hconcat(x, yp);
}

DatasetPairSource::DatasetPairSource(SampleMatrix q, SampleMatrix p) : q_(std::move(q)), p_(std::move(p)) {
  if (q_.cols() != p_.cols()) throw DomainError("Q and P datasets must have the same dimension");
  if (q_.rows() == 0 || p_.rows() == 0) throw DomainError("datasets must be non-empty");
}

namespace {

SampleMatrix draw_rows(const SampleMatrix& pool, std::size_t n, Stream& stream) {
  std::vector<std::size_t> idx(n);
  for (auto& k : idx) k = static_cast<std::size_t>(stream.below(pool.rows()));
  return pool.gather(idx);
}

}  // namespace

SampleMatrix DatasetPairSource::draw_q(std::size_t n, Stream& stream) const { return draw_rows(q_, n, stream); }
SampleMatrix DatasetPairSource::draw_p(std::size_t n, Stream& stream) const { return draw_rows(p_, n, stream); }

}  // namespace divgauge

namespace divgauge {

MiBatch sample_mi_pairs(const MiPairSampler& sampler, std::size_t n, Stream& joint_stream, Stream& product_stream) {
  if (n < 2) throw DomainError("mi batches need at least two rows");
  const MiPairSource source(sampler);
  return {source.draw_q(n, joint_stream), source.draw_p(n, product_stream)};
}

}  // namespace divgauge
