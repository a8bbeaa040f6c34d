#include "divgauge/function_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "divgauge/errors.hpp"
#include "divgauge/kernels.hpp"

namespace divgauge {

std::size_t MlpSpec::param_count() const {
  std::size_t count = 0;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    count += h * in + h;
    in = h;
  }
  return count + in + 1;
}

std::vector<LayerSlice> layer_layout(const MlpSpec& spec) {
  std::vector<LayerSlice> layout;
  std::size_t in = spec.input_dim;
  std::size_t offset = 0;
  auto push = [&](std::size_t out) {
    layout.push_back({in, out, offset, offset + out * in});
    offset += out * in + out;
    in = out;
  };
  for (std::size_t h : spec.hidden) push(h);
  push(1);
  return layout;
}

double TestFunction::forward(std::span<const double> params, std::span<const double> x) const {
  SampleMatrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  double out = 0.0;
  forward_batch(params, m, {&out, 1});
  return out;
}

ParamVector TestFunction::backward(std::span<const double> params, std::span<const double> x,
                                   double upstream) const {
  SampleMatrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  ParamVector grad(param_count(), 0.0);
  backward_batch(params, m, {&upstream, 1}, grad);
  return grad;
}

Mlp::Mlp(MlpSpec spec, OutputTransform transform, Execution exec)
    : spec_(std::move(spec)), transform_(transform), exec_(exec), layout_(layer_layout(spec_)) {
  if (spec_.input_dim == 0) throw DomainError("network input dimension must be positive");
  for (std::size_t h : spec_.hidden) {
    if (h == 0) throw DomainError("hidden layer widths must be positive");
  }
}

ParamVector Mlp::initial_params(Stream& stream) const {
  ParamVector params(param_count(), 0.0);
  for (const auto& s : layout_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(s.in));
    for (std::size_t k = 0; k < s.out * s.in; ++k) params[s.weight_offset + k] = bound * (2.0 * stream.uniform() - 1.0);
  }
  return params;
}

std::string Mlp::describe() const {
  std::ostringstream os;
  os << "mlp " << spec_.input_dim;
  for (std::size_t h : spec_.hidden) os << "-" << h;
  os << "-1";
  if (transform_ == OutputTransform::kExp) os << " exp";
  if (transform_ == OutputTransform::kNegExp) os << " -exp";
  return os.str();
}

void Mlp::forward_batch(std::span<const double> params, const SampleMatrix& x, std::span<double> out) const {
  if (exec_ == Execution::kSerial) {
    kernels::mlp_forward_serial(spec_, params, x, out);
  } else {
    kernels::mlp_forward_parallel(spec_, params, x, out);
  }
  if (transform_ == OutputTransform::kIdentity) return;
  const double sign = transform_ == OutputTransform::kExp ? 1.0 : -1.0;
  for (double& v : out) v = sign * std::exp(v);
}

void Mlp::backward_batch(std::span<const double> params, const SampleMatrix& x, std::span<const double> upstream,
                         std::span<double> grad) const {
  std::vector<double> scaled(upstream.begin(), upstream.end());
  if (transform_ != OutputTransform::kIdentity) {
    if (upstream.size() != x.rows()) throw DomainError("upstream span has the wrong length");
    std::vector<double> g(x.rows());
    if (exec_ == Execution::kSerial) {
      kernels::mlp_forward_serial(spec_, params, x, g);
    } else {
      kernels::mlp_forward_parallel(spec_, params, x, g);
    }
    const double sign = transform_ == OutputTransform::kExp ? 1.0 : -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) scaled[i] *= sign * std::exp(g[i]);
  }
  if (exec_ == Execution::kSerial) {
    kernels::mlp_backward_serial(spec_, params, x, scaled, grad);
  } else {
    kernels::mlp_backward_parallel(spec_, params, x, scaled, grad);
  }
}

std::size_t gaussian_statistic_count(std::size_t dim) { return dim + dim * (dim + 1) / 2; }

void gaussian_statistics(std::span<const double> x, std::span<double> out) {
  const std::size_t d = x.size();
  if (out.size() != gaussian_statistic_count(d)) throw DomainError("statistic buffer has the wrong length");
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) out[k++] = x[i];
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) out[k++] = x[i] * x[j];
  }
}

Submanifold::Submanifold(SubmanifoldSpec spec) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0) throw DomainError("submanifold input dimension must be positive");
  if (spec_.mode == SubmanifoldMode::kAlphaScale && !spec_.family.is_alpha_like()) {
    throw DomainError("alpha-scale submanifold needs an alpha-type family");
  }
}

ParamVector Submanifold::initial_params(Stream&) const { return ParamVector(param_count(), 0.0); }

std::string Submanifold::describe() const {
  switch (spec_.mode) {
    case SubmanifoldMode::kGeneric:
      return "submanifold generic " + spec_.family.name();
    case SubmanifoldMode::kKlLinear:
      return "submanifold kl-linear";
    case SubmanifoldMode::kAlphaScale:
      return "submanifold alpha-scale " + spec_.family.name();
  }
  return "submanifold";
}

void Submanifold::link(double s, double& phi, double& dphi) const {
  switch (spec_.mode) {
    case SubmanifoldMode::kKlLinear:
      phi = s;
      dphi = 1.0;
      return;
    case SubmanifoldMode::kAlphaScale: {
      const double a = spec_.family.alpha() - 1.0;
      phi = std::exp(a * s);
      dphi = a * phi;
      return;
    }
    case SubmanifoldMode::kGeneric: {
      const double u = std::exp(s);
      if (!(u > 0.0) || !std::isfinite(u)) throw DomainError("generic submanifold left the domain of f'");
      phi = spec_.family.f_prime(u);
      // d/ds f'(e^s) = e^s f''(e^s), with f'' from the derivative of the
      // inverse map: f''(u) = 1 / f*''(f'(u)).
      dphi = u / spec_.family.f_star_d2(phi);
      if (!std::isfinite(phi) || !std::isfinite(dphi)) throw DomainError("generic submanifold left the domain of f'");
      return;
    }
  }
}

void Submanifold::forward_batch(std::span<const double> params, const SampleMatrix& x, std::span<double> out) const {
  if (params.size() != param_count()) throw DomainError("parameter vector has the wrong length");
  if (x.cols() != spec_.input_dim) throw DomainError("sample dimension does not match the submanifold");
  if (out.size() != x.rows()) throw DomainError("output span has the wrong length");
  const std::size_t m = spec_.statistic_count();
  const double offset = spec_.mode == SubmanifoldMode::kGeneric ? params[m] : 0.0;
  std::vector<double> t(m);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    gaussian_statistics(x.row(r), t);
    double s = offset;
    for (std::size_t k = 0; k < m; ++k) s += params[k] * t[k];
    double dphi = 0.0;
    link(s, out[r], dphi);
  }
}

void Submanifold::backward_batch(std::span<const double> params, const SampleMatrix& x,
                                 std::span<const double> upstream, std::span<double> grad) const {
  if (params.size() != param_count() || grad.size() != param_count()) {
    throw DomainError("parameter vector has the wrong length");
  }
  if (x.cols() != spec_.input_dim) throw DomainError("sample dimension does not match the submanifold");
  if (upstream.size() != x.rows()) throw DomainError("upstream span has the wrong length");
  const std::size_t m = spec_.statistic_count();
  const bool generic = spec_.mode == SubmanifoldMode::kGeneric;
  const double offset = generic ? params[m] : 0.0;
  std::vector<double> t(m);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    gaussian_statistics(x.row(r), t);
    double s = offset;
    for (std::size_t k = 0; k < m; ++k) s += params[k] * t[k];
    double phi = 0.0, dphi = 0.0;
    link(s, phi, dphi);
    const double g = upstream[r] * dphi;
    for (std::size_t k = 0; k < m; ++k) grad[k] += g * t[k];
    if (generic) grad[m] += g;
  }
}

namespace {

constexpr char kMagic[4] = {'D', 'G', 'P', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
bool read_le(std::istream& is, T& value) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  std::memcpy(&value, bytes, sizeof(T));
  return true;
}

}  // namespace

void save_params(const std::filesystem::path& path, std::span<const double> params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint64_t>(os, params.size());
  for (double v : params) write_le<double>(os, v);
  if (!os) throw IoError("write failed for " + path.string());
}

ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path.string() + ": not a parameter checkpoint");
  }
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  if (!read_le(is, version) || !read_le(is, count)) throw FormatError(path.string() + ": truncated header");
  if (version != kVersion) throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  is.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(is.tellg());
  if (size != 16 + 8 * count) throw FormatError(path.string() + ": payload length does not match the header");
  is.seekg(16);
  ParamVector params(count);
  for (auto& v : params) {
    if (!read_le(is, v)) throw FormatError(path.string() + ": truncated payload");
  }
  return params;
}

}  // namespace divgauge
