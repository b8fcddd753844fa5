#include "dials/nn/optim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "dials/core/types.hpp"

namespace dials::nn {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

Adam::Adam(int num_params, AdamConfig cfg)
    : cfg_(cfg), m_(Vector::Zero(num_params)), v_(Vector::Zero(num_params)) {}

void Adam::step(Vector& params, const Vector& grad) {
  require(grad.size() == params.size() && params.size() == m_.size(), "adam: size mismatch");
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  if (cfg_.lr == 0.0) return;
  params.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
}

double clip_grad_norm(Vector& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

double gradient_check(const std::function<double(const Vector&)>& loss, const Vector& params, const Vector& analytic,
                      Rng& rng, int max_params, double eps) {
  const int n = static_cast<int>(params.size());
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const int k = std::min(n, max_params);
  for (int j = 0; j < k; ++j) std::swap(idx[j], idx[j + rng.uniform_int(n - j)]);
  double worst = 0.0;
  Vector p = params;
  for (int j = 0; j < k; ++j) {
    const int c = idx[j];
    auto at = [&](double d) {
      p[c] = params[c] + d;
      return loss(p);
    };
    // five-point stencil: O(eps^4) truncation lets eps stay large enough that roundoff is negligible
    const double numeric = (8.0 * (at(eps) - at(-eps)) - (at(2 * eps) - at(-2 * eps))) / (12.0 * eps);
    p[c] = params[c];
    const double denom = std::max({std::abs(analytic[c]), std::abs(numeric), 1e-7});
    worst = std::max(worst, std::abs(analytic[c] - numeric) / denom);
  }
  return worst;
}

namespace {

constexpr char kMagic[8] = {'D', 'I', 'A', 'L', 'S', 'N', 'N', '\0'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(in), "checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Network& net, uint64_t seed) {
  const NetworkSpec& s = net.spec();
  out.write(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kVersion);
  put<uint32_t>(out, static_cast<uint32_t>(s.arch));
  put<uint32_t>(out, static_cast<uint32_t>(s.input));
  put<uint32_t>(out, static_cast<uint32_t>(s.hidden1));
  put<uint32_t>(out, static_cast<uint32_t>(s.hidden2));
  put<uint32_t>(out, static_cast<uint32_t>(s.heads.size()));
  for (int k : s.heads) put<uint32_t>(out, static_cast<uint32_t>(k));
  put<uint32_t>(out, s.value_head ? 1u : 0u);
  put<uint64_t>(out, seed);
  put<uint64_t>(out, static_cast<uint64_t>(net.num_params()));
  out.write(reinterpret_cast<const char*>(net.params().data()), static_cast<std::streamsize>(sizeof(double)) * net.num_params());
  require(static_cast<bool>(out), "checkpoint: write failed");
}

void save_checkpoint_file(const std::string& path, const Network& net, uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "checkpoint: cannot open " + path);
  save_checkpoint(out, net, seed);
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  require(static_cast<bool>(in) && std::memcmp(magic, kMagic, sizeof(magic)) == 0, "checkpoint: bad magic");
  require(get<uint32_t>(in) == kVersion, "checkpoint: unsupported version");
  NetworkSpec s;
  const uint32_t arch = get<uint32_t>(in);
  require(arch <= 1, "checkpoint: unknown architecture tag");
  s.arch = static_cast<Arch>(arch);
  s.input = static_cast<int>(get<uint32_t>(in));
  s.hidden1 = static_cast<int>(get<uint32_t>(in));
  s.hidden2 = static_cast<int>(get<uint32_t>(in));
  const uint32_t heads = get<uint32_t>(in);
  require(heads <= 64, "checkpoint: implausible head count");
  for (uint32_t k = 0; k < heads; ++k) s.heads.push_back(static_cast<int>(get<uint32_t>(in)));
  s.value_head = get<uint32_t>(in) != 0;
  const uint64_t seed = get<uint64_t>(in);
  Network net(s);
  require(get<uint64_t>(in) == static_cast<uint64_t>(net.num_params()), "checkpoint: parameter count does not match the architecture");
  in.read(reinterpret_cast<char*>(net.params().data()), static_cast<std::streamsize>(sizeof(double)) * net.num_params());
  require(static_cast<bool>(in), "checkpoint: truncated parameter array");
  return {std::move(net), seed};
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

uint64_t params_hash(const Vector& params) {
  uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params.data());
  for (size_t k = 0; k < sizeof(double) * static_cast<size_t>(params.size()); ++k) {
    h ^= bytes[k];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dials::nn
