#include "ltd/nn/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "ltd/simd/kernels.hpp"

namespace ltd::nn {

using simd::Trans;

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp needs at least input and output sizes");
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw std::invalid_argument("mlp layer of size 0");
    offsets_.push_back(off);
    off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(off, 0.0);
}

void Mlp::init(Rng& rng, double hidden_gain, double output_gain) {
  for (std::size_t l = 0; l < layers(); ++l) {
    const double gain = l + 1 == layers() ? output_gain : hidden_gain;
    const double a = gain * std::sqrt(3.0 / static_cast<double>(sizes_[l]));
    const std::size_t n = sizes_[l] * sizes_[l + 1];
    double* w = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      w[i] = (2.0 * u - 1.0) * a;
    }
    std::fill_n(params_.data() + bias_offset(l), sizes_[l + 1], 0.0);
  }
}

namespace {

constexpr std::size_t kInputBlock = 256;

// rows[b] = 1 + the last row index with a nonzero entry at column >= b * 256
// (0 when there is none).
std::vector<std::size_t> rows_reaching(const std::vector<double>& x, std::size_t batch,
                                       std::size_t in) {
  std::vector<std::size_t> rows((in + kInputBlock - 1) / kInputBlock, 0);
  for (std::size_t r = 0; r < batch; ++r) {
    const double* row = x.data() + r * in;
    std::size_t len = in;
    while (len > 0 && row[len - 1] == 0.0) --len;
    for (std::size_t b = 0; b * kInputBlock < len; ++b) rows[b] = r + 1;
  }
  return rows;
}

}  // namespace

void Mlp::forward(std::span<const double> x, std::size_t batch, Cache& cache) const {
  if (x.size() != batch * input_dim()) throw std::invalid_argument("mlp input shape mismatch");
  const auto& k = simd::active();
  cache.batch = batch;
  cache.acts.resize(sizes_.size());
  cache.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers(); ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    auto& y = cache.acts[l + 1];
    y.resize(batch * out);
    const double* b = params_.data() + bias_offset(l);
    for (std::size_t r = 0; r < batch; ++r) std::copy_n(b, out, y.data() + r * out);
    const double* w = params_.data() + offsets_[l];
    if (l == 0) {
      // Padded observations end in zeros: each column block only needs the
      // rows up to the last one with a nonzero entry in or after it.
      const auto rows = rows_reaching(cache.acts[0], batch, in);
      for (std::size_t c0 = 0; c0 < in; c0 += kInputBlock) {
        const std::size_t m = rows[c0 / kInputBlock];
        if (m == 0) break;
        const std::size_t kc = std::min(kInputBlock, in - c0);
        k.gemm(Trans::kNo, Trans::kYes, m, out, kc, 1.0, cache.acts[0].data() + c0, in, w + c0,
               in, 1.0, y.data(), out);
      }
    } else {
      k.gemm(Trans::kNo, Trans::kYes, batch, out, in, 1.0, cache.acts[l].data(), in, w, in, 1.0,
             y.data(), out);
    }
    if (l + 1 < layers()) {
      for (double& v : y) v = v > 0.0 ? v : 0.0;
    }
  }
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Cache cache;
  forward(x, 1, cache);
  return std::move(cache.acts.back());
}

void Mlp::backward(const Cache& cache, std::span<const double> dout, std::span<double> grad,
                   std::vector<double>* dx) const {
  const std::size_t batch = cache.batch;
  if (dout.size() != batch * output_dim()) throw std::invalid_argument("mlp gradient shape mismatch");
  if (grad.size() != params_.size()) throw std::invalid_argument("mlp grad buffer size mismatch");
  const auto& k = simd::active();
  std::vector<double> delta(dout.begin(), dout.end());
  std::vector<double> prev;
  for (std::size_t l = layers(); l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const auto& x = cache.acts[l];
    // dW += delta^T x, db += column sums of delta
    if (l == 0) {
      const auto rows = rows_reaching(x, batch, in);
      for (std::size_t c0 = 0; c0 < in; c0 += kInputBlock) {
        const std::size_t m = rows[c0 / kInputBlock];
        if (m == 0) break;
        const std::size_t kc = std::min(kInputBlock, in - c0);
        k.gemm(Trans::kYes, Trans::kNo, out, kc, m, 1.0, delta.data(), out, x.data() + c0, in,
               1.0, grad.data() + offsets_[l] + c0, in);
      }
    } else {
      k.gemm(Trans::kYes, Trans::kNo, out, in, batch, 1.0, delta.data(), out, x.data(), in, 1.0,
             grad.data() + offsets_[l], in);
    }
    double* db = grad.data() + bias_offset(l);
    for (std::size_t r = 0; r < batch; ++r) k.axpy(1.0, delta.data() + r * out, db, out);
    if (l == 0 && dx == nullptr) break;
    prev.assign(batch * in, 0.0);
    k.gemm(Trans::kNo, Trans::kNo, batch, in, out, 1.0, delta.data(), out,
           params_.data() + offsets_[l], in, 0.0, prev.data(), in);
    if (l > 0) {
      for (std::size_t i = 0; i < prev.size(); ++i) {
        if (!(x[i] > 0.0)) prev[i] = 0.0;
      }
    }
    delta.swap(prev);
  }
  if (dx != nullptr) *dx = std::move(delta);
}

namespace {

constexpr char kMlpMagic[8] = {'L', 'T', 'D', 'M', 'L', 'P', '0', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw std::runtime_error("mlp checkpoint truncated");
  }
  return v;
}

}  // namespace

void Mlp::save(std::ostream& os) const {
  os.write(kMlpMagic, sizeof kMlpMagic);
  put<std::uint64_t>(os, sizes_.size());
  for (std::size_t s : sizes_) put<std::uint64_t>(os, s);
  put<std::uint64_t>(os, params_.size());
  os.write(reinterpret_cast<const char*>(params_.data()),
           static_cast<std::streamsize>(params_.size() * sizeof(double)));
}

Mlp Mlp::load(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMlpMagic, sizeof magic) != 0) {
    throw std::runtime_error("mlp checkpoint: bad magic");
  }
  const auto n = get<std::uint64_t>(is);
  if (n < 2 || n > 64) throw std::runtime_error("mlp checkpoint: bad layer count");
  std::vector<std::size_t> sizes(n);
  for (auto& s : sizes) s = get<std::uint64_t>(is);
  Mlp m(std::move(sizes));
  if (get<std::uint64_t>(is) != m.params_.size()) {
    throw std::runtime_error("mlp checkpoint: parameter count mismatch");
  }
  if (!is.read(reinterpret_cast<char*>(m.params_.data()),
               static_cast<std::streamsize>(m.params_.size() * sizeof(double)))) {
    throw std::runtime_error("mlp checkpoint truncated");
  }
  return m;
}

Categorical::Categorical(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("categorical needs at least one logit");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);
  log_probs.reserve(logits.size());
  for (double l : logits) log_probs.push_back(l - lse);
}

double Categorical::prob(int action) const { return std::exp(log_prob(action)); }

double Categorical::entropy() const {
  double h = 0.0;
  for (double lp : log_probs) h -= std::exp(lp) * lp;
  return h;
}

int Categorical::sample(Rng& rng) const {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    acc += std::exp(log_probs[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return argmax();
}

int Categorical::argmax() const {
  return static_cast<int>(std::max_element(log_probs.begin(), log_probs.end()) - log_probs.begin());
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("adam buffer size mismatch");
  }
  ++t_;
  const double t = static_cast<double>(t_);
  simd::AdamCoeffs c;
  c.beta1 = beta1_;
  c.beta2 = beta2_;
  c.eps = eps_;
  c.step_size = lr / (1.0 - std::pow(beta1_, t));
  c.inv_sqrt_bc2 = 1.0 / std::sqrt(1.0 - std::pow(beta2_, t));
  simd::active().adam(params.data(), grad.data(), m_.data(), v_.data(), params.size(), c);
}

GradCheckResult grad_check(std::vector<double>& params,
                           const std::function<double(const std::vector<double>&)>& loss,
                           std::span<const double> analytic, std::span<const std::size_t> coords,
                           double h, double floor) {
  if (analytic.size() != params.size()) throw std::invalid_argument("grad_check size mismatch");
  GradCheckResult r;
  auto check = [&](std::size_t i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss(params);
    params[i] = saved - h;
    const double down = loss(params);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (!(rel <= r.max_rel_error)) {
      r.max_rel_error = std::isnan(rel) ? std::numeric_limits<double>::infinity() : rel;
      r.worst_index = i;
    }
    ++r.checked;
  };
  if (coords.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) check(i);
  } else {
    for (std::size_t i : coords) check(i);
  }
  return r;
}

}  // namespace ltd::nn
