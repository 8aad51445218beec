#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace ltd::nn {

using Rng = std::mt19937_64;

// Fully connected network: ReLU on hidden layers, linear output. Parameters
// live in one flat vector; layer l stores W_l (out x in, row-major) followed
// by b_l (out).
class Mlp {
 public:
  Mlp() = default;
  // sizes = {input, hidden..., output}
  explicit Mlp(std::vector<std::size_t> sizes);

  // Scaled uniform init, variance gain^2 / fan_in, zero biases.
  void init(Rng& rng, double hidden_gain, double output_gain);

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t layers() const { return sizes_.size() - 1; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  struct Cache {
    std::size_t batch = 0;
    // acts[0] is the input; acts[l + 1] the output of layer l (after ReLU on
    // hidden layers).
    std::vector<std::vector<double>> acts;
    std::span<const double> output() const { return acts.back(); }
  };

  // x is batch x input_dim, row-major.
  void forward(std::span<const double> x, std::size_t batch, Cache& cache) const;
  std::vector<double> forward(std::span<const double> x) const;  // one row
  // Accumulates dLoss/dparams into grad (param_count entries) given dLoss/doutput
  // (batch x output_dim). dx, when non-null, receives dLoss/dinput.
  void backward(const Cache& cache, std::span<const double> dout, std::span<double> grad,
                std::vector<double>* dx = nullptr) const;

  // Binary layout: "LTDMLP01", u64 layer-size count, u64 sizes, u64 param
  // count, f64 params (little-endian, the flat order above).
  void save(std::ostream& os) const;
  static Mlp load(std::istream& is);
  bool operator==(const Mlp& o) const { return sizes_ == o.sizes_ && params_ == o.params_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct Categorical {
  std::vector<double> log_probs;  // log-softmax of the logits

  explicit Categorical(std::span<const double> logits);
  double log_prob(int action) const { return log_probs.at(static_cast<std::size_t>(action)); }
  double prob(int action) const;
  double entropy() const;
  int sample(Rng& rng) const;
  int argmax() const;  // lowest id on ties
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad, double lr);
  std::uint64_t steps() const { return t_; }
  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& v() const { return v_; }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor) against central differences with step h,
// over the given coordinates (every coordinate when empty).
GradCheckResult grad_check(std::vector<double>& params,
                           const std::function<double(const std::vector<double>&)>& loss,
                           std::span<const double> analytic, std::span<const std::size_t> coords,
                           double h = 1e-5, double floor = 1e-6);

}  // namespace ltd::nn
