#pragma once

#include <cstddef>

namespace ltd {

// Abstract latency model. Draft time is affine in the number of draft
// passes; verification time steps up every `chunk` tokens and grows linearly
// with context length.
struct CostModelConfig {
  double draft_fixed = 0.05;
  double draft_per_pass = 0.1;
  double verify_base = 0.8;
  double verify_per_chunk = 0.2;
  std::size_t chunk = 32;
  double ctx_coeff = 0.5;  // kappa
  double ctx_ref = 1024.0;
  double policy_overhead = 0.01;

  void validate() const;
  bool operator==(const CostModelConfig&) const = default;
};

double draft_time(const CostModelConfig& cfg, std::size_t passes);
double verify_time(const CostModelConfig& cfg, std::size_t v, std::size_t context_len);
// One vanilla autoregressive step: verify_time with a single token.
inline double vanilla_step_time(const CostModelConfig& cfg, std::size_t context_len) {
  return verify_time(cfg, 1, context_len);
}

// The repository default (see `ltd calibrate`).
CostModelConfig calibrated_cost_model();

}  // namespace ltd
