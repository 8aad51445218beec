#include "ltd/cost/cost_model.hpp"

#include <cmath>
#include <stdexcept>

namespace ltd {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void CostModelConfig::validate() const {
  require(finite(draft_fixed) && draft_fixed >= 0.0, "cost_model.draft_fixed must be >= 0");
  require(finite(draft_per_pass) && draft_per_pass > 0.0, "cost_model.draft_per_pass must be > 0");
  require(finite(verify_base) && verify_base > 0.0, "cost_model.verify_base must be > 0");
  require(finite(verify_per_chunk) && verify_per_chunk > 0.0,
          "cost_model.verify_per_chunk must be > 0");
  require(chunk >= 1, "cost_model.chunk must be >= 1");
  require(finite(ctx_coeff) && ctx_coeff >= 0.0, "cost_model.ctx_coeff must be >= 0");
  require(finite(ctx_ref) && ctx_ref > 0.0, "cost_model.ctx_ref must be > 0");
  require(finite(policy_overhead) && policy_overhead >= 0.0,
          "cost_model.policy_overhead must be >= 0");
}

double draft_time(const CostModelConfig& cfg, std::size_t passes) {
  if (passes == 0) return 0.0;
  return cfg.draft_fixed + cfg.draft_per_pass * static_cast<double>(passes);
}

double verify_time(const CostModelConfig& cfg, std::size_t v, std::size_t context_len) {
  if (v < 1) throw std::invalid_argument("verification size must be >= 1");
  const auto chunks = static_cast<double>((v + cfg.chunk - 1) / cfg.chunk);
  const double ctx_scale = 1.0 + cfg.ctx_coeff * static_cast<double>(context_len) / cfg.ctx_ref;
  return (cfg.verify_base + cfg.verify_per_chunk * chunks) * ctx_scale;
}

CostModelConfig calibrated_cost_model() { return CostModelConfig{}; }

}  // namespace ltd
