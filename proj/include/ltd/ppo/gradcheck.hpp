#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ltd/env/env.hpp"
#include "ltd/ppo/policy.hpp"
#include "ltd/ppo/ppo.hpp"

namespace ltd {

struct NetGradCheck {
  std::string net;  // "size/policy", "size/value", "depth/policy", "depth/value"
  std::size_t params = 0;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

// Checks the analytic gradient of the clipped PPO loss against central
// differences for both networks of freshly initialized size and depth
// policies, on a random minibatch with some ratios outside the clip range.
// coords_per_layer weights and as many biases are sampled from every layer.
std::vector<NetGradCheck> gradcheck_policies(const EnvConfig& env, const PolicyArch& arch,
                                             const PpoHyperparams& hp, std::uint64_t seed,
                                             std::size_t batch = 16,
                                             std::size_t coords_per_layer = 24);

}  // namespace ltd
