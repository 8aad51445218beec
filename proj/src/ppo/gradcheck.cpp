#include "ltd/ppo/gradcheck.hpp"

#include <random>

namespace ltd {

namespace {

std::vector<std::size_t> sample_coords(const nn::Mlp& net, std::size_t per_layer, nn::Rng& rng) {
  std::vector<std::size_t> coords;
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const std::size_t w0 = net.weight_offset(l), b0 = net.bias_offset(l);
    const std::size_t nw = b0 - w0, nb = net.sizes()[l + 1];
    for (std::size_t i = 0; i < per_layer; ++i) {
      coords.push_back(w0 + rng() % nw);
      coords.push_back(b0 + rng() % nb);
    }
  }
  return coords;
}

void check_kind(PolicyKind kind, const EnvConfig& env, const PolicyArch& arch,
                const PpoHyperparams& hp, std::uint64_t seed, std::size_t batch,
                std::size_t per_layer, std::vector<NetGradCheck>& out) {
  nn::Rng rng(seed);
  PolicyCheckpoint nets = make_policy(kind, env, arch, rng);
  const std::size_t dim = nets.obs_dim();
  const std::size_t na = nets.action_count();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> obs(batch * dim), old_logp(batch), adv(batch), ret(batch);
  std::vector<int> actions(batch);
  for (double& x : obs) x = unit(rng);
  for (std::size_t i = 0; i < batch; ++i) {
    actions[i] = static_cast<int>(rng() % na);
    const std::span<const double> row(obs.data() + i * dim, dim);
    const nn::Categorical dist(nets.policy.forward(row));
    // Offsets up to +-0.5 in log space put some ratios outside 1 +- clip.
    old_logp[i] = dist.log_prob(actions[i]) + (unit(rng) - 0.5);
    adv[i] = 2.0 * unit(rng) - 1.0;
    ret[i] = 2.0 * unit(rng) - 1.0;
  }
  const MinibatchView mb{obs, actions, old_logp, adv, ret};
  std::vector<double> pg(nets.policy.param_count(), 0.0), vg(nets.value.param_count(), 0.0);
  ppo_loss(nets.policy, nets.value, mb, hp, pg, vg);
  auto loss = [&](const std::vector<double>&) {
    return ppo_loss(nets.policy, nets.value, mb, hp, {}, {}).total;
  };
  const std::string prefix(to_string(kind));
  for (int which = 0; which < 2; ++which) {
    nn::Mlp& net = which == 0 ? nets.policy : nets.value;
    const auto coords = sample_coords(net, per_layer, rng);
    const auto r = nn::grad_check(net.params(), loss, which == 0 ? pg : vg, coords);
    out.push_back({prefix + (which == 0 ? "/policy" : "/value"), net.param_count(), r.checked,
                   r.max_rel_error});
  }
}

}  // namespace

std::vector<NetGradCheck> gradcheck_policies(const EnvConfig& env, const PolicyArch& arch,
                                             const PpoHyperparams& hp, std::uint64_t seed,
                                             std::size_t batch, std::size_t coords_per_layer) {
  std::vector<NetGradCheck> out;
  check_kind(PolicyKind::kSize, env, arch, hp, seed, batch, coords_per_layer, out);
  check_kind(PolicyKind::kDepth, env, arch, hp, seed + 1, batch, coords_per_layer, out);
  return out;
}

}  // namespace ltd
