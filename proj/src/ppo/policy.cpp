#include "ltd/ppo/policy.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ltd {

std::string_view to_string(PolicyKind k) { return k == PolicyKind::kSize ? "size" : "depth"; }

PolicyKind parse_policy_kind(std::string_view s) {
  if (s == "size") return PolicyKind::kSize;
  if (s == "depth") return PolicyKind::kDepth;
  throw std::invalid_argument("unknown policy kind: " + std::string(s));
}

namespace {

constexpr char kPolicyMagic[8] = {'L', 'T', 'D', 'P', 'O', 'L', '0', '1'};

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

void PolicyCheckpoint::save(std::ostream& os) const {
  os.write(kPolicyMagic, sizeof kPolicyMagic);
  const char flags[3] = {static_cast<char>(kind == PolicyKind::kSize ? 0 : 1),
                         static_cast<char>(obs.depth), static_cast<char>(obs.length)};
  os.write(flags, sizeof flags);
  policy.save(os);
  value.save(os);
}

void PolicyCheckpoint::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  save(os);
}

PolicyCheckpoint PolicyCheckpoint::load(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kPolicyMagic, sizeof magic) != 0) {
    throw std::runtime_error("policy checkpoint: bad magic");
  }
  char flags[3];
  if (!is.read(flags, sizeof flags)) throw std::runtime_error("policy checkpoint truncated");
  if (flags[0] != 0 && flags[0] != 1) throw std::runtime_error("policy checkpoint: bad kind");
  PolicyCheckpoint c;
  c.kind = flags[0] == 0 ? PolicyKind::kSize : PolicyKind::kDepth;
  c.obs = {flags[1] != 0, flags[2] != 0};
  c.policy = nn::Mlp::load(is);
  c.value = nn::Mlp::load(is);
  if (c.value.input_dim() != c.policy.input_dim() || c.value.output_dim() != 1) {
    throw std::runtime_error("policy checkpoint: value network shape mismatch");
  }
  return c;
}

PolicyCheckpoint PolicyCheckpoint::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return load(is);
}

PolicyCheckpoint make_policy(PolicyKind kind, const EnvConfig& env, const PolicyArch& arch,
                             nn::Rng& rng) {
  PolicyCheckpoint c;
  c.kind = kind;
  c.obs = env.obs;
  const bool size = kind == PolicyKind::kSize;
  const std::size_t in = size ? env.size_obs_dim() : env.depth_obs_dim();
  const std::size_t actions = size ? env.v_steps : 2;
  c.policy = nn::Mlp(layer_sizes(in, size ? arch.size_policy_hidden : arch.depth_policy_hidden,
                                 actions));
  c.value = nn::Mlp(layer_sizes(in, size ? arch.size_value_hidden : arch.depth_value_hidden, 1));
  const double sqrt2 = std::sqrt(2.0);
  c.policy.init(rng, sqrt2, 0.01);
  c.value.init(rng, sqrt2, 1.0);
  return c;
}

std::vector<double> network_input(std::span<const double> obs) {
  std::vector<double> x(obs.begin(), obs.end());
  for (std::size_t i = 2; i < x.size(); ++i) x[i] = 1.0 - x[i] / kPadLogProb;
  return x;
}

namespace {

void check_compatible(const PolicyCheckpoint& c, PolicyKind kind, std::size_t dim,
                      std::size_t actions) {
  if (c.kind != kind) throw std::invalid_argument("checkpoint holds the wrong policy kind");
  if (c.obs_dim() != dim || c.action_count() != actions) {
    throw std::invalid_argument("checkpoint shape does not match the environment");
  }
}

}  // namespace

LearnedDepth::LearnedDepth(const PolicyCheckpoint& ckpt, const EnvConfig& env, DecisionSink* sink)
    : ckpt_(&ckpt), env_(env), sink_(sink) {
  env_.obs = ckpt.obs;
  check_compatible(ckpt, PolicyKind::kDepth, env_.depth_obs_dim(), 2);
}

bool LearnedDepth::should_continue(const DepthQuery& q, Rng& rng) {
  const auto obs = network_input(build_depth_obs(q.tree, q.context_len, env_));
  const nn::Categorical dist(ckpt_->policy.forward(obs));
  const int a = sink_ != nullptr ? dist.sample(rng) : dist.argmax();
  if (sink_ != nullptr) sink_->on_decision(obs, a, dist.log_prob(a));
  return a == kDepthContinue;
}

void LearnedDepth::end_cycle(const CycleOutcome& outcome) {
  if (sink_ != nullptr) sink_->on_cycle_end(outcome);
}

LearnedSize::LearnedSize(const PolicyCheckpoint& ckpt, const EnvConfig& env, DecisionSink* sink)
    : ckpt_(&ckpt), env_(env), sink_(sink) {
  env_.obs = ckpt.obs;
  check_compatible(ckpt, PolicyKind::kSize, env_.size_obs_dim(), env_.v_steps);
}

std::size_t LearnedSize::choose_v(const SizeQuery& q, Rng& rng) {
  const auto obs = network_input(build_size_obs(q.tree, q.context_len, env_));
  const nn::Categorical dist(ckpt_->policy.forward(obs));
  const int a = sink_ != nullptr ? dist.sample(rng) : dist.argmax();
  if (sink_ != nullptr) sink_->on_decision(obs, a, dist.log_prob(a));
  return env_.size_action_to_v(a);
}

void LearnedSize::end_cycle(const CycleOutcome& outcome) {
  if (sink_ != nullptr) sink_->on_cycle_end(outcome);
}

}  // namespace ltd
