#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ltd/env/env.hpp"
#include "ltd/nn/mlp.hpp"

namespace ltd {

enum class PolicyKind { kSize, kDepth };
std::string_view to_string(PolicyKind k);
PolicyKind parse_policy_kind(std::string_view s);

struct PolicyArch {
  std::vector<std::size_t> size_policy_hidden = {1024, 256};
  std::vector<std::size_t> size_value_hidden = {1024, 256};
  std::vector<std::size_t> depth_policy_hidden = {1024};
  std::vector<std::size_t> depth_value_hidden = {1024, 256};
};

// Policy and value networks plus the observation settings they were trained
// with. Actions: size -> index into the V grid, depth -> 0 STOP / 1 CONTINUE.
struct PolicyCheckpoint {
  PolicyKind kind = PolicyKind::kSize;
  ObsFeatures obs;
  nn::Mlp policy;
  nn::Mlp value;

  std::size_t obs_dim() const { return policy.input_dim(); }
  std::size_t action_count() const { return policy.output_dim(); }

  // "LTDPOL01", u8 kind, u8 depth feature, u8 length feature, then the
  // policy and value networks in the Mlp layout.
  void save(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;
  static PolicyCheckpoint load(std::istream& is);
  static PolicyCheckpoint load(const std::filesystem::path& path);
  bool operator==(const PolicyCheckpoint& o) const {
    return kind == o.kind && obs == o.obs && policy == o.policy && value == o.value;
  }
};

// Network input for an observation: the two scalar features pass through,
// log-probability entries map to 1 + logp / 20 so padding becomes 0.
std::vector<double> network_input(std::span<const double> obs);

inline constexpr int kDepthStop = 0;
inline constexpr int kDepthContinue = 1;

PolicyCheckpoint make_policy(PolicyKind kind, const EnvConfig& env, const PolicyArch& arch,
                             nn::Rng& rng);

// Receives every decision a learned controller makes while collecting a rollout.
class DecisionSink {
 public:
  virtual ~DecisionSink() = default;
  virtual void on_decision(std::span<const double> obs, int action, double log_prob) = 0;
  virtual void on_cycle_end(const CycleOutcome& outcome) = 0;
};

// Stochastic while a sink is attached, argmax otherwise.
class LearnedDepth final : public DepthController {
 public:
  LearnedDepth(const PolicyCheckpoint& ckpt, const EnvConfig& env, DecisionSink* sink = nullptr);
  bool should_continue(const DepthQuery& q, Rng& rng) override;
  void end_cycle(const CycleOutcome& outcome) override;
  bool billable() const override { return true; }

 private:
  const PolicyCheckpoint* ckpt_;
  EnvConfig env_;
  DecisionSink* sink_;
};

class LearnedSize final : public SizeController {
 public:
  LearnedSize(const PolicyCheckpoint& ckpt, const EnvConfig& env, DecisionSink* sink = nullptr);
  std::size_t choose_v(const SizeQuery& q, Rng& rng) override;
  void end_cycle(const CycleOutcome& outcome) override;
  bool billable() const override { return true; }

 private:
  const PolicyCheckpoint* ckpt_;
  EnvConfig env_;
  DecisionSink* sink_;
};

}  // namespace ltd
