#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltd/cost/cost_model.hpp"
#include "ltd/draft/draft_tree.hpp"
#include "ltd/lm/ngram.hpp"
#include "ltd/verify/verifier.hpp"

namespace ltd {

enum class DecodeMode { kGreedy, kSampling };
enum class RewardMode { kThroughput, kAcceptanceLength, kTimeCost };

DecodeMode parse_decode_mode(std::string_view s);
std::string_view to_string(DecodeMode m);
RewardMode parse_reward_mode(std::string_view s);
std::string_view to_string(RewardMode m);

// Which scalar features accompany the log-probabilities in an observation.
// Disabled features are zeroed, so the vector length never changes.
struct ObsFeatures {
  bool depth = true;
  bool length = true;
  bool operator==(const ObsFeatures&) const = default;
};
ObsFeatures parse_obs_features(std::string_view s);  // "P+D+L", "P+L", "P+D"
std::string to_string(ObsFeatures f);

inline constexpr double kPadLogProb = -20.0;

struct EnvConfig {
  DraftConfig draft;
  CostModelConfig cost;
  std::size_t max_new_tokens = 128;
  std::size_t v_min = 20;
  std::size_t v_max = 240;
  std::size_t v_steps = 12;
  double reward_scale = 0.5;
  std::size_t l_cap = 2048;
  DecodeMode mode = DecodeMode::kGreedy;
  double temperature = 1.0;
  RewardMode reward_mode = RewardMode::kThroughput;
  ObsFeatures obs = {};
  bool wall_clock = false;  // profile real elapsed time instead of the cost model

  void validate() const;
  // Size-policy action a in [0, v_steps) -> V, linear from v_min to v_max.
  std::size_t size_action_to_v(int action) const;
  std::size_t size_obs_dim() const;
  std::size_t depth_obs_dim() const;
};

struct CycleOutcome {
  std::size_t accepted = 0;  // L_A
  double t_draft = 0.0;
  double t_verify = 0.0;
  double t_policy = 0.0;   // billed policy queries, outside the reward
  double t_vanilla = 0.0;  // cost of producing the same tokens one by one
  double reward = 0.0;
  int depth = 1;
  std::size_t v_used = 1;
  std::size_t context_len = 0;
  std::size_t depth_queries = 0;
  std::size_t size_queries = 0;
  bool ended = false;

  double total_time() const { return t_draft + t_verify + t_policy; }
};

// Per-cycle reward; throws on a zero time denominator.
double reward(const CycleOutcome& outcome, RewardMode mode, double reward_scale);

nlohmann::json to_json(const CycleOutcome& c);
CycleOutcome cycle_from_json(const nlohmann::json& j);

// The first generated token comes from reset (it is the first tree root);
// every later one is committed by a cycle. max_new_tokens bounds the whole
// output, first token included.
struct Episode {
  std::vector<TokenId> prompt;
  TokenId first_token = -1;  // -1 when the prompt already ends at eos
  std::vector<TokenId> generated;
  std::vector<CycleOutcome> cycles;
  bool done = false;

  std::vector<TokenId> output() const;
};

struct DepthQuery {
  const DraftTree& tree;
  std::size_t context_len;
  std::span<const TokenId> context;  // committed tokens, root last
  const NGramModel& draft;
};

struct SizeQuery {
  const DraftTree& tree;
  std::size_t context_len;
};

class DepthController {
 public:
  virtual ~DepthController() = default;
  // Called at the start of a cycle; false means no speculation (D = 1).
  virtual bool begin_cycle(std::size_t /*context_len*/, Rng& /*rng*/) { return true; }
  // Asked after every draft pass while D < D_max.
  virtual bool should_continue(const DepthQuery& q, Rng& rng) = 0;
  virtual void end_cycle(const CycleOutcome& /*outcome*/) {}
  virtual void begin_episode() {}
  // Queries of billable controllers are charged policy_overhead each.
  virtual bool billable() const { return false; }
};

class SizeController {
 public:
  virtual ~SizeController() = default;
  virtual std::size_t choose_v(const SizeQuery& q, Rng& rng) = 0;
  virtual void end_cycle(const CycleOutcome& /*outcome*/) {}
  virtual void begin_episode() {}
  virtual bool billable() const { return false; }
};

// Fixed-length layouts: [D_norm, L_norm, scores..., PAD...].
std::vector<double> build_size_obs(const DraftTree& tree, std::size_t context_len,
                                   const EnvConfig& cfg);
std::vector<double> build_depth_obs(const DraftTree& tree, std::size_t context_len,
                                    const EnvConfig& cfg);

// Draft-and-verify simulator over a target/draft model pair.
class SpecDecodeEnv {
 public:
  SpecDecodeEnv(std::shared_ptr<const NGramModel> target, std::shared_ptr<const NGramModel> draft,
                EnvConfig cfg, std::uint64_t seed);

  void reset(std::span<const TokenId> prompt);
  void reseed(std::uint64_t seed) { rng_.seed(seed); }
  bool done() const { return episode_.done; }
  CycleOutcome step_cycle(DepthController& depth, SizeController& size);

  const Episode& episode() const { return episode_; }
  const EnvConfig& config() const { return cfg_; }
  const NGramModel& target() const { return *target_; }
  const NGramModel& draft() const { return *draft_; }
  std::size_t context_len() const { return committed_.size(); }
  // prompt + first token + generated
  std::span<const TokenId> committed() const { return committed_; }
  Rng& rng() { return rng_; }

  void write_trace(std::ostream& os) const;  // JSON lines, one cycle each

 private:
  std::shared_ptr<const NGramModel> target_;
  std::shared_ptr<const NGramModel> draft_;
  EnvConfig cfg_;
  Rng rng_;
  Episode episode_;
  std::vector<TokenId> committed_;
};

// Plain autoregressive decoding with the target, for output comparisons.
std::vector<TokenId> vanilla_decode(const NGramModel& target, std::span<const TokenId> prompt,
                                    std::size_t max_new_tokens, DecodeMode mode,
                                    double temperature, Rng& rng);

}  // namespace ltd
