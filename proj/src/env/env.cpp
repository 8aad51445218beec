#include "ltd/env/env.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace ltd {

DecodeMode parse_decode_mode(std::string_view s) {
  if (s == "greedy") return DecodeMode::kGreedy;
  if (s == "sampling") return DecodeMode::kSampling;
  throw std::invalid_argument("unknown decode mode: " + std::string(s));
}

std::string_view to_string(DecodeMode m) {
  return m == DecodeMode::kGreedy ? "greedy" : "sampling";
}

RewardMode parse_reward_mode(std::string_view s) {
  if (s == "throughput") return RewardMode::kThroughput;
  if (s == "acceptance_length") return RewardMode::kAcceptanceLength;
  if (s == "time_cost") return RewardMode::kTimeCost;
  throw std::invalid_argument("unknown reward mode: " + std::string(s));
}

std::string_view to_string(RewardMode m) {
  switch (m) {
    case RewardMode::kThroughput: return "throughput";
    case RewardMode::kAcceptanceLength: return "acceptance_length";
    case RewardMode::kTimeCost: return "time_cost";
  }
  return "throughput";
}

ObsFeatures parse_obs_features(std::string_view s) {
  if (s == "P+D+L") return {true, true};
  if (s == "P+L") return {false, true};
  if (s == "P+D") return {true, false};
  if (s == "P") return {false, false};
  throw std::invalid_argument("unknown observation variant: " + std::string(s));
}

std::string to_string(ObsFeatures f) {
  std::string s = "P";
  if (f.depth) s += "+D";
  if (f.length) s += "+L";
  return s;
}

void EnvConfig::validate() const {
  draft.validate();
  cost.validate();
  if (max_new_tokens < 2) throw std::invalid_argument("env.max_new_tokens must be >= 2");
  if (v_min < 1 || v_max < v_min) throw std::invalid_argument("env V range is empty");
  if (v_steps < 2 || (v_max - v_min) % (v_steps - 1) != 0) {
    throw std::invalid_argument("env V grid must be linear with integer spacing");
  }
  if (!(reward_scale > 0.0) || !std::isfinite(reward_scale)) {
    throw std::invalid_argument("env.reward_scale must be positive");
  }
  if (l_cap < 1) throw std::invalid_argument("env.l_cap must be >= 1");
  if (mode == DecodeMode::kSampling && !(temperature > 0.0)) {
    throw std::invalid_argument("sampling temperature must be positive");
  }
}

std::size_t EnvConfig::size_action_to_v(int action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= v_steps) {
    throw std::out_of_range("size action out of range");
  }
  return v_min + static_cast<std::size_t>(action) * ((v_max - v_min) / (v_steps - 1));
}

std::size_t EnvConfig::size_obs_dim() const {
  return 2 + candidate_count(draft.beam_width, draft.max_depth);
}

std::size_t EnvConfig::depth_obs_dim() const {
  return 2 + draft.beam_width * draft.beam_width;
}

double reward(const CycleOutcome& o, RewardMode mode, double reward_scale) {
  const double t = o.t_draft + o.t_verify;
  switch (mode) {
    case RewardMode::kThroughput:
      if (!(t > 0.0)) throw std::domain_error("reward: zero cycle time");
      return reward_scale * static_cast<double>(o.accepted) / t;
    case RewardMode::kAcceptanceLength:
      return static_cast<double>(o.accepted);
    case RewardMode::kTimeCost:
      return -t;
  }
  return 0.0;
}

nlohmann::json to_json(const CycleOutcome& c) {
  return {{"L_A", c.accepted},         {"t_draft", c.t_draft},
          {"t_verify", c.t_verify},    {"t_policy", c.t_policy},
          {"t_vanilla", c.t_vanilla},  {"reward", c.reward},
          {"depth", c.depth},          {"v_used", c.v_used},
          {"context_len", c.context_len}, {"depth_queries", c.depth_queries},
          {"size_queries", c.size_queries}, {"ended", c.ended}};
}

CycleOutcome cycle_from_json(const nlohmann::json& j) {
  CycleOutcome c;
  c.accepted = j.at("L_A").get<std::size_t>();
  c.t_draft = j.at("t_draft").get<double>();
  c.t_verify = j.at("t_verify").get<double>();
  c.t_policy = j.at("t_policy").get<double>();
  c.t_vanilla = j.at("t_vanilla").get<double>();
  c.reward = j.at("reward").get<double>();
  c.depth = j.at("depth").get<int>();
  c.v_used = j.at("v_used").get<std::size_t>();
  c.context_len = j.at("context_len").get<std::size_t>();
  c.depth_queries = j.value("depth_queries", std::size_t{0});
  c.size_queries = j.value("size_queries", std::size_t{0});
  c.ended = j.value("ended", false);
  return c;
}

std::vector<TokenId> Episode::output() const {
  std::vector<TokenId> out;
  if (first_token < 0) return out;
  out.reserve(1 + generated.size());
  out.push_back(first_token);
  out.insert(out.end(), generated.begin(), generated.end());
  return out;
}

namespace {

double clip_logp(double s) { return std::max(s, kPadLogProb); }

void fill_header(std::vector<double>& obs, int depth, std::size_t context_len,
                 const EnvConfig& cfg) {
  obs[0] = cfg.obs.depth ? static_cast<double>(depth) / cfg.draft.max_depth : 0.0;
  obs[1] = cfg.obs.length
               ? std::min(static_cast<double>(context_len) / static_cast<double>(cfg.l_cap), 1.0)
               : 0.0;
}

}  // namespace

std::vector<double> build_size_obs(const DraftTree& tree, std::size_t context_len,
                                   const EnvConfig& cfg) {
  std::vector<double> obs(cfg.size_obs_dim(), kPadLogProb);
  fill_header(obs, tree.depth(), context_len, cfg);
  const auto& nodes = tree.nodes();
  const std::size_t n = std::min(nodes.size(), obs.size() - 2);
  for (std::size_t i = 0; i < n; ++i) obs[2 + i] = clip_logp(nodes[i].score);
  return obs;
}

std::vector<double> build_depth_obs(const DraftTree& tree, std::size_t context_len,
                                    const EnvConfig& cfg) {
  std::vector<double> obs(cfg.depth_obs_dim(), kPadLogProb);
  fill_header(obs, tree.depth(), context_len, cfg);
  const auto& pool = tree.last_pool();
  const std::size_t n = std::min(pool.size(), obs.size() - 2);
  for (std::size_t i = 0; i < n; ++i) obs[2 + i] = clip_logp(tree.node(pool[i]).score);
  return obs;
}

namespace {

TokenId next_target_token(const NGramModel& target, std::span<const TokenId> context,
                          DecodeMode mode, double temperature, Rng& rng) {
  if (mode == DecodeMode::kGreedy) return target.greedy_next(context);
  const auto p = target.next_distribution(context, temperature);
  return sample_from(p, rng);
}

using Clock = std::chrono::steady_clock;

double elapsed_us(Clock::time_point since) {
  return std::chrono::duration<double, std::micro>(Clock::now() - since).count();
}

}  // namespace

SpecDecodeEnv::SpecDecodeEnv(std::shared_ptr<const NGramModel> target,
                             std::shared_ptr<const NGramModel> draft, EnvConfig cfg,
                             std::uint64_t seed)
    : target_(std::move(target)), draft_(std::move(draft)), cfg_(std::move(cfg)), rng_(seed) {
  if (!target_ || !draft_) throw std::invalid_argument("env requires target and draft models");
  if (target_->vocab_size() != draft_->vocab_size()) {
    throw std::invalid_argument("target and draft vocabularies differ");
  }
  cfg_.validate();
  episode_.done = true;
}

void SpecDecodeEnv::reset(std::span<const TokenId> prompt) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  episode_ = Episode{};
  episode_.prompt.assign(prompt.begin(), prompt.end());
  committed_ = episode_.prompt;
  const TokenId eos = target_->eos_id();
  if (prompt.back() == eos) {
    episode_.done = true;
    return;
  }
  episode_.first_token = next_target_token(*target_, committed_, cfg_.mode, cfg_.temperature, rng_);
  committed_.push_back(episode_.first_token);
  episode_.done = episode_.first_token == eos;
}

CycleOutcome SpecDecodeEnv::step_cycle(DepthController& depth, SizeController& size) {
  if (episode_.done) throw std::logic_error("step_cycle on a finished episode");
  CycleOutcome out;
  out.context_len = committed_.size();
  const std::span<const TokenId> ctx(committed_);

  auto t0 = Clock::now();
  DraftTree tree = DraftTree::root_only(committed_.back());
  if (depth.begin_cycle(out.context_len, rng_)) {
    tree = DraftTree::init(ctx, *draft_, cfg_.draft);
    while (tree.depth() < cfg_.draft.max_depth) {
      ++out.depth_queries;
      if (!depth.should_continue(DepthQuery{tree, out.context_len, ctx, *draft_}, rng_)) break;
      tree.expand(ctx, *draft_);
    }
  }
  const double wall_draft = elapsed_us(t0);
  out.depth = tree.depth();

  std::size_t v = 1;
  if (tree.depth() >= 2) {
    ++out.size_queries;
    v = size.choose_v(SizeQuery{tree, out.context_len}, rng_);
    if (v < 1 || v > cfg_.v_max) throw std::out_of_range("size controller returned V out of range");
  }
  out.v_used = std::min(v, tree.v_all());

  t0 = Clock::now();
  const CandidateSet cs = CandidateSet::select_top_v(tree, out.v_used);
  VerifyOutcome vo = cfg_.mode == DecodeMode::kGreedy
                         ? verify_greedy(cs, *target_, ctx)
                         : verify_sampling(cs, *target_, ctx, cfg_.temperature, rng_);
  const double wall_verify = elapsed_us(t0);

  const std::size_t room = cfg_.max_new_tokens - 1 - episode_.generated.size();
  bool truncated = false;
  if (vo.accepted_tokens.size() > room) {
    vo.accepted_tokens.resize(room);
    vo.ended = false;
    truncated = true;
  }
  out.accepted = vo.accepted_tokens.size();
  out.ended = vo.ended;

  const std::size_t billed = (depth.billable() ? out.depth_queries : 0) +
                             (size.billable() ? out.size_queries : 0);
  if (cfg_.wall_clock) {
    out.t_draft = wall_draft;
    out.t_verify = wall_verify;
    out.t_policy = 0.0;
    t0 = Clock::now();
    std::vector<TokenId> vctx = committed_;
    for (TokenId t : vo.accepted_tokens) {
      (void)target_->next_distribution(vctx, 1.0);
      vctx.push_back(t);
    }
    out.t_vanilla = elapsed_us(t0);
  } else {
    out.t_draft = draft_time(cfg_.cost, tree.draft_passes());
    out.t_verify = verify_time(cfg_.cost, out.v_used, out.context_len);
    out.t_policy = cfg_.cost.policy_overhead * static_cast<double>(billed);
    for (std::size_t i = 0; i < out.accepted; ++i) {
      out.t_vanilla += vanilla_step_time(cfg_.cost, out.context_len + i);
    }
  }
  out.reward = reward(out, cfg_.reward_mode, cfg_.reward_scale);

  committed_.insert(committed_.end(), vo.accepted_tokens.begin(), vo.accepted_tokens.end());
  episode_.generated.insert(episode_.generated.end(), vo.accepted_tokens.begin(),
                            vo.accepted_tokens.end());
  episode_.cycles.push_back(out);
  episode_.done = vo.ended || truncated || episode_.generated.size() + 1 >= cfg_.max_new_tokens;

  depth.end_cycle(out);
  size.end_cycle(out);
  return out;
}

void SpecDecodeEnv::write_trace(std::ostream& os) const {
  for (std::size_t i = 0; i < episode_.cycles.size(); ++i) {
    nlohmann::json j = to_json(episode_.cycles[i]);
    j["cycle"] = i;
    os << j.dump() << '\n';
  }
}

std::vector<TokenId> vanilla_decode(const NGramModel& target, std::span<const TokenId> prompt,
                                    std::size_t max_new_tokens, DecodeMode mode,
                                    double temperature, Rng& rng) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  std::vector<TokenId> out;
  if (prompt.back() == target.eos_id()) return out;
  std::vector<TokenId> ctx(prompt.begin(), prompt.end());
  while (out.size() < max_new_tokens) {
    const TokenId t = next_target_token(target, ctx, mode, temperature, rng);
    out.push_back(t);
    ctx.push_back(t);
    if (t == target.eos_id()) break;
  }
  return out;
}

}  // namespace ltd
