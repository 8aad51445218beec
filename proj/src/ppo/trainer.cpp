#include "ltd/ppo/trainer.hpp"

#include <ostream>
#include <stdexcept>

#include "ltd/baselines/heuristics.hpp"
#include "ltd/util/text_io.hpp"

namespace ltd {

TrainConfig::TrainConfig() {
  size_hp.gamma = 0.9;
  size_hp.total_steps = 20000;
  depth_hp.gamma = 0.999;
  depth_hp.total_steps = 100000;
}

void TrainConfig::validate() const {
  size_hp.validate();
  depth_hp.validate();
  if (iter_size_steps == 0 || iter_depth_steps == 0) {
    throw std::invalid_argument("train iterate budgets must be positive");
  }
  if (init_depth_min < 1 || init_depth_max > 12 || init_depth_min > init_depth_max) {
    throw std::invalid_argument("train initial depth range must lie in [1, 12]");
  }
  if (val_depth < 1 || val_depth > 12 || init_v < 1 || val_v < 1) {
    throw std::invalid_argument("train counterparts are out of range");
  }
}

void write_curve_csv(const std::vector<CurveRow>& curve, std::ostream& os) {
  os << "update,steps,lr,mean_reward,episodes,val_speedup,val_tau,policy_loss,value_loss,"
        "entropy,clip_fraction,approx_kl,grad_norm\n";
  for (const CurveRow& r : curve) {
    os << r.update << ',' << r.steps << ',' << format_double(r.lr) << ','
       << format_double(r.mean_reward) << ',' << r.episodes << ','
       << format_double(r.val_speedup) << ',' << format_double(r.val_tau) << ','
       << format_double(r.policy_loss) << ',' << format_double(r.value_loss) << ','
       << format_double(r.entropy) << ',' << format_double(r.clip_fraction) << ','
       << format_double(r.approx_kl) << ',' << format_double(r.grad_norm) << '\n';
  }
}

nlohmann::json to_json(const CurveRow& r) {
  return {{"update", r.update},         {"steps", r.steps},
          {"lr", r.lr},                 {"mean_reward", r.mean_reward},
          {"episodes", r.episodes},     {"val_speedup", r.val_speedup},
          {"val_tau", r.val_tau},       {"policy_loss", r.policy_loss},
          {"value_loss", r.value_loss}, {"entropy", r.entropy},
          {"clip_fraction", r.clip_fraction}, {"approx_kl", r.approx_kl},
          {"grad_norm", r.grad_norm}};
}

nlohmann::json to_json(const PpoHyperparams& hp) {
  return {{"clip", hp.clip},
          {"gamma", hp.gamma},
          {"gae_lambda", hp.gae_lambda},
          {"epochs", hp.epochs},
          {"rollout_steps", hp.rollout_steps},
          {"minibatch", hp.minibatch},
          {"entropy_coef", hp.entropy_coef},
          {"value_coef", hp.value_coef},
          {"max_grad_norm", hp.max_grad_norm},
          {"lr_peak", hp.lr_peak},
          {"warmup_frac", hp.warmup_frac},
          {"total_steps", hp.total_steps},
          {"continuing", hp.continuing},
          {"center_rewards", hp.center_rewards}};
}

namespace {

// Records learner decisions; the cycle reward goes to the last decision the
// cycle recorded. Once the buffer is full the next decision is kept only as
// the bootstrap observation.
class Collector final : public DecisionSink {
 public:
  explicit Collector(RolloutBuffer& buf) : buf_(buf) {}

  void start_episode() {
    pending_start_ = true;
    ++episodes_;
  }

  void on_decision(std::span<const double> obs, int action, double log_prob) override {
    if (!buf_.full()) {
      buf_.add(obs, action, log_prob, pending_start_);
      pending_start_ = false;
      last_in_cycle_ = static_cast<long>(buf_.size()) - 1;
    } else {
      if (!have_bootstrap_) bootstrap_obs_.assign(obs.begin(), obs.end());
      have_bootstrap_ = true;
      last_in_cycle_ = -1;
    }
  }

  void on_cycle_end(const CycleOutcome& outcome) override {
    if (last_in_cycle_ >= 0) {
      buf_.set_reward(static_cast<std::size_t>(last_in_cycle_), outcome.reward);
      buf_.mark_cycle_end(static_cast<std::size_t>(last_in_cycle_));
      reward_sum_ += outcome.reward;
    }
    last_in_cycle_ = -1;
  }

  bool have_bootstrap() const { return have_bootstrap_; }
  const std::vector<double>& bootstrap_obs() const { return bootstrap_obs_; }
  std::size_t episodes() const { return episodes_; }
  double reward_sum() const { return reward_sum_; }

 private:
  RolloutBuffer& buf_;
  bool pending_start_ = true;
  long last_in_cycle_ = -1;
  bool have_bootstrap_ = false;
  std::vector<double> bootstrap_obs_;
  std::size_t episodes_ = 0;
  double reward_sum_ = 0.0;
};

struct StageHooks {
  // Builds the learner's controller pair around the sink, or (sink == nullptr)
  // the argmax pair used for validation, and runs fn with it.
  std::function<void(const PolicyCheckpoint&, DecisionSink*, const std::function<void(Controllers)>&)>
      with_controllers;
};

StageResult run_stage(const std::string& name, const Workload& w, const EnvConfig& env,
                      const PpoHyperparams& hp, PolicyCheckpoint nets, const StageHooks& hooks,
                      std::uint64_t seed, const ProgressFn& progress) {
  hp.validate();
  if (w.train_prompts.empty() || w.val_prompts.empty()) {
    throw std::invalid_argument("training needs train and validation prompts");
  }
  StageResult result;
  result.name = name;
  Rng rng(seed);
  nn::Rng update_rng(seed ^ 0x5DEECE66DULL);
  const std::uint64_t val_seed = seed ^ 0xA5A5A5A5ULL;
  PpoOptimizer opt(nets, hp);
  RolloutBuffer buf(nets.obs_dim(), hp.rollout_steps);
  SpecDecodeEnv sim(w.target, w.draft, env, seed);

  bool have_best = false;
  std::size_t steps = 0;
  for (std::size_t u = 0; u < hp.updates(); ++u) {
    buf.clear();
    Collector col(buf);
    hooks.with_controllers(nets, &col, [&](Controllers ctl) {
      // Fresh episode per rollout; the unfinished one is bootstrapped. A
      // continuing stream also bootstraps from the next prompt's first decision.
      std::size_t idle_cycles = 0, last_size = 0;
      for (;;) {
        if (sim.done() || col.episodes() == 0) {
          if (buf.full() && !hp.continuing) break;
          const auto& prompt = w.train_prompts[rng() % w.train_prompts.size()];
          sim.reseed(rng());
          sim.reset(prompt);
          ctl.depth->begin_episode();
          ctl.size->begin_episode();
          col.start_episode();
          continue;
        }
        if (buf.full() && col.have_bootstrap()) break;
        sim.step_cycle(*ctl.depth, *ctl.size);
        idle_cycles = buf.size() == last_size ? idle_cycles + 1 : 0;
        last_size = buf.size();
        if (idle_cycles > 100000) throw std::runtime_error("learner receives no decisions");
      }
    });
    if (hp.center_rewards) buf.center_cycle_rewards();
    fill_values(nets.value, buf);
    double last_value = 0.0;
    if (col.have_bootstrap()) last_value = nets.value.forward(col.bootstrap_obs())[0];
    buf.compute_gae(hp.gamma, hp.gae_lambda, last_value, !col.have_bootstrap(), hp.continuing);

    const std::size_t step_begin = steps;
    steps += buf.size();
    const UpdateStats us = ppo_update(nets, opt, buf, hp, step_begin, steps, update_rng);

    CurveRow row;
    row.update = u + 1;
    row.steps = steps;
    row.lr = us.lr;
    row.mean_reward = col.reward_sum() / static_cast<double>(buf.size());
    row.episodes = col.episodes();
    row.policy_loss = us.policy_loss;
    row.value_loss = us.value_loss;
    row.entropy = us.entropy;
    row.clip_fraction = us.clip_fraction;
    row.approx_kl = us.approx_kl;
    row.grad_norm = us.grad_norm;
    hooks.with_controllers(nets, nullptr, [&](Controllers ctl) {
      const EvalStats s = evaluate_controllers(w, env, w.val_prompts, ctl, val_seed);
      row.val_speedup = s.speedup();
      row.val_tau = s.tau();
    });
    result.curve.push_back(row);
    if (!have_best || row.val_speedup > result.best_val_speedup) {
      have_best = true;
      result.best = nets;
      result.best_update = row.update;
      result.best_val_speedup = row.val_speedup;
    }
    if (progress) progress(name, row);
  }
  result.last = std::move(nets);
  return result;
}

}  // namespace

StageResult train_size_policy(const Workload& w, const EnvConfig& env, const PpoHyperparams& hp,
                              PolicyCheckpoint init, DepthController& train_depth,
                              DepthController& val_depth, std::uint64_t seed,
                              const ProgressFn& progress) {
  EnvConfig e = env;
  e.obs = init.obs;
  StageHooks hooks;
  hooks.with_controllers = [&](const PolicyCheckpoint& nets, DecisionSink* sink,
                               const std::function<void(Controllers)>& fn) {
    LearnedSize size(nets, e, sink);
    fn({sink != nullptr ? &train_depth : &val_depth, &size});
  };
  return run_stage("size", w, e, hp, std::move(init), hooks, seed, progress);
}

StageResult train_depth_policy(const Workload& w, const EnvConfig& env, const PpoHyperparams& hp,
                               PolicyCheckpoint init, SizeController& train_size,
                               SizeController& val_size, std::uint64_t seed,
                               const ProgressFn& progress) {
  EnvConfig e = env;
  e.obs = init.obs;
  StageHooks hooks;
  hooks.with_controllers = [&](const PolicyCheckpoint& nets, DecisionSink* sink,
                               const std::function<void(Controllers)>& fn) {
    LearnedDepth depth(nets, e, sink);
    fn({&depth, sink != nullptr ? &train_size : &val_size});
  };
  return run_stage("depth", w, e, hp, std::move(init), hooks, seed, progress);
}

StageResult train_initial_size(const Workload& w, const EnvConfig& env, const TrainConfig& tc,
                               std::uint64_t seed, const ProgressFn& progress) {
  tc.validate();
  nn::Rng init_rng(seed);
  PolicyCheckpoint init = make_policy(PolicyKind::kSize, env, tc.arch, init_rng);
  RandomDepth train_depth(tc.init_depth_min, tc.init_depth_max);
  FixedDepth val_depth(tc.val_depth);
  return train_size_policy(w, env, tc.size_hp, std::move(init), train_depth, val_depth,
                           seed + 1, progress);
}

StageResult train_initial_depth(const Workload& w, const EnvConfig& env, const TrainConfig& tc,
                                std::uint64_t seed, const ProgressFn& progress) {
  tc.validate();
  nn::Rng init_rng(seed + 7);
  PolicyCheckpoint init = make_policy(PolicyKind::kDepth, env, tc.arch, init_rng);
  ConstantSize train_size(tc.init_v);
  ConstantSize val_size(tc.val_v);
  return train_depth_policy(w, env, tc.depth_hp, std::move(init), train_size, val_size,
                            seed + 8, progress);
}

EvalStats evaluate_pair(const Workload& w, const EnvConfig& env, const PolicyCheckpoint& depth,
                        const PolicyCheckpoint& size, const PromptSet& prompts,
                        std::uint64_t seed, std::vector<TraceRecord>* trace) {
  EnvConfig de = env, se = env;
  de.obs = depth.obs;
  se.obs = size.obs;
  LearnedDepth d(depth, de);
  LearnedSize s(size, se);
  return evaluate_controllers(w, env, prompts, {&d, &s}, seed, trace);
}

CoadaptResult iterate_coadapt(const Workload& w, const EnvConfig& env, const TrainConfig& tc,
                              PolicyCheckpoint depth, PolicyCheckpoint size, int rounds,
                              std::uint64_t seed, const ProgressFn& progress) {
  tc.validate();
  if (rounds < 0) throw std::invalid_argument("iterate rounds must be >= 0");
  const std::uint64_t val_seed = seed ^ 0xA5A5A5A5ULL;
  CoadaptResult r;
  auto record = [&](int iter, const std::string& trained) {
    const EvalStats s = evaluate_pair(w, env, depth, size, w.val_prompts, val_seed);
    r.iters.push_back({iter, trained, s.speedup(), s.tau()});
  };
  record(0, "none");
  for (int it = 1; it <= rounds; ++it) {
    const std::uint64_t stage_seed = seed + 1000ULL * static_cast<std::uint64_t>(it);
    const std::string label = "iter" + std::to_string(it);
    auto tagged = [&](const std::string& stage, const CurveRow& row) {
      if (progress) progress(label + "-" + stage, row);
    };
    if (it % 2 == 1) {
      PpoHyperparams hp = tc.size_hp;
      hp.total_steps = tc.iter_size_steps;
      EnvConfig de = env;
      de.obs = depth.obs;
      LearnedDepth frozen(depth, de);
      StageResult st = train_size_policy(w, env, hp, size, frozen, frozen, stage_seed, tagged);
      size = st.best;
      r.stages.push_back(std::move(st));
      record(it, "size");
    } else {
      PpoHyperparams hp = tc.depth_hp;
      hp.total_steps = tc.iter_depth_steps;
      EnvConfig se = env;
      se.obs = size.obs;
      LearnedSize frozen(size, se);
      StageResult st = train_depth_policy(w, env, hp, depth, frozen, frozen, stage_seed, tagged);
      depth = st.best;
      r.stages.push_back(std::move(st));
      record(it, "depth");
    }
  }
  r.depth = std::move(depth);
  r.size = std::move(size);
  return r;
}

}  // namespace ltd
