#include "ltd/bench/pipeline.hpp"

#include "ltd/baselines/heuristics.hpp"

namespace ltd {

PromptSet eval_prompts(const Workload& w, const AppConfig& cfg) {
  const PromptSet& all = cfg.eval.split == "val" ? w.val_prompts : w.test_prompts;
  const std::size_t n =
      cfg.eval.max_prompts > 0 ? std::min(cfg.eval.max_prompts, all.size()) : all.size();
  return PromptSet(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
}

LtdRun train_ltd(const Workload& w, const AppConfig& cfg, std::uint64_t seed,
                 const ProgressFn& progress) {
  LtdRun run;
  run.initial_size = train_initial_size(w, cfg.env, cfg.train, seed, progress);
  run.initial_depth = train_initial_depth(w, cfg.env, cfg.train, seed, progress);
  run.coadapt = iterate_coadapt(w, cfg.env, cfg.train, run.initial_depth.best,
                                run.initial_size.best, cfg.iterate_rounds, seed, progress);
  return run;
}

std::vector<RewardAblationRow> ablate_reward(const Workload& w, const AppConfig& cfg,
                                             const PromptSet& prompts, std::uint64_t seed,
                                             const ProgressFn& progress) {
  std::vector<RewardAblationRow> rows;
  TrainConfig tc = cfg.train;
  tc.size_hp.total_steps = cfg.ablation.reward_size_steps;
  for (RewardMode mode :
       {RewardMode::kThroughput, RewardMode::kAcceptanceLength, RewardMode::kTimeCost}) {
    EnvConfig env = cfg.env;
    env.reward_mode = mode;
    auto tagged = [&](const std::string& stage, const CurveRow& row) {
      if (progress) progress(std::string(to_string(mode)) + "-" + stage, row);
    };
    StageResult st = train_initial_size(w, env, tc, seed, tagged);
    EnvConfig score_env = cfg.env;
    score_env.obs = st.best.obs;
    FixedDepth depth(tc.val_depth);
    LearnedSize size(st.best, score_env);
    const EvalStats s = evaluate_controllers(w, cfg.env, prompts, {&depth, &size}, seed);
    rows.push_back({mode,
                    make_report("size-" + std::string(to_string(mode)), s, seed, cfg.env,
                                config_hash(cfg)),
                    st.best_update, std::move(st.best)});
  }
  return rows;
}

std::vector<ObsAblationRow> ablate_obs(const Workload& w, const AppConfig& cfg,
                                       const PromptSet& prompts, std::uint64_t seed,
                                       const ProgressFn& progress) {
  std::vector<ObsAblationRow> rows;
  TrainConfig tc = cfg.train;
  tc.depth_hp.total_steps = cfg.ablation.obs_depth_steps;
  for (const char* name : {"P+D+L", "P+L", "P+D"}) {
    EnvConfig env = cfg.env;
    env.obs = parse_obs_features(name);
    auto tagged = [&](const std::string& stage, const CurveRow& row) {
      if (progress) progress(std::string(name) + "-" + stage, row);
    };
    StageResult st = train_initial_depth(w, env, tc, seed, tagged);
    LearnedDepth depth(st.best, env);
    ConstantSize size(tc.init_v);
    const EvalStats s = evaluate_controllers(w, cfg.env, prompts, {&depth, &size}, seed);
    rows.push_back({env.obs,
                    make_report(std::string("depth-") + name, s, seed, cfg.env, config_hash(cfg)),
                    st.best_update, std::move(st.best)});
  }
  return rows;
}

}  // namespace ltd
