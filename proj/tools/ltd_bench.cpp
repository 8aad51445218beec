// ltd-bench: train, evaluate and ablate learned draft-depth / verification-size
// policies in the speculative decoding simulator.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltd/baselines/heuristics.hpp"
#include "ltd/bench/config.hpp"
#include "ltd/bench/pipeline.hpp"
#include "ltd/bench/report.hpp"
#include "ltd/ppo/gradcheck.hpp"
#include "ltd/ppo/trainer.hpp"
#include "ltd/util/text_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::optional<std::string> mode;
  std::optional<double> temperature;
  std::vector<std::string> sets;
};

struct Context {
  ltd::AppConfig cfg;
  std::uint64_t seed = 1;
  fs::path out;
  std::string hash;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Context make_context(const Globals& g) {
  Context c;
  c.cfg = g.config.empty() ? ltd::AppConfig{} : ltd::load_config(g.config);
  for (const std::string& s : g.sets) ltd::apply_override(c.cfg, s);
  if (g.mode) ltd::set_value(c.cfg, "env", "mode", *g.mode);
  if (g.temperature) c.cfg.env.temperature = *g.temperature;
  c.cfg.validate();
  c.seed = g.seed;
  c.out = g.out;
  c.hash = ltd::config_hash(c.cfg);
  fs::create_directories(c.out);
  ltd::write_file(c.out / "config.ini", ltd::dump_config(c.cfg));
  return c;
}

void write_json(const fs::path& p, const json& j) { ltd::write_file(p, j.dump(2) + "\n"); }

void write_curve(const fs::path& p, const std::vector<ltd::CurveRow>& curve) {
  std::ostringstream os;
  ltd::write_curve_csv(curve, os);
  ltd::write_file(p, os.str());
}

ltd::ProgressFn printer() {
  return [](const std::string& stage, const ltd::CurveRow& r) {
    std::cout << stage << " update " << r.update << " steps " << r.steps << " reward "
              << ltd::format_double(r.mean_reward) << " val_speedup "
              << ltd::format_double(r.val_speedup) << '\n';
  };
}

json stage_json(const ltd::StageResult& st, const std::string& best, const std::string& last,
                const std::string& curve) {
  return {{"stage", st.name},         {"updates", st.curve.size()},
          {"best_update", st.best_update}, {"best_val_speedup", st.best_val_speedup},
          {"best_checkpoint", best},  {"last_checkpoint", last},
          {"curve", curve}};
}

json manifest_head(const Context& c, const std::string& command) {
  return {{"command", command}, {"seed", c.seed}, {"config_hash", c.hash},
          {"size_ppo", ltd::to_json(c.cfg.train.size_hp)},
          {"depth_ppo", ltd::to_json(c.cfg.train.depth_hp)}};
}

std::string file_safe(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char ch) { return ch == ':' || ch == '/' || ch == '+'; },
                  '_');
  return s;
}

int run_train(const Context& c, bool size_stage, std::optional<std::size_t> steps) {
  const ltd::Workload w = ltd::build_workload(c.cfg.corpus);
  ltd::TrainConfig tc = c.cfg.train;
  if (steps) (size_stage ? tc.size_hp : tc.depth_hp).total_steps = *steps;
  const ltd::StageResult st = size_stage
                                  ? ltd::train_initial_size(w, c.cfg.env, tc, c.seed, printer())
                                  : ltd::train_initial_depth(w, c.cfg.env, tc, c.seed, printer());
  const std::string name = size_stage ? "size" : "depth";
  st.best.save(c.out / (name + ".ckpt"));
  st.last.save(c.out / (name + "_last.ckpt"));
  write_curve(c.out / (name + "_curve.csv"), st.curve);
  json m = manifest_head(c, "train-" + name);
  m["budget"] = (size_stage ? tc.size_hp : tc.depth_hp).total_steps;
  m["stages"] = json::array(
      {stage_json(st, name + ".ckpt", name + "_last.ckpt", name + "_curve.csv")});
  write_json(c.out / "manifest.json", m);
  std::cout << name << " best update " << st.best_update << " val_speedup "
            << ltd::format_double(st.best_val_speedup) << '\n';
  return 0;
}

int run_iterate(const Context& c, const std::string& depth_path, const std::string& size_path,
                std::optional<int> rounds) {
  const ltd::Workload w = ltd::build_workload(c.cfg.corpus);
  const int r = rounds.value_or(c.cfg.iterate_rounds);
  if (r < 0) throw UsageError("--rounds must be >= 0");
  const auto res = ltd::iterate_coadapt(w, c.cfg.env, c.cfg.train,
                                        ltd::PolicyCheckpoint::load(fs::path(depth_path)),
                                        ltd::PolicyCheckpoint::load(fs::path(size_path)), r,
                                        c.seed, printer());
  res.depth.save(c.out / "depth_final.ckpt");
  res.size.save(c.out / "size_final.ckpt");
  std::ostringstream csv;
  csv << "iter,trained,val_speedup,val_tau\n";
  for (const auto& it : res.iters) {
    csv << it.iter << ',' << it.trained << ',' << ltd::format_double(it.val_speedup) << ','
        << ltd::format_double(it.val_tau) << '\n';
    std::cout << "iter" << it.iter << ' ' << it.trained << " val_speedup "
              << ltd::format_double(it.val_speedup) << '\n';
  }
  ltd::write_file(c.out / "iterations.csv", csv.str());
  json m = manifest_head(c, "iterate");
  m["rounds"] = r;
  m["budget_size_round"] = c.cfg.train.iter_size_steps;
  m["budget_depth_round"] = c.cfg.train.iter_depth_steps;
  m["inputs"] = {{"depth", depth_path}, {"size", size_path}};
  m["stages"] = json::array();
  for (std::size_t i = 0; i < res.stages.size(); ++i) {
    const std::string curve = "iter" + std::to_string(i + 1) + "_" + res.stages[i].name +
                              "_curve.csv";
    write_curve(c.out / curve, res.stages[i].curve);
    m["stages"].push_back(stage_json(res.stages[i], "", "", curve));
  }
  m["final"] = {{"depth", "depth_final.ckpt"}, {"size", "size_final.ckpt"}};
  write_json(c.out / "manifest.json", m);
  return 0;
}

void emit_reports(const Context& c, std::vector<ltd::EvalReport> reports, const std::string& ref,
                  const std::string& stem, const json& extra) {
  ltd::normalize_totals(reports, ref);
  std::ostringstream csv;
  ltd::write_reports_csv(reports, csv);
  ltd::write_file(c.out / (stem + ".csv"), csv.str());
  json j = extra;
  j["config_hash"] = c.hash;
  j["reports"] = json::array();
  for (const auto& r : reports) j["reports"].push_back(ltd::to_json(r));
  write_json(c.out / (stem + ".json"), j);
  std::cout << csv.str();
}

int run_eval(const Context& c, std::vector<std::string> methods, const std::string& depth_path,
             const std::string& size_path, bool trace) {
  const ltd::Workload w = ltd::build_workload(c.cfg.corpus);
  const ltd::PromptSet prompts = ltd::eval_prompts(w, c.cfg);
  const std::string fixed_default = "fixed:" + std::to_string(c.cfg.baselines.default_depth) +
                                    ":" + std::to_string(c.cfg.baselines.default_v);
  if (methods.empty()) methods = {"vanilla", fixed_default, "ddd", "svip", "gammatune"};
  std::optional<ltd::PolicyCheckpoint> dck, sck;
  if (depth_path.empty() != size_path.empty()) {
    throw UsageError("--depth and --size must be given together");
  }
  if (!depth_path.empty()) {
    dck = ltd::PolicyCheckpoint::load(fs::path(depth_path));
    sck = ltd::PolicyCheckpoint::load(fs::path(size_path));
    if (std::find(methods.begin(), methods.end(), "ltd") == methods.end()) methods.push_back("ltd");
  }
  if (trace) fs::create_directories(c.out / "traces");
  std::vector<ltd::EvalReport> reports;
  for (const std::string& m : methods) {
    std::vector<ltd::TraceRecord> tr;
    ltd::MethodSpec spec{m, dck ? &*dck : nullptr, sck ? &*sck : nullptr};
    reports.push_back(
        ltd::evaluate_method(w, c.cfg, spec, prompts, c.seed, trace ? &tr : nullptr));
    if (trace) {
      std::ostringstream os;
      ltd::write_trace_jsonl(tr, os);
      ltd::write_file(c.out / "traces" / (file_safe(m) + ".jsonl"), os.str());
    }
  }
  emit_reports(c, std::move(reports), fixed_default, "eval",
               {{"split", c.cfg.eval.split}, {"prompts", prompts.size()}});
  return 0;
}

int run_grid(const Context& c) {
  const ltd::Workload w = ltd::build_workload(c.cfg.corpus);
  const ltd::PromptSet prompts = ltd::eval_prompts(w, c.cfg);
  const ltd::GridResult g = ltd::grid_search(w, c.cfg.env, c.cfg.baselines, prompts, c.seed);
  std::ostringstream csv;
  ltd::write_grid_csv(g, csv);
  ltd::write_file(c.out / "grid.csv", csv.str());
  write_json(c.out / "grid_best.json",
             {{"depth", g.best.depth}, {"v", g.best.v}, {"throughput", g.best.throughput},
              {"speedup", g.best.speedup}, {"tau", g.best.tau}, {"split", c.cfg.eval.split},
              {"prompts", prompts.size()}, {"seed", c.seed}, {"config_hash", c.hash}});
  std::cout << "best D=" << g.best.depth << " V=" << g.best.v << " speedup "
            << ltd::format_double(g.best.speedup) << '\n';
  return 0;
}

int run_gradcheck(const Context& c) {
  constexpr double kTolerance = 1e-4;
  const auto rows = ltd::gradcheck_policies(c.cfg.env, c.cfg.train.arch, c.cfg.train.size_hp,
                                            c.seed);
  json j = {{"tolerance", kTolerance}, {"seed", c.seed}, {"nets", json::array()}};
  double worst = 0.0;
  for (const auto& r : rows) {
    worst = std::max(worst, r.max_rel_error);
    j["nets"].push_back({{"net", r.net}, {"params", r.params}, {"checked", r.checked},
                         {"max_rel_error", r.max_rel_error}});
    std::cout << r.net << " params " << r.params << " checked " << r.checked << " max_rel_error "
              << ltd::format_double(r.max_rel_error) << '\n';
  }
  const bool ok = worst <= kTolerance;
  j["max_rel_error"] = worst;
  j["pass"] = ok;
  write_json(c.out / "gradcheck.json", j);
  std::cout << (ok ? "gradcheck ok" : "gradcheck FAILED") << '\n';
  return ok ? 0 : 2;
}

int run_calibrate(const Context& c) {
  const ltd::Workload w = ltd::build_workload(c.cfg.corpus);
  ltd::EnvConfig env = c.cfg.env;
  env.reward_scale = 1.0;
  env.reward_mode = ltd::RewardMode::kThroughput;
  std::ostringstream csv;
  csv << "D,V,tau,speedup,draft_share,verify_share,mean_raw_reward\n";
  std::vector<double> raw;
  for (int d : {2, 4, 6, 8, 10, 12}) {
    for (std::size_t v : {20, 40, 60, 100, 160, 240}) {
      ltd::FixedDepth fd(d);
      ltd::ConstantSize cs(v);
      std::vector<ltd::TraceRecord> tr;
      const auto s = ltd::evaluate_controllers(w, env, w.val_prompts, {&fd, &cs}, c.seed, &tr);
      for (const auto& r : tr) raw.push_back(r.outcome.reward);
      const auto b = ltd::breakdown(s);
      csv << d << ',' << v << ',' << ltd::format_double(s.tau()) << ','
          << ltd::format_double(s.speedup()) << ',' << ltd::format_double(b.draft_share) << ','
          << ltd::format_double(b.verify_share) << ','
          << ltd::format_double(s.reward / static_cast<double>(s.cycles)) << '\n';
    }
  }
  std::sort(raw.begin(), raw.end());
  auto pct = [&](double q) { return raw[static_cast<std::size_t>(q * (raw.size() - 1))]; };
  // Largest one-significant-digit scale keeping the 95th percentile within 2.
  const double target = 2.0 / pct(0.95);
  double mag = 1.0;
  while (mag > target) mag /= 10.0;
  while (mag * 10.0 <= target) mag *= 10.0;
  const double suggested = std::floor(target / mag) * mag;
  ltd::write_file(c.out / "calibration.csv", csv.str());
  write_json(c.out / "calibration.json",
             {{"raw_reward_p05", pct(0.05)}, {"raw_reward_p50", pct(0.5)},
              {"raw_reward_p95", pct(0.95)}, {"suggested_reward_scale", suggested},
              {"configured_reward_scale", c.cfg.env.reward_scale}, {"seed", c.seed},
              {"config_hash", c.hash}});
  std::cout << csv.str() << "suggested reward_scale " << ltd::format_double(suggested) << '\n';
  return 0;
}

int run_ablate_reward(const Context& c) {
  const ltd::Workload w = ltd::build_workload(c.cfg.corpus);
  const ltd::PromptSet prompts = ltd::eval_prompts(w, c.cfg);
  const auto rows = ltd::ablate_reward(w, c.cfg, prompts, c.seed, printer());
  std::vector<ltd::EvalReport> reports;
  json extra = {{"split", c.cfg.eval.split}, {"budget", c.cfg.ablation.reward_size_steps},
                {"checkpoints", json::array()}};
  for (const auto& r : rows) {
    const std::string ck = "size_" + std::string(ltd::to_string(r.mode)) + ".ckpt";
    r.policy.save(c.out / ck);
    extra["checkpoints"].push_back({{"mode", ltd::to_string(r.mode)}, {"checkpoint", ck},
                                    {"best_update", r.best_update}});
    reports.push_back(r.report);
  }
  emit_reports(c, std::move(reports), "size-throughput", "ablate_reward", extra);
  return 0;
}

int run_ablate_obs(const Context& c) {
  const ltd::Workload w = ltd::build_workload(c.cfg.corpus);
  const ltd::PromptSet prompts = ltd::eval_prompts(w, c.cfg);
  const auto rows = ltd::ablate_obs(w, c.cfg, prompts, c.seed, printer());
  std::vector<ltd::EvalReport> reports;
  json extra = {{"split", c.cfg.eval.split}, {"budget", c.cfg.ablation.obs_depth_steps},
                {"checkpoints", json::array()}};
  for (const auto& r : rows) {
    const std::string ck = "depth_" + file_safe(ltd::to_string(r.obs)) + ".ckpt";
    r.policy.save(c.out / ck);
    extra["checkpoints"].push_back({{"obs", ltd::to_string(r.obs)}, {"checkpoint", ck},
                                    {"best_update", r.best_update}});
    reports.push_back(r.report);
  }
  emit_reports(c, std::move(reports), "depth-P+D+L", "ablate_obs", extra);
  return 0;
}

int run_report(const Context& c, const std::vector<std::string>& traces,
               const std::string& baseline) {
  if (traces.empty()) throw UsageError("report needs at least one --trace file");
  std::vector<ltd::EvalReport> reports;
  for (const std::string& t : traces) {
    std::ifstream is(t);
    if (!is) throw std::runtime_error("cannot read " + t);
    const auto tr = ltd::read_trace_jsonl(is);
    const auto s = ltd::stats_from_trace(tr);
    reports.push_back(
        ltd::make_report(fs::path(t).stem().string(), s, c.seed, c.cfg.env, c.hash));
  }
  const std::string ref = baseline.empty() ? reports.front().method : baseline;
  emit_reports(c, std::move(reports), ref, "report", {{"traces", traces}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speculative decoding simulator with learned draft depth and verification size"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "INI configuration file");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--mode", g.mode, "Decoding mode")->check(CLI::IsMember({"greedy", "sampling"}));
  app.add_option("--temperature", g.temperature, "Target sampling temperature")
      ->check(CLI::PositiveNumber);
  app.add_option("--set", g.sets, "Override a config value: section.key=value");

  std::optional<std::size_t> steps;
  auto* train_size = app.add_subcommand("train-size", "Train the initial size policy");
  train_size->add_option("--steps", steps, "Step budget (overrides ppo.size_steps)");
  auto* train_depth = app.add_subcommand("train-depth", "Train the initial depth policy");
  train_depth->add_option("--steps", steps, "Step budget (overrides ppo.depth_steps)");

  std::string depth_path, size_path;
  std::optional<int> rounds;
  auto* iterate = app.add_subcommand("iterate", "Co-adapt depth and size policies");
  iterate->add_option("--depth", depth_path, "Depth policy checkpoint")->required();
  iterate->add_option("--size", size_path, "Size policy checkpoint")->required();
  iterate->add_option("--rounds", rounds, "Co-adaptation rounds (overrides train.iterate_rounds)");

  std::vector<std::string> methods;
  bool trace = false;
  auto* eval = app.add_subcommand("eval", "Evaluate methods on the evaluation split");
  eval->add_option("--method", methods,
                   "vanilla, fixed:D:V, random:LO:HI:V, ddd, svip, gammatune or ltd");
  eval->add_option("--depth", depth_path, "Depth policy checkpoint for ltd");
  eval->add_option("--size", size_path, "Size policy checkpoint for ltd");
  eval->add_flag("--trace", trace, "Write JSON-lines cycle traces");

  auto* grid = app.add_subcommand("gridsearch", "Search fixed (D, V) schedules");
  auto* gradcheck = app.add_subcommand("gradcheck", "Check PPO loss gradients");
  auto* calibrate = app.add_subcommand("calibrate", "Tabulate the workload and reward scale");
  auto* ablate_reward = app.add_subcommand("ablate-reward", "Size policies per reward mode");
  auto* ablate_obs = app.add_subcommand("ablate-obs", "Depth policies per observation variant");

  std::vector<std::string> traces;
  std::string baseline;
  auto* report = app.add_subcommand("report", "Summarize JSON-lines traces");
  report->add_option("--trace", traces, "Trace file")->check(CLI::ExistingFile);
  report->add_option("--baseline", baseline, "Trace stem used as the 100% time reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const Context c = make_context(g);
    if (*train_size) return run_train(c, true, steps);
    if (*train_depth) return run_train(c, false, steps);
    if (*iterate) return run_iterate(c, depth_path, size_path, rounds);
    if (*eval) return run_eval(c, methods, depth_path, size_path, trace);
    if (*grid) return run_grid(c);
    if (*gradcheck) return run_gradcheck(c);
    if (*calibrate) return run_calibrate(c);
    if (*ablate_reward) return run_ablate_reward(c);
    if (*ablate_obs) return run_ablate_obs(c);
    if (*report) return run_report(c, traces, baseline);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
