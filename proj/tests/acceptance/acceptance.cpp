// Acceptance suite: one PASS/FAIL line per criterion.
//
//   ltd_acceptance [--only 1,2,...] [--seeds 3]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "bandit.hpp"
#include "ltd/baselines/heuristics.hpp"
#include "ltd/bench/config.hpp"
#include "ltd/bench/pipeline.hpp"
#include "ltd/bench/report.hpp"
#include "ltd/cost/cost_model.hpp"
#include "ltd/draft/draft_tree.hpp"
#include "ltd/env/env.hpp"
#include "ltd/ppo/gradcheck.hpp"
#include "ltd/ppo/trainer.hpp"
#include "ltd/util/text_io.hpp"
#include "ltd/verify/verifier.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ltd;

namespace {

// Tolerances and budgets.
constexpr double kFormulaSeconds = 1.0;
constexpr int kOracleInstances = 1000;
constexpr double kOracleSeconds = 10.0;
constexpr std::size_t kGreedyPrompts = 50;
constexpr std::size_t kSamplingTrials = 100000;
constexpr double kMaxTv = 0.02;
constexpr double kPreservationSeconds = 60.0;
constexpr double kMaxGradError = 1e-4;
constexpr double kGradSeconds = 30.0;
constexpr std::size_t kBanditSteps = 50000;
constexpr double kBanditTarget = 0.95;
constexpr double kBanditSeconds = 300.0;
constexpr std::size_t kMinHeldOut = 200;
constexpr double kVsFixed = 1.02;
constexpr double kVsGrid = 0.95;
constexpr double kLtdSeconds = 1800.0;
constexpr double kAblationSeconds = 1200.0;
constexpr double kIterateSeconds = 900.0;
constexpr double kCostSeconds = 1.0;
constexpr double kCliSeconds = 300.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Line {
  int id;
  bool pass;
  std::string text;
};

std::vector<Line> g_lines;

void report(int id, bool pass, const std::string& text) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, text.c_str());
  std::fflush(stdout);
  g_lines.push_back({id, pass, text});
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void note(const std::string& s) {
  std::printf("  %s\n", s.c_str());
  std::fflush(stdout);
}

AppConfig base_config() {
  AppConfig cfg;
  cfg.corpus.path = (fs::path(LTD_SOURCE_DIR) / "data" / "corpus.txt").string();
  return cfg;
}

const Workload& full_workload() {
  static const Workload w = build_workload(base_config().corpus);
  return w;
}

// 1: node count of constructed trees.
void criterion_formula() {
  const auto t0 = Clock::now();
  const auto m = oracle::small_models(16, 11);
  const std::vector<TokenId> ctx = {3, 1, 4};
  std::size_t pairs = 0, bad = 0;
  for (std::size_t w = 1; w <= 10; ++w) {
    DraftConfig cfg;
    cfg.beam_width = w;
    DraftTree tree = DraftTree::init(ctx, *m.draft, cfg);
    for (int d = 2; d <= 12; ++d) {
      if (d > 2) tree.expand(ctx, *m.draft);
      const std::size_t want = 1 + w + static_cast<std::size_t>(d - 2) * w * w;
      ++pairs;
      if (tree.depth() != d || tree.v_all() != want || candidate_count(w, d) != want) ++bad;
    }
  }
  const double t = seconds_since(t0);
  report(1, bad == 0 && t < kFormulaSeconds,
         std::to_string(pairs) + " (W, D) pairs, " + std::to_string(bad) + " mismatches, " +
             fmt("%.3f s", t));
}

// 2: greedy verification against the exhaustive oracle.
void criterion_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  int bad = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const std::size_t vocab = 3 + rng() % 14;
    const auto m = oracle::small_models(vocab, rng(), 2 + static_cast<int>(rng() % 2), 400);
    std::vector<TokenId> ctx;
    for (int k = 0; k < 3; ++k) ctx.push_back(static_cast<TokenId>(rng() % (vocab - 1)));
    DraftConfig cfg;
    cfg.beam_width = 1 + rng() % 4;
    const int depth = 1 + static_cast<int>(rng() % 6);
    DraftTree tree = depth == 1 ? DraftTree::root_only(ctx.back()) : DraftTree::init(ctx, *m.draft, cfg);
    while (tree.depth() < depth) tree.expand(ctx, *m.draft);
    const CandidateSet cs = CandidateSet::select_top_v(tree, 1 + rng() % tree.v_all());
    if (verify_greedy(cs, *m.target, ctx).accepted_tokens !=
        oracle::brute_force_greedy(cs, *m.target, ctx)) {
      ++bad;
    }
  }
  const double t = seconds_since(t0);
  report(2, bad == 0 && t < kOracleSeconds,
         std::to_string(kOracleInstances) + " instances, " + std::to_string(bad) +
             " mismatches, " + fmt("%.2f s", t));
}

// 3: greedy output identity and the sampling law of the first emitted token.
void criterion_preservation() {
  const auto t0 = Clock::now();
  const Workload& w = full_workload();
  const AppConfig cfg = base_config();
  std::size_t mismatched = 0, checked = 0;
  FixedDepth fixed(8);
  RandomDepth random_depth(1, 12);
  DddDepth ddd(cfg.baselines);
  ConstantSize v60(60), v240(240), v20(20);
  const std::vector<Controllers> schedules = {{&fixed, &v60}, {&random_depth, &v240}, {&ddd, &v20}};
  SpecDecodeEnv env(w.target, w.draft, cfg.env, 1);
  for (std::size_t i = 0; i < kGreedyPrompts && i < w.test_prompts.size(); ++i) {
    const Controllers c = schedules[i % schedules.size()];
    env.reset(w.test_prompts[i]);
    while (!env.done()) env.step_cycle(*c.depth, *c.size);
    Rng rng(0);
    const auto want = vanilla_decode(*w.target, w.test_prompts[i], cfg.env.max_new_tokens,
                                     DecodeMode::kGreedy, 1.0, rng);
    if (w.vocab->decode(env.episode().output()) != w.vocab->decode(want)) ++mismatched;
    ++checked;
  }

  const auto m = oracle::small_models(16, 5);
  const std::vector<TokenId> ctx = {2, 7, 1};
  DraftConfig dc;
  dc.beam_width = 4;
  DraftTree tree = DraftTree::init(ctx, *m.draft, dc);
  while (tree.depth() < 5) tree.expand(ctx, *m.draft);
  const CandidateSet cs = CandidateSet::select_top_v(tree, 30);
  const double temperature = 0.8;
  std::vector<double> hits(m.vocab->size(), 0.0);
  Rng rng(99);
  for (std::size_t i = 0; i < kSamplingTrials; ++i) {
    const VerifyOutcome vo = verify_sampling(cs, *m.target, ctx, temperature, rng);
    hits[static_cast<std::size_t>(vo.accepted_tokens.front())] += 1.0;
  }
  const auto p = m.target->next_distribution(ctx, temperature);
  double tv = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) tv += 0.5 * std::abs(hits[k] / kSamplingTrials - p[k]);
  const double t = seconds_since(t0);
  report(3, checked == kGreedyPrompts && mismatched == 0 && tv <= kMaxTv && t < kPreservationSeconds,
         "greedy " + std::to_string(checked - mismatched) + "/" + std::to_string(checked) +
             " identical, sampling TV " + fmt("%.5f", tv) + " over " +
             std::to_string(kSamplingTrials) + " trials, " + fmt("%.1f s", t));
}

// 4: PPO loss gradients for both architectures.
void criterion_gradcheck() {
  const auto t0 = Clock::now();
  const AppConfig cfg = base_config();
  const auto checks = gradcheck_policies(cfg.env, cfg.train.arch, cfg.train.size_hp, 1);
  double worst = 0.0;
  std::string detail;
  for (const NetGradCheck& c : checks) {
    worst = std::max(worst, c.max_rel_error);
    detail += c.net + " " + fmt("%.2e", c.max_rel_error) + "; ";
  }
  const double t = seconds_since(t0);
  report(4, checks.size() == 4 && worst <= kMaxGradError && t < kGradSeconds,
         detail + "max " + fmt("%.2e", worst) + ", " + fmt("%.1f s", t));
}

// 5: 12-arm bandit.
void criterion_bandit() {
  const auto t0 = Clock::now();
  int solved = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = oracle::run_bandit(seed, kBanditSteps, kBanditTarget);
    solved += r.reached ? 1 : 0;
    detail += "seed " + std::to_string(seed) + " p=" + fmt("%.3f", r.best_prob) + " at " +
              std::to_string(r.steps) + " steps; ";
  }
  const double t = seconds_since(t0);
  report(5, solved == 3 && t < kBanditSeconds,
         std::to_string(solved) + "/3 seeds, " + detail + fmt("%.1f s", t));
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// 6 and 8: full training pipeline per seed.
void criterion_ltd(int seeds, bool want6, bool want8) {
  const auto t0 = Clock::now();
  const Workload& w = full_workload();
  const AppConfig cfg = base_config();
  const PromptSet prompts = eval_prompts(w, cfg);
  std::vector<double> ltd_tp, iter0, iter1;
  double iterate_seconds = 0.0;
  for (int s = 1; s <= seeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    const auto ts = Clock::now();
    const StageResult size = train_initial_size(w, cfg.env, cfg.train, seed);
    const StageResult depth = train_initial_depth(w, cfg.env, cfg.train, seed);
    const auto ti = Clock::now();
    double iter1_done = 0.0;
    auto progress = [&](const std::string& stage, const CurveRow&) {
      if (stage.rfind("iter1-", 0) == 0) iter1_done = seconds_since(ti);
    };
    const int rounds = want6 ? cfg.iterate_rounds : 1;
    const CoadaptResult co =
        iterate_coadapt(w, cfg.env, cfg.train, depth.best, size.best, rounds, seed, progress);
    iterate_seconds += iter1_done;
    iter0.push_back(co.iters.at(0).val_speedup);
    iter1.push_back(co.iters.at(1).val_speedup);
    std::string its;
    for (const IterRecord& r : co.iters) its += " iter" + std::to_string(r.iter) + " " + fmt("%.4f", r.val_speedup);
    if (want6) {
      const EvalReport r = evaluate_method(w, cfg, {"ltd", &co.depth, &co.size}, prompts, seed);
      ltd_tp.push_back(r.throughput);
      note("seed " + std::to_string(s) + ": test throughput " + fmt("%.5f", r.throughput) +
           " speedup " + fmt("%.4f", r.speedup) + " tau " + fmt("%.3f", r.tau) + " D " +
           fmt("%.2f", r.mean_depth) + " V " + fmt("%.1f", r.mean_v) + ";" + its + "; " +
           fmt("%.0f s", seconds_since(ts)));
    } else {
      note("seed " + std::to_string(s) + ":" + its + "; " + fmt("%.0f s", seconds_since(ts)));
    }
  }
  if (want6) {
    const auto tb = Clock::now();
    const EvalReport fixed = evaluate_method(w, cfg, {"fixed:8:60"}, prompts, 1);
    const GridResult grid = grid_search(w, cfg.env, cfg.baselines, prompts, 1);
    note("baselines: fixed(8,60) " + fmt("%.5f", fixed.throughput) + ", best grid cell D" +
         std::to_string(grid.best.depth) + " V" + std::to_string(grid.best.v) + " " +
         fmt("%.5f", grid.best.throughput) + ", " + fmt("%.0f s", seconds_since(tb)));
    const double m = mean(ltd_tp);
    const double vs_fixed = m / fixed.throughput, vs_grid = m / grid.best.throughput;
    const double t = seconds_since(t0);
    report(6,
           prompts.size() >= kMinHeldOut && vs_fixed >= kVsFixed && vs_grid >= kVsGrid &&
               t <= kLtdSeconds,
           std::to_string(prompts.size()) + " held-out prompts, " + std::to_string(seeds) +
               "-seed mean throughput " + fmt("%.5f", m) + " = " + fmt("%.4f", vs_fixed) +
               "x fixed(8,60) (need >= 1.02), " + fmt("%.4f", vs_grid) +
               "x best grid cell (need >= 0.95), " + fmt("%.0f s", t));
  }
  if (want8) {
    const double a = mean(iter0), b = mean(iter1);
    report(8, b >= a && iterate_seconds <= kIterateSeconds,
           std::to_string(seeds) + "-seed mean validation speedup Iter0 " + fmt("%.5f", a) +
               ", Iter1 " + fmt("%.5f", b) + ", co-adaptation time " +
               fmt("%.0f s", iterate_seconds) + " (initial policies shared with criterion 6)");
  }
}

// 7: reward ablation.
void criterion_reward_ablation(int seeds) {
  const auto t0 = Clock::now();
  const Workload& w = full_workload();
  const AppConfig cfg = base_config();
  const PromptSet prompts = eval_prompts(w, cfg);
  std::map<RewardMode, std::vector<double>> speed, tau;
  for (int s = 1; s <= seeds; ++s) {
    for (const RewardAblationRow& r : ablate_reward(w, cfg, prompts, static_cast<std::uint64_t>(s))) {
      speed[r.mode].push_back(r.report.speedup);
      tau[r.mode].push_back(r.report.tau);
      note("seed " + std::to_string(s) + " " + r.report.method + ": speedup " +
           fmt("%.4f", r.report.speedup) + " tau " + fmt("%.3f", r.report.tau) + " V " +
           fmt("%.1f", r.report.mean_v));
    }
  }
  const RewardMode tp = RewardMode::kThroughput, al = RewardMode::kAcceptanceLength,
                   tc = RewardMode::kTimeCost;
  const double s_tp = mean(speed[tp]), s_al = mean(speed[al]), s_tc = mean(speed[tc]);
  const double t_tp = mean(tau[tp]), t_al = mean(tau[al]), t_tc = mean(tau[tc]);
  const bool order = s_tp > s_al && s_tp > s_tc && t_al > t_tp && t_al > t_tc && t_tc < t_tp &&
                     t_tc < t_al;
  const double t = seconds_since(t0);
  report(7, order && t <= kAblationSeconds,
         std::to_string(seeds) + "-seed means: speedup throughput " + fmt("%.4f", s_tp) +
             " acceptance_length " + fmt("%.4f", s_al) + " time_cost " + fmt("%.4f", s_tc) +
             "; tau throughput " + fmt("%.3f", t_tp) + " acceptance_length " +
             fmt("%.3f", t_al) + " time_cost " + fmt("%.3f", t_tc) + ", " + fmt("%.0f s", t));
}

// 9: cost-model shapes.
void criterion_cost() {
  const auto t0 = Clock::now();
  const CostModelConfig c = calibrated_cost_model();
  std::size_t bad = 0;
  const double step = draft_time(c, 2) - draft_time(c, 1);
  for (std::size_t k = 1; k + 1 <= 64; ++k) {
    const double d = draft_time(c, k + 1) - draft_time(c, k);
    if (std::abs(d - step) > 1e-12 || std::abs(draft_time(c, k) - (draft_time(c, 1) + step * (k - 1))) > 1e-12) ++bad;
  }
  std::size_t steps = 0;
  for (std::size_t ctx : {0u, 100u, 1000u, 4000u}) {
    for (std::size_t v = 1; v < 512; ++v) {
      const double a = verify_time(c, v, ctx), b = verify_time(c, v + 1, ctx);
      const bool boundary = v % c.chunk == 0;
      if (b < a) ++bad;
      if (boundary && !(b > a)) ++bad;
      if (!boundary && b != a) ++bad;
      if (boundary) ++steps;
    }
    if (ctx > 0 && !(verify_time(c, 60, ctx) > verify_time(c, 60, ctx / 2))) ++bad;
  }
  const double t = seconds_since(t0);
  report(9, bad == 0 && t < kCostSeconds,
         "draft affine with slope " + fmt("%.4f", step) + ", verify steps at " +
             std::to_string(steps) + " chunk boundaries, " + std::to_string(bad) +
             " violations, " + fmt("%.3f s", t));
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<std::string> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) fa.insert(fs::relative(e.path(), a).string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) fb.insert(fs::relative(e.path(), b).string());
  }
  if (fa != fb) {
    why = "file sets differ";
    return false;
  }
  for (const std::string& f : fa) {
    if (read_file(a / f) != read_file(b / f)) {
      why = f + " differs";
      return false;
    }
  }
  why = std::to_string(fa.size()) + " files identical";
  return true;
}

// 10: every subcommand twice with the same seed and config.
void criterion_determinism() {
  const auto t0 = Clock::now();
  const fs::path work = fs::temp_directory_path() / ("ltd_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string bin = LTD_CLI_PATH;
  const std::string common = "--config " + (fs::path(LTD_SOURCE_DIR) / "configs" / "smoke.ini").string() +
                             " --set corpus.path=" + base_config().corpus.path + " --seed 5";
  const std::vector<std::pair<std::string, std::string>> cmds = {
      {"train-size", "--out x/ts train-size"},
      {"train-depth", "--out x/td train-depth"},
      {"iterate", "--out x/it iterate --depth x/td/depth.ckpt --size x/ts/size.ckpt"},
      {"eval", "--out x/ev eval --method vanilla --method fixed:8:60 --method ddd --method svip "
               "--method gammatune --method random:2:10:60 --method ltd --depth "
               "x/it/depth_final.ckpt --size x/it/size_final.ckpt --trace"},
      {"eval (sampling)", "--mode sampling --temperature 0.7 --out x/es eval --method fixed:6:40 "
                          "--method ltd --depth x/it/depth_final.ckpt --size x/it/size_final.ckpt "
                          "--trace"},
      {"gridsearch", "--out x/gs gridsearch"},
      {"gradcheck", "--out x/gc gradcheck"},
      {"calibrate", "--out x/ca calibrate"},
      {"ablate-reward", "--out x/ar ablate-reward"},
      {"ablate-obs", "--out x/ao ablate-obs"},
      {"report", "--out x/rp report --trace x/ev/traces/ddd.jsonl --trace "
                 "x/ev/traces/fixed_8_60.jsonl --trace x/ev/traces/ltd.jsonl --baseline fixed_8_60"},
  };
  std::string failure;
  for (const char* run : {"a", "b"}) {
    for (const auto& [name, args] : cmds) {
      const std::string cmd = "cd '" + work.string() + "' && '" + bin + "' " + common + " " + args +
                              " > /dev/null 2>> log.txt";
      if (std::system(cmd.c_str()) != 0 && failure.empty()) failure = name + " exited nonzero";
    }
    fs::rename(work / "x", work / run);
  }
  std::string detail;
  std::size_t same = 0;
  for (const auto& [name, args] : cmds) {
    const std::string dir = args.substr(args.find("x/") + 2, 2);
    std::string why;
    if (same_tree(work / "a" / dir, work / "b" / dir, why)) {
      ++same;
    } else if (failure.empty()) {
      failure = name + ": " + why;
    }
  }
  const double t = seconds_since(t0);
  const bool pass = failure.empty() && same == cmds.size() && t < kCliSeconds;
  if (pass) fs::remove_all(work);
  report(10, pass,
         std::to_string(same) + "/" + std::to_string(cmds.size()) +
             " subcommand outputs byte-identical across two runs" +
             (failure.empty() ? "" : " (" + failure + ", see " + work.string() + ")") + ", " +
             fmt("%.1f s", t));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Acceptance criteria");
  std::vector<int> only;
  int seeds = 3;
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  app.add_option("--seeds", seeds, "Seeds for the training criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  const auto t0 = Clock::now();
  try {
    if (want(1)) criterion_formula();
    if (want(2)) criterion_oracle();
    if (want(3)) criterion_preservation();
    if (want(4)) criterion_gradcheck();
    if (want(5)) criterion_bandit();
    if (want(9)) criterion_cost();
    if (want(10)) criterion_determinism();
    if (want(7)) criterion_reward_ablation(seeds);
    if (want(6) || want(8)) criterion_ltd(seeds, want(6), want(8));
  } catch (const std::exception& e) {
    std::printf("FAIL error: %s\n", e.what());
    return 1;
  }
  std::sort(g_lines.begin(), g_lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  int failed = 0;
  std::printf("\nsummary (%.0f s)\n", seconds_since(t0));
  for (const Line& l : g_lines) {
    std::printf("%s criterion %d\n", l.pass ? "PASS" : "FAIL", l.id);
    failed += l.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
