#include <doctest.h>

#include <sstream>

#include "ltd/bench/config.hpp"
#include "ltd/bench/report.hpp"
#include "ltd/util/text_io.hpp"
#include "oracles.hpp"

using namespace ltd;

namespace {

const Workload& workload() {
  static const Workload w = oracle::small_workload();
  return w;
}

AppConfig small_app() {
  AppConfig c;
  c.env.max_new_tokens = 32;
  return c;
}

}  // namespace

TEST_CASE("number formatting round trips exactly") {
  for (double x : {0.0, 1.0, 0.1, 1.0 / 3.0, 2.5e-300, -123456.789, 6.02214076e23}) {
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(unescape_token(escape_token("a\\b\nc")) == "a\\b\nc");
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
}

TEST_CASE("config dump parses back to the same config") {
  AppConfig c;
  c.env.max_new_tokens = 77;
  c.train.size_hp.lr_peak = 3e-4;
  c.baselines.ddd_checkpoints = {3, 4};
  c.train.arch.depth_policy_hidden = {64, 32};
  c.env.obs = parse_obs_features("P+L");
  const std::string text = dump_config(c);
  const AppConfig back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(AppConfig{}) != config_hash(c));
  CHECK(config_hash(c).size() == 16);
}

TEST_CASE("overrides set values and reject unknown keys") {
  AppConfig c;
  apply_override(c, "env.max_new_tokens=40");
  apply_override(c, "ppo.depth_gamma=0.99");
  apply_override(c, "env.mode=sampling");
  CHECK(c.env.max_new_tokens == 40);
  CHECK(c.train.depth_hp.gamma == 0.99);
  CHECK(c.env.mode == DecodeMode::kSampling);
  CHECK_THROWS_AS(apply_override(c, "env.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "env.max_new_tokens=abc"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "no_equals_sign"), ConfigError);
  // Values are checked once every override is in.
  const AppConfig low = parse_config("[env]\nmax_new_tokens = 1\n");
  CHECK_THROWS_AS(low.validate(), std::invalid_argument);
}

TEST_CASE("partial config files keep defaults for missing keys") {
  const AppConfig c = parse_config("[draft]\nbeam_width = 6\n");
  CHECK(c.env.draft.beam_width == 6);
  CHECK(c.env.v_max == AppConfig{}.env.v_max);
}

TEST_CASE("method names select the expected schedules") {
  const Workload& w = workload();
  const AppConfig cfg = small_app();
  const PromptSet p(w.test_prompts.begin(), w.test_prompts.begin() + 5);
  const EvalReport van = evaluate_method(w, cfg, {"vanilla"}, p, 1);
  CHECK(van.speedup == 1.0);
  CHECK(van.mean_depth == 1.0);
  const EvalReport fx = evaluate_method(w, cfg, {"fixed:6:40"}, p, 1);
  CHECK(fx.mean_depth == 6.0);
  CHECK(fx.mean_v == 40.0);
  CHECK(fx.config_hash == config_hash(cfg));
  for (const char* m : {"ddd", "svip", "gammatune", "random:2:9:60"}) {
    CHECK(evaluate_method(w, cfg, {m}, p, 1).prompts == p.size());
  }
  CHECK_THROWS_AS(evaluate_method(w, cfg, {"bogus"}, p, 1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_method(w, cfg, {"fixed:6"}, p, 1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_method(w, cfg, {"ltd"}, p, 1), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_method(w, cfg, {"vanilla"}, PromptSet{}, 1), std::invalid_argument);
}

TEST_CASE("reports round trip through csv and json") {
  const Workload& w = workload();
  const AppConfig cfg = small_app();
  const PromptSet p(w.test_prompts.begin(), w.test_prompts.begin() + 4);
  std::vector<EvalReport> reps = {evaluate_method(w, cfg, {"fixed:8:60"}, p, 2),
                                  evaluate_method(w, cfg, {"ddd"}, p, 2)};
  normalize_totals(reps, "fixed:8:60");
  CHECK(reps[0].time.normalized_total == 1.0);
  std::stringstream ss;
  write_reports_csv(reps, ss);
  CHECK(read_reports_csv(ss) == reps);
  CHECK(report_from_json(to_json(reps[1])) == reps[1]);
  const auto& t = reps[1].time;
  CHECK(t.draft_share + t.verify_share + t.overhead_share == doctest::Approx(1.0));
  std::stringstream bad("method,x\n");
  CHECK_THROWS(read_reports_csv(bad));
}

TEST_CASE("traces round trip and reproduce the totals") {
  const Workload& w = workload();
  const AppConfig cfg = small_app();
  const PromptSet p(w.test_prompts.begin(), w.test_prompts.begin() + 4);
  std::vector<TraceRecord> trace;
  const EvalReport r = evaluate_method(w, cfg, {"gammatune"}, p, 3, &trace);
  std::stringstream ss;
  write_trace_jsonl(trace, ss);
  const auto back = read_trace_jsonl(ss);
  REQUIRE(back.size() == trace.size());
  const EvalStats s = stats_from_trace(back);
  CHECK(s.cycles == r.cycles);
  CHECK(s.tokens == r.tokens);
  CHECK(s.prompts == r.prompts);
  CHECK(s.speedup() == r.speedup);
  CHECK(decompose_time(back) == r.time);
  std::stringstream broken("{\"prompt\": 0}\n");
  CHECK_THROWS(read_trace_jsonl(broken));
}
