#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltd/bench/config.hpp"
#include "ltd/env/evaluate.hpp"
#include "ltd/ppo/policy.hpp"

namespace ltd {

// Shares of the summed cycle time; normalized_total is this method's total
// divided by the reference method's total (1 when it is the reference).
struct TimeBreakdown {
  double draft_share = 0.0;
  double verify_share = 0.0;
  double overhead_share = 0.0;
  double total = 0.0;
  double normalized_total = 1.0;
};

struct EvalReport {
  std::string method;
  double speedup = 0.0;
  double tau = 0.0;
  double throughput = 0.0;
  TimeBreakdown time;
  double mean_depth = 0.0;
  double mean_v = 0.0;
  std::size_t prompts = 0;
  std::size_t cycles = 0;
  std::size_t tokens = 0;
  std::uint64_t seed = 0;
  DecodeMode mode = DecodeMode::kGreedy;
  double temperature = 1.0;
  std::string config_hash;

  bool operator==(const EvalReport&) const = default;
};

bool operator==(const TimeBreakdown& a, const TimeBreakdown& b);

TimeBreakdown breakdown(const EvalStats& s);
// Shares from a trace; sums run in trace order.
TimeBreakdown decompose_time(const std::vector<TraceRecord>& trace);
// Totals recomputed from a trace, in trace order.
EvalStats stats_from_trace(const std::vector<TraceRecord>& trace);

EvalReport make_report(const std::string& method, const EvalStats& s, std::uint64_t seed,
                       const EnvConfig& env, const std::string& config_hash);

// Method names: "vanilla", "fixed:D:V", "random:LO:HI:V", "ddd", "svip",
// "gammatune" and "ltd" (needs both checkpoints). Heuristic depth methods use
// the configured default V.
struct MethodSpec {
  std::string name;
  const PolicyCheckpoint* depth_ckpt = nullptr;
  const PolicyCheckpoint* size_ckpt = nullptr;
};

// Throws std::invalid_argument on an unknown method or an empty prompt set.
EvalReport evaluate_method(const Workload& w, const AppConfig& cfg, const MethodSpec& method,
                           const PromptSet& prompts, std::uint64_t seed,
                           std::vector<TraceRecord>* trace = nullptr);

// Fills normalized_total against the report named reference (or the first).
void normalize_totals(std::vector<EvalReport>& reports, const std::string& reference);

// method,speedup,tau,throughput,draft_share,verify_share,overhead_share,
// total_time,normalized_total,mean_depth,mean_v,prompts,cycles,tokens,seed,
// mode,temperature,config_hash
void write_reports_csv(const std::vector<EvalReport>& reports, std::ostream& os);
std::vector<EvalReport> read_reports_csv(std::istream& is);

nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

// One JSON object per line: {"prompt", "cycle", <CycleOutcome keys>}.
void write_trace_jsonl(const std::vector<TraceRecord>& trace, std::ostream& os);
std::vector<TraceRecord> read_trace_jsonl(std::istream& is);

}  // namespace ltd
