#include "ltd/bench/report.hpp"

#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ltd/util/text_io.hpp"

namespace ltd {

bool operator==(const TimeBreakdown& a, const TimeBreakdown& b) {
  return a.draft_share == b.draft_share && a.verify_share == b.verify_share &&
         a.overhead_share == b.overhead_share && a.total == b.total &&
         a.normalized_total == b.normalized_total;
}

namespace {

TimeBreakdown shares(double draft, double verify, double overhead) {
  TimeBreakdown t;
  t.total = draft + verify + overhead;
  if (t.total > 0.0) {
    t.draft_share = draft / t.total;
    t.verify_share = verify / t.total;
    t.overhead_share = overhead / t.total;
  }
  return t;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* kReportHeader =
    "method,speedup,tau,throughput,draft_share,verify_share,overhead_share,total_time,"
    "normalized_total,mean_depth,mean_v,prompts,cycles,tokens,seed,mode,temperature,config_hash";

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream is(s);
  while (std::getline(is, part, ':')) out.push_back(part);
  return out;
}

long to_long(const std::string& s, const std::string& method) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number in method " + method);
  }
}

}  // namespace

TimeBreakdown breakdown(const EvalStats& s) { return shares(s.t_draft, s.t_verify, s.t_policy); }

EvalStats stats_from_trace(const std::vector<TraceRecord>& trace) {
  EvalStats s;
  bool any = false;
  std::size_t last_prompt = 0;
  for (const TraceRecord& r : trace) {
    if (!any || r.prompt != last_prompt) ++s.prompts;
    any = true;
    last_prompt = r.prompt;
    s.add(r.outcome);
  }
  s.finish();
  return s;
}

TimeBreakdown decompose_time(const std::vector<TraceRecord>& trace) {
  return breakdown(stats_from_trace(trace));
}

EvalReport make_report(const std::string& method, const EvalStats& s, std::uint64_t seed,
                       const EnvConfig& env, const std::string& hash) {
  EvalReport r;
  r.method = method;
  r.speedup = s.speedup();
  r.tau = s.tau();
  r.throughput = s.throughput();
  r.time = breakdown(s);
  r.mean_depth = s.mean_depth;
  r.mean_v = s.mean_v;
  r.prompts = s.prompts;
  r.cycles = s.cycles;
  r.tokens = s.tokens;
  r.seed = seed;
  r.mode = env.mode;
  r.temperature = env.temperature;
  r.config_hash = hash;
  return r;
}

EvalReport evaluate_method(const Workload& w, const AppConfig& cfg, const MethodSpec& method,
                           const PromptSet& prompts, std::uint64_t seed,
                           std::vector<TraceRecord>* trace) {
  if (prompts.empty()) throw std::invalid_argument("evaluate: empty prompt set");
  const auto parts = split_colon(method.name);
  const std::string& kind = parts.empty() ? method.name : parts[0];
  const HeuristicConfig& hc = cfg.baselines;
  auto expect = [&](std::size_t n) {
    if (parts.size() != n) throw std::invalid_argument("malformed method " + method.name);
  };
  std::unique_ptr<DepthController> depth;
  std::unique_ptr<SizeController> size;
  EnvConfig env = cfg.env;
  if (kind == "vanilla") {
    expect(1);
    depth = std::make_unique<FixedDepth>(1);
    size = std::make_unique<ConstantSize>(1);
  } else if (kind == "fixed") {
    expect(3);
    const long d = to_long(parts[1], method.name), v = to_long(parts[2], method.name);
    if (d < 1 || v < 1) throw std::invalid_argument("fixed method needs D >= 1 and V >= 1");
    depth = std::make_unique<FixedDepth>(static_cast<int>(d));
    size = std::make_unique<ConstantSize>(static_cast<std::size_t>(v));
  } else if (kind == "random") {
    expect(4);
    const long lo = to_long(parts[1], method.name), hi = to_long(parts[2], method.name);
    const long v = to_long(parts[3], method.name);
    if (v < 1) throw std::invalid_argument("random method needs V >= 1");
    depth = std::make_unique<RandomDepth>(static_cast<int>(lo), static_cast<int>(hi));
    size = std::make_unique<ConstantSize>(static_cast<std::size_t>(v));
  } else if (kind == "ddd" || kind == "svip" || kind == "gammatune") {
    expect(1);
    if (kind == "ddd") depth = std::make_unique<DddDepth>(hc);
    if (kind == "svip") depth = std::make_unique<SvipDepth>(hc);
    if (kind == "gammatune") depth = std::make_unique<GammatuneDepth>(hc);
    size = std::make_unique<ConstantSize>(hc.default_v);
  } else if (kind == "ltd") {
    expect(1);
    if (method.depth_ckpt == nullptr || method.size_ckpt == nullptr) {
      throw std::invalid_argument("ltd method needs depth and size checkpoints");
    }
    EnvConfig de = env, se = env;
    de.obs = method.depth_ckpt->obs;
    se.obs = method.size_ckpt->obs;
    depth = std::make_unique<LearnedDepth>(*method.depth_ckpt, de);
    size = std::make_unique<LearnedSize>(*method.size_ckpt, se);
  } else {
    throw std::invalid_argument("unknown method " + method.name);
  }
  const EvalStats s = evaluate_controllers(w, env, prompts, {depth.get(), size.get()}, seed, trace);
  return make_report(method.name, s, seed, env, config_hash(cfg));
}

void normalize_totals(std::vector<EvalReport>& reports, const std::string& reference) {
  if (reports.empty()) return;
  double ref = reports.front().time.total;
  for (const EvalReport& r : reports) {
    if (r.method == reference) {
      ref = r.time.total;
      break;
    }
  }
  for (EvalReport& r : reports) r.time.normalized_total = ref > 0.0 ? r.time.total / ref : 0.0;
}

void write_reports_csv(const std::vector<EvalReport>& reports, std::ostream& os) {
  os << kReportHeader << '\n';
  for (const EvalReport& r : reports) {
    if (r.method.find(',') != std::string::npos) {
      throw std::invalid_argument("method names may not contain commas");
    }
    os << r.method << ',' << format_double(r.speedup) << ',' << format_double(r.tau) << ','
       << format_double(r.throughput) << ',' << format_double(r.time.draft_share) << ','
       << format_double(r.time.verify_share) << ',' << format_double(r.time.overhead_share)
       << ',' << format_double(r.time.total) << ',' << format_double(r.time.normalized_total)
       << ',' << format_double(r.mean_depth) << ',' << format_double(r.mean_v) << ','
       << r.prompts << ',' << r.cycles << ',' << r.tokens << ',' << r.seed << ','
       << to_string(r.mode) << ',' << format_double(r.temperature) << ',' << r.config_hash
       << '\n';
  }
}

std::vector<EvalReport> read_reports_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kReportHeader) {
    throw std::runtime_error("report csv: unexpected header");
  }
  std::vector<EvalReport> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 18) throw std::runtime_error("report csv: expected 18 columns");
    EvalReport r;
    r.method = c[0];
    r.speedup = parse_double(c[1]);
    r.tau = parse_double(c[2]);
    r.throughput = parse_double(c[3]);
    r.time.draft_share = parse_double(c[4]);
    r.time.verify_share = parse_double(c[5]);
    r.time.overhead_share = parse_double(c[6]);
    r.time.total = parse_double(c[7]);
    r.time.normalized_total = parse_double(c[8]);
    r.mean_depth = parse_double(c[9]);
    r.mean_v = parse_double(c[10]);
    r.prompts = std::stoull(c[11]);
    r.cycles = std::stoull(c[12]);
    r.tokens = std::stoull(c[13]);
    r.seed = std::stoull(c[14]);
    r.mode = parse_decode_mode(c[15]);
    r.temperature = parse_double(c[16]);
    r.config_hash = c[17];
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"method", r.method},
          {"speedup", r.speedup},
          {"tau", r.tau},
          {"throughput", r.throughput},
          {"draft_share", r.time.draft_share},
          {"verify_share", r.time.verify_share},
          {"overhead_share", r.time.overhead_share},
          {"total_time", r.time.total},
          {"normalized_total", r.time.normalized_total},
          {"mean_depth", r.mean_depth},
          {"mean_v", r.mean_v},
          {"prompts", r.prompts},
          {"cycles", r.cycles},
          {"tokens", r.tokens},
          {"seed", r.seed},
          {"mode", to_string(r.mode)},
          {"temperature", r.temperature},
          {"config_hash", r.config_hash}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  r.speedup = j.at("speedup").get<double>();
  r.tau = j.at("tau").get<double>();
  r.throughput = j.at("throughput").get<double>();
  r.time.draft_share = j.at("draft_share").get<double>();
  r.time.verify_share = j.at("verify_share").get<double>();
  r.time.overhead_share = j.at("overhead_share").get<double>();
  r.time.total = j.at("total_time").get<double>();
  r.time.normalized_total = j.at("normalized_total").get<double>();
  r.mean_depth = j.at("mean_depth").get<double>();
  r.mean_v = j.at("mean_v").get<double>();
  r.prompts = j.at("prompts").get<std::size_t>();
  r.cycles = j.at("cycles").get<std::size_t>();
  r.tokens = j.at("tokens").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.mode = parse_decode_mode(j.at("mode").get<std::string>());
  r.temperature = j.at("temperature").get<double>();
  r.config_hash = j.at("config_hash").get<std::string>();
  return r;
}

void write_trace_jsonl(const std::vector<TraceRecord>& trace, std::ostream& os) {
  for (const TraceRecord& r : trace) {
    nlohmann::json j = to_json(r.outcome);
    j["prompt"] = r.prompt;
    j["cycle"] = r.cycle;
    os << j.dump() << '\n';
  }
}

std::vector<TraceRecord> read_trace_jsonl(std::istream& is) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("prompt").get<std::size_t>(), j.at("cycle").get<std::size_t>(),
                     cycle_from_json(j)});
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ltd
