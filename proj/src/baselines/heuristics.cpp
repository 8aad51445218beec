#include "ltd/baselines/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ltd/util/text_io.hpp"

namespace ltd {

void HeuristicConfig::validate() const {
  if (!std::isfinite(ddd_threshold) || !std::isfinite(svip_entropy_factor) ||
      !std::isfinite(svip_min_entropy) || !std::isfinite(gt_eta)) {
    throw std::invalid_argument("baselines thresholds must be finite");
  }
  if (!(gt_gamma_min <= default_depth && default_depth <= gt_gamma_max)) {
    throw std::invalid_argument("baselines require gt_gamma_min <= default_depth <= gt_gamma_max");
  }
  if (gt_gamma_min < 1 || gt_gamma_max > 12) {
    throw std::invalid_argument("baselines gammatune bounds must lie in [1, 12]");
  }
  if (grid_depth_min < 1 || grid_depth_max > 12 || grid_depth_min > grid_depth_max) {
    throw std::invalid_argument("baselines grid depths must lie in [1, 12]");
  }
  if (grid_v_step < 1 || grid_v_min < 1 || grid_v_min > grid_v_max) {
    throw std::invalid_argument("baselines grid V range is invalid");
  }
}

FixedDepth::FixedDepth(int depth) : depth_(depth) {
  if (depth < 1 || depth > 12) throw std::out_of_range("fixed depth must be in [1, 12]");
}

RandomDepth::RandomDepth(int lo, int hi) : lo_(lo), hi_(hi) {
  if (lo < 1 || hi > 12 || lo > hi) throw std::out_of_range("random depth range must lie in [1, 12]");
}

bool RandomDepth::begin_cycle(std::size_t, Rng& rng) {
  const auto span = static_cast<std::uint64_t>(hi_ - lo_ + 1);
  current_ = lo_ + static_cast<int>(rng() % span);
  return current_ >= 2;
}

ConstantSize::ConstantSize(std::size_t v) : v_(v) {
  if (v < 1) throw std::out_of_range("verification size must be >= 1");
}

bool ddd_stop(double best_cum_logprob, int frontier_level, const HeuristicConfig& cfg) {
  const bool checkpoint = std::find(cfg.ddd_checkpoints.begin(), cfg.ddd_checkpoints.end(),
                                    frontier_level) != cfg.ddd_checkpoints.end();
  return checkpoint && best_cum_logprob < cfg.ddd_threshold;
}

bool svip_stop(double entropy, std::size_t vocab_size, const HeuristicConfig& cfg) {
  const double threshold = std::max(
      cfg.svip_min_entropy, cfg.svip_entropy_factor * std::log(static_cast<double>(vocab_size)));
  return entropy > threshold;
}

int gammatune_update(int gamma, std::size_t accepted, const HeuristicConfig& cfg) {
  const double next = gamma + cfg.gt_eta * (static_cast<double>(accepted) - gamma);
  return std::clamp(static_cast<int>(std::lround(next)), cfg.gt_gamma_min, cfg.gt_gamma_max);
}

bool DddDepth::should_continue(const DepthQuery& q, Rng&) {
  const DraftNode& best = q.tree.node(q.tree.frontier().front());
  return !ddd_stop(best.score, best.level, cfg_);
}

bool SvipDepth::should_continue(const DepthQuery& q, Rng&) {
  const int best = q.tree.frontier().front();
  const auto ctx = q.tree.node_context(q.context, best, q.draft.context_window());
  return !svip_stop(q.draft.entropy(ctx), q.draft.vocab_size(), cfg_);
}

GammatuneDepth::GammatuneDepth(HeuristicConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  gamma_ = cfg_.default_depth;
}

void GammatuneDepth::end_cycle(const CycleOutcome& outcome) {
  gamma_ = gammatune_update(gamma_, outcome.accepted, cfg_);
}

GridResult grid_search(const Workload& w, const EnvConfig& env, const HeuristicConfig& cfg,
                       const PromptSet& prompts, std::uint64_t seed) {
  cfg.validate();
  GridResult g;
  for (int d = cfg.grid_depth_min; d <= cfg.grid_depth_max; ++d) {
    for (std::size_t v = cfg.grid_v_min; v <= cfg.grid_v_max; v += cfg.grid_v_step) {
      FixedDepth depth(d);
      ConstantSize size(v);
      const EvalStats s = evaluate_controllers(w, env, prompts, {&depth, &size}, seed);
      g.cells.push_back({d, v, s.throughput(), s.speedup(), s.tau()});
    }
  }
  auto better = [](const GridCell& a, const GridCell& b) {
    if (a.throughput != b.throughput) return a.throughput > b.throughput;
    if (a.v != b.v) return a.v < b.v;
    return a.depth < b.depth;
  };
  g.best = *std::min_element(g.cells.begin(), g.cells.end(), better);
  return g;
}

void write_grid_csv(const GridResult& g, std::ostream& os) {
  os << "D,V,throughput,speedup,tau\n";
  for (const GridCell& c : g.cells) {
    os << c.depth << ',' << c.v << ',' << format_double(c.throughput) << ','
       << format_double(c.speedup) << ',' << format_double(c.tau) << '\n';
  }
}

}  // namespace ltd
