#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "ltd/env/env.hpp"
#include "ltd/env/evaluate.hpp"

namespace ltd {

struct HeuristicConfig {
  std::vector<int> ddd_checkpoints = {5, 7, 9};
  double ddd_threshold = -0.3;
  double svip_entropy_factor = 0.15;
  double svip_min_entropy = 0.3;
  int gt_gamma_min = 4;
  int gt_gamma_max = 12;
  double gt_eta = 0.2;
  int default_depth = 8;
  std::size_t default_v = 60;
  int grid_depth_min = 4;
  int grid_depth_max = 12;
  std::size_t grid_v_min = 40;
  std::size_t grid_v_max = 240;
  std::size_t grid_v_step = 20;

  void validate() const;
};

// Drafts until the tree reaches depth D; D = 1 never speculates.
class FixedDepth final : public DepthController {
 public:
  explicit FixedDepth(int depth);
  bool begin_cycle(std::size_t, Rng&) override { return depth_ >= 2; }
  bool should_continue(const DepthQuery& q, Rng&) override { return q.tree.depth() < depth_; }
  int depth() const { return depth_; }

 private:
  int depth_;
};

// Depth drawn uniformly from [lo, hi] at the start of every cycle.
class RandomDepth final : public DepthController {
 public:
  RandomDepth(int lo, int hi);
  bool begin_cycle(std::size_t, Rng& rng) override;
  bool should_continue(const DepthQuery& q, Rng&) override { return q.tree.depth() < current_; }

 private:
  int lo_, hi_, current_ = 1;
};

class ConstantSize final : public SizeController {
 public:
  explicit ConstantSize(std::size_t v);
  std::size_t choose_v(const SizeQuery&, Rng&) override { return v_; }

 private:
  std::size_t v_;
};

// Level index of the frontier is depth - 1.
bool ddd_stop(double best_cum_logprob, int frontier_level, const HeuristicConfig& cfg);
bool svip_stop(double entropy, std::size_t vocab_size, const HeuristicConfig& cfg);
int gammatune_update(int gamma, std::size_t accepted, const HeuristicConfig& cfg);

class DddDepth final : public DepthController {
 public:
  explicit DddDepth(HeuristicConfig cfg) : cfg_(std::move(cfg)) {}
  bool should_continue(const DepthQuery& q, Rng&) override;

 private:
  HeuristicConfig cfg_;
};

// Stops when the draft's next-token entropy at the best frontier node is high.
class SvipDepth final : public DepthController {
 public:
  explicit SvipDepth(HeuristicConfig cfg) : cfg_(std::move(cfg)) {}
  bool should_continue(const DepthQuery& q, Rng&) override;

 private:
  HeuristicConfig cfg_;
};

class GammatuneDepth final : public DepthController {
 public:
  explicit GammatuneDepth(HeuristicConfig cfg);
  bool should_continue(const DepthQuery& q, Rng&) override { return q.tree.depth() < gamma_; }
  void end_cycle(const CycleOutcome& outcome) override;
  void begin_episode() override { gamma_ = cfg_.default_depth; }
  int gamma() const { return gamma_; }

 private:
  HeuristicConfig cfg_;
  int gamma_;
};

struct GridCell {
  int depth = 0;
  std::size_t v = 0;
  double throughput = 0.0;
  double speedup = 0.0;
  double tau = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;  // depth-major, V ascending
  GridCell best;
};

// Evaluates fixed(D, V) over the configured grid. Ties on throughput go to
// the smaller V, then the smaller D.
GridResult grid_search(const Workload& w, const EnvConfig& env, const HeuristicConfig& cfg,
                       const PromptSet& prompts, std::uint64_t seed);
void write_grid_csv(const GridResult& g, std::ostream& os);

}  // namespace ltd
