#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltd/lm/ngram.hpp"

namespace ltd {

struct DraftConfig {
  std::size_t beam_width = 10;  // W
  int max_depth = 12;           // D_max
  double temperature = 1.0;

  void validate() const;
};

struct DraftNode {
  TokenId token = 0;
  int parent = -1;  // -1 for the root
  int level = 0;
  double score = 0.0;  // cumulative path log-probability
};

// Node count of a finished tree: 1 + W + (D - 2) W^2 for D >= 2; the
// root-only tree (D = 1) has a single node.
std::size_t candidate_count(std::size_t beam_width, int depth);

// Beam-expanded draft tree. Node 0 is the root (the last committed token);
// parents always precede their children.
class DraftTree {
 public:
  // D = 1: no speculation.
  static DraftTree root_only(TokenId root);
  // One draft pass from the root: its top-W children become the frontier,
  // D = 2. The root is context.back().
  static DraftTree init(std::span<const TokenId> context, const NGramModel& draft,
                        const DraftConfig& cfg);
  // One draft pass from every frontier node: W children each (W^2 pool), the
  // W best pool nodes by cumulative score become the frontier, D += 1.
  // Throws std::logic_error("max depth reached") at D_max.
  void expand(std::span<const TokenId> context, const NGramModel& draft);

  int depth() const { return depth_; }
  int max_depth() const { return max_depth_; }
  std::size_t draft_passes() const { return static_cast<std::size_t>(depth_ - 1); }
  std::size_t beam_width() const { return beam_width_; }
  std::size_t v_all() const { return nodes_.size(); }
  const std::vector<DraftNode>& nodes() const { return nodes_; }
  const DraftNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  const std::vector<int>& frontier() const { return frontier_; }
  // Nodes created by the most recent draft pass (W at D = 2, W^2 after).
  const std::vector<int>& last_pool() const { return last_pool_; }
  // Effective beam width (min(W, |V|)) used at each level, level 1 first.
  const std::vector<std::size_t>& level_widths() const { return level_widths_; }

  // Tokens from the first level down to node i (root excluded).
  std::vector<TokenId> path_tokens(int i) const;

  // Model input for extending node i: the last `window` tokens of the
  // committed context followed by the node's path.
  std::vector<TokenId> node_context(std::span<const TokenId> context, int i,
                                    std::size_t window) const;

  std::string dump_text(const Vocabulary* vocab = nullptr) const;
  nlohmann::json dump_json() const;

 private:

  std::vector<DraftNode> nodes_;
  std::vector<int> frontier_;
  std::vector<int> last_pool_;
  std::vector<std::size_t> level_widths_;
  int depth_ = 1;
  int max_depth_ = 12;
  std::size_t beam_width_ = 1;
  double temperature_ = 1.0;
};

// Score order used everywhere a ranking is needed: higher score, then lower
// level, then lower token id, then lower node index.
bool ranks_before(const DraftTree& tree, int a, int b);

// V verification slots: the root plus V - 1 draft nodes chosen greedily as
// the best-ranked node whose parent is already chosen. Ancestor-closed and
// stored in index (topological) order.
class CandidateSet {
 public:
  static CandidateSet select_top_v(const DraftTree& tree, std::size_t v);

  // Selected draft nodes, root excluded, ascending node index.
  const std::vector<int>& selected() const { return selected_; }
  // Slots used in the verification pass, root included.
  std::size_t size() const { return selected_.size() + 1; }
  const DraftTree& tree() const { return *tree_; }
  // Selected children of a node (root = 0), in ascending index.
  std::vector<int> children_of(int node) const;
  bool contains(int node) const;

  struct Flat {
    std::vector<TokenId> tokens;
    std::vector<int> parents;  // position in tokens, -1 = attached to the root
  };
  Flat flatten() const;
  // mask[i][j]: flattened position i attends to position j (j is i or an
  // ancestor of i).
  std::vector<std::vector<bool>> tree_mask() const;

 private:
  const DraftTree* tree_ = nullptr;
  std::vector<int> selected_;
  std::vector<char> member_;
};

}  // namespace ltd
