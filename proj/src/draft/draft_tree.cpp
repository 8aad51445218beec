#include "ltd/draft/draft_tree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ltd/util/text_io.hpp"

namespace ltd {

void DraftConfig::validate() const {
  if (beam_width < 1) throw std::invalid_argument("beam width must be >= 1");
  if (max_depth < 2 || max_depth > 12) throw std::invalid_argument("max depth must be in [2, 12]");
  if (!(temperature > 0.0)) throw std::invalid_argument("draft temperature must be positive");
}

std::size_t candidate_count(std::size_t beam_width, int depth) {
  if (depth <= 1) return 1;
  const auto rounds = static_cast<std::size_t>(depth - 2);
  return 1 + beam_width + rounds * beam_width * beam_width;
}

bool ranks_before(const DraftTree& tree, int a, int b) {
  const DraftNode& na = tree.node(a);
  const DraftNode& nb = tree.node(b);
  if (na.score != nb.score) return na.score > nb.score;
  if (na.level != nb.level) return na.level < nb.level;
  if (na.token != nb.token) return na.token < nb.token;
  return a < b;
}

DraftTree DraftTree::root_only(TokenId root) {
  DraftTree t;
  t.nodes_.push_back({root, -1, 0, 0.0});
  t.depth_ = 1;
  return t;
}

DraftTree DraftTree::init(std::span<const TokenId> context, const NGramModel& draft,
                          const DraftConfig& cfg) {
  cfg.validate();
  if (context.empty()) throw std::invalid_argument("draft tree needs a root token");
  DraftTree t = root_only(context.back());
  t.max_depth_ = cfg.max_depth;
  t.beam_width_ = cfg.beam_width;
  t.temperature_ = cfg.temperature;
  const auto top = draft.top_k(context.last(std::min(context.size(), draft.context_window())),
                               cfg.beam_width, cfg.temperature);
  for (const TokenProb& tp : top) {
    t.frontier_.push_back(static_cast<int>(t.nodes_.size()));
    t.nodes_.push_back({tp.token, 0, 1, std::log(tp.prob)});
  }
  t.last_pool_ = t.frontier_;
  t.level_widths_.push_back(top.size());
  t.depth_ = 2;
  return t;
}

std::vector<TokenId> DraftTree::node_context(std::span<const TokenId> context, int i,
                                             std::size_t window) const {
  std::vector<TokenId> path = path_tokens(i);
  std::vector<TokenId> ctx;
  const std::size_t from_context = window > path.size() ? window - path.size() : 0;
  const std::size_t take = std::min(from_context, context.size());
  ctx.reserve(take + path.size());
  ctx.insert(ctx.end(), context.end() - static_cast<std::ptrdiff_t>(take), context.end());
  ctx.insert(ctx.end(), path.begin(), path.end());
  return ctx;
}

void DraftTree::expand(std::span<const TokenId> context, const NGramModel& draft) {
  if (depth_ < 2) throw std::logic_error("draft tree not initialized");
  if (depth_ >= max_depth_) throw std::logic_error("max depth reached");
  std::vector<int> pool;
  pool.reserve(frontier_.size() * beam_width_);
  for (int parent : frontier_) {
    const auto ctx = node_context(context, parent, draft.context_window());
    const auto top = draft.top_k(ctx, beam_width_, temperature_);
    const DraftNode p = nodes_[static_cast<std::size_t>(parent)];
    for (const TokenProb& tp : top) {
      pool.push_back(static_cast<int>(nodes_.size()));
      nodes_.push_back({tp.token, parent, p.level + 1, p.score + std::log(tp.prob)});
    }
  }
  std::vector<int> ranked = pool;
  const std::size_t keep = std::min(ranked.size(), beam_width_);
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                    ranked.end(), [this](int a, int b) { return ranks_before(*this, a, b); });
  ranked.resize(keep);
  frontier_ = std::move(ranked);
  level_widths_.push_back(keep);
  last_pool_ = std::move(pool);
  ++depth_;
}

std::vector<TokenId> DraftTree::path_tokens(int i) const {
  std::vector<TokenId> path;
  while (i > 0) {
    const DraftNode& n = nodes_[static_cast<std::size_t>(i)];
    path.push_back(n.token);
    i = n.parent;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::string DraftTree::dump_text(const Vocabulary* vocab) const {
  std::vector<std::vector<int>> children(nodes_.size());
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    children[static_cast<std::size_t>(nodes_[i].parent)].push_back(static_cast<int>(i));
  }
  std::ostringstream os;
  os << "depth " << depth_ << " nodes " << nodes_.size() << '\n';
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const DraftNode& n = nodes_[static_cast<std::size_t>(i)];
    os << std::string(static_cast<std::size_t>(n.level) * 2, ' ') << '#' << i << ' ';
    if (vocab != nullptr) {
      os << '"' << escape_token(vocab->token(n.token)) << '"';
    } else {
      os << n.token;
    }
    os << ' ' << n.score << '\n';
    const auto& ch = children[static_cast<std::size_t>(i)];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return os.str();
}

nlohmann::json DraftTree::dump_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const DraftNode& n = nodes_[i];
    nodes.push_back({{"id", i}, {"token", n.token}, {"parent", n.parent}, {"level", n.level},
                     {"score", n.score}});
  }
  return {{"depth", depth_}, {"beam_width", beam_width_}, {"frontier", frontier_},
          {"nodes", std::move(nodes)}};
}

CandidateSet CandidateSet::select_top_v(const DraftTree& tree, std::size_t v) {
  if (v < 1) throw std::invalid_argument("verification size must be >= 1");
  CandidateSet cs;
  cs.tree_ = &tree;
  const std::size_t n = tree.v_all();
  cs.member_.assign(n, 0);
  cs.member_[0] = 1;
  const std::size_t budget = std::min(v, n) - 1;

  std::vector<std::vector<int>> children(n);
  for (std::size_t i = 1; i < n; ++i) {
    children[static_cast<std::size_t>(tree.node(static_cast<int>(i)).parent)].push_back(
        static_cast<int>(i));
  }
  // Max-heap on ranks_before.
  auto worse = [&tree](int a, int b) { return ranks_before(tree, b, a); };
  std::priority_queue<int, std::vector<int>, decltype(worse)> available(worse);
  for (int c : children[0]) available.push(c);
  while (cs.selected_.size() < budget && !available.empty()) {
    const int best = available.top();
    available.pop();
    cs.member_[static_cast<std::size_t>(best)] = 1;
    cs.selected_.push_back(best);
    for (int c : children[static_cast<std::size_t>(best)]) available.push(c);
  }
  std::sort(cs.selected_.begin(), cs.selected_.end());
  return cs;
}

bool CandidateSet::contains(int node) const {
  return node >= 0 && static_cast<std::size_t>(node) < member_.size() &&
         member_[static_cast<std::size_t>(node)] != 0;
}

std::vector<int> CandidateSet::children_of(int node) const {
  std::vector<int> out;
  for (int s : selected_) {
    if (tree_->node(s).parent == node) out.push_back(s);
  }
  return out;
}

CandidateSet::Flat CandidateSet::flatten() const {
  Flat flat;
  std::vector<int> position(member_.size(), -1);
  for (std::size_t pos = 0; pos < selected_.size(); ++pos) {
    const int s = selected_[pos];
    position[static_cast<std::size_t>(s)] = static_cast<int>(pos);
    const DraftNode& n = tree_->node(s);
    flat.tokens.push_back(n.token);
    flat.parents.push_back(n.parent == 0 ? -1 : position[static_cast<std::size_t>(n.parent)]);
  }
  return flat;
}

std::vector<std::vector<bool>> CandidateSet::tree_mask() const {
  const Flat flat = flatten();
  const std::size_t n = flat.tokens.size();
  std::vector<std::vector<bool>> mask(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = static_cast<int>(i); j >= 0; j = flat.parents[static_cast<std::size_t>(j)]) {
      mask[i][static_cast<std::size_t>(j)] = true;
    }
  }
  return mask;
}

}  // namespace ltd
