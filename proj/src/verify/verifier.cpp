#include "ltd/verify/verifier.hpp"

#include <algorithm>
#include <stdexcept>

namespace ltd {
namespace {

template <typename NextToken>
VerifyOutcome walk(const CandidateSet& cs, const NGramModel& target,
                   std::span<const TokenId> context, NextToken next_token) {
  const DraftTree& tree = cs.tree();
  const std::size_t window = target.context_window();
  std::vector<TokenId> ctx(context.end() - static_cast<std::ptrdiff_t>(
                                               std::min(window, context.size())),
                           context.end());
  VerifyOutcome out;
  int node = 0;
  for (;;) {
    const TokenId t = next_token(std::span<const TokenId>(ctx));
    out.accepted_tokens.push_back(t);
    if (t == target.eos_id()) {
      out.ended = true;
      break;
    }
    int match = -1;
    for (int child : cs.children_of(node)) {
      if (tree.node(child).token == t) {
        match = child;
        break;
      }
    }
    if (match < 0) break;
    node = match;
    ctx.push_back(t);
    if (ctx.size() > window) ctx.erase(ctx.begin());
  }
  return out;
}

}  // namespace

VerifyOutcome verify_greedy(const CandidateSet& cs, const NGramModel& target,
                            std::span<const TokenId> context) {
  return walk(cs, target, context,
              [&target](std::span<const TokenId> ctx) { return target.greedy_next(ctx); });
}

VerifyOutcome verify_sampling(const CandidateSet& cs, const NGramModel& target,
                              std::span<const TokenId> context, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  return walk(cs, target, context, [&](std::span<const TokenId> ctx) {
    const auto p = target.next_distribution(ctx, temperature);
    return sample_from(p, rng);
  });
}

TokenId sample_from(std::span<const double> probs, Rng& rng) {
  // 53-bit uniform in [0, 1) so the draw is identical across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last_positive);
}

}  // namespace ltd
