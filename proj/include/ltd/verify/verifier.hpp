#pragma once

#include <random>
#include <span>
#include <vector>

#include "ltd/draft/draft_tree.hpp"
#include "ltd/lm/ngram.hpp"

namespace ltd {

using Rng = std::mt19937_64;

struct VerifyOutcome {
  // Accepted draft tokens followed by the target's correction/bonus token
  // (or ending at eos).
  std::vector<TokenId> accepted_tokens;
  bool ended = false;  // eos was emitted

  std::size_t accepted_count() const { return accepted_tokens.size(); }  // L_A
};

// Walks the candidate set from the root, accepting a draft child whenever it
// equals the target's greedy token. context ends with the root token.
VerifyOutcome verify_greedy(const CandidateSet& cs, const NGramModel& target,
                            std::span<const TokenId> context);

// Same walk with the target token sampled at the given temperature. The
// emitted tokens follow the target's own sampling law.
VerifyOutcome verify_sampling(const CandidateSet& cs, const NGramModel& target,
                              std::span<const TokenId> context, double temperature, Rng& rng);

TokenId sample_from(std::span<const double> probs, Rng& rng);

}  // namespace ltd
