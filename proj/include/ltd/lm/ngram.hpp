#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ltd/lm/vocabulary.hpp"

namespace ltd {

// Controls how far a draft model drifts from the target it is derived from.
struct DraftVariantConfig {
  int order_delta = 0;
  double extra_smoothing = 0.0;
  double temperature = 1.0;
};

struct TokenProb {
  TokenId token;
  double prob;
};

// Additively smoothed n-gram model with stupid-backoff (factor 1) to the
// longest seen context. Immutable after training; safe to share across
// threads.
class NGramModel {
 public:
  static NGramModel train(std::span<const TokenId> corpus, int order, double alpha,
                          std::shared_ptr<const Vocabulary> vocab);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  // Multiplies every caller-supplied temperature (1 for trained models).
  double base_temperature() const { return base_temperature_; }
  const Vocabulary& vocab() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_->size(); }
  TokenId eos_id() const { return vocab_->eos_id(); }
  std::size_t context_window() const { return static_cast<std::size_t>(order_ - 1); }

  // Smoothed P(. | context) with logits rescaled by 1/temperature.
  std::vector<double> next_distribution(std::span<const TokenId> context,
                                        double temperature = 1.0) const;
  // Highest-probability k tokens of next_distribution (descending, ties by
  // token id) without materializing the full vector.
  std::vector<TokenProb> top_k(std::span<const TokenId> context, std::size_t k,
                               double temperature = 1.0) const;
  // Argmax of next_distribution at T = 1, lowest id on ties.
  TokenId greedy_next(std::span<const TokenId> context) const;
  double entropy(std::span<const TokenId> context, double temperature = 1.0) const;

  // Raw count(context, token) at the model's full order, for tests.
  std::uint64_t count(std::span<const TokenId> context, TokenId token) const;

  void save(std::ostream& os) const;
  static NGramModel load(std::istream& is);
  bool operator==(const NGramModel& other) const;

 private:
  friend NGramModel make_draft_variant(const NGramModel&, const DraftVariantConfig&,
                                       std::span<const TokenId>);

  struct ContextCounts {
    std::uint64_t total = 0;
    std::vector<std::pair<TokenId, std::uint32_t>> counts;  // sorted by token
    std::vector<std::uint32_t> by_count;  // indices into counts, count desc then token
    bool operator==(const ContextCounts& o) const { return total == o.total && counts == o.counts; }
    void rank();
  };
  using Table = std::unordered_map<std::uint64_t, ContextCounts>;

  std::uint64_t key(std::span<const TokenId> ctx) const;
  // Longest seen suffix of context, at most order - 1 tokens.
  const ContextCounts& lookup(std::span<const TokenId> context) const;
  double effective_temperature(double temperature) const;

  int order_ = 1;
  double alpha_ = 0.0;
  double base_temperature_ = 1.0;
  std::shared_ptr<const Vocabulary> vocab_;
  std::vector<Table> tables_;  // tables_[k]: contexts of length k
};

// Retrains on the corpus with order - order_delta and alpha + extra_smoothing;
// the variant's temperature multiplies every query temperature.
NGramModel make_draft_variant(const NGramModel& target, const DraftVariantConfig& cfg,
                              std::span<const TokenId> corpus);

}  // namespace ltd
