#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "ltd/lm/ngram.hpp"
#include "ltd/lm/vocabulary.hpp"

namespace ltd {

struct CorpusConfig {
  std::string path = "data/corpus.txt";
  std::size_t vocab_size = 512;
  int target_order = 4;
  double alpha = 0.01;
  DraftVariantConfig draft = {1, 0.5, 1.0};
  // Documents are assigned round-robin: index % split_mod == val_slot goes to
  // validation, == test_slot to test, the rest to training.
  std::size_t split_mod = 8;
  std::size_t val_slot = 6;
  std::size_t test_slot = 7;
  // A prompt is a document prefix ending at offset first_offset + k * stride
  // (at least min_tail tokens before the document end), clipped to its last
  // max_prompt_len tokens.
  std::size_t first_offset = 16;
  std::size_t stride = 48;
  std::size_t min_tail = 16;
  std::size_t max_prompt_len = 1024;
  std::size_t max_train_prompts = 4096;
  std::size_t max_val_prompts = 48;
  std::size_t max_test_prompts = 240;

  void validate() const;
};

using PromptSet = std::vector<std::vector<TokenId>>;

// Vocabulary, models trained on the training documents, and prompt splits.
struct Workload {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const NGramModel> target;
  std::shared_ptr<const NGramModel> draft;
  PromptSet train_prompts;
  PromptSet val_prompts;
  PromptSet test_prompts;
};

Workload build_workload(const CorpusConfig& cfg);
Workload build_workload_from_text(const std::string& text, const CorpusConfig& cfg);

// Every prompt of the documents, in document order.
PromptSet make_prompts(const std::vector<std::vector<TokenId>>& docs, const CorpusConfig& cfg,
                       std::size_t limit);

}  // namespace ltd
