#include "ltd/env/workload.hpp"

#include <algorithm>
#include <stdexcept>

#include "ltd/util/text_io.hpp"

namespace ltd {

void CorpusConfig::validate() const {
  if (vocab_size < 3) throw std::invalid_argument("corpus.vocab_size must be >= 3");
  if (target_order < 1) throw std::invalid_argument("corpus.target_order must be >= 1");
  if (split_mod < 3 || val_slot >= split_mod || test_slot >= split_mod || val_slot == test_slot) {
    throw std::invalid_argument("corpus split slots are invalid");
  }
  if (stride < 1 || first_offset < 1 || max_prompt_len < 1) {
    throw std::invalid_argument("corpus prompt layout is invalid");
  }
}

PromptSet make_prompts(const std::vector<std::vector<TokenId>>& docs, const CorpusConfig& cfg,
                       std::size_t limit) {
  PromptSet out;
  for (const auto& doc : docs) {
    for (std::size_t end = cfg.first_offset; end + cfg.min_tail <= doc.size();
         end += cfg.stride) {
      if (out.size() >= limit) return out;
      const std::size_t begin = end > cfg.max_prompt_len ? end - cfg.max_prompt_len : 0;
      out.emplace_back(doc.begin() + static_cast<std::ptrdiff_t>(begin),
                       doc.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return out;
}

Workload build_workload_from_text(const std::string& text, const CorpusConfig& cfg) {
  cfg.validate();
  Workload w;
  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::build(text, cfg.vocab_size));
  w.vocab = vocab;

  std::vector<std::vector<TokenId>> train_docs, val_docs, test_docs;
  const auto docs = split_documents(text);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::vector<TokenId> ids = vocab->encode(docs[i]);
    ids.push_back(vocab->eos_id());
    const std::size_t slot = i % cfg.split_mod;
    auto& dst = slot == cfg.val_slot ? val_docs : slot == cfg.test_slot ? test_docs : train_docs;
    dst.push_back(std::move(ids));
  }
  std::vector<TokenId> train_stream;
  for (const auto& d : train_docs) train_stream.insert(train_stream.end(), d.begin(), d.end());

  auto target = std::make_shared<NGramModel>(
      NGramModel::train(train_stream, cfg.target_order, cfg.alpha, vocab));
  w.draft = std::make_shared<const NGramModel>(make_draft_variant(*target, cfg.draft, train_stream));
  w.target = std::move(target);

  w.train_prompts = make_prompts(train_docs, cfg, cfg.max_train_prompts);
  w.val_prompts = make_prompts(val_docs, cfg, cfg.max_val_prompts);
  w.test_prompts = make_prompts(test_docs, cfg, cfg.max_test_prompts);
  return w;
}

Workload build_workload(const CorpusConfig& cfg) {
  return build_workload_from_text(read_file(cfg.path), cfg);
}

}  // namespace ltd
