#include "ltd/lm/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ltd/util/text_io.hpp"

namespace ltd {

namespace {
constexpr std::string_view kModelMagic = "ltd-ngram";
constexpr int kModelVersion = 1;
}  // namespace

void NGramModel::ContextCounts::rank() {
  by_count.resize(counts.size());
  for (std::uint32_t i = 0; i < by_count.size(); ++i) by_count[i] = i;
  std::stable_sort(by_count.begin(), by_count.end(), [this](std::uint32_t a, std::uint32_t b) {
    return counts[a].second > counts[b].second;
  });
}

NGramModel NGramModel::train(std::span<const TokenId> corpus, int order, double alpha,
                             std::shared_ptr<const Vocabulary> vocab) {
  if (order < 1) throw std::invalid_argument("ngram order must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("ngram alpha must be finite and >= 0");
  }
  if (!vocab) throw std::invalid_argument("ngram requires a vocabulary");
  if (corpus.size() < static_cast<std::size_t>(order)) {
    throw std::invalid_argument("corpus shorter than ngram order");
  }
  const auto v = static_cast<std::uint64_t>(vocab->size());
  // Context keys are base-|V| packed into 64 bits.
  long double capacity = 1.0L;
  for (int i = 0; i < order - 1; ++i) capacity *= static_cast<long double>(v);
  if (capacity > 1.8e19L) throw std::invalid_argument("ngram order too high for vocabulary size");
  for (TokenId t : corpus) {
    if (t < 0 || static_cast<std::uint64_t>(t) >= v) {
      throw std::invalid_argument("corpus token outside vocabulary");
    }
  }

  NGramModel m;
  m.order_ = order;
  m.alpha_ = alpha;
  m.vocab_ = std::move(vocab);
  m.tables_.resize(static_cast<std::size_t>(order));
  for (std::size_t k = 0; k < m.tables_.size(); ++k) {
    std::vector<std::pair<std::uint64_t, TokenId>> events;
    events.reserve(corpus.size());
    for (std::size_t i = k; i < corpus.size(); ++i) {
      events.emplace_back(m.key(corpus.subspan(i - k, k)), corpus[i]);
    }
    std::sort(events.begin(), events.end());
    Table& table = m.tables_[k];
    for (std::size_t i = 0; i < events.size();) {
      std::size_t j = i;
      while (j < events.size() && events[j] == events[i]) ++j;
      ContextCounts& cc = table[events[i].first];
      cc.counts.emplace_back(events[i].second, static_cast<std::uint32_t>(j - i));
      cc.total += j - i;
      i = j;
    }
    for (auto& [key, cc] : table) cc.rank();
  }
  return m;
}

std::uint64_t NGramModel::key(std::span<const TokenId> ctx) const {
  const auto v = static_cast<std::uint64_t>(vocab_->size());
  std::uint64_t k = 0;
  for (TokenId t : ctx) k = k * v + static_cast<std::uint64_t>(t);
  return k;
}

const NGramModel::ContextCounts& NGramModel::lookup(std::span<const TokenId> context) const {
  std::size_t k = std::min(context_window(), context.size());
  for (;; --k) {
    const Table& table = tables_[k];
    auto it = table.find(key(context.last(k)));
    if (it != table.end()) return it->second;
    if (k == 0) break;
  }
  throw std::logic_error("ngram unigram table is empty");
}

double NGramModel::effective_temperature(double temperature) const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be positive");
  }
  return temperature * base_temperature_;
}

std::vector<double> NGramModel::next_distribution(std::span<const TokenId> context,
                                                  double temperature) const {
  const double t = effective_temperature(temperature);
  const ContextCounts& cc = lookup(context);
  const double nv = static_cast<double>(vocab_size());
  const double denom = static_cast<double>(cc.total) + alpha_ * nv;
  std::vector<double> p(vocab_size(), alpha_ / denom);
  for (const auto& [tok, c] : cc.counts) p[static_cast<std::size_t>(tok)] = (c + alpha_) / denom;
  if (t != 1.0) {
    const double inv_t = 1.0 / t;
    for (double& x : p) x = x > 0.0 ? std::exp(std::log(x) * inv_t) : 0.0;
  }
  double z = 0.0;
  for (double x : p) z += x;
  for (double& x : p) x /= z;
  return p;
}

std::vector<TokenProb> NGramModel::top_k(std::span<const TokenId> context, std::size_t k,
                                         double temperature) const {
  const double t = effective_temperature(temperature);
  const ContextCounts& cc = lookup(context);
  const std::size_t nv = vocab_size();
  k = std::min(k, nv);
  const double denom = static_cast<double>(cc.total) + alpha_ * static_cast<double>(nv);
  auto rescale = [t](double p) {
    if (t == 1.0) return p;
    return p > 0.0 ? std::exp(std::log(p) / t) : 0.0;
  };

  auto seen = [&cc](std::size_t i) -> const std::pair<TokenId, std::uint32_t>& {
    return cc.counts[cc.by_count[i]];
  };
  const double unseen_p = rescale(alpha_ / denom);
  double z = unseen_p * static_cast<double>(nv - cc.counts.size());
  for (const auto& [tok, c] : cc.counts) z += rescale((c + alpha_) / denom);

  std::vector<TokenProb> out;
  out.reserve(k);
  std::size_t si = 0;
  TokenId next_unseen = 0;
  std::size_t sorted_pos = 0;  // walks cc.counts (sorted by id) to skip seen ids
  auto advance_unseen = [&]() {
    while (static_cast<std::size_t>(next_unseen) < nv) {
      while (sorted_pos < cc.counts.size() && cc.counts[sorted_pos].first < next_unseen) {
        ++sorted_pos;
      }
      if (sorted_pos < cc.counts.size() && cc.counts[sorted_pos].first == next_unseen) {
        ++next_unseen;
        continue;
      }
      break;
    }
  };
  advance_unseen();
  while (out.size() < k) {
    const bool have_seen = si < cc.counts.size();
    const bool have_unseen = static_cast<std::size_t>(next_unseen) < nv;
    const double seen_p = have_seen ? rescale((seen(si).second + alpha_) / denom) : -1.0;
    // Probability descending, then token id.
    bool take_seen = have_seen;
    if (have_seen && have_unseen) {
      take_seen = seen_p > unseen_p || (seen_p == unseen_p && seen(si).first < next_unseen);
    }
    if (take_seen) {
      out.push_back({seen(si).first, seen_p / z});
      ++si;
    } else {
      out.push_back({next_unseen, unseen_p / z});
      ++next_unseen;
      advance_unseen();
    }
  }
  return out;
}

TokenId NGramModel::greedy_next(std::span<const TokenId> context) const {
  const ContextCounts& cc = lookup(context);
  TokenId best = cc.counts.front().first;
  std::uint32_t best_c = cc.counts.front().second;
  for (const auto& [tok, c] : cc.counts) {
    if (c > best_c) {
      best = tok;
      best_c = c;
    }
  }
  return best;
}

double NGramModel::entropy(std::span<const TokenId> context, double temperature) const {
  double h = 0.0;
  for (double p : next_distribution(context, temperature)) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::uint64_t NGramModel::count(std::span<const TokenId> context, TokenId token) const {
  const std::size_t k = std::min(context_window(), context.size());
  auto it = tables_[k].find(key(context.last(k)));
  if (it == tables_[k].end()) return 0;
  for (const auto& [tok, c] : it->second.counts) {
    if (tok == token) return c;
  }
  return 0;
}

void NGramModel::save(std::ostream& os) const {
  os << kModelMagic << ' ' << kModelVersion << '\n';
  os << "order " << order_ << '\n';
  os << "alpha " << format_double(alpha_) << '\n';
  os << "temperature " << format_double(base_temperature_) << '\n';
  os << "vocab " << vocab_->size() << '\n';
  for (const auto& tok : vocab_->tokens()) os << escape_token(tok) << '\n';
  for (std::size_t k = 0; k < tables_.size(); ++k) {
    std::vector<std::uint64_t> keys;
    keys.reserve(tables_[k].size());
    for (const auto& [key, cc] : tables_[k]) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    os << "table " << k << ' ' << keys.size() << '\n';
    for (std::uint64_t key : keys) {
      const ContextCounts& cc = tables_[k].at(key);
      os << key << ' ' << cc.counts.size();
      for (const auto& [tok, c] : cc.counts) os << ' ' << tok << ':' << c;
      os << '\n';
    }
  }
  os << "end\n";
}

NGramModel NGramModel::load(std::istream& is) {
  auto fail = [](const std::string& what) -> void {
    throw std::runtime_error("ngram model file: " + what);
  };
  std::string word;
  int version = 0;
  if (!(is >> word >> version) || word != kModelMagic) fail("bad magic");
  if (version != kModelVersion) fail("unsupported version " + std::to_string(version));
  NGramModel m;
  std::string alpha_s, temp_s;
  std::size_t vsize = 0;
  if (!(is >> word >> m.order_) || word != "order") fail("missing order");
  if (!(is >> word >> alpha_s) || word != "alpha") fail("missing alpha");
  if (!(is >> word >> temp_s) || word != "temperature") fail("missing temperature");
  if (!(is >> word >> vsize) || word != "vocab") fail("missing vocab");
  m.alpha_ = parse_double(alpha_s);
  m.base_temperature_ = parse_double(temp_s);
  std::getline(is, word);
  std::vector<std::string> tokens(vsize);
  for (auto& tok : tokens) {
    std::string line;
    if (!std::getline(is, line)) fail("truncated vocabulary");
    tok = unescape_token(line);
  }
  m.vocab_ = std::make_shared<const Vocabulary>(Vocabulary::from_tokens(std::move(tokens)));
  m.tables_.resize(static_cast<std::size_t>(m.order_));
  for (std::size_t k = 0; k < m.tables_.size(); ++k) {
    std::size_t idx = 0, n = 0;
    if (!(is >> word >> idx >> n) || word != "table" || idx != k) fail("bad table header");
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t key = 0;
      std::size_t entries = 0;
      if (!(is >> key >> entries)) fail("bad table row");
      ContextCounts cc;
      for (std::size_t e = 0; e < entries; ++e) {
        TokenId tok = 0;
        char colon = 0;
        std::uint32_t c = 0;
        if (!(is >> tok >> colon >> c) || colon != ':') fail("bad count entry");
        cc.counts.emplace_back(tok, c);
        cc.total += c;
      }
      cc.rank();
      m.tables_[k].emplace(key, std::move(cc));
    }
  }
  if (!(is >> word) || word != "end") fail("missing end marker");
  return m;
}

bool NGramModel::operator==(const NGramModel& other) const {
  return order_ == other.order_ && alpha_ == other.alpha_ &&
         base_temperature_ == other.base_temperature_ &&
         vocab_->tokens() == other.vocab_->tokens() && tables_ == other.tables_;
}

NGramModel make_draft_variant(const NGramModel& target, const DraftVariantConfig& cfg,
                              std::span<const TokenId> corpus) {
  if (cfg.order_delta < 0) throw std::invalid_argument("order_delta must be >= 0");
  if (!(cfg.extra_smoothing >= 0.0)) throw std::invalid_argument("extra_smoothing must be >= 0");
  if (!(cfg.temperature > 0.0)) throw std::invalid_argument("draft temperature must be positive");
  const int order = target.order() - cfg.order_delta;
  if (order < 1) throw std::invalid_argument("draft order must be >= 1");
  NGramModel draft =
      NGramModel::train(corpus, order, target.alpha() + cfg.extra_smoothing, target.vocab_ptr());
  draft.base_temperature_ = target.base_temperature() * cfg.temperature;
  return draft;
}

}  // namespace ltd
