#include "eegasr/lm.hpp"

#include <cmath>
#include <sstream>

#include "eegasr/common.hpp"

namespace eegasr {

namespace {
const std::string kSentStart = "<s>";
const std::string kSentEnd = "</s>";
const std::string kUnknown = "<unk>";

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}
}  // namespace

std::vector<std::string> tokenize_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

NgramLm NgramLm::train(const std::vector<std::string>& transcripts) {
  if (transcripts.empty()) throw ParameterError("train_lm: empty corpus");
  NgramLm lm;
  lm.tables_.resize(kOrder);

  std::map<std::string, int> vocab;
  vocab[kSentEnd] = 1;
  vocab[kUnknown] = 1;

  for (const std::string& t : transcripts) {
    std::vector<std::string> tokens(kOrder - 1, kSentStart);
    for (const std::string& w : tokenize_words(t)) {
      tokens.push_back(w);
      vocab[w] = 1;
    }
    tokens.push_back(kSentEnd);

    for (std::size_t i = kOrder - 1; i < tokens.size(); ++i) {
      for (int len = 0; len < kOrder; ++len) {
        std::vector<std::string> ctx(tokens.begin() + static_cast<long>(i) - len,
                                     tokens.begin() + static_cast<long>(i));
        ContextStats& stats = lm.tables_[static_cast<std::size_t>(len)][join(ctx)];
        ++stats.counts[tokens[i]];
        ++stats.total;
      }
    }
  }

  for (const auto& [w, _] : vocab) lm.vocab_.push_back(w);
  lm.vocab_set_ = vocab;
  return lm;
}

double NgramLm::prob_order(const std::string& word, const std::vector<std::string>& context,
                           int order) const {
  if (order < 0) return 1.0 / static_cast<double>(vocab_.size());

  std::vector<std::string> ctx;
  if (order > 0)
    ctx.assign(context.end() - order, context.end());
  const auto& table = tables_[static_cast<std::size_t>(order)];
  const auto it = table.find(join(ctx));
  const double lower = prob_order(word, context, order - 1);
  if (it == table.end() || it->second.total == 0) return lower;

  const ContextStats& stats = it->second;
  const double distinct = static_cast<double>(stats.counts.size());
  const auto cit = stats.counts.find(word);
  const double c = (cit == stats.counts.end()) ? 0.0 : static_cast<double>(cit->second);
  return (c + distinct * lower) / (static_cast<double>(stats.total) + distinct);
}

double NgramLm::log_prob(const std::string& word, const std::vector<std::string>& context) const {
  const std::string& w = in_vocab(word) ? word : kUnknown;
  std::vector<std::string> ctx(kOrder - 1, kSentStart);
  const std::size_t take = std::min(context.size(), static_cast<std::size_t>(kOrder - 1));
  for (std::size_t i = 0; i < take; ++i) {
    std::string c = context[context.size() - take + i];
    if (c != kSentStart && !in_vocab(c)) c = kUnknown;
    ctx[kOrder - 1 - take + i] = std::move(c);
  }
  return std::log(prob_order(w, ctx, kOrder - 1));
}

double NgramLm::sentence_log_prob(const std::vector<std::string>& words) const {
  std::vector<std::string> context;
  double lp = 0.0;
  for (const std::string& w : words) {
    lp += log_prob(w, context);
    context.push_back(w);
  }
  lp += log_prob(kSentEnd, context);
  return lp;
}

}  // namespace eegasr
