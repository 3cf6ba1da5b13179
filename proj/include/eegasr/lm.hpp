#pragma once

#include <map>
#include <string>
#include <vector>

namespace eegasr {

// Word-level n-gram language model with Witten-Bell interpolated smoothing
// down to a uniform base distribution over the closed vocabulary (which
// includes </s> and <unk>).
class NgramLm {
public:
  static constexpr int kOrder = 4;

  // Conditional log-probability of `word` given up to kOrder-1 context words
  // (most recent last). Out-of-vocabulary words map to <unk>.
  double log_prob(const std::string& word, const std::vector<std::string>& context) const;

  // Log-probability of a full sentence including the </s> transition.
  double sentence_log_prob(const std::vector<std::string>& words) const;

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  bool in_vocab(const std::string& word) const { return vocab_set_.count(word) > 0; }

  static NgramLm train(const std::vector<std::string>& transcripts);

private:
  struct ContextStats {
    std::map<std::string, long> counts;
    long total = 0;
  };

  double prob_order(const std::string& word, const std::vector<std::string>& context,
                    int order) const;

  // One map per context length 0..kOrder-1, keyed by space-joined context.
  std::vector<std::map<std::string, ContextStats>> tables_;
  std::vector<std::string> vocab_;
  std::map<std::string, int> vocab_set_;
};

std::vector<std::string> tokenize_words(const std::string& text);

}  // namespace eegasr
