#pragma once

#include <array>

#include "eegasr/common.hpp"
#include "eegasr/lm.hpp"

namespace eegasr {

// Character set for the CTC recognizer: blank, a-z, space, apostrophe.
class Charset {
public:
  static constexpr int kBlank = 0;

  Charset();
  int size() const { return 29; }
  int index_of(char c) const;  // -1 if not representable
  char char_at(int idx) const;

  // Lowercase, strip punctuation other than apostrophe, collapse whitespace.
  std::string normalize(const std::string& text) const;
  std::vector<int> encode(const std::string& normalized) const;
  std::string decode(const std::vector<int>& ids) const;

private:
  std::array<char, 29> chars_;
};

// Best-path decode: per-frame argmax, collapse adjacent repeats, drop blanks.
std::string greedy_decode(const Mat& log_probs, const Charset& charset);

struct BeamParams {
  int beam_width = 25;
  double alpha = 1.5;  // LM weight
  double beta = 1.0;   // word insertion bonus
};

// Prefix beam search over blank/non-blank prefix mass with n-gram shallow
// fusion applied at word boundaries. lm may be null (pure acoustic search).
std::string beam_search_decode(const Mat& log_probs, const NgramLm* lm,
                               const BeamParams& params, const Charset& charset);

}  // namespace eegasr
