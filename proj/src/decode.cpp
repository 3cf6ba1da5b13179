#include "eegasr/decode.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <map>

namespace eegasr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

Charset::Charset() {
  chars_[0] = '\0';  // blank
  for (int i = 0; i < 26; ++i) chars_[static_cast<std::size_t>(1 + i)] = static_cast<char>('a' + i);
  chars_[27] = ' ';
  chars_[28] = '\'';
}

int Charset::index_of(char c) const {
  if (c >= 'a' && c <= 'z') return 1 + (c - 'a');
  if (c == ' ') return 27;
  if (c == '\'') return 28;
  return -1;
}

char Charset::char_at(int idx) const {
  if (idx <= 0 || idx >= size()) throw ParameterError("charset: bad symbol index");
  return chars_[static_cast<std::size_t>(idx)];
}

std::string Charset::normalize(const std::string& text) const {
  std::string out;
  for (char raw : text) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (index_of(c) > 0 && c != ' ') {
      out += c;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out += ' ';
    }
    // other punctuation dropped
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::vector<int> Charset::encode(const std::string& normalized) const {
  std::vector<int> ids;
  ids.reserve(normalized.size());
  for (char c : normalized) {
    const int idx = index_of(c);
    if (idx <= 0) throw ParameterError(std::string("charset: unencodable character '") + c + "'");
    ids.push_back(idx);
  }
  return ids;
}

std::string Charset::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) out += char_at(id);
  return out;
}

std::string greedy_decode(const Mat& log_probs, const Charset& charset) {
  std::vector<int> collapsed;
  int prev = -1;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    Eigen::Index arg = 0;
    log_probs.row(t).maxCoeff(&arg);
    const int sym = static_cast<int>(arg);
    if (sym != prev && sym != Charset::kBlank) collapsed.push_back(sym);
    prev = sym;
  }
  return charset.decode(collapsed);
}

namespace {

struct BeamEntry {
  double log_pb = kNegInf;   // prefix mass ending in blank
  double log_pnb = kNegInf;  // prefix mass ending in the last symbol
  double lm_score = 0.0;     // accumulated shallow-fusion additions

  double total() const { return log_add(log_pb, log_pnb) + lm_score; }
};

// Word just being completed when a space is appended to `prefix`.
std::string trailing_word(const std::vector<int>& prefix, const Charset& charset) {
  std::string word;
  for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) {
    if (charset.char_at(*it) == ' ') break;
    word.insert(word.begin(), charset.char_at(*it));
  }
  return word;
}

std::vector<std::string> words_before_trailing(const std::vector<int>& prefix,
                                               const Charset& charset) {
  std::string text = charset.decode(prefix);
  const auto last_space = text.find_last_of(' ');
  if (last_space == std::string::npos) return {};
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < last_space; ++i) {
    if (text[i] == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += text[i];
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

std::string beam_search_decode(const Mat& log_probs, const NgramLm* lm,
                               const BeamParams& params, const Charset& charset) {
  if (params.beam_width < 1) throw ParameterError("beam_search: beam_width must be >= 1");
  if (params.alpha < 0 || params.beta < 0)
    throw ParameterError("beam_search: alpha and beta must be nonnegative");

  using Prefix = std::vector<int>;
  std::map<Prefix, BeamEntry> beams;
  beams[{}] = BeamEntry{0.0, kNegInf, 0.0};

  const int V = static_cast<int>(log_probs.cols());

  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    std::map<Prefix, BeamEntry> next;
    for (const auto& [prefix, entry] : beams) {
      const double p_total = log_add(entry.log_pb, entry.log_pnb);

      // Blank keeps the prefix.
      {
        BeamEntry& tgt = next[prefix];
        tgt.lm_score = entry.lm_score;
        tgt.log_pb = log_add(tgt.log_pb, log_probs(t, Charset::kBlank) + p_total);
        tgt.log_pnb = log_add(tgt.log_pnb, kNegInf);
      }

      for (int c = 1; c < V; ++c) {
        const double pc = log_probs(t, c);
        const bool repeats_last = !prefix.empty() && prefix.back() == c;

        if (repeats_last) {
          // Extending the run keeps the prefix.
          BeamEntry& same = next[prefix];
          same.lm_score = entry.lm_score;
          same.log_pnb = log_add(same.log_pnb, pc + entry.log_pnb);
        }

        Prefix grown = prefix;
        grown.push_back(c);
        const double mass = repeats_last ? entry.log_pb : p_total;
        auto it = next.find(grown);
        if (it == next.end()) {
          BeamEntry fresh;
          fresh.lm_score = entry.lm_score;
          if (lm != nullptr && charset.char_at(c) == ' ') {
            const std::string word = trailing_word(prefix, charset);
            if (!word.empty())
              fresh.lm_score += params.alpha * lm->log_prob(word, words_before_trailing(prefix, charset)) +
                                params.beta;
          }
          it = next.emplace(std::move(grown), fresh).first;
        }
        it->second.log_pnb = log_add(it->second.log_pnb, pc + mass);
      }
    }

    // Prune: keep the top beam_width by score, ties broken lexicographically
    // (std::map iteration order makes the stable sort deterministic).
    std::vector<std::pair<Prefix, BeamEntry>> ranked(next.begin(), next.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second.total() > b.second.total(); });
    if (static_cast<int>(ranked.size()) > params.beam_width)
      ranked.resize(static_cast<std::size_t>(params.beam_width));
    beams.clear();
    for (auto& [p, e] : ranked) beams.emplace(std::move(p), e);
  }

  // Finalize: score the trailing word at utterance end.
  Prefix best;
  double best_score = kNegInf;
  for (const auto& [prefix, entry] : beams) {
    double score = entry.total();
    if (lm != nullptr) {
      const std::string word = trailing_word(prefix, charset);
      if (!word.empty())
        score += params.alpha * lm->log_prob(word, words_before_trailing(prefix, charset)) +
                 params.beta;
    }
    if (score > best_score || (score == best_score && prefix < best)) {
      best_score = score;
      best = prefix;
    }
  }
  return charset.decode(best);
}

}  // namespace eegasr
