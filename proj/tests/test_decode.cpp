#include <doctest.h>

#include <algorithm>
#include <map>

#include "eegasr/decode.hpp"

using namespace eegasr;

namespace {

Mat log_probs_from_rows(const std::vector<std::vector<double>>& rows) {
  Mat lp(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t v = 0; v < rows[t].size(); ++v)
      lp(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v)) = std::log(rows[t][v]);
  return lp;
}

// Brute force: enumerate every frame path, accumulate probability per
// collapsed string, return the argmax string.
std::string brute_force_best(const Mat& log_probs, const Charset& charset) {
  const auto T = log_probs.rows();
  const auto V = log_probs.cols();
  std::map<std::string, double> mass;
  std::vector<int> path(static_cast<std::size_t>(T));
  const long n_paths = static_cast<long>(std::pow(static_cast<double>(V), static_cast<double>(T)));
  for (long idx = 0; idx < n_paths; ++idx) {
    long rem = idx;
    double lp = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      path[static_cast<std::size_t>(t)] = static_cast<int>(rem % V);
      rem /= V;
      lp += log_probs(t, path[static_cast<std::size_t>(t)]);
    }
    std::vector<int> collapsed;
    int prev = -1;
    for (int s : path) {
      if (s != Charset::kBlank && s != prev) collapsed.push_back(s);
      prev = s;
    }
    mass[charset.decode(collapsed)] += std::exp(lp);
  }
  std::string best;
  double best_mass = -1.0;
  for (const auto& [str, m] : mass) {
    if (m > best_mass) {
      best_mass = m;
      best = str;
    }
  }
  return best;
}

// Restrict a full 29-symbol distribution template to the first V symbols.
Mat random_small_log_probs(Eigen::Index T, Eigen::Index V, Rng& rng) {
  Mat lp(T, V);
  for (Eigen::Index t = 0; t < T; ++t) {
    Vec raw(V);
    for (Eigen::Index v = 0; v < V; ++v) raw[v] = rng.normal();
    Vec e = (raw.array() - raw.maxCoeff()).exp();
    lp.row(t) = (e / e.sum()).array().log().transpose();
  }
  return lp;
}

}  // namespace

TEST_CASE("charset mapping") {
  Charset cs;
  CHECK(cs.size() == 29);
  CHECK(cs.index_of('a') == 1);
  CHECK(cs.index_of('z') == 26);
  CHECK(cs.index_of(' ') == 27);
  CHECK(cs.index_of('\'') == 28);
  CHECK(cs.index_of('!') == -1);
  CHECK(cs.char_at(1) == 'a');
  CHECK(cs.char_at(27) == ' ');
  CHECK_THROWS_AS(cs.char_at(0), ParameterError);  // blank has no character
  CHECK_THROWS_AS(cs.char_at(29), ParameterError);
}

TEST_CASE("charset normalization and round trip") {
  Charset cs;
  CHECK(cs.normalize("Hello,  World!") == "hello world");
  CHECK(cs.normalize("Don't  stop") == "don't stop");
  CHECK(cs.normalize("  leading and trailing  ") == "leading and trailing");
  CHECK(cs.normalize("tabs\tand\nnewlines") == "tabs and newlines");
  const std::string s = "keep them warm";
  CHECK(cs.decode(cs.encode(s)) == s);
  CHECK_THROWS_AS(cs.encode("Raw!"), ParameterError);
}

TEST_CASE("greedy decode") {
  Charset cs;
  // Frames argmax to: blank, c, c, blank, a, t -> "cat".
  Mat lp = Mat::Constant(6, 29, std::log(0.01));
  const std::vector<int> arg = {0, 3, 3, 0, 1, 20};
  for (int t = 0; t < 6; ++t) lp(t, arg[static_cast<std::size_t>(t)]) = std::log(0.9);
  CHECK(greedy_decode(lp, cs) == "cat");
}

TEST_CASE("beam search recovers mass split across alignments") {
  // Classic case where greedy picks the blank path but the summed non-blank
  // mass wins: p(a) = 0.6*0.4 + 0.4*0.6 + 0.4*0.4 > p("") = 0.36.
  Charset cs;
  Mat lp = Mat::Constant(2, 29, std::log(1e-30));
  lp(0, 0) = std::log(0.6);
  lp(0, 1) = std::log(0.4);
  lp(1, 0) = std::log(0.6);
  lp(1, 1) = std::log(0.4);
  CHECK(greedy_decode(lp, cs) == "");
  BeamParams params;
  CHECK(beam_search_decode(lp, nullptr, params, cs) == "a");
}

TEST_CASE("beam search matches brute force on small lattices") {
  Charset cs;
  Rng rng(211);
  BeamParams params;
  params.beam_width = 200;  // wide enough to be exact at this scale
  int trials = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto T = static_cast<Eigen::Index>(2 + rng.below(3));  // up to 4
    const auto V = static_cast<Eigen::Index>(2 + rng.below(2));  // blank + 1..2 letters
    Mat small = random_small_log_probs(T, V, rng);
    Mat lp = Mat::Constant(T, 29, std::log(1e-30));
    lp.leftCols(V) = small;
    CHECK(beam_search_decode(lp, nullptr, params, cs) == brute_force_best(small, cs));
    ++trials;
  }
  CHECK(trials == 30);
}

TEST_CASE("beam search is deterministic") {
  Charset cs;
  Rng rng(223);
  Mat lp = random_small_log_probs(20, 29, rng);
  BeamParams params;
  const std::string first = beam_search_decode(lp, nullptr, params, cs);
  for (int i = 0; i < 3; ++i) CHECK(beam_search_decode(lp, nullptr, params, cs) == first);
}

TEST_CASE("ngram distributions sum to one in every context") {
  NgramLm lm = NgramLm::train({"keep them warm", "keep this warm", "take this home",
                               "call them soon", "keep them here"});
  const auto& vocab = lm.vocabulary();
  CHECK(std::find(vocab.begin(), vocab.end(), "</s>") != vocab.end());
  CHECK(std::find(vocab.begin(), vocab.end(), "<unk>") != vocab.end());

  const std::vector<std::vector<std::string>> contexts = {
      {}, {"keep"}, {"keep", "them"}, {"take", "this", "home"}, {"zzz"}, {"warm", "zzz"}};
  for (const auto& ctx : contexts) {
    double total = 0.0;
    for (const auto& w : vocab) total += std::exp(lm.log_prob(w, ctx));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Seen continuations outrank unseen ones under the same context.
  CHECK(lm.log_prob("them", {"keep"}) > lm.log_prob("soon", {"keep"}));
  // Out-of-vocabulary words score as <unk>.
  CHECK(lm.log_prob("qqq", {"keep"}) == doctest::Approx(lm.log_prob("<unk>", {"keep"})));

  const double s = lm.sentence_log_prob({"keep", "them", "warm"});
  CHECK(s == doctest::Approx(lm.log_prob("keep", {}) + lm.log_prob("them", {"keep"}) +
                             lm.log_prob("warm", {"keep", "them"}) +
                             lm.log_prob("</s>", {"keep", "them", "warm"})));
  CHECK(s < 0.0);
}

TEST_CASE("tokenize words") {
  CHECK(tokenize_words("keep them warm") == std::vector<std::string>{"keep", "them", "warm"});
  CHECK(tokenize_words("  spaced   out ") == std::vector<std::string>{"spaced", "out"});
  CHECK(tokenize_words("").empty());
}

TEST_CASE("language model steers ambiguous decodes") {
  Charset cs;
  NgramLm lm = NgramLm::train({"go on", "go on", "go on", "go on", "gu on"});

  // Acoustics slightly prefer "gu", the LM strongly prefers "go".
  Mat lp = Mat::Constant(4, 29, std::log(1e-12));
  lp(0, cs.index_of('g')) = std::log(0.95);
  lp(1, cs.index_of('u')) = std::log(0.52);
  lp(1, cs.index_of('o')) = std::log(0.46);
  lp(2, cs.index_of(' ')) = std::log(0.95);
  Mat tail = Mat::Constant(4, 29, std::log(1e-12));
  lp(3, cs.index_of('o')) = std::log(0.5);
  Mat full(8, 29);
  full.topRows(4) = lp;
  full.bottomRows(4) = tail;
  full(4, cs.index_of('o')) = std::log(0.9);
  full(5, cs.index_of('n')) = std::log(0.9);
  full(6, Charset::kBlank) = std::log(0.9);
  full(7, Charset::kBlank) = std::log(0.9);
  full(3, cs.index_of('o')) = std::log(1e-12);
  full(3, Charset::kBlank) = std::log(0.9);

  BeamParams no_lm;
  no_lm.beam_width = 50;
  CHECK(beam_search_decode(full, nullptr, no_lm, cs) == "gu on");
  BeamParams with_lm = no_lm;
  with_lm.alpha = 2.0;
  with_lm.beta = 0.0;
  CHECK(beam_search_decode(full, &lm, with_lm, cs) == "go on");
}
