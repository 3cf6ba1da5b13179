#include <doctest.h>

#include <sstream>

#include "eegasr/eval.hpp"

using namespace eegasr;

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream iss(s);
  std::vector<std::string> out;
  std::string w;
  while (iss >> w) out.push_back(w);
  return out;
}

// Independent edit-distance oracle (distance only, no backtrace).
long edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<long> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<long>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const long sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string random_sentence(Rng& rng, std::size_t max_len, std::size_t min_len = 0) {
  static const std::vector<std::string> pool = {"the", "a",   "cat", "dog", "sat",
                                                "ran", "on",  "mat", "home", "fast"};
  const std::size_t len = min_len + rng.below(max_len + 1 - min_len);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    if (!out.empty()) out += ' ';
    out += pool[rng.below(pool.size())];
  }
  return out;
}

}  // namespace

TEST_CASE("wer basic cases") {
  const WerResult exact = wer("the cat sat", "the cat sat");
  CHECK(exact.edits.total() == 0);
  CHECK(exact.rate == 0.0);
  CHECK(exact.edits.ref_words == 3);

  const WerResult sub = wer("the cat sat", "the dog sat");
  CHECK(sub.edits.sub == 1);
  CHECK(sub.edits.ins == 0);
  CHECK(sub.edits.del == 0);
  CHECK(sub.rate == doctest::Approx(1.0 / 3.0));

  const WerResult del = wer("the cat sat", "the sat");
  CHECK(del.edits.del == 1);
  CHECK(del.rate == doctest::Approx(1.0 / 3.0));

  const WerResult ins = wer("the cat", "the big cat");
  CHECK(ins.edits.ins == 1);
  CHECK(ins.rate == doctest::Approx(0.5));

  const WerResult empty_hyp = wer("one two three", "");
  CHECK(empty_hyp.edits.del == 3);
  CHECK(empty_hyp.rate == doctest::Approx(1.0));

  CHECK_THROWS_AS(wer("", "word"), ParameterError);

  // WER can exceed 100%.
  const WerResult over = wer("one", "two three four");
  CHECK(over.rate > 1.0);
}

TEST_CASE("wer totals match an independent edit distance on random pairs") {
  Rng rng(301);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string ref = random_sentence(rng, 8, 1);
    const std::string hyp = random_sentence(rng, 8);
    const WerResult r = wer(ref, hyp);
    CHECK(r.edits.total() == edit_distance(split_words(ref), split_words(hyp)));
    CHECK(r.edits.ref_words == static_cast<long>(split_words(ref).size()));
  }
}

TEST_CASE("confusion matrix") {
  const Eigen::MatrixXi cm =
      confusion_matrix({{0, 0}, {0, 1}, {1, 1}, {2, 2}, {2, 0}, {2, 2}}, 3);
  CHECK(cm(0, 0) == 1);
  CHECK(cm(0, 1) == 1);
  CHECK(cm(1, 1) == 1);
  CHECK(cm(2, 2) == 2);
  CHECK(cm(2, 0) == 1);
  CHECK(cm.sum() == 6);
  CHECK_THROWS_AS(confusion_matrix({{0, 5}}, 3), ParameterError);
}

TEST_CASE("classification metrics on a 3-class fixture") {
  // rows = true class, cols = predicted.
  Eigen::MatrixXi cm(3, 3);
  cm << 5, 1, 0,
        2, 6, 2,
        0, 1, 3;
  const ClassMetrics m = classification_metrics(cm);
  CHECK(m.accuracy == doctest::Approx(100.0 * 14.0 / 20.0));

  const double eps = 1e-7;
  const double p0 = 5.0 / (7.0 + eps), p1 = 6.0 / (8.0 + eps), p2 = 3.0 / (5.0 + eps);
  const double r0 = 5.0 / (6.0 + eps), r1 = 6.0 / (10.0 + eps), r2 = 3.0 / (4.0 + eps);
  const double prec = 100.0 * (p0 + p1 + p2) / 3.0;
  const double rec = 100.0 * (r0 + r1 + r2) / 3.0;
  CHECK(m.precision == doctest::Approx(prec).epsilon(1e-9));
  CHECK(m.recall == doctest::Approx(rec).epsilon(1e-9));
  const double pf = prec / 100.0, rf = rec / 100.0;
  CHECK(m.f1 == doctest::Approx(100.0 * 2.0 * pf * rf / (pf + rf + 1e-7)).epsilon(1e-9));

  // A class never predicted and never true contributes zero without NaN.
  Eigen::MatrixXi sparse = Eigen::MatrixXi::Zero(3, 3);
  sparse(0, 0) = 4;
  sparse(1, 1) = 4;
  const ClassMetrics sm = classification_metrics(sparse);
  CHECK(std::isfinite(sm.precision));
  CHECK(sm.accuracy == doctest::Approx(100.0));
}

TEST_CASE("bootstrap ci brackets the point estimate") {
  Rng rng(311);
  std::vector<EditCounts> utts;
  long err = 0, ref = 0;
  for (int i = 0; i < 50; ++i) {
    EditCounts e;
    e.ref_words = 3 + static_cast<long>(rng.below(5));
    e.sub = static_cast<long>(rng.below(3));
    err += e.sub;
    ref += e.ref_words;
    utts.push_back(e);
  }
  const double point = static_cast<double>(err) / static_cast<double>(ref);
  const auto [lo, hi] = bootstrap_ci(utts, 0.95, 99);
  CHECK(lo <= point);
  CHECK(hi >= point);
  CHECK(lo < hi);
  CHECK(lo >= 0.0);

  // Deterministic under the same seed.
  const auto [lo2, hi2] = bootstrap_ci(utts, 0.95, 99);
  CHECK(lo == lo2);
  CHECK(hi == hi2);

  // Wider interval at higher confidence.
  const auto [lo3, hi3] = bootstrap_ci(utts, 0.5, 99);
  CHECK(hi3 - lo3 < hi - lo);

  CHECK_THROWS_AS(bootstrap_ci({}, 0.95, 1), ParameterError);
  CHECK_THROWS_AS(bootstrap_ci(utts, 1.5, 1), ParameterError);
}

TEST_CASE("significance test separates clear and null differences") {
  Rng rng(317);
  std::vector<double> a, b, c;
  for (int i = 0; i < 40; ++i) {
    const double base = 0.3 + 0.05 * rng.normal();
    a.push_back(base);
    b.push_back(base - 0.15 + 0.01 * rng.normal());  // clearly better
    c.push_back(base + 0.002 * rng.normal());        // same distribution
  }
  const SignificanceResult strong = significance_test(a, b, 7);
  CHECK(strong.p_bootstrap < 0.01);
  CHECK(strong.p_t_approx < 0.01);

  const SignificanceResult null_case = significance_test(a, c, 7);
  CHECK(null_case.p_bootstrap > 0.05);
  CHECK(null_case.p_t_approx > 0.05);

  CHECK_THROWS_AS(significance_test(a, std::vector<double>{1.0}, 1), ParameterError);
}
