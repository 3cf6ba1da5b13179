#include "eegasr/eval.hpp"

#include <algorithm>
#include <cmath>

#include "eegasr/lm.hpp"

namespace eegasr {

WerResult wer(const std::string& reference, const std::string& hypothesis) {
  const std::vector<std::string> ref = tokenize_words(reference);
  const std::vector<std::string> hyp = tokenize_words(hypothesis);
  if (ref.empty()) throw ParameterError("wer: empty reference");

  const std::size_t n = ref.size(), m = hyp.size();
  // dist[i][j]: edits aligning ref[0..i) with hyp[0..j).
  std::vector<std::vector<long>> dist(n + 1, std::vector<long>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) dist[i][0] = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) dist[0][j] = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const long match = dist[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      dist[i][j] = std::min({match, dist[i - 1][j] + 1, dist[i][j - 1] + 1});
    }

  // Backtrace, preferring substitution > deletion > insertion on ties.
  WerResult out;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && dist[i][j] == dist[i - 1][j - 1]) {
      --i;
      --j;
    } else if (i > 0 && j > 0 && dist[i][j] == dist[i - 1][j - 1] + 1) {
      ++out.edits.sub;
      --i;
      --j;
    } else if (i > 0 && dist[i][j] == dist[i - 1][j] + 1) {
      ++out.edits.del;
      --i;
    } else {
      ++out.edits.ins;
      --j;
    }
  }
  out.edits.ref_words = static_cast<long>(n);
  out.rate = static_cast<double>(out.edits.total()) / static_cast<double>(n);
  return out;
}

ClassMetrics classification_metrics(const Eigen::MatrixXi& confusion) {
  if (confusion.rows() == 0 || confusion.rows() != confusion.cols())
    throw ParameterError("classification_metrics: confusion matrix must be square and nonempty");
  constexpr double kEps = 1e-7;
  const auto n = confusion.rows();
  const double total = confusion.cast<double>().sum();
  if (total <= 0) throw ParameterError("classification_metrics: empty confusion matrix");

  ClassMetrics m;
  m.accuracy = 100.0 * confusion.cast<double>().trace() / total;

  double precision_sum = 0.0, recall_sum = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const double tp = confusion(c, c);
    const double predicted = confusion.col(c).cast<double>().sum();
    const double actual = confusion.row(c).cast<double>().sum();
    precision_sum += tp / (predicted + kEps);
    recall_sum += tp / (actual + kEps);
  }
  const double p = precision_sum / static_cast<double>(n);
  const double r = recall_sum / static_cast<double>(n);
  m.precision = 100.0 * p;
  m.recall = 100.0 * r;
  m.f1 = 100.0 * (2.0 * p * r) / (p + r + kEps);
  return m;
}

Eigen::MatrixXi confusion_matrix(const std::vector<std::pair<int, int>>& true_pred,
                                 int n_classes) {
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (const auto& [t, p] : true_pred) {
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw ParameterError("confusion_matrix: class id out of range");
    ++counts(t, p);
  }
  return counts;
}

namespace {

double pooled_wer(const std::vector<EditCounts>& utts) {
  long edits = 0, words = 0;
  for (const EditCounts& e : utts) {
    edits += e.total();
    words += e.ref_words;
  }
  return static_cast<double>(edits) / static_cast<double>(words);
}

constexpr int kReplicates = 10000;

}  // namespace

std::pair<double, double> bootstrap_ci(const std::vector<EditCounts>& per_utterance,
                                       double level, std::uint64_t seed) {
  if (per_utterance.size() < 10) throw ParameterError("bootstrap_ci: need at least 10 utterances");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("bootstrap_ci: level must lie in (0,1)");

  const std::size_t n = per_utterance.size();
  std::vector<double> replicates(kReplicates);
  Rng master(seed);
  for (int b = 0; b < kReplicates; ++b) {
    Rng rng = master.fork(static_cast<std::uint64_t>(b));
    long edits = 0, words = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const EditCounts& e = per_utterance[rng.below(n)];
      edits += e.total();
      words += e.ref_words;
    }
    replicates[static_cast<std::size_t>(b)] =
        static_cast<double>(edits) / static_cast<double>(words);
  }
  std::sort(replicates.begin(), replicates.end());
  const double tail = (1.0 - level) / 2.0;
  const auto lo_idx = static_cast<std::size_t>(std::floor(tail * (kReplicates - 1)));
  const auto hi_idx = static_cast<std::size_t>(std::ceil((1.0 - tail) * (kReplicates - 1)));
  return {replicates[lo_idx], replicates[hi_idx]};
}

namespace {

// Student-t two-sided tail probability via the regularized incomplete beta
// function (Lentz continued fraction).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kTiny = 1e-300;
  double c = 1.0, d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + num / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-12) break;
  }
  return h;
}

double inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * beta_cf(a, b, x) / a;
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                        b * std::log(1.0 - x) + a * std::log(x)) *
                   beta_cf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double dof) {
  const double x = dof / (dof + t * t);
  return inc_beta(dof / 2.0, 0.5, x);
}

}  // namespace

SignificanceResult significance_test(const std::vector<double>& per_utt_wer_a,
                                     const std::vector<double>& per_utt_wer_b,
                                     std::uint64_t seed) {
  if (per_utt_wer_a.size() != per_utt_wer_b.size())
    throw ParameterError("significance_test: paired lists must have equal length");
  const std::size_t n = per_utt_wer_a.size();
  if (n < 10) throw ParameterError("significance_test: need at least 10 pairs");

  std::vector<double> diff(n);
  double mean_diff = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = per_utt_wer_a[i] - per_utt_wer_b[i];
    mean_diff += diff[i];
  }
  mean_diff /= static_cast<double>(n);

  // Paired bootstrap under the shifted null (differences recentered at zero).
  Rng master(seed);
  int extreme = 0;
  for (int b = 0; b < kReplicates; ++b) {
    Rng rng = master.fork(static_cast<std::uint64_t>(b));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += diff[rng.below(n)] - mean_diff;
    if (std::abs(s / static_cast<double>(n)) >= std::abs(mean_diff)) ++extreme;
  }

  SignificanceResult out;
  out.p_bootstrap = (extreme + 1.0) / (kReplicates + 1.0);

  double var = 0.0;
  for (double d : diff) var += (d - mean_diff) * (d - mean_diff);
  var /= static_cast<double>(n - 1);
  if (var < 1e-300) {
    out.p_t_approx = (std::abs(mean_diff) < 1e-300) ? 1.0 : 0.0;
  } else {
    const double t = mean_diff / std::sqrt(var / static_cast<double>(n));
    out.p_t_approx = t_two_sided_p(t, static_cast<double>(n - 1));
  }
  return out;
}

}  // namespace eegasr
