#pragma once

#include "eegasr/common.hpp"

namespace eegasr {

struct EditCounts {
  long sub = 0;
  long ins = 0;
  long del = 0;
  long ref_words = 0;

  long total() const { return sub + ins + del; }
};

struct WerResult {
  EditCounts edits;
  double rate = 0.0;
};

// Word-level Levenshtein alignment with unit costs. Backtrace ties prefer
// substitution over deletion over insertion.
WerResult wer(const std::string& reference, const std::string& hypothesis);

struct ClassMetrics {
  double accuracy = 0.0;  // all as percentages
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Macro-averaged precision/recall over classes with 1e-7 in each denominator;
// F1 from the macro averages.
ClassMetrics classification_metrics(const Eigen::MatrixXi& confusion);

Eigen::MatrixXi confusion_matrix(const std::vector<std::pair<int, int>>& true_pred,
                                 int n_classes);

// Percentile bootstrap over utterances of the pooled WER (resample with
// replacement, 10k replicates, seeded).
std::pair<double, double> bootstrap_ci(const std::vector<EditCounts>& per_utterance,
                                       double level, std::uint64_t seed);

struct SignificanceResult {
  double p_bootstrap = 1.0;  // paired bootstrap on the mean difference
  double p_t_approx = 1.0;   // paired t-test approximation, for reference
};

SignificanceResult significance_test(const std::vector<double>& per_utt_wer_a,
                                     const std::vector<double>& per_utt_wer_b,
                                     std::uint64_t seed);

}  // namespace eegasr
