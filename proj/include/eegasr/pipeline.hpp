#pragma once

#include "eegasr/corpus.hpp"
#include "eegasr/decode.hpp"
#include "eegasr/eval.hpp"
#include "eegasr/models.hpp"

namespace eegasr {

struct RunConfig {
  std::string corpus_dir;
  std::string out_dir;
  SplitConfig split;
  AblationConfig ablation;
  RegressionConfig regression;
  IsolatedConfig isolated;
  CtcConfig ctc;
  BeamParams beam;
  std::string mode = "isolated";  // or "continuous"
  bool baseline_only = false;
  std::uint64_t seed = 42;
  int kpca_max_train_rows = 600;  // Gram-size cap; rows stride-sampled beyond it
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

// Filter order (bandpass) and notch parameters used throughout.
constexpr int kBandpassOrder = 4;
constexpr double kNotchHz = 60.0;
constexpr double kNotchQ = 30.0;

// Bandpass -> notch -> EMG removal; EMG gets the same bandpass + notch before
// serving as the regression reference.
struct PreprocessedRecording {
  Mat eeg;  // artifact-corrected
  Mat emg;  // filtered
  Vec audio;
  std::string transcript;
  std::string utterance_id;
};

PreprocessedRecording preprocess(const RawRecording& rec, BandMode band);

// Feature preparation for a whole corpus under one ablation config.
struct PreparedData {
  std::vector<Mat> model_inputs;  // per utterance: KPCA (or raw) features, aligned
  std::vector<Mat> mfcc_seqs;     // aligned to model_inputs frame counts
  std::vector<int> class_ids;
  std::vector<std::string> transcripts;  // normalized
  std::vector<std::string> ids;
  SplitResult split;
  Standardizer standardizer;
  KpcaModel kpca;
  bool kpca_used = false;
  int raw_dim = 0;
  int n_classes = 0;
};

PreparedData prepare_data(const Manifest& manifest, const RunConfig& cfg);

struct IsolatedOutcome {
  ClassMetrics baseline;
  ClassMetrics fused;
  Eigen::MatrixXi baseline_confusion;
  Eigen::MatrixXi fused_confusion;
  int fused_dim = 0;
  TrainLog regression_log, baseline_log, fused_log;
};

// Trains regression + recognizers on the train split and scores the test
// split. Writes artifacts under cfg.out_dir when it is nonempty.
IsolatedOutcome run_isolated_experiment(const PreparedData& data, const RunConfig& cfg);

struct UtteranceDecode {
  std::string id, reference, hypothesis;
  EditCounts edits;
  double wer_rate = 0.0;
};

struct ContinuousOutcome {
  double greedy_wer = 0.0;
  double beam_wer = 0.0;
  double train_greedy_wer = 0.0;
  std::pair<double, double> ci{0.0, 0.0};
  std::vector<UtteranceDecode> per_utterance;  // beam decodes on test
  int fused_dim = 0;
  TrainLog regression_log, ctc_log;
};

ContinuousOutcome run_continuous_experiment(const PreparedData& data, const RunConfig& cfg);

// Explained-variance diagnostic: `components,cumulative_ratio` CSV text.
std::string variance_curve_csv(const PreparedData& data);

// Runs one isolated experiment per ablation mode and emits a table-shaped CSV
// (`mode,raw_dim,reduced_dim,fused_dim,baseline_accuracy,fused_accuracy,...`).
std::string run_ablation_suite(const Manifest& manifest, const RunConfig& base_cfg);

void write_text_file(const std::string& path, const std::string& content);
std::string format_g17(double v);

}  // namespace eegasr
