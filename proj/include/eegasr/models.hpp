#pragma once

#include "eegasr/decode.hpp"
#include "eegasr/features.hpp"
#include "eegasr/kpca.hpp"
#include "eegasr/nn.hpp"

namespace eegasr {

// Per-epoch training log rows, emitted as `epoch,split,loss[,accuracy]`.
struct EpochRecord {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = -1.0;  // < 0 means not recorded
};

struct TrainLog {
  std::vector<EpochRecord> rows;
  std::string to_csv() const;
};

struct RegressionConfig {
  int epochs = 70;
  int batch_size = 100;
  double lr = 0.001;
  int hidden_dim = 128;
  std::uint64_t seed = 0;
};

// EEG-to-acoustic regressor: GRU over KPCA features plus a per-time-step
// linear head predicting the 13 MFCCs. The GRU hidden states are the
// acoustic representation consumed downstream.
struct RegressionModel {
  GruLayer gru;
  DenseLayer head;

  ParamRefs params();
  Mat predict(const Mat& kpca_seq) const;
};

using SeqPair = std::pair<Mat, Mat>;  // (input T x in, target T x 13)

RegressionModel train_regression(const std::vector<SeqPair>& train,
                                 const std::vector<SeqPair>& val,
                                 const RegressionConfig& cfg, TrainLog* log = nullptr);

// GRU hidden-state sequence (T x hidden), not the head output.
FeatureSequence acoustic_representation(const RegressionModel& model, const Mat& kpca_seq);

// Truncate both sequences to the shorter one and concatenate per frame as
// [MFCC | representation].
FeatureSequence fuse(const FeatureSequence& mfcc_seq, const FeatureSequence& rep_seq);

struct IsolatedConfig {
  int epochs = 10;
  int batch_size = 50;
  double lr = 0.001;
  int hidden_dim = 512;
  int n_classes = 57;
  double dropout_rate = 0.2;
  int patience = 2;
  std::uint64_t seed = 0;
};

// Whole-sentence classifier over the final GRU state.
struct IsolatedModel {
  GruLayer gru;
  DenseLayer head;
  double dropout_rate = 0.2;

  ParamRefs params();
};

using LabeledSeq = std::pair<Mat, int>;

IsolatedModel train_isolated(const std::vector<LabeledSeq>& train,
                             const std::vector<LabeledSeq>& val, const IsolatedConfig& cfg,
                             TrainLog* log = nullptr);

// Argmax class with lowest-index tie-break; dropout disabled.
std::pair<int, Vec> predict_isolated(const IsolatedModel& model, const Mat& feature_seq);

struct CtcConfig {
  int epochs = 100;
  int batch_size = 50;
  double lr = 0.001;
  int hidden_dim = 512;
  double clip_norm = 5.0;
  int patience = 5;
  std::uint64_t seed = 0;
};

// Character-level CTC recognizer.
struct CtcModel {
  GruLayer encoder;
  DenseLayer head;
  Charset charset;

  ParamRefs params();
  // Per-frame log-distributions (T x V).
  Mat log_probs(const Mat& feature_seq) const;
};

using TranscribedSeq = std::pair<Mat, std::string>;  // (features, normalized transcript)

CtcModel train_ctc(const std::vector<TranscribedSeq>& train,
                   const std::vector<TranscribedSeq>& val, const CtcConfig& cfg,
                   TrainLog* log = nullptr);

// --- Checkpoint container: JSON header + little-endian f64 payload + CRC32 ---

struct Checkpoint {
  int version = 1;
  std::string architecture;  // free-form descriptor
  std::string config_echo;   // JSON text of the resolved config
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, Mat>> blocks;  // named tensors, saved in order

  const Mat& block(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Block packing helpers for composite bundles.
void append_standardizer_blocks(Checkpoint& ckpt, const std::string& prefix,
                                const Standardizer& s);
Standardizer standardizer_from_blocks(const Checkpoint& ckpt, const std::string& prefix);
void append_kpca_blocks(Checkpoint& ckpt, const std::string& prefix, const KpcaModel& m);
KpcaModel kpca_from_blocks(const Checkpoint& ckpt, const std::string& prefix);
void append_param_blocks(Checkpoint& ckpt, const std::string& prefix, ParamRefs refs);
void params_from_blocks(const Checkpoint& ckpt, const std::string& prefix, ParamRefs refs);

}  // namespace eegasr
