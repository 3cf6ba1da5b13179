#pragma once

#include "eegasr/common.hpp"

namespace eegasr {

// Time-distributed affine layer: y_t = W x_t + b.
struct DenseLayer {
  Mat W;  // out x in
  Vec b;

  void init(int in_dim, int out_dim, Rng& rng);
  // X is T x in; returns T x out.
  Mat forward(const Mat& X) const;
};

struct DenseGrads {
  Mat dW;
  Vec db;
  Mat dX;
};

// dY is T x out for input X (T x in).
DenseGrads dense_backward(const DenseLayer& layer, const Mat& X, const Mat& dY);

// Single GRU layer. Gates use the standard formulation with the reset gate
// applied inside the candidate's recurrent term.
struct GruLayer {
  int input_dim = 0;
  int hidden_dim = 0;
  Mat Wz, Wr, Wh;  // hidden x input
  Mat Uz, Ur, Uh;  // hidden x hidden
  Vec bz, br, bh;

  void init(int in_dim, int h_dim, Rng& rng);
};

// Forward pass cache for backpropagation through time.
struct GruCache {
  Mat H;     // T x hidden, h_1..h_T
  Mat Z, R, Hbar;  // gate activations per step
  Vec h0;
  const Mat* X = nullptr;  // borrowed input, T x input (valid during backward only)
};

// Returns all hidden states (T x hidden); h0 defaults to zeros.
GruCache gru_forward(const GruLayer& layer, const Mat& X, const Vec& h0);
inline Mat gru_forward_states(const GruLayer& layer, const Mat& X) {
  return gru_forward(layer, X, Vec::Zero(layer.hidden_dim)).H;
}

struct GruGrads {
  Mat dWz, dWr, dWh, dUz, dUr, dUh;
  Vec dbz, dbr, dbh;
  Mat dX;
};

// dH holds dLoss/dh_t for every step (zero rows where the loss does not touch h_t).
GruGrads gru_backward(const GruLayer& layer, const GruCache& cache, const Mat& dH);

// Inverted dropout. In Train mode the returned mask already contains the
// 1/(1-rate) survivor scaling; backward is grad.cwiseProduct(mask).
enum class DropoutMode { Train, Eval };
std::pair<Mat, Mat> dropout(const Mat& x, double rate, DropoutMode mode, Rng& rng);

Vec softmax(const Vec& logits);
Mat softmax_rows(const Mat& logits);
double cross_entropy(const Vec& probs, int target);
double mse(const Mat& pred, const Mat& target);

// CTC negative log likelihood of `label` under per-frame log-distributions
// (T x V, blank symbol at index `blank`). Forward algorithm in log space.
double ctc_loss(const Mat& log_probs, const std::vector<int>& label, int blank);

// Loss plus gradient with respect to the logits that produced log_probs via
// log-softmax (the form used by training).
std::pair<double, Mat> ctc_loss_logits_grad(const Mat& logits, const std::vector<int>& label,
                                            int blank);

// Adam over a flattened parameter vector.
struct AdamState {
  Vec m, v;
  long t = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void init(Eigen::Index n);
};

void adam_step(AdamState& state, Vec& params, const Vec& grads);

// Global-norm gradient clipping; returns the pre-clip norm.
double clip_global_norm(Vec& grads, double max_norm);

// Ordered references to a model's parameter blocks, for flattening into the
// Adam/checkpoint layout. Matrices flatten row by row.
struct ParamRefs {
  std::vector<Mat*> mats;
  std::vector<Vec*> vecs;  // appended after all matrices
};

Eigen::Index param_count(const ParamRefs& refs);
Vec flatten_params(const ParamRefs& refs);
void unflatten_params(const ParamRefs& refs, const Vec& flat);

// True when the best validation loss has not improved by >= 1e-6 absolute for
// `patience` consecutive epochs.
bool early_stop(const std::vector<double>& history, int patience);

}  // namespace eegasr
