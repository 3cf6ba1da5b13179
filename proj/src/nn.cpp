#include "eegasr/nn.hpp"

#include <algorithm>
#include <limits>

namespace eegasr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Mat glorot(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  Mat W(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) W(i, j) = rng.uniform(-limit, limit);
  return W;
}

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline Vec sigmoid(const Vec& x) { return 1.0 / (1.0 + (-x.array()).exp()); }

}  // namespace

void DenseLayer::init(int in_dim, int out_dim, Rng& rng) {
  W = glorot(out_dim, in_dim, rng);
  b = Vec::Zero(out_dim);
}

Mat DenseLayer::forward(const Mat& X) const {
  if (X.cols() != W.cols()) throw ParameterError("dense forward: input dim mismatch");
  return (X * W.transpose()).rowwise() + b.transpose();
}

DenseGrads dense_backward(const DenseLayer& layer, const Mat& X, const Mat& dY) {
  DenseGrads g;
  g.dW = dY.transpose() * X;
  g.db = dY.colwise().sum().transpose();
  g.dX = dY * layer.W;
  return g;
}

void GruLayer::init(int in_dim, int h_dim, Rng& rng) {
  input_dim = in_dim;
  hidden_dim = h_dim;
  Wz = glorot(h_dim, in_dim, rng);
  Wr = glorot(h_dim, in_dim, rng);
  Wh = glorot(h_dim, in_dim, rng);
  Uz = glorot(h_dim, h_dim, rng);
  Ur = glorot(h_dim, h_dim, rng);
  Uh = glorot(h_dim, h_dim, rng);
  bz = Vec::Zero(h_dim);
  br = Vec::Zero(h_dim);
  bh = Vec::Zero(h_dim);
}

GruCache gru_forward(const GruLayer& layer, const Mat& X, const Vec& h0) {
  if (X.cols() != layer.input_dim) throw ParameterError("gru forward: input dim mismatch");
  if (h0.size() != layer.hidden_dim) throw ParameterError("gru forward: h0 dim mismatch");
  if (X.rows() < 1) throw ParameterError("gru forward: empty sequence");
  const auto T = X.rows();
  const int H = layer.hidden_dim;

  GruCache c;
  c.h0 = h0;
  c.H.resize(T, H);
  c.Z.resize(T, H);
  c.R.resize(T, H);
  c.Hbar.resize(T, H);

  // Input projections for all steps in one product each.
  const Mat AzX = X * layer.Wz.transpose();
  const Mat ArX = X * layer.Wr.transpose();
  const Mat AhX = X * layer.Wh.transpose();

  Vec h = h0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vec z = sigmoid(AzX.row(t).transpose() + layer.Uz * h + layer.bz);
    const Vec r = sigmoid(ArX.row(t).transpose() + layer.Ur * h + layer.br);
    const Vec hbar =
        (AhX.row(t).transpose() + layer.Uh * (r.cwiseProduct(h)) + layer.bh).array().tanh();
    h = (1.0 - z.array()) * h.array() + z.array() * hbar.array();
    c.Z.row(t) = z.transpose();
    c.R.row(t) = r.transpose();
    c.Hbar.row(t) = hbar.transpose();
    c.H.row(t) = h.transpose();
  }
  return c;
}

GruGrads gru_backward(const GruLayer& layer, const GruCache& cache, const Mat& dH) {
  const Mat& X = *cache.X;
  const auto T = X.rows();
  const int H = layer.hidden_dim;

  GruGrads g;
  g.dWz = Mat::Zero(H, layer.input_dim);
  g.dWr = Mat::Zero(H, layer.input_dim);
  g.dWh = Mat::Zero(H, layer.input_dim);
  g.dUz = Mat::Zero(H, H);
  g.dUr = Mat::Zero(H, H);
  g.dUh = Mat::Zero(H, H);
  g.dbz = Vec::Zero(H);
  g.dbr = Vec::Zero(H);
  g.dbh = Vec::Zero(H);
  g.dX = Mat::Zero(T, layer.input_dim);

  Vec carry = Vec::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Vec dh = dH.row(t).transpose() + carry;
    const Vec z = cache.Z.row(t).transpose();
    const Vec r = cache.R.row(t).transpose();
    const Vec hbar = cache.Hbar.row(t).transpose();
    const Vec h_prev = (t == 0) ? cache.h0 : Vec(cache.H.row(t - 1).transpose());

    const Vec dz = dh.cwiseProduct(hbar - h_prev);
    const Vec dhbar = dh.cwiseProduct(z);
    Vec dh_prev = dh.cwiseProduct(Vec::Ones(H) - z);

    const Vec dah = dhbar.cwiseProduct(Vec::Ones(H) - hbar.cwiseProduct(hbar));
    const Vec rh = r.cwiseProduct(h_prev);
    g.dWh.noalias() += dah * X.row(t);
    g.dUh.noalias() += dah * rh.transpose();
    g.dbh += dah;

    const Vec drh = layer.Uh.transpose() * dah;
    const Vec dr = drh.cwiseProduct(h_prev);
    dh_prev += drh.cwiseProduct(r);

    const Vec daz = dz.cwiseProduct(z.cwiseProduct(Vec::Ones(H) - z));
    const Vec dar = dr.cwiseProduct(r.cwiseProduct(Vec::Ones(H) - r));
    g.dWz.noalias() += daz * X.row(t);
    g.dWr.noalias() += dar * X.row(t);
    g.dbz += daz;
    g.dbr += dar;
    g.dUz.noalias() += daz * h_prev.transpose();
    g.dUr.noalias() += dar * h_prev.transpose();
    dh_prev.noalias() += layer.Uz.transpose() * daz;
    dh_prev.noalias() += layer.Ur.transpose() * dar;

    g.dX.row(t) = (layer.Wz.transpose() * daz + layer.Wr.transpose() * dar +
                   layer.Wh.transpose() * dah)
                      .transpose();
    carry = dh_prev;
  }
  return g;
}

std::pair<Mat, Mat> dropout(const Mat& x, double rate, DropoutMode mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ParameterError("dropout: rate must lie in [0, 1)");
  if (mode == DropoutMode::Eval || rate == 0.0)
    return {x, Mat::Ones(x.rows(), x.cols())};
  Mat mask(x.rows(), x.cols());
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      mask(i, j) = (rng.uniform() < rate) ? 0.0 : scale;
  return {x.cwiseProduct(mask), mask};
}

Vec softmax(const Vec& logits) {
  const Vec shifted = logits.array() - logits.maxCoeff();
  Vec e = shifted.array().exp();
  return e / e.sum();
}

Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    out.row(i) = softmax(logits.row(i).transpose()).transpose();
  return out;
}

double cross_entropy(const Vec& probs, int target) {
  if (target < 0 || target >= probs.size()) throw ParameterError("cross_entropy: bad target");
  return -std::log(std::max(probs[target], 1e-12));
}

double mse(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ParameterError("mse: shape mismatch");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

namespace {

// Blank-interleaved extended label: blank, l1, blank, l2, ..., blank.
std::vector<int> extend_label(const std::vector<int>& label, int blank) {
  std::vector<int> ext;
  ext.reserve(2 * label.size() + 1);
  ext.push_back(blank);
  for (int s : label) {
    ext.push_back(s);
    ext.push_back(blank);
  }
  return ext;
}

// Log-space CTC forward/backward lattices over the extended label.
struct CtcLattice {
  Mat log_alpha, log_beta;  // T x S
  double log_lik = kNegInf;
};

CtcLattice ctc_lattice(const Mat& log_probs, const std::vector<int>& ext, int blank) {
  const auto T = log_probs.rows();
  const auto S = static_cast<Eigen::Index>(ext.size());

  CtcLattice lat;
  lat.log_alpha = Mat::Constant(T, S, kNegInf);
  lat.log_beta = Mat::Constant(T, S, kNegInf);

  lat.log_alpha(0, 0) = log_probs(0, ext[0]);
  if (S > 1) lat.log_alpha(0, 1) = log_probs(0, ext[1]);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double a = lat.log_alpha(t - 1, s);
      if (s >= 1) a = log_add(a, lat.log_alpha(t - 1, s - 1));
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2])
        a = log_add(a, lat.log_alpha(t - 1, s - 2));
      if (a != kNegInf) lat.log_alpha(t, s) = a + log_probs(t, ext[s]);
    }
  }
  lat.log_lik = lat.log_alpha(T - 1, S - 1);
  if (S > 1) lat.log_lik = log_add(lat.log_lik, lat.log_alpha(T - 1, S - 2));

  lat.log_beta(T - 1, S - 1) = log_probs(T - 1, ext[S - 1]);
  if (S > 1) lat.log_beta(T - 1, S - 2) = log_probs(T - 1, ext[S - 2]);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index s = S - 1; s >= 0; --s) {
      double b = lat.log_beta(t + 1, s);
      if (s + 1 < S) b = log_add(b, lat.log_beta(t + 1, s + 1));
      if (s + 2 < S && ext[s] != blank && ext[s] != ext[s + 2])
        b = log_add(b, lat.log_beta(t + 1, s + 2));
      if (b != kNegInf) lat.log_beta(t, s) = b + log_probs(t, ext[s]);
    }
  }
  return lat;
}

}  // namespace

double ctc_loss(const Mat& log_probs, const std::vector<int>& label, int blank) {
  for (int s : label)
    if (s < 0 || s >= log_probs.cols() || s == blank)
      throw ParameterError("ctc_loss: label symbol out of range");
  const auto ext = extend_label(label, blank);
  // Feasibility: repeats force a blank between them.
  Eigen::Index min_t = static_cast<Eigen::Index>(label.size());
  for (std::size_t i = 1; i < label.size(); ++i)
    if (label[i] == label[i - 1]) ++min_t;
  if (log_probs.rows() < min_t)
    throw ParameterError("ctc_loss: label infeasible for sequence length");

  const auto lat = ctc_lattice(log_probs, ext, blank);
  if (lat.log_lik == kNegInf) throw NumericError("ctc_loss: zero-probability label");
  return -lat.log_lik;
}

std::pair<double, Mat> ctc_loss_logits_grad(const Mat& logits, const std::vector<int>& label,
                                            int blank) {
  const Mat probs = softmax_rows(logits);
  const Mat log_probs = probs.array().max(1e-300).log();
  const double loss = ctc_loss(log_probs, label, blank);

  const auto ext = extend_label(label, blank);
  const auto lat = ctc_lattice(log_probs, ext, blank);
  const auto T = logits.rows();

  // Posterior symbol occupancy gamma; dL/dlogit = p - gamma.
  Mat grad = probs;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < ext.size(); ++s) {
      const auto si = static_cast<Eigen::Index>(s);
      if (lat.log_alpha(t, si) == kNegInf || lat.log_beta(t, si) == kNegInf) continue;
      // alpha*beta double-counts the frame emission once.
      const double occ = lat.log_alpha(t, si) + lat.log_beta(t, si) -
                         log_probs(t, ext[s]) - lat.log_lik;
      grad(t, ext[s]) -= std::exp(occ);
    }
  }
  return {loss, grad};
}

void AdamState::init(Eigen::Index n) {
  m = Vec::Zero(n);
  v = Vec::Zero(n);
  t = 0;
}

void adam_step(AdamState& state, Vec& params, const Vec& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ParameterError("adam_step: parameter/gradient size mismatch");
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const Vec m_hat = state.m / bc1;
  const Vec v_hat = state.v / bc2;
  params.array() -= state.lr * m_hat.array() / (v_hat.array().sqrt() + state.eps);
}

double clip_global_norm(Vec& grads, double max_norm) {
  const double norm = grads.norm();
  if (norm > max_norm && norm > 0.0) grads *= max_norm / norm;
  return norm;
}

Eigen::Index param_count(const ParamRefs& refs) {
  Eigen::Index n = 0;
  for (const Mat* m : refs.mats) n += m->size();
  for (const Vec* v : refs.vecs) n += v->size();
  return n;
}

Vec flatten_params(const ParamRefs& refs) {
  Vec flat(param_count(refs));
  Eigen::Index off = 0;
  for (const Mat* m : refs.mats) {
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) flat[off++] = (*m)(r, c);
  }
  for (const Vec* v : refs.vecs) {
    flat.segment(off, v->size()) = *v;
    off += v->size();
  }
  return flat;
}

void unflatten_params(const ParamRefs& refs, const Vec& flat) {
  if (flat.size() != param_count(refs))
    throw ParameterError("unflatten_params: size mismatch");
  Eigen::Index off = 0;
  for (Mat* m : refs.mats) {
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = flat[off++];
  }
  for (Vec* v : refs.vecs) {
    *v = flat.segment(off, v->size());
    off += v->size();
  }
}

bool early_stop(const std::vector<double>& history, int patience) {
  if (history.empty()) throw ParameterError("early_stop: empty history");
  double best = history[0];
  int since_best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] < best - 1e-6) {
      best = history[i];
      since_best = 0;
    } else {
      ++since_best;
    }
  }
  return since_best >= patience;
}

}  // namespace eegasr
