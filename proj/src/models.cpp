#include "eegasr/models.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace eegasr {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Flat gradient in the same order as ParamRefs{gru mats.., head.W | gru vecs.., head.b}.
Vec flatten_grads(const GruGrads& g, const DenseGrads& d) {
  ParamRefs refs;
  GruGrads gc = g;
  DenseGrads dc = d;
  refs.mats = {&gc.dWz, &gc.dWr, &gc.dWh, &gc.dUz, &gc.dUr, &gc.dUh, &dc.dW};
  refs.vecs = {&gc.dbz, &gc.dbr, &gc.dbh, &dc.db};
  return flatten_params(refs);
}

}  // namespace

std::string TrainLog::to_csv() const {
  std::string out;
  for (const EpochRecord& r : rows) {
    out += std::to_string(r.epoch) + "," + r.split + "," + format_double(r.loss);
    if (r.accuracy >= 0) out += "," + format_double(r.accuracy);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- regression

ParamRefs RegressionModel::params() {
  ParamRefs refs;
  refs.mats = {&gru.Wz, &gru.Wr, &gru.Wh, &gru.Uz, &gru.Ur, &gru.Uh, &head.W};
  refs.vecs = {&gru.bz, &gru.br, &gru.bh, &head.b};
  return refs;
}

Mat RegressionModel::predict(const Mat& kpca_seq) const {
  return head.forward(gru_forward_states(gru, kpca_seq));
}

RegressionModel train_regression(const std::vector<SeqPair>& train,
                                 const std::vector<SeqPair>& val,
                                 const RegressionConfig& cfg, TrainLog* log) {
  if (train.empty()) throw ParameterError("train_regression: empty training set");
  const auto in_dim = train.front().first.cols();
  for (const auto& [x, y] : train)
    if (x.rows() != y.rows() || x.cols() != in_dim || y.cols() != 13)
      throw ParameterError("train_regression: misaligned or mis-sized pair");

  Rng rng(cfg.seed);
  RegressionModel model;
  model.gru.init(static_cast<int>(in_dim), cfg.hidden_dim, rng);
  model.head.init(cfg.hidden_dim, 13, rng);

  const ParamRefs refs = model.params();
  Vec flat = flatten_params(refs);
  AdamState adam;
  adam.lr = cfg.lr;
  adam.init(flat.size());

  std::vector<int> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Vec grad = Vec::Zero(flat.size());
      for (std::size_t b = start; b < end; ++b) {
        const auto& [x, y] = train[static_cast<std::size_t>(order[b])];
        GruCache cache = gru_forward(model.gru, x, Vec::Zero(cfg.hidden_dim));
        cache.X = &x;
        const Mat pred = model.head.forward(cache.H);
        epoch_loss += mse(pred, y);
        const Mat d_pred = 2.0 * (pred - y) / static_cast<double>(pred.size());
        const DenseGrads dg = dense_backward(model.head, cache.H, d_pred);
        const GruGrads gg = gru_backward(model.gru, cache, dg.dX);
        grad += flatten_grads(gg, dg);
      }
      grad /= static_cast<double>(end - start);
      adam_step(adam, flat, grad);
      unflatten_params(refs, flat);
    }
    epoch_loss /= static_cast<double>(train.size());

    double val_loss = 0.0;
    for (const auto& [x, y] : val) val_loss += mse(model.predict(x), y);
    if (!val.empty()) val_loss /= static_cast<double>(val.size());

    if (log) {
      log->rows.push_back({epoch, "train", epoch_loss, -1.0});
      if (!val.empty()) log->rows.push_back({epoch, "val", val_loss, -1.0});
    }
  }
  return model;
}

FeatureSequence acoustic_representation(const RegressionModel& model, const Mat& kpca_seq) {
  if (kpca_seq.cols() != model.gru.input_dim)
    throw ParameterError("acoustic_representation: input dim mismatch");
  FeatureSequence seq;
  seq.kind = FeatureKind::AcousticRep;
  seq.data = gru_forward_states(model.gru, kpca_seq);
  return seq;
}

FeatureSequence fuse(const FeatureSequence& mfcc_seq, const FeatureSequence& rep_seq) {
  if (mfcc_seq.frames() == 0 || rep_seq.frames() == 0)
    throw ParameterError("fuse: empty feature sequence");
  const Eigen::Index T = std::min(mfcc_seq.frames(), rep_seq.frames());
  FeatureSequence out;
  out.kind = FeatureKind::Fused;
  out.data.resize(T, mfcc_seq.dim() + rep_seq.dim());
  out.data.leftCols(mfcc_seq.dim()) = mfcc_seq.data.topRows(T);
  out.data.rightCols(rep_seq.dim()) = rep_seq.data.topRows(T);
  return out;
}

// ------------------------------------------------------------------ isolated

ParamRefs IsolatedModel::params() {
  ParamRefs refs;
  refs.mats = {&gru.Wz, &gru.Wr, &gru.Wh, &gru.Uz, &gru.Ur, &gru.Uh, &head.W};
  refs.vecs = {&gru.bz, &gru.br, &gru.bh, &head.b};
  return refs;
}

namespace {

double isolated_eval(const IsolatedModel& model, const std::vector<LabeledSeq>& data,
                     double* accuracy) {
  double loss = 0.0;
  int correct = 0;
  for (const auto& [x, label] : data) {
    const auto [pred, probs] = predict_isolated(model, x);
    loss += cross_entropy(probs, label);
    if (pred == label) ++correct;
  }
  if (accuracy)
    *accuracy = data.empty() ? 0.0 : 100.0 * correct / static_cast<double>(data.size());
  return data.empty() ? 0.0 : loss / static_cast<double>(data.size());
}

}  // namespace

IsolatedModel train_isolated(const std::vector<LabeledSeq>& train,
                             const std::vector<LabeledSeq>& val, const IsolatedConfig& cfg,
                             TrainLog* log) {
  if (train.empty()) throw ParameterError("train_isolated: empty training set");
  const auto in_dim = train.front().first.cols();
  for (const auto& [x, label] : train)
    if (label < 0 || label >= cfg.n_classes)
      throw ParameterError("train_isolated: class id out of range");

  Rng rng(cfg.seed);
  IsolatedModel model;
  model.dropout_rate = cfg.dropout_rate;
  model.gru.init(static_cast<int>(in_dim), cfg.hidden_dim, rng);
  model.head.init(cfg.hidden_dim, cfg.n_classes, rng);

  const ParamRefs refs = model.params();
  Vec flat = flatten_params(refs);
  AdamState adam;
  adam.lr = cfg.lr;
  adam.init(flat.size());

  std::vector<int> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::vector<double> val_history;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    int epoch_correct = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Vec grad = Vec::Zero(flat.size());
      for (std::size_t b = start; b < end; ++b) {
        const auto& [x, label] = train[static_cast<std::size_t>(order[b])];
        GruCache cache = gru_forward(model.gru, x, Vec::Zero(cfg.hidden_dim));
        cache.X = &x;
        // Dropout on the final hidden state only.
        const Mat last = cache.H.bottomRows(1);
        const auto [dropped, mask] = dropout(last, cfg.dropout_rate, DropoutMode::Train, rng);
        const Mat logits = model.head.forward(dropped);
        const Vec probs = softmax(logits.row(0).transpose());
        epoch_loss += cross_entropy(probs, label);
        Eigen::Index arg = 0;
        probs.maxCoeff(&arg);
        if (static_cast<int>(arg) == label) ++epoch_correct;

        Mat d_logits = probs.transpose();
        d_logits(0, label) -= 1.0;
        const DenseGrads dg = dense_backward(model.head, dropped, d_logits);
        Mat dH = Mat::Zero(cache.H.rows(), cache.H.cols());
        dH.bottomRows(1) = dg.dX.cwiseProduct(mask);
        const GruGrads gg = gru_backward(model.gru, cache, dH);
        grad += flatten_grads(gg, dg);
      }
      grad /= static_cast<double>(end - start);
      adam_step(adam, flat, grad);
      unflatten_params(refs, flat);
    }
    epoch_loss /= static_cast<double>(train.size());
    const double train_acc = 100.0 * epoch_correct / static_cast<double>(train.size());

    double val_acc = 0.0;
    const double val_loss = isolated_eval(model, val, &val_acc);
    if (log) {
      log->rows.push_back({epoch, "train", epoch_loss, train_acc});
      if (!val.empty()) log->rows.push_back({epoch, "val", val_loss, val_acc});
    }
    if (!val.empty()) {
      val_history.push_back(val_loss);
      if (early_stop(val_history, cfg.patience)) break;
    }
  }
  return model;
}

std::pair<int, Vec> predict_isolated(const IsolatedModel& model, const Mat& feature_seq) {
  if (feature_seq.cols() != model.gru.input_dim)
    throw ParameterError("predict_isolated: feature dim mismatch");
  const Mat H = gru_forward_states(model.gru, feature_seq);
  const Mat logits = model.head.forward(H.bottomRows(1));
  const Vec probs = softmax(logits.row(0).transpose());
  int best = 0;
  for (int c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[best]) best = c;  // ties keep the lower class id
  return {best, probs};
}

// ----------------------------------------------------------------------- ctc

ParamRefs CtcModel::params() {
  ParamRefs refs;
  refs.mats = {&encoder.Wz, &encoder.Wr, &encoder.Wh,
               &encoder.Uz, &encoder.Ur, &encoder.Uh, &head.W};
  refs.vecs = {&encoder.bz, &encoder.br, &encoder.bh, &head.b};
  return refs;
}

Mat CtcModel::log_probs(const Mat& feature_seq) const {
  const Mat logits = head.forward(gru_forward_states(encoder, feature_seq));
  return softmax_rows(logits).array().max(1e-300).log();
}

namespace {

Eigen::Index min_ctc_frames(const std::vector<int>& label) {
  Eigen::Index need = static_cast<Eigen::Index>(label.size());
  for (std::size_t i = 1; i < label.size(); ++i)
    if (label[i] == label[i - 1]) ++need;
  return need;
}

double ctc_eval(const CtcModel& model, const std::vector<std::pair<Mat, std::vector<int>>>& data) {
  double loss = 0.0;
  for (const auto& [x, label] : data)
    loss += ctc_loss(model.log_probs(x), label, Charset::kBlank);
  return data.empty() ? 0.0 : loss / static_cast<double>(data.size());
}

}  // namespace

CtcModel train_ctc(const std::vector<TranscribedSeq>& train,
                   const std::vector<TranscribedSeq>& val, const CtcConfig& cfg,
                   TrainLog* log) {
  if (train.empty()) throw ParameterError("train_ctc: empty training set");
  CtcModel model;

  // Encode transcripts, rejecting infeasible utterances by index up front.
  auto encode_all = [&](const std::vector<TranscribedSeq>& data, const std::string& split) {
    std::vector<std::pair<Mat, std::vector<int>>> out;
    std::string bad;
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::vector<int> label = model.charset.encode(model.charset.normalize(data[i].second));
      if (data[i].first.rows() < min_ctc_frames(label)) {
        if (!bad.empty()) bad += ",";
        bad += split + "[" + std::to_string(i) + "]";
        continue;
      }
      out.emplace_back(data[i].first, std::move(label));
    }
    if (!bad.empty())
      throw ParameterError("train_ctc: transcripts longer than frame count for " + bad);
    return out;
  };
  const auto train_enc = encode_all(train, "train");
  const auto val_enc = encode_all(val, "val");

  const auto in_dim = train.front().first.cols();
  Rng rng(cfg.seed);
  model.encoder.init(static_cast<int>(in_dim), cfg.hidden_dim, rng);
  model.head.init(cfg.hidden_dim, model.charset.size(), rng);

  const ParamRefs refs = model.params();
  Vec flat = flatten_params(refs);
  AdamState adam;
  adam.lr = cfg.lr;
  adam.init(flat.size());

  std::vector<int> order(train_enc.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::vector<double> val_history;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Vec grad = Vec::Zero(flat.size());
      for (std::size_t b = start; b < end; ++b) {
        const auto& [x, label] = train_enc[static_cast<std::size_t>(order[b])];
        GruCache cache = gru_forward(model.encoder, x, Vec::Zero(cfg.hidden_dim));
        cache.X = &x;
        const Mat logits = model.head.forward(cache.H);
        const auto [loss, d_logits] = ctc_loss_logits_grad(logits, label, Charset::kBlank);
        epoch_loss += loss;
        const DenseGrads dg = dense_backward(model.head, cache.H, d_logits);
        const GruGrads gg = gru_backward(model.encoder, cache, dg.dX);
        grad += flatten_grads(gg, dg);
      }
      grad /= static_cast<double>(end - start);
      clip_global_norm(grad, cfg.clip_norm);
      adam_step(adam, flat, grad);
      unflatten_params(refs, flat);
    }
    epoch_loss /= static_cast<double>(train_enc.size());

    const double val_loss = ctc_eval(model, val_enc);
    if (log) {
      log->rows.push_back({epoch, "train", epoch_loss, -1.0});
      if (!val_enc.empty()) log->rows.push_back({epoch, "val", val_loss, -1.0});
    }
    if (!val_enc.empty()) {
      val_history.push_back(val_loss);
      if (early_stop(val_history, cfg.patience)) break;
    }
  }
  return model;
}

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[8] = {'E', 'E', 'G', 'A', 'S', 'R', 'C', 'K'};

std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t crc = 0) {
  static std::uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    init = true;
  }
  crc ^= 0xffffffffu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

}  // namespace

const Mat& Checkpoint::block(const std::string& name) const {
  for (const auto& [n, m] : blocks)
    if (n == name) return m;
  throw IoError("block_error", "checkpoint block not found: " + name);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["version"] = ckpt.version;
  header["architecture"] = ckpt.architecture;
  header["config"] = ckpt.config_echo;
  header["seed"] = ckpt.seed;
  header["blocks"] = nlohmann::json::array();
  for (const auto& [name, m] : ckpt.blocks)
    header["blocks"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  const std::string header_text = header.dump();

  std::string payload;
  for (const auto& [name, m] : ckpt.blocks) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double v = m(r, c);
        char buf[sizeof(double)];
        std::memcpy(buf, &v, sizeof(double));
        payload.append(buf, sizeof(double));
      }
  }

  std::string body(kMagic, sizeof(kMagic));
  const auto hlen = static_cast<std::uint32_t>(header_text.size());
  body.append(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  body += header_text;
  body += payload;
  const std::uint32_t crc =
      crc32(reinterpret_cast<const unsigned char*>(body.data()), body.size());
  body.append(reinterpret_cast<const char*>(&crc), sizeof(crc));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("io_error", "cannot write checkpoint: " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("io_error", "cannot read checkpoint: " + path);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (body.size() < sizeof(kMagic) + sizeof(std::uint32_t) * 2)
    throw IoError("truncation_error", "checkpoint file too short: " + path);
  if (std::memcmp(body.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("version_error", "bad checkpoint magic: " + path);

  std::uint32_t hlen = 0;
  std::memcpy(&hlen, body.data() + sizeof(kMagic), sizeof(hlen));
  std::size_t off = sizeof(kMagic) + sizeof(hlen);
  if (off + hlen + sizeof(std::uint32_t) > body.size())
    throw IoError("truncation_error", "checkpoint header truncated: " + path);
  nlohmann::json header = nlohmann::json::parse(body.substr(off, hlen), nullptr, false);
  if (header.is_discarded())
    throw IoError("checksum_error", "checkpoint header unreadable: " + path);
  off += hlen;

  // Expected size from the declared block shapes distinguishes a short file
  // from in-place corruption.
  std::size_t payload_bytes = 0;
  for (const auto& b : header.at("blocks"))
    payload_bytes +=
        static_cast<std::size_t>(b.at("rows").get<Eigen::Index>() *
                                 b.at("cols").get<Eigen::Index>()) *
        sizeof(double);
  if (off + payload_bytes + sizeof(std::uint32_t) > body.size())
    throw IoError("truncation_error", "checkpoint payload truncated: " + path);

  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, body.data() + body.size() - sizeof(stored_crc), sizeof(stored_crc));
  const std::uint32_t crc = crc32(reinterpret_cast<const unsigned char*>(body.data()),
                                  body.size() - sizeof(stored_crc));
  if (crc != stored_crc) throw IoError("checksum_error", "checkpoint CRC mismatch: " + path);

  Checkpoint ckpt;
  ckpt.version = header.at("version").get<int>();
  if (ckpt.version != 1)
    throw IoError("version_error",
                  "unsupported checkpoint version " + std::to_string(ckpt.version));
  ckpt.architecture = header.at("architecture").get<std::string>();
  ckpt.config_echo = header.at("config").get<std::string>();
  ckpt.seed = header.at("seed").get<std::uint64_t>();

  for (const auto& b : header.at("blocks")) {
    const auto rows = b.at("rows").get<Eigen::Index>();
    const auto cols = b.at("cols").get<Eigen::Index>();
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if (off + bytes > body.size() - sizeof(stored_crc))
      throw IoError("truncation_error", "checkpoint payload truncated: " + path);
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v;
        std::memcpy(&v, body.data() + off, sizeof(double));
        off += sizeof(double);
        m(r, c) = v;
      }
    ckpt.blocks.emplace_back(b.at("name").get<std::string>(), std::move(m));
  }
  return ckpt;
}

void append_standardizer_blocks(Checkpoint& ckpt, const std::string& prefix,
                                const Standardizer& s) {
  ckpt.blocks.emplace_back(prefix + ".mean", s.mean);
  ckpt.blocks.emplace_back(prefix + ".std", s.std);
}

Standardizer standardizer_from_blocks(const Checkpoint& ckpt, const std::string& prefix) {
  Standardizer s;
  s.mean = ckpt.block(prefix + ".mean").col(0);
  s.std = ckpt.block(prefix + ".std").col(0);
  return s;
}

void append_kpca_blocks(Checkpoint& ckpt, const std::string& prefix, const KpcaModel& m) {
  ckpt.blocks.emplace_back(prefix + ".train_matrix", m.train_matrix);
  ckpt.blocks.emplace_back(prefix + ".alphas", m.alphas);
  ckpt.blocks.emplace_back(prefix + ".eigenvalues", m.eigenvalues);
  ckpt.blocks.emplace_back(prefix + ".all_eigenvalues", m.all_eigenvalues);
  ckpt.blocks.emplace_back(prefix + ".row_means", m.row_means);
  Mat meta(5, 1);
  meta << m.gamma, m.coef0, static_cast<double>(m.degree), m.total_mean,
      static_cast<double>(m.n_components);
  ckpt.blocks.emplace_back(prefix + ".meta", meta);
}

KpcaModel kpca_from_blocks(const Checkpoint& ckpt, const std::string& prefix) {
  KpcaModel m;
  m.train_matrix = ckpt.block(prefix + ".train_matrix");
  m.alphas = ckpt.block(prefix + ".alphas");
  m.eigenvalues = ckpt.block(prefix + ".eigenvalues").col(0);
  m.all_eigenvalues = ckpt.block(prefix + ".all_eigenvalues").col(0);
  m.row_means = ckpt.block(prefix + ".row_means").col(0);
  const Mat meta = ckpt.block(prefix + ".meta");
  m.gamma = meta(0, 0);
  m.coef0 = meta(1, 0);
  m.degree = static_cast<int>(meta(2, 0));
  m.total_mean = meta(3, 0);
  m.n_components = static_cast<int>(meta(4, 0));
  return m;
}

void append_param_blocks(Checkpoint& ckpt, const std::string& prefix, ParamRefs refs) {
  ckpt.blocks.emplace_back(prefix + ".params", flatten_params(refs));
}

void params_from_blocks(const Checkpoint& ckpt, const std::string& prefix, ParamRefs refs) {
  unflatten_params(refs, ckpt.block(prefix + ".params").col(0));
}

}  // namespace eegasr
