#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "eegasr/models.hpp"

using namespace eegasr;

namespace {

Mat random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat X(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) X(i, j) = rng.normal();
  return X;
}

std::string temp_path(const std::string& name) { return "/tmp/eegasr_test_" + name; }

}  // namespace

TEST_CASE("train log csv") {
  TrainLog log;
  log.rows.push_back({1, "train", 0.5, -1.0});
  log.rows.push_back({1, "val", 0.25, 50.0});
  const std::string csv = log.to_csv();
  CHECK(csv.find("1,train,0.5") == 0);
  CHECK(csv.find("1,val,0.25,50") != std::string::npos);
}

TEST_CASE("regression model learns a linear map") {
  Rng rng(401);
  // Targets are a fixed linear function of the inputs, learnable by the head
  // alone; the loss should drop sharply.
  const Mat W = random_matrix(13, 6, rng);
  std::vector<SeqPair> train, val;
  for (int i = 0; i < 12; ++i) {
    const Mat X = random_matrix(15, 6, rng);
    const Mat Y = X * W.transpose();
    (i < 9 ? train : val).emplace_back(X, Y);
  }
  RegressionConfig cfg;
  cfg.epochs = 150;
  cfg.hidden_dim = 16;
  cfg.batch_size = 4;
  cfg.lr = 0.01;
  cfg.seed = 11;
  TrainLog log;
  const RegressionModel model = train_regression(train, val, cfg, &log);

  CHECK(model.gru.hidden_dim == 16);
  CHECK(model.head.W.rows() == 13);
  double first = -1.0, last = -1.0;
  for (const auto& r : log.rows) {
    if (r.split != "train") continue;
    if (first < 0) first = r.loss;
    last = r.loss;
  }
  CHECK(last < 0.5 * first);

  const Mat pred = model.predict(val[0].first);
  CHECK(pred.rows() == 15);
  CHECK(pred.cols() == 13);

  const FeatureSequence rep = acoustic_representation(model, val[0].first);
  CHECK(rep.dim() == 16);
  CHECK(rep.frames() == 15);
  CHECK(rep.kind == FeatureKind::AcousticRep);
  // The representation is the hidden states feeding the head.
  CHECK((rep.data * model.head.W.transpose() + Mat::Ones(15, 1) * model.head.b.transpose() - pred)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("regression training is deterministic under a fixed seed") {
  Rng rng(403);
  std::vector<SeqPair> train, val;
  for (int i = 0; i < 6; ++i) {
    const Mat X = random_matrix(10, 4, rng);
    (i < 4 ? train : val).emplace_back(X, random_matrix(10, 13, rng));
  }
  RegressionConfig cfg;
  cfg.epochs = 3;
  cfg.hidden_dim = 8;
  cfg.batch_size = 2;
  cfg.seed = 5;
  const RegressionModel a = train_regression(train, val, cfg);
  const RegressionModel b = train_regression(train, val, cfg);
  CHECK((a.gru.Wz - b.gru.Wz).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.head.W - b.head.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.predict(val[0].first) - b.predict(val[0].first)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fuse concatenates and truncates") {
  FeatureSequence a, b;
  a.data = Mat::Ones(10, 13);
  a.kind = FeatureKind::Mfcc;
  b.data = 2.0 * Mat::Ones(8, 5);
  b.kind = FeatureKind::AcousticRep;
  const FeatureSequence f = fuse(a, b);
  CHECK(f.frames() == 8);
  CHECK(f.dim() == 18);
  CHECK(f.kind == FeatureKind::Fused);
  CHECK(f.data(3, 0) == 1.0);
  CHECK(f.data(3, 13) == 2.0);
}

TEST_CASE("isolated classifier separates easy classes") {
  Rng rng(405);
  // Three classes distinguished by the mean of the feature sequence.
  auto make = [&](int cls) {
    Mat X = random_matrix(12, 6, rng) * 0.1;
    X.col(cls).array() += 2.0;
    return LabeledSeq{X, cls};
  };
  std::vector<LabeledSeq> train, val;
  for (int rep = 0; rep < 10; ++rep)
    for (int c = 0; c < 3; ++c) train.push_back(make(c));
  for (int c = 0; c < 3; ++c) val.push_back(make(c));

  IsolatedConfig cfg;
  cfg.epochs = 30;
  cfg.hidden_dim = 24;
  cfg.n_classes = 3;
  cfg.batch_size = 6;
  cfg.dropout_rate = 0.0;
  cfg.patience = 30;
  cfg.seed = 3;
  TrainLog log;
  const IsolatedModel model = train_isolated(train, val, cfg, &log);

  int correct = 0;
  for (const auto& [X, y] : val) {
    const auto [pred, probs] = predict_isolated(model, X);
    CHECK(probs.size() == 3);
    CHECK(probs.sum() == doctest::Approx(1.0));
    if (pred == y) ++correct;
  }
  CHECK(correct == 3);

  // Validation accuracy is reported as a percentage.
  bool saw_val_acc = false;
  for (const auto& r : log.rows)
    if (r.split == "val" && r.accuracy >= 0.0) {
      saw_val_acc = true;
      CHECK(r.accuracy <= 100.0);
    }
  CHECK(saw_val_acc);
}

TEST_CASE("isolated prediction breaks ties toward the lowest index") {
  IsolatedModel model;
  Rng rng(407);
  model.gru.init(4, 8, rng);
  model.head.init(8, 3, rng);
  model.head.W.setZero();
  model.head.b.setZero();
  model.dropout_rate = 0.0;
  const auto [pred, probs] = predict_isolated(model, Mat::Ones(5, 4));
  CHECK(pred == 0);
  CHECK(probs[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ctc model memorizes a tiny corpus") {
  Rng rng(409);
  Charset cs;
  // Two "utterances" with distinct constant patterns per character position.
  auto embed = [&](const std::string& text) {
    const auto ids = cs.encode(text);
    Mat X(static_cast<Eigen::Index>(ids.size()) * 3, 8);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 8; ++c)
          X(static_cast<Eigen::Index>(3 * i + static_cast<std::size_t>(r)), c) =
              ((ids[i] >> c) & 1) ? 1.0 : -1.0;
    return X;
  };
  std::vector<TranscribedSeq> train = {{embed("ab"), "ab"}, {embed("ba"), "ba"},
                                       {embed("aa"), "aa"}, {embed("bb"), "bb"}};
  CtcConfig cfg;
  cfg.epochs = 400;
  cfg.hidden_dim = 24;
  cfg.batch_size = 4;
  cfg.patience = 400;
  cfg.lr = 0.01;
  cfg.seed = 1;
  TrainLog log;
  const CtcModel model = train_ctc(train, train, cfg, &log);
  int correct = 0;
  for (const auto& [X, text] : train)
    if (greedy_decode(model.log_probs(X), cs) == text) ++correct;
  CHECK(correct >= 3);
  CHECK(!log.rows.empty());
}

TEST_CASE("ctc training rejects infeasible utterances with indices") {
  Rng rng(411);
  std::vector<TranscribedSeq> train = {
      {random_matrix(40, 4, rng), "ok here"},
      {random_matrix(2, 4, rng), "much too long for two frames"}};
  CtcConfig cfg;
  cfg.epochs = 1;
  cfg.hidden_dim = 4;
  cfg.seed = 1;
  try {
    train_ctc(train, train, cfg);
    FAIL("expected ParameterError");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip") {
  Rng rng(413);
  Checkpoint ckpt;
  ckpt.version = 1;
  ckpt.architecture = "test-bundle";
  ckpt.config_echo = "{\"seed\":7}";
  ckpt.seed = 7;
  ckpt.blocks.emplace_back("w", random_matrix(3, 4, rng));
  ckpt.blocks.emplace_back("b", random_matrix(1, 5, rng));

  const std::string path = temp_path("roundtrip.ckpt");
  save_checkpoint(path, ckpt);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.version == 1);
  CHECK(loaded.architecture == "test-bundle");
  CHECK(loaded.seed == 7);
  REQUIRE(loaded.blocks.size() == 2);
  CHECK(loaded.blocks[0].first == "w");
  CHECK((loaded.block("w") - ckpt.block("w")).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.block("b") - ckpt.block("b")).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(ckpt.block("missing"), IoError);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint corruption is detected") {
  Rng rng(417);
  Checkpoint ckpt;
  ckpt.architecture = "x";
  ckpt.blocks.emplace_back("w", random_matrix(2, 2, rng));
  const std::string path = temp_path("corrupt.ckpt");
  save_checkpoint(path, ckpt);

  // Flip one payload byte: checksum_error.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(0, std::ios::end);
    const auto size = static_cast<long>(f.tellg());
    f.seekg(size - 12);
    char byte = 0;
    f.read(&byte, 1);
    byte = static_cast<char>(byte ^ 0x01);
    f.seekp(size - 12);
    f.write(&byte, 1);
  }
  try {
    load_checkpoint(path);
    FAIL("expected checksum error");
  } catch (const IoError& e) {
    CHECK(e.code() == "checksum_error");
  }

  // Truncate: truncation_error.
  save_checkpoint(path, ckpt);
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<long>(bytes.size()) - 9);
  }
  try {
    load_checkpoint(path);
    FAIL("expected truncation error");
  } catch (const IoError& e) {
    CHECK(e.code() == "truncation_error");
  }

  // Wrong magic: version_error.
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "NOTACKPTxxxxxxxxxxxxxxxxxxxxxxxx";
  }
  try {
    load_checkpoint(path);
    FAIL("expected version error");
  } catch (const IoError& e) {
    CHECK(e.code() == "version_error");
  }
  std::remove(path.c_str());
}

TEST_CASE("composite block packing round trips") {
  Rng rng(419);
  Standardizer s;
  s.mean = Vec::LinSpaced(4, 0.0, 3.0);
  s.std = Vec::Constant(4, 2.0);

  const Mat X = random_matrix(15, 4, rng);
  const Standardizer fit = standardize_fit(X);
  const KpcaModel kp = kpca_fit(standardize_apply(fit, X), 3);

  IsolatedModel model;
  model.gru.init(5, 6, rng);
  model.head.init(6, 3, rng);

  Checkpoint ckpt;
  append_standardizer_blocks(ckpt, "std", s);
  append_kpca_blocks(ckpt, "kpca", kp);
  append_param_blocks(ckpt, "clf", model.params());

  const std::string path = temp_path("bundle.ckpt");
  save_checkpoint(path, ckpt);
  const Checkpoint loaded = load_checkpoint(path);

  const Standardizer s2 = standardizer_from_blocks(loaded, "std");
  CHECK((s2.mean - s.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s2.std - s.std).cwiseAbs().maxCoeff() == 0.0);

  const KpcaModel kp2 = kpca_from_blocks(loaded, "kpca");
  CHECK(kp2.degree == kp.degree);
  CHECK(kp2.gamma == kp.gamma);
  CHECK(kp2.n_components == kp.n_components);
  const Mat probe = random_matrix(4, 4, rng);
  CHECK((kpca_transform(kp2, probe) - kpca_transform(kp, probe)).cwiseAbs().maxCoeff() == 0.0);

  IsolatedModel model2;
  model2.gru.init(5, 6, rng);
  model2.head.init(6, 3, rng);
  params_from_blocks(loaded, "clf", model2.params());
  CHECK((model2.gru.Uh - model.gru.Uh).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model2.head.b - model.head.b).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}
