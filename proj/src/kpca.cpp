#include "eegasr/kpca.hpp"

#include <algorithm>
#include <numeric>

namespace eegasr {

Standardizer standardize_fit(const Mat& X) {
  if (X.rows() < 2) throw ParameterError("standardize_fit: need at least 2 rows");
  Standardizer s;
  s.mean = X.colwise().mean();
  Mat centered = X.rowwise() - s.mean.transpose();
  s.std = (centered.array().square().colwise().sum() / static_cast<double>(X.rows()))
              .sqrt()
              .max(1e-12)
              .transpose();
  return s;
}

Mat standardize_apply(const Standardizer& s, const Mat& X) {
  if (X.cols() != s.mean.size()) throw ParameterError("standardize_apply: dim mismatch");
  return (X.rowwise() - s.mean.transpose()).array().rowwise() /
         s.std.transpose().array();
}

double poly_kernel(const Vec& x, const Vec& y, double gamma, double coef0, int degree) {
  if (x.size() != y.size()) throw ParameterError("poly_kernel: dim mismatch");
  return std::pow(gamma * x.dot(y) + coef0, degree);
}

namespace {

Mat kernel_matrix(const Mat& A, const Mat& B, double gamma, double coef0, int degree) {
  Mat K = (gamma * (A * B.transpose())).array() + coef0;
  Mat out = K;
  for (int d = 1; d < degree; ++d) out = out.cwiseProduct(K);
  return out;
}

}  // namespace

KpcaModel kpca_fit(const Mat& X, int n_components, double gamma, double coef0, int degree) {
  const auto n = X.rows();
  if (n_components < 1 || n_components > n - 1)
    throw ParameterError("kpca_fit: n_components must lie in [1, n-1]");
  if (degree < 1) throw ParameterError("kpca_fit: degree must be >= 1");
  KpcaModel model;
  model.train_matrix = X;
  model.gamma = gamma > 0 ? gamma : 1.0 / static_cast<double>(X.cols());
  model.coef0 = coef0;
  model.degree = degree;
  model.n_components = n_components;

  Mat K = kernel_matrix(X, X, model.gamma, model.coef0, model.degree);
  model.row_means = K.rowwise().mean();
  model.total_mean = K.mean();

  // Double centering: K - 1K - K1 + 1K1.
  Mat Kc = K;
  Kc.colwise() -= model.row_means;
  Kc.rowwise() -= model.row_means.transpose();
  Kc.array() += model.total_mean;

  Eigen::SelfAdjointEigenSolver<Mat> eig(Kc);
  if (eig.info() != Eigen::Success) throw NumericError("kpca_fit: eigendecomposition failed");

  // Ascending from Eigen; keep the positive spectrum, descending.
  const Vec evals = eig.eigenvalues();
  const Mat evecs = eig.eigenvectors();
  const double tol = 1e-10 * std::max(1.0, std::abs(evals[n - 1]));
  std::vector<int> positive;
  for (int i = static_cast<int>(n) - 1; i >= 0; --i)
    if (evals[i] > tol) positive.push_back(i);

  if (static_cast<int>(positive.size()) < n_components)
    throw NumericError("kpca_fit: only " + std::to_string(positive.size()) +
                       " positive eigenvalues available for " +
                       std::to_string(n_components) + " requested components");

  model.all_eigenvalues.resize(static_cast<Eigen::Index>(positive.size()));
  for (std::size_t i = 0; i < positive.size(); ++i)
    model.all_eigenvalues[static_cast<Eigen::Index>(i)] = evals[positive[i]];

  model.eigenvalues.resize(n_components);
  model.alphas.resize(n, n_components);
  for (int c = 0; c < n_components; ++c) {
    const double lambda = evals[positive[static_cast<std::size_t>(c)]];
    Vec v = evecs.col(positive[static_cast<std::size_t>(c)]);
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    model.eigenvalues[c] = lambda;
    model.alphas.col(c) = v / std::sqrt(lambda);
  }
  return model;
}

Mat kpca_transform(const KpcaModel& model, const Mat& Y) {
  if (Y.cols() != model.train_matrix.cols())
    throw ParameterError("kpca_transform: dim mismatch");
  Mat K = kernel_matrix(Y, model.train_matrix, model.gamma, model.coef0, model.degree);
  // Center each new kernel row against the training statistics.
  Vec new_row_means = K.rowwise().mean();
  K.colwise() -= new_row_means;
  K.rowwise() -= model.row_means.transpose();
  K.array() += model.total_mean;
  return K * model.alphas;
}

std::vector<std::pair<int, double>> explained_variance_curve(const KpcaModel& model) {
  const double total = model.all_eigenvalues.sum();
  std::vector<std::pair<int, double>> curve;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < model.all_eigenvalues.size(); ++i) {
    cum += model.all_eigenvalues[i];
    curve.emplace_back(static_cast<int>(i) + 1, cum / total);
  }
  return curve;
}

}  // namespace eegasr
