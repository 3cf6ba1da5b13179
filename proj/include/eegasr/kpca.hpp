#pragma once

#include "eegasr/common.hpp"

namespace eegasr {

// Column-wise standardization fitted on training rows only.
struct Standardizer {
  Vec mean;
  Vec std;  // floored at 1e-12
};

Standardizer standardize_fit(const Mat& X);
Mat standardize_apply(const Standardizer& s, const Mat& X);

// Polynomial-kernel PCA model with stored training rows for out-of-sample
// projection. `alphas` columns are Gram eigenvectors scaled by 1/sqrt(lambda),
// so training-projection variance per component is lambda/n.
struct KpcaModel {
  Mat train_matrix;  // n x dim, standardized
  double gamma = 0.0;
  double coef0 = 1.0;
  int degree = 3;
  Vec eigenvalues;      // retained, descending
  Mat alphas;           // n x k
  Vec all_eigenvalues;  // full positive spectrum, descending (variance curve)
  Vec row_means;        // per-row mean of the uncentered training Gram
  double total_mean = 0.0;
  int n_components = 0;
};

double poly_kernel(const Vec& x, const Vec& y, double gamma, double coef0, int degree);

// Fit on standardized rows. gamma <= 0 selects the 1/dim default.
KpcaModel kpca_fit(const Mat& X, int n_components, double gamma = 0.0, double coef0 = 1.0,
                   int degree = 3);

Mat kpca_transform(const KpcaModel& model, const Mat& Y);

// Cumulative explained-variance ratio over the full positive spectrum.
std::vector<std::pair<int, double>> explained_variance_curve(const KpcaModel& model);

}  // namespace eegasr
