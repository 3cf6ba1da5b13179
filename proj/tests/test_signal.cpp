#include <doctest.h>

#include <complex>

#include "eegasr/signal.hpp"

using namespace eegasr;

namespace {

// Independent magnitude oracle: DFT of a long impulse response evaluated at
// an arbitrary frequency.
double impulse_response_magnitude(const BiquadCascade& cascade, double f_hz,
                                  int n_samples = 1 << 16) {
  Vec impulse = Vec::Zero(n_samples);
  impulse[0] = 1.0;
  const Vec h = apply_filter(cascade, impulse);
  std::complex<double> acc(0.0, 0.0);
  const double w = -2.0 * M_PI * f_hz / cascade.sample_rate_hz;
  for (int n = 0; n < n_samples; ++n)
    acc += h[n] * std::polar(1.0, w * n);
  return std::abs(acc);
}

}  // namespace

TEST_CASE("bandpass design rejects DC and passes the geometric center") {
  const BiquadCascade bp = design_bandpass(0.1, 70.0, 4, 1000.0);
  CHECK(bp.stages.size() == 4);
  CHECK(impulse_response_magnitude(bp, 0.0) < 1e-3);

  const double center = std::sqrt(0.1 * 70.0);
  const double mag = impulse_response_magnitude(bp, center);
  CHECK(20.0 * std::log10(mag) > -1.0);
  CHECK(20.0 * std::log10(mag) < 1.0);
}

TEST_CASE("high-band design separates 5 Hz from 30 Hz") {
  const BiquadCascade bp = design_bandpass(15.0, 70.0, 4, 1000.0);
  CHECK(impulse_response_magnitude(bp, 5.0) < impulse_response_magnitude(bp, 30.0) / 10.0);
}

TEST_CASE("bandpass stages are stable") {
  for (auto [lo, hi] : {std::pair{0.1, 70.0}, {0.1, 15.0}, {15.0, 70.0}}) {
    const BiquadCascade bp = design_bandpass(lo, hi, 4, 1000.0);
    CHECK(max_pole_magnitude(bp) < 1.0);
  }
}

TEST_CASE("bandpass parameter validation") {
  CHECK_THROWS_AS(design_bandpass(70.0, 0.1, 4, 1000.0), ParameterError);
  CHECK_THROWS_AS(design_bandpass(0.1, 600.0, 4, 1000.0), ParameterError);
  CHECK_THROWS_AS(design_bandpass(0.1, 70.0, 3, 1000.0), ParameterError);
}

TEST_CASE("notch: deep at center, unity at DC, flat nearby") {
  const BiquadCascade notch = design_notch(60.0, 30.0, 1000.0);
  CHECK(impulse_response_magnitude(notch, 60.0) < 0.01);
  CHECK(std::abs(magnitude_response(notch, 0.0) - 1.0) < 1e-6);
  CHECK(impulse_response_magnitude(notch, 50.0) > 0.9);
  CHECK_THROWS_AS(design_notch(600.0, 30.0, 1000.0), ParameterError);
}

TEST_CASE("apply_filter basics") {
  const BiquadCascade bp = design_bandpass(0.1, 70.0, 4, 1000.0);
  CHECK(apply_filter(bp, Vec::Zero(100)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(apply_filter(bp, Vec{}), ParameterError);

  BiquadCascade identity;
  identity.sample_rate_hz = 1000.0;
  identity.stages.push_back(Biquad{1.0, 0.0, 0.0, 0.0, 0.0});
  Vec impulse = Vec::Zero(16);
  impulse[0] = 1.0;
  CHECK((apply_filter(identity, impulse) - impulse).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("apply_filter is linear and shift invariant") {
  const BiquadCascade bp = design_bandpass(0.1, 70.0, 4, 1000.0);
  Rng rng(7);
  Vec x(256), y(256);
  for (int i = 0; i < 256; ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
  }
  const Vec fx = apply_filter(bp, x);
  const Vec fy = apply_filter(bp, y);

  // Superposition.
  const Vec sum = apply_filter(bp, 2.5 * x + y);
  CHECK((sum - (2.5 * fx + fy)).cwiseAbs().maxCoeff() < 1e-10);

  // Scaling to relative tolerance.
  const Vec scaled = apply_filter(bp, 3.0 * x);
  CHECK(((scaled - 3.0 * fx).cwiseAbs().maxCoeff() / fx.cwiseAbs().maxCoeff()) < 1e-12);

  // Shift invariance (zero-state region).
  Vec shifted = Vec::Zero(256 + 16);
  shifted.segment(16, 256) = x;
  const Vec fs = apply_filter(bp, shifted);
  CHECK((fs.segment(16, 240) - fx.head(240)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("low band suppresses energy above 20 Hz for white noise") {
  const BiquadCascade low = design_bandpass(0.1, 15.0, 4, 1000.0);
  Rng rng(11);
  const int n = 1 << 14;
  Vec noise(n);
  for (int i = 0; i < n; ++i) noise[i] = rng.normal();
  const Vec filtered = apply_filter(low, noise);

  double total = 0.0, high = 0.0;
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    const double w = -2.0 * M_PI * k / n;
    for (int t = 0; t < n; ++t) acc += filtered[t] * std::polar(1.0, w * t);
    const double p = std::norm(acc);
    total += p;
    if (1000.0 * k / n > 20.0) high += p;
  }
  CHECK(high / total < 0.05);
}

TEST_CASE("remove_emg: zero and exactly dependent regressors") {
  Rng rng(3);
  Mat eeg(3, 60);
  for (int c = 0; c < 3; ++c)
    for (int s = 0; s < 60; ++s) eeg(c, s) = rng.normal();

  CHECK((remove_emg(eeg, Mat::Zero(2, 60)) - eeg).cwiseAbs().maxCoeff() < 1e-9);

  Mat emg(2, 60);
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < 60; ++s) emg(c, s) = rng.normal();
  Mat dependent = eeg;
  dependent.row(0) = 2.0 * emg.row(0);
  const Mat residual = remove_emg(dependent, emg);
  CHECK(residual.row(0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("remove_emg matches explicit normal-equations oracle") {
  Rng rng(17);
  Mat eeg(3, 50), emg(2, 50);
  for (int c = 0; c < 3; ++c)
    for (int s = 0; s < 50; ++s) eeg(c, s) = rng.normal();
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < 50; ++s) emg(c, s) = rng.normal();

  const Mat residual = remove_emg(eeg, emg);

  // Oracle: explicit 2x2 inversion of the jittered Gram.
  Mat gram = emg * emg.transpose();
  gram.diagonal().array() += 1e-9;
  const double det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
  Mat inv(2, 2);
  inv << gram(1, 1) / det, -gram(0, 1) / det, -gram(1, 0) / det, gram(0, 0) / det;
  for (int c = 0; c < 3; ++c) {
    const Vec alpha = inv * (emg * eeg.row(c).transpose());
    const Vec expected = eeg.row(c).transpose() - emg.transpose() * alpha;
    CHECK((residual.row(c).transpose() - expected).cwiseAbs().maxCoeff() /
              expected.cwiseAbs().maxCoeff() <
          1e-9);
  }
}

TEST_CASE("remove_emg residual is orthogonal to EMG channels") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Mat eeg(4, 80), emg(2, 80);
    for (int c = 0; c < 4; ++c)
      for (int s = 0; s < 80; ++s) eeg(c, s) = rng.normal() + 0.5 * rng.uniform();
    for (int c = 0; c < 2; ++c)
      for (int s = 0; s < 80; ++s) emg(c, s) = rng.normal();
    const Mat residual = remove_emg(eeg, emg);
    for (int rc = 0; rc < 4; ++rc)
      for (int ec = 0; ec < 2; ++ec) {
        const double dot = residual.row(rc).dot(emg.row(ec));
        const double denom = residual.row(rc).norm() * emg.row(ec).norm();
        CHECK(std::abs(dot) / denom < 1e-6);
      }
  }
}
