#include "eegasr/signal.hpp"

#include <algorithm>
#include <complex>

namespace eegasr {

namespace {

using cd = std::complex<double>;

// Bilinear transform s -> z with sampling constant k = 2*fs.
cd bilinear(cd s, double k) { return (k + s) / (k - s); }

}  // namespace

BiquadCascade design_bandpass(double low_hz, double high_hz, int order, double fs_hz) {
  if (!(low_hz > 0) || !(high_hz > low_hz) || !(high_hz < fs_hz / 2))
    throw ParameterError("bandpass cutoffs must satisfy 0 < low < high < fs/2");
  if (order < 2 || order % 2 != 0)
    throw ParameterError("bandpass order must be even and >= 2");

  const double k = 2.0 * fs_hz;
  // Pre-warped analog edge frequencies.
  const double w1 = k * std::tan(M_PI * low_hz / fs_hz);
  const double w2 = k * std::tan(M_PI * high_hz / fs_hz);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Butterworth lowpass prototype poles on the unit circle, left half-plane.
  // Lowpass->bandpass maps each prototype pole p to the two roots of
  // s^2 - bw*p*s + w0^2 = 0.
  std::vector<cd> poles;
  for (int m = 0; m < order; ++m) {
    const double theta = M_PI * (2.0 * m + 1.0) / (2.0 * order) + M_PI / 2.0;
    const cd p(std::cos(theta), std::sin(theta));
    const cd bp = bw * p * 0.5;
    const cd disc = std::sqrt(bp * bp - cd(w0sq, 0.0));
    poles.push_back(bp + disc);
    poles.push_back(bp - disc);
  }

  // Digital poles. Analog zeros: `order` at s=0 (z=+1) and `order` at s=inf (z=-1).
  std::vector<cd> zpoles;
  zpoles.reserve(poles.size());
  for (const cd& p : poles) zpoles.push_back(bilinear(p, k));

  // Pair complex-conjugate poles into biquads: sort by imaginary part magnitude
  // then real part so each pole meets its conjugate deterministically.
  std::sort(zpoles.begin(), zpoles.end(), [](const cd& a, const cd& b) {
    const double ia = std::abs(a.imag()), ib = std::abs(b.imag());
    if (ia != ib) return ia < ib;
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });

  BiquadCascade cascade;
  cascade.sample_rate_hz = fs_hz;
  for (int s = 0; s < order; ++s) {
    const cd p = zpoles[2 * s];  // conjugate partner at 2*s+1
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;  // numerator (z-1)(z+1)
    q.a1 = -2.0 * p.real();
    q.a2 = std::norm(p);
    cascade.stages.push_back(q);
  }

  for (const Biquad& q : cascade.stages) {
    const double r = std::sqrt(q.a2);
    if (!(r < 1.0)) throw NumericError("designed bandpass stage is unstable");
  }

  // Normalize overall gain to 1 at the geometric-mean passband frequency.
  const double f_center = fs_hz / M_PI * std::atan(std::sqrt(w0sq) / k);
  const double g = magnitude_response(cascade, f_center);
  if (!(g > 0)) throw NumericError("degenerate bandpass gain");
  const double per_stage = std::pow(1.0 / g, 1.0 / order);
  for (Biquad& q : cascade.stages) {
    q.b0 *= per_stage;
    q.b1 *= per_stage;
    q.b2 *= per_stage;
  }
  return cascade;
}

BiquadCascade design_notch(double center_hz, double q_factor, double fs_hz) {
  if (!(center_hz > 0) || !(center_hz < fs_hz / 2))
    throw ParameterError("notch center must lie in (0, fs/2)");
  if (!(q_factor > 0)) throw ParameterError("notch Q must be positive");

  const double w0 = 2.0 * M_PI * center_hz / fs_hz;
  const double alpha = std::sin(w0) / (2.0 * q_factor);
  const double a0 = 1.0 + alpha;

  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * std::cos(w0) / a0;
  s.a2 = (1.0 - alpha) / a0;

  BiquadCascade cascade;
  cascade.sample_rate_hz = fs_hz;
  cascade.stages.push_back(s);
  return cascade;
}

Vec apply_filter(const BiquadCascade& cascade, const Vec& signal) {
  if (signal.size() == 0) throw ParameterError("apply_filter: empty signal");
  Vec y = signal;
  for (const Biquad& q : cascade.stages) {
    double s1 = 0.0, s2 = 0.0;  // DF2T state
    for (Eigen::Index n = 0; n < y.size(); ++n) {
      const double x = y[n];
      const double out = q.b0 * x + s1;
      s1 = q.b1 * x - q.a1 * out + s2;
      s2 = q.b2 * x - q.a2 * out;
      y[n] = out;
    }
  }
  return y;
}

Mat apply_filter_rows(const BiquadCascade& cascade, const Mat& signals) {
  Mat out(signals.rows(), signals.cols());
  for (Eigen::Index r = 0; r < signals.rows(); ++r)
    out.row(r) = apply_filter(cascade, signals.row(r).transpose()).transpose();
  return out;
}

double magnitude_response(const BiquadCascade& cascade, double f_hz) {
  const double w = 2.0 * M_PI * f_hz / cascade.sample_rate_hz;
  const cd z_inv = std::polar(1.0, -w);
  cd h(1.0, 0.0);
  for (const Biquad& q : cascade.stages) {
    const cd num = q.b0 + q.b1 * z_inv + q.b2 * z_inv * z_inv;
    const cd den = 1.0 + q.a1 * z_inv + q.a2 * z_inv * z_inv;
    h *= num / den;
  }
  return std::abs(h);
}

double max_pole_magnitude(const BiquadCascade& cascade) {
  double worst = 0.0;
  for (const Biquad& q : cascade.stages) {
    // Roots of z^2 + a1 z + a2.
    const cd disc = std::sqrt(cd(q.a1 * q.a1 - 4.0 * q.a2, 0.0));
    worst = std::max(worst, std::abs((-q.a1 + disc) / 2.0));
    worst = std::max(worst, std::abs((-q.a1 - disc) / 2.0));
  }
  return worst;
}

Mat remove_emg(const Mat& eeg, const Mat& emg) {
  if (eeg.cols() != emg.cols())
    throw ParameterError("remove_emg: EEG/EMG sample counts differ");
  if (emg.rows() < 1) throw ParameterError("remove_emg: need at least one EMG channel");

  // Gram of the EMG regressors with ridge jitter.
  Mat gram = emg * emg.transpose();
  gram.diagonal().array() += 1e-9;
  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("remove_emg: EMG Gram matrix is rank deficient");

  Mat residual(eeg.rows(), eeg.cols());
  for (Eigen::Index ch = 0; ch < eeg.rows(); ++ch) {
    const Vec rhs = emg * eeg.row(ch).transpose();
    const Vec alpha = ldlt.solve(rhs);
    residual.row(ch) = eeg.row(ch) - (emg.transpose() * alpha).transpose();
  }
  return residual;
}

}  // namespace eegasr
