#include "eegasr/features.hpp"

#include <complex>

namespace eegasr {

namespace {

using cd = std::complex<double>;

// Iterative radix-2 FFT, n a power of two.
void fft_pow2(std::vector<cd>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const cd wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cd u = a[i + j];
        const cd v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

constexpr int kMfccFftSize = 512;
constexpr int kMelFilters = 26;
constexpr int kMfccCoeffs = 13;
constexpr double kPreEmphasis = 0.97;
constexpr double kLogFloor = 1e-10;

// 26 triangular filters over 0..8000 Hz for a 512-point spectrum at 16 kHz.
Mat mel_filterbank(double fs_hz) {
  const int n_bins = kMfccFftSize / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(fs_hz / 2.0);
  std::vector<double> edges(kMelFilters + 2);
  for (int i = 0; i < kMelFilters + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kMelFilters + 1));

  Mat fb = Mat::Zero(kMelFilters, n_bins);
  for (int m = 0; m < kMelFilters; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = fs_hz * k / kMfccFftSize;
      if (f > left && f < center)
        fb(m, k) = (f - left) / (center - left);
      else if (f >= center && f < right)
        fb(m, k) = (right - f) / (right - center);
    }
  }
  return fb;
}

}  // namespace

std::vector<std::pair<Eigen::Index, Eigen::Index>> frame_bounds(Eigen::Index n_samples,
                                                                double fs_hz,
                                                                const FrameSpec& spec) {
  const auto window = static_cast<Eigen::Index>(std::lround(spec.window_ms * fs_hz / 1000.0));
  const auto hop = static_cast<Eigen::Index>(std::lround(spec.hop_ms * fs_hz / 1000.0));
  if (window <= 0 || hop <= 0 || window < hop)
    throw ParameterError("frame spec: need window >= hop > 0");
  if (n_samples < window) throw ParameterError("signal shorter than one analysis window");
  const Eigen::Index n_frames = (n_samples - window) / hop + 1;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> bounds;
  bounds.reserve(static_cast<std::size_t>(n_frames));
  for (Eigen::Index i = 0; i < n_frames; ++i) bounds.emplace_back(i * hop, window);
  return bounds;
}

Mat frame_signal(const Vec& x, double fs_hz, const FrameSpec& spec) {
  const auto bounds = frame_bounds(x.size(), fs_hz, spec);
  Mat frames(static_cast<Eigen::Index>(bounds.size()), bounds.front().second);
  for (std::size_t i = 0; i < bounds.size(); ++i)
    frames.row(static_cast<Eigen::Index>(i)) =
        x.segment(bounds[i].first, bounds[i].second).transpose();
  return frames;
}

double rms(const Vec& frame) {
  if (frame.size() == 0) throw ParameterError("rms: empty frame");
  return std::sqrt(frame.squaredNorm() / static_cast<double>(frame.size()));
}

double zero_crossing_rate(const Vec& frame) {
  if (frame.size() < 2) throw ParameterError("zero_crossing_rate: frame too short");
  int crossings = 0;
  for (Eigen::Index i = 0; i + 1 < frame.size(); ++i) {
    const bool pos_a = frame[i] >= 0.0;  // zero counts as positive
    const bool pos_b = frame[i + 1] >= 0.0;
    if (pos_a != pos_b) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);
}

double moving_window_average(const Vec& frame) {
  if (frame.size() == 0) throw ParameterError("moving_window_average: empty frame");
  return frame.mean();
}

double kurtosis(const Vec& frame) {
  if (frame.size() < 2) throw ParameterError("kurtosis: frame too short");
  const double mean = frame.mean();
  const Vec centered = frame.array() - mean;
  const double n = static_cast<double>(frame.size());
  const double m2 = centered.squaredNorm() / n;
  if (m2 < 1e-12) return 0.0;
  const double m4 = centered.array().pow(4).sum() / n;
  return m4 / (m2 * m2);
}

double power_spectral_entropy(const Vec& frame) {
  if (frame.size() < 4) throw ParameterError("power_spectral_entropy: frame too short");
  const Eigen::Index n = frame.size();
  const Eigen::Index n_bins = n / 2 + 1;

  // One-sided DFT power, DC through Nyquist (direct evaluation; frames are short).
  Vec power(n_bins);
  for (Eigen::Index k = 0; k < n_bins; ++k) {
    double re = 0.0, im = 0.0;
    const double w = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      re += frame[t] * std::cos(w * static_cast<double>(t));
      im += frame[t] * std::sin(w * static_cast<double>(t));
    }
    power[k] = re * re + im * im;
  }
  const double total = power.sum();
  if (total <= 0.0) return 0.0;

  double entropy = 0.0;
  for (Eigen::Index k = 0; k < n_bins; ++k) {
    const double p = power[k] / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy / std::log(static_cast<double>(n_bins));
}

FeatureSequence channel_features(const Mat& signals, double fs_hz,
                                 const std::vector<int>& channels, FeatureKind kind,
                                 const FrameSpec& spec) {
  if (channels.empty()) throw ParameterError("channel_features: empty channel subset");
  for (int ch : channels)
    if (ch < 0 || ch >= signals.rows())
      throw ParameterError("channel_features: channel index out of range");

  const auto bounds = frame_bounds(signals.cols(), fs_hz, spec);
  FeatureSequence seq;
  seq.kind = kind;
  seq.frame_rate_hz = 1000.0 / spec.hop_ms;
  seq.data.resize(static_cast<Eigen::Index>(bounds.size()),
                  5 * static_cast<Eigen::Index>(channels.size()));
  for (std::size_t f = 0; f < bounds.size(); ++f) {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const Vec frame =
          signals.row(channels[c]).segment(bounds[f].first, bounds[f].second).transpose();
      const auto row = static_cast<Eigen::Index>(f);
      const auto col = static_cast<Eigen::Index>(5 * c);
      seq.data(row, col + 0) = rms(frame);
      seq.data(row, col + 1) = zero_crossing_rate(frame);
      seq.data(row, col + 2) = moving_window_average(frame);
      seq.data(row, col + 3) = kurtosis(frame);
      seq.data(row, col + 4) = power_spectral_entropy(frame);
    }
  }
  return seq;
}

FeatureSequence mfcc(const Vec& audio, double fs_hz) {
  if (fs_hz != 16000.0) throw ParameterError("mfcc: expects 16 kHz audio");
  const auto window = static_cast<Eigen::Index>(std::lround(0.025 * fs_hz));  // 400
  const auto hop = static_cast<Eigen::Index>(std::lround(0.010 * fs_hz));     // 160
  if (audio.size() < window) throw ParameterError("mfcc: audio shorter than one window");

  // Pre-emphasis.
  Vec emph(audio.size());
  emph[0] = audio[0];
  for (Eigen::Index i = 1; i < audio.size(); ++i)
    emph[i] = audio[i] - kPreEmphasis * audio[i - 1];

  Vec hamming(window);
  for (Eigen::Index i = 0; i < window; ++i)
    hamming[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                        static_cast<double>(window - 1));

  const Mat fb = mel_filterbank(fs_hz);
  const int n_bins = kMfccFftSize / 2 + 1;

  // Orthonormal DCT-II matrix, first kMfccCoeffs rows.
  Mat dct(kMfccCoeffs, kMelFilters);
  for (int k = 0; k < kMfccCoeffs; ++k) {
    const double scale = (k == 0) ? std::sqrt(1.0 / kMelFilters) : std::sqrt(2.0 / kMelFilters);
    for (int m = 0; m < kMelFilters; ++m)
      dct(k, m) = scale * std::cos(M_PI * k * (m + 0.5) / kMelFilters);
  }

  const Eigen::Index n_frames = (audio.size() - window) / hop + 1;
  FeatureSequence seq;
  seq.kind = FeatureKind::Mfcc;
  seq.frame_rate_hz = fs_hz / static_cast<double>(hop);
  seq.data.resize(n_frames, kMfccCoeffs);

  std::vector<cd> buf(kMfccFftSize);
  for (Eigen::Index f = 0; f < n_frames; ++f) {
    for (Eigen::Index i = 0; i < kMfccFftSize; ++i)
      buf[static_cast<std::size_t>(i)] =
          (i < window) ? cd(emph[f * hop + i] * hamming[i], 0.0) : cd(0.0, 0.0);
    fft_pow2(buf);
    Vec power(n_bins);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(buf[static_cast<std::size_t>(k)]);
    Vec logmel = (fb * power).array().max(kLogFloor).log();
    seq.data.row(f) = (dct * logmel).transpose();
  }
  return seq;
}

}  // namespace eegasr
