#pragma once

#include "eegasr/common.hpp"

namespace eegasr {

enum class FeatureKind { EegRaw, EmgRaw, Kpca, Mfcc, Fused, AcousticRep };

// Frame-level feature matrix (frames x dim) at a fixed frame rate.
struct FeatureSequence {
  Mat data;
  double frame_rate_hz = 100.0;
  FeatureKind kind = FeatureKind::EegRaw;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

struct FrameSpec {
  double window_ms = 100.0;
  double hop_ms = 10.0;
};

// Frame boundaries: frames start at multiples of the hop, trailing partial
// window dropped. Returns (start, length) sample offsets.
std::vector<std::pair<Eigen::Index, Eigen::Index>> frame_bounds(Eigen::Index n_samples,
                                                                double fs_hz,
                                                                const FrameSpec& spec);

Mat frame_signal(const Vec& x, double fs_hz, const FrameSpec& spec);

// The five per-frame channel statistics.
double rms(const Vec& frame);
double zero_crossing_rate(const Vec& frame);
double moving_window_average(const Vec& frame);
double kurtosis(const Vec& frame);
double power_spectral_entropy(const Vec& frame);

// Five features per selected channel, concatenated in the given channel order,
// at 100 Hz. `signals` is channels x samples at fs_hz.
FeatureSequence channel_features(const Mat& signals, double fs_hz,
                                 const std::vector<int>& channels, FeatureKind kind,
                                 const FrameSpec& spec = FrameSpec{});

// 13-dim MFCC at 100 Hz: pre-emphasis 0.97, 25 ms Hamming window / 10 ms hop,
// 512-point power spectrum, 26 mel filters (0-8 kHz), log floor 1e-10,
// orthonormal DCT-II keeping coefficients 0..12.
FeatureSequence mfcc(const Vec& audio, double fs_hz);

}  // namespace eegasr
