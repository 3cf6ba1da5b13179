#pragma once

#include "eegasr/common.hpp"

namespace eegasr {

// One second-order section of an IIR cascade, direct-form II transposed.
struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;  // denominator, a0 normalized to 1
};

struct BiquadCascade {
  std::vector<Biquad> stages;
  double sample_rate_hz = 0;
};

enum class BandMode { Low, High, All };

// Cutoffs for the three analysis bands, Hz.
inline std::pair<double, double> band_cutoffs(BandMode band) {
  switch (band) {
    case BandMode::Low: return {0.1, 15.0};
    case BandMode::High: return {15.0, 70.0};
    case BandMode::All: return {0.1, 70.0};
  }
  throw ParameterError("unknown band mode");
}

// Butterworth bandpass of the given prototype order, realized as biquads via
// analog prototype + bilinear transform with frequency pre-warping. An order-N
// prototype yields a 2N-pole bandpass, i.e. N biquad stages.
BiquadCascade design_bandpass(double low_hz, double high_hz, int order, double fs_hz);

// Single-stage notch with unit DC gain and deep attenuation at center_hz.
BiquadCascade design_notch(double center_hz, double q, double fs_hz);

// Causal single-pass filtering, zero initial state. Output length == input length.
Vec apply_filter(const BiquadCascade& cascade, const Vec& signal);

// Apply a cascade to every row of a channels x samples matrix.
Mat apply_filter_rows(const BiquadCascade& cascade, const Mat& signals);

// Complex frequency response of the cascade at frequency f_hz.
double magnitude_response(const BiquadCascade& cascade, double f_hz);

// Max pole magnitude over all stages (< 1 means stable).
double max_pole_magnitude(const BiquadCascade& cascade);

// Per EEG channel, regress on all EMG channels by ordinary least squares
// (normal equations with 1e-9 ridge jitter on the Gram diagonal) and return
// the residual matrix. Shapes: eeg channels x samples, emg channels x samples.
Mat remove_emg(const Mat& eeg, const Mat& emg);

}  // namespace eegasr
