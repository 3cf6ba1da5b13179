#pragma once

#include "eegasr/common.hpp"
#include "eegasr/signal.hpp"

namespace eegasr {

struct RawRecording {
  Mat eeg;  // channels x samples, 1000 Hz
  Mat emg;  // channels x samples, 1000 Hz
  Vec audio;  // mono, 16 kHz, [-1, 1]
  std::string transcript;
  std::string utterance_id;
};

constexpr double kEegRateHz = 1000.0;
constexpr double kAudioRateHz = 16000.0;

// Manifest channel order: the 29-sensor 10-20 montage used throughout.
const std::vector<std::string>& eeg_channel_names();
const std::vector<std::string>& emg_channel_names();

struct ManifestEntry {
  std::string id;
  std::string audio_path;
  std::string eeg_path;
  std::string emg_path;
  std::string transcript;
  std::string subject;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string root_dir;
};

// Parse and validate `id,audio,eeg,emg,transcript,subject` rows; checks that
// referenced files exist, channel headers match the montage, and EEG/EMG
// sample counts agree per utterance.
Manifest load_manifest(const std::string& path);

RawRecording load_recording(const Manifest& manifest, const ManifestEntry& entry);

struct SplitConfig {
  double train_frac = 0.70;
  double val_frac = 0.10;
  double test_frac = 0.20;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<int> train, val, test;  // indices into manifest entries
};

SplitResult split(const Manifest& manifest, const SplitConfig& cfg);

enum class SensorSet { All, Frontal, Temporal, FrontalPlusTemporal };
enum class RepSource { EEG, EMG };

struct AblationConfig {
  BandMode band = BandMode::All;
  SensorSet sensor_set = SensorSet::All;
  RepSource rep_source = RepSource::EEG;
  bool half_length = false;
  int kpca_components = 10;
};

// Channel indices (into the montage order) selected by the sensor set.
std::vector<int> sensor_channels(SensorSet set);

// Components default: 10, or 20 for the combined frontal+temporal set.
int default_kpca_components(SensorSet set);

// WAV helpers: PCM 16-bit little-endian mono.
void write_wav(const std::string& path, const Vec& audio, double fs_hz);
std::pair<Vec, double> read_wav(const std::string& path);

// Signal CSV: header row of channel names, one row per sample.
void write_signal_csv(const std::string& path, const Mat& signals,
                      const std::vector<std::string>& channel_names);
Mat read_signal_csv(const std::string& path, const std::vector<std::string>& expected_channels);

struct SynthConfig {
  int n_utterances = 60;
  int n_sentences = 5;
  std::uint64_t seed = 42;
};

// Deterministic synthetic corpus standing in for unreleased recordings:
// per-word tone complexes in the audio, pink-noise EEG carrying the audio
// log-energy envelope and a sentence-identity oscillation, and
// envelope-correlated EMG. Returns the manifest path.
std::string generate_synthetic(const std::string& out_dir, const SynthConfig& cfg);

// The closed sentence list the generator draws from (first n_sentences used).
const std::vector<std::string>& synthetic_sentences();

}  // namespace eegasr
