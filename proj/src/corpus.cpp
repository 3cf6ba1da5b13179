#include "eegasr/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "eegasr/features.hpp"

namespace eegasr {

namespace fs = std::filesystem;

const std::vector<std::string>& eeg_channel_names() {
  static const std::vector<std::string> names = {
      "Fp1", "Fp2", "F7",  "F3",  "Fz",  "F4",  "F8",  "FT9", "FC5", "FC1",
      "FC2", "FC6", "FT10", "T7", "C3",  "Cz",  "C4",  "T8",  "TP9", "CP5",
      "CP1", "CP2", "CP6", "TP10", "P7", "P3",  "Pz",  "P4",  "P8"};
  return names;
}

const std::vector<std::string>& emg_channel_names() {
  static const std::vector<std::string> names = {"EMG1", "EMG2"};
  return names;
}

std::vector<int> sensor_channels(SensorSet set) {
  static const std::vector<std::string> frontal = {"Fp1", "Fz",  "F3", "F7",  "FT9", "FC5",
                                                   "FT10", "FC6", "FC2", "F4", "F8",  "Fp2"};
  static const std::vector<std::string> temporal = {"T7", "TP9", "TP10", "T8"};

  const auto& montage = eeg_channel_names();
  auto indices_of = [&](const std::vector<std::string>& wanted) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < montage.size(); ++i)
      if (std::find(wanted.begin(), wanted.end(), montage[i]) != wanted.end())
        idx.push_back(static_cast<int>(i));
    return idx;  // montage order
  };

  switch (set) {
    case SensorSet::All: {
      std::vector<int> all(montage.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      return all;
    }
    case SensorSet::Frontal: return indices_of(frontal);
    case SensorSet::Temporal: return indices_of(temporal);
    case SensorSet::FrontalPlusTemporal: {
      std::vector<std::string> both = frontal;
      both.insert(both.end(), temporal.begin(), temporal.end());
      return indices_of(both);
    }
  }
  throw ParameterError("unknown sensor set");
}

int default_kpca_components(SensorSet set) {
  return set == SensorSet::FrontalPlusTemporal ? 20 : 10;
}

// ----------------------------------------------------------------------- wav

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  s.append(reinterpret_cast<const char*>(&v), 4);
}
void put_u16(std::string& s, std::uint16_t v) {
  s.append(reinterpret_cast<const char*>(&v), 2);
}

}  // namespace

void write_wav(const std::string& path, const Vec& audio, double fs_hz) {
  const auto rate = static_cast<std::uint32_t>(fs_hz);
  const auto n = static_cast<std::uint32_t>(audio.size());
  std::string out;
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (Eigen::Index i = 0; i < audio.size(); ++i) {
    const double clamped = std::clamp(audio[i], -1.0, 1.0);
    const auto sample = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    out.append(reinterpret_cast<const char*>(&sample), 2);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("io_error", "cannot write wav: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::pair<Vec, double> read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("missing_file", "cannot open wav: " + path);
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (data.size() < 44 || data.compare(0, 4, "RIFF") != 0 || data.compare(8, 4, "WAVE") != 0)
    throw IoError("bad_wav", "not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::memcpy(&format, data.data() + 20, 2);
  std::memcpy(&channels, data.data() + 22, 2);
  std::memcpy(&rate, data.data() + 24, 4);
  std::memcpy(&bits, data.data() + 34, 2);
  if (format != 1 || channels != 1 || bits != 16)
    throw IoError("bad_wav", "expected 16-bit PCM mono: " + path);
  if (data.compare(36, 4, "data") != 0)
    throw IoError("bad_wav", "missing data chunk: " + path);
  std::uint32_t n_bytes = 0;
  std::memcpy(&n_bytes, data.data() + 40, 4);
  if (44 + n_bytes > data.size()) throw IoError("bad_wav", "truncated data chunk: " + path);

  Vec audio(n_bytes / 2);
  for (Eigen::Index i = 0; i < audio.size(); ++i) {
    std::int16_t sample = 0;
    std::memcpy(&sample, data.data() + 44 + 2 * i, 2);
    audio[i] = static_cast<double>(sample) / 32767.0;
  }
  return {audio, static_cast<double>(rate)};
}

// ---------------------------------------------------------------- signal csv

void write_signal_csv(const std::string& path, const Mat& signals,
                      const std::vector<std::string>& channel_names) {
  if (static_cast<Eigen::Index>(channel_names.size()) != signals.rows())
    throw ParameterError("write_signal_csv: channel name count mismatch");
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("io_error", "cannot write csv: " + path);
  std::string out;
  for (std::size_t c = 0; c < channel_names.size(); ++c) {
    if (c) out += ',';
    out += channel_names[c];
  }
  out += '\n';
  char buf[40];
  for (Eigen::Index s = 0; s < signals.cols(); ++s) {
    for (Eigen::Index c = 0; c < signals.rows(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", signals(c, s));
      out += buf;
    }
    out += '\n';
  }
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Mat read_signal_csv(const std::string& path, const std::vector<std::string>& expected_channels) {
  std::ifstream f(path);
  if (!f) throw IoError("missing_file", "cannot open csv: " + path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("bad_csv", "empty signal csv: " + path);

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header != expected_channels)
    throw IoError("channel_mismatch",
                  "channel header mismatch in " + path + " (" +
                      std::to_string(header.size()) + " columns, expected " +
                      std::to_string(expected_channels.size()) + ")");

  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != header.size())
      throw IoError("bad_csv", "ragged row in " + path);
    rows.push_back(std::move(row));
  }
  Mat signals(static_cast<Eigen::Index>(header.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (std::size_t c = 0; c < header.size(); ++c)
      signals(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)) = rows[s][c];
  return signals;
}

// ------------------------------------------------------------------ manifest

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("missing_file", "cannot open manifest: " + path);
  Manifest m;
  m.root_dir = fs::path(path).parent_path().string();

  std::string line;
  bool first = true;
  std::map<std::string, int> seen;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("id,", 0) == 0) {
      first = false;
      continue;  // header row
    }
    first = false;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6)
      throw IoError("bad_manifest", "expected 6 columns in manifest row: " + line);
    ManifestEntry e{cells[0], cells[1], cells[2], cells[3], cells[4], cells[5]};
    if (seen.count(e.id))
      throw IoError("duplicate_id", "duplicate utterance id: " + e.id);
    seen[e.id] = 1;
    m.entries.push_back(std::move(e));
  }

  // Validate referenced files and per-utterance consistency.
  for (const ManifestEntry& e : m.entries) {
    const auto resolve = [&](const std::string& p) {
      return (fs::path(m.root_dir) / p).string();
    };
    for (const std::string& p : {e.audio_path, e.eeg_path, e.emg_path})
      if (!fs::exists(resolve(p)))
        throw IoError("missing_file", "utterance " + e.id + ": missing " + p);

    read_wav(resolve(e.audio_path));  // header check
    const Mat eeg = read_signal_csv(resolve(e.eeg_path), eeg_channel_names());
    const Mat emg = read_signal_csv(resolve(e.emg_path), emg_channel_names());
    if (eeg.cols() != emg.cols())
      throw IoError("sample_count_mismatch",
                    "utterance " + e.id + ": EEG/EMG sample counts differ");
  }
  return m;
}

RawRecording load_recording(const Manifest& manifest, const ManifestEntry& entry) {
  const auto resolve = [&](const std::string& p) {
    return (fs::path(manifest.root_dir) / p).string();
  };
  RawRecording rec;
  rec.utterance_id = entry.id;
  rec.transcript = entry.transcript;
  rec.eeg = read_signal_csv(resolve(entry.eeg_path), eeg_channel_names());
  rec.emg = read_signal_csv(resolve(entry.emg_path), emg_channel_names());
  auto [audio, rate] = read_wav(resolve(entry.audio_path));
  if (rate != kAudioRateHz)
    throw IoError("bad_wav", "utterance " + entry.id + ": expected 16 kHz audio");
  rec.audio = std::move(audio);
  return rec;
}

SplitResult split(const Manifest& manifest, const SplitConfig& cfg) {
  const auto n = manifest.entries.size();
  if (n < 10) throw ParameterError("split: need at least 10 entries");
  if (std::abs(cfg.train_frac + cfg.val_frac + cfg.test_frac - 1.0) > 1e-9)
    throw ParameterError("split: fractions must sum to 1");

  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  Rng rng(cfg.seed);
  shuffle(order, rng);

  const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_frac * static_cast<double>(n)));
  SplitResult r;
  r.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  r.val.assign(order.begin() + static_cast<long>(n_train),
               order.begin() + static_cast<long>(n_train + n_val));
  r.test.assign(order.begin() + static_cast<long>(n_train + n_val), order.end());
  return r;
}

// ------------------------------------------------------------------ synthetic

const std::vector<std::string>& synthetic_sentences() {
  static const std::vector<std::string> sentences = {
      "take this home",   "keep them warm",   "call them soon",   "hold this door",
      "wash your hand",   "open the window",  "close the door",   "turn on the light",
      "i am hungry",      "i need water",     "please sit down",  "stand up slowly",
      "come here please", "go to sleep",      "wake me early",    "read the book",
      "write it down",    "look at me",       "listen to this",   "give me that",
      "put it back",      "bring the cup",    "move the chair",   "stop the car",
      "start the music",  "play it again",    "turn it off",      "pick it up",
      "throw it away",    "clean the table",  "wash the dishes",  "cook the dinner",
      "eat your food",    "drink the juice",  "brush your teeth", "comb your hair",
      "tie your shoes",   "wear the coat",    "take the pill",    "call the nurse",
      "see the doctor",   "check the time",   "lock the door",    "ring the bell",
      "push the button",  "pull the handle",  "walk with me",     "help me up",
      "hold my hand",     "watch the show",   "change the channel", "lower the volume",
      "answer the phone", "send the letter",  "pay the bill",     "feed the dog",
      "water the plants"};
  return sentences;
}

namespace {

// Frame-level log-energy of the audio at the EEG frame rate, upsampled to the
// EEG sample grid (piecewise constant).
Vec audio_log_energy_upsampled(const Vec& audio, Eigen::Index n_eeg_samples) {
  const auto hop = static_cast<Eigen::Index>(kAudioRateHz / 100.0);  // 160
  const auto n_frames = audio.size() / hop;
  Vec env(n_eeg_samples);
  for (Eigen::Index s = 0; s < n_eeg_samples; ++s) {
    const Eigen::Index frame = std::min(n_frames - 1, s / 10);  // 10 EEG samples per frame
    const Vec seg = audio.segment(frame * hop, hop);
    env[s] = std::log(seg.squaredNorm() / static_cast<double>(hop) + 1e-8);
  }
  // Shift to positive coupling range.
  env.array() -= env.minCoeff();
  return env;
}

// Cheap pink-ish noise: sum of white noise passed through leaky integrators.
struct PinkNoise {
  double s1 = 0, s2 = 0, s3 = 0;
  double next(Rng& rng) {
    const double w = rng.normal();
    s1 = 0.997 * s1 + 0.029 * w;
    s2 = 0.985 * s2 + 0.065 * w;
    s3 = 0.950 * s3 + 0.120 * w;
    return s1 + s2 + s3 + 0.2 * w;
  }
};

}  // namespace

std::string generate_synthetic(const std::string& out_dir, const SynthConfig& cfg) {
  if (cfg.n_sentences > static_cast<int>(synthetic_sentences().size()))
    throw ParameterError("generate_synthetic: at most 57 sentences");
  if (cfg.n_sentences > cfg.n_utterances)
    throw ParameterError("generate_synthetic: need n_utterances >= n_sentences");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("io_error", "cannot create corpus directory: " + out_dir);

  Rng rng(cfg.seed);

  // Channel-specific mixing weights, fixed for the whole corpus so the
  // EEG-to-speech coupling is learnable across utterances.
  const int n_eeg = static_cast<int>(eeg_channel_names().size());
  Rng mix_rng(cfg.seed ^ 0x5eedULL);
  std::vector<double> env_gain(static_cast<std::size_t>(n_eeg));
  std::vector<double> lo_gain(static_cast<std::size_t>(n_eeg)), hi_gain(static_cast<std::size_t>(n_eeg));
  std::vector<double> lo_phase(static_cast<std::size_t>(n_eeg)), hi_phase(static_cast<std::size_t>(n_eeg));
  for (int c = 0; c < n_eeg; ++c) {
    env_gain[static_cast<std::size_t>(c)] = mix_rng.uniform(1.5, 3.0);
    lo_gain[static_cast<std::size_t>(c)] = mix_rng.uniform(1.2, 2.4);
    hi_gain[static_cast<std::size_t>(c)] = mix_rng.uniform(1.2, 2.4);
    lo_phase[static_cast<std::size_t>(c)] = mix_rng.uniform(0.0, 2.0 * M_PI);
    hi_phase[static_cast<std::size_t>(c)] = mix_rng.uniform(0.0, 2.0 * M_PI);
  }

  std::string manifest_text = "id,audio,eeg,emg,transcript,subject\n";

  for (int u = 0; u < cfg.n_utterances; ++u) {
    const int sentence_id = u % cfg.n_sentences;
    const std::string& sentence = synthetic_sentences()[static_cast<std::size_t>(sentence_id)];

    // ----- audio: per-word tone complexes with overlapping frequency sets
    std::vector<std::string> words;
    {
      std::stringstream ss(sentence);
      std::string w;
      while (ss >> w) words.push_back(w);
    }
    const double tempo = rng.uniform(0.9, 1.1);
    const auto word_len = static_cast<Eigen::Index>(0.28 * tempo * kAudioRateHz);
    const auto gap_len = static_cast<Eigen::Index>(0.06 * tempo * kAudioRateHz);
    const auto lead = static_cast<Eigen::Index>(0.10 * kAudioRateHz);

    const auto n_audio = lead + static_cast<Eigen::Index>(words.size()) * (word_len + gap_len) + lead;
    Vec audio = Vec::Zero(n_audio);
    Eigen::Index pos = lead;
    for (const std::string& w : words) {
      // Tones bucketed by word length, so words of the same length are
      // acoustically interchangeable and audio alone underdetermines the
      // sentence.
      const double base = 220.0 + 160.0 * static_cast<double>(w.size() % 3);
      const double detune = rng.uniform(0.78, 1.28);
      for (Eigen::Index i = 0; i < word_len; ++i) {
        const double t = static_cast<double>(i) / kAudioRateHz;
        const double ramp = std::min({1.0, static_cast<double>(i) / 200.0,
                                      static_cast<double>(word_len - i) / 200.0});
        audio[pos + i] = ramp * (0.5 * std::sin(2.0 * M_PI * base * detune * t) +
                                 0.3 * std::sin(2.0 * M_PI * base * detune * 2.6 * t) +
                                 0.2 * std::sin(2.0 * M_PI * base * detune * 4.1 * t));
      }
      pos += word_len + gap_len;
    }
    for (Eigen::Index i = 0; i < n_audio; ++i) audio[i] = 0.32 * audio[i] + 0.42 * rng.normal();
    audio /= std::max(1.0, audio.cwiseAbs().maxCoeff() / 0.9);

    // ----- EEG: pink noise + envelope coupling + sentence-identity oscillations
    const auto n_samples = static_cast<Eigen::Index>(n_audio / 16);  // 1000 Hz grid
    const Vec env = audio_log_energy_upsampled(audio, n_samples);
    const double f_lo = 2.0 + 0.8 * static_cast<double>(sentence_id % 10);
    const double f_hi = 14.0 + 2.8 * static_cast<double>(sentence_id % 18);
    const double jitter = rng.uniform(0.0, 2.0 * M_PI);  // utterance latency jitter

    Mat eeg(n_eeg, n_samples);
    for (int c = 0; c < n_eeg; ++c) {
      PinkNoise pink;
      const auto ci = static_cast<std::size_t>(c);
      for (Eigen::Index s = 0; s < n_samples; ++s) {
        const double t = static_cast<double>(s) / kEegRateHz;
        eeg(c, s) = pink.next(rng) + env_gain[ci] * env[s] +
                    lo_gain[ci] * std::sin(2.0 * M_PI * f_lo * t + lo_phase[ci] + jitter) +
                    hi_gain[ci] * std::sin(2.0 * M_PI * f_hi * t + hi_phase[ci] + jitter);
      }
    }

    // ----- EMG: envelope-correlated noise on 2 channels
    Mat emg(2, n_samples);
    for (int c = 0; c < 2; ++c)
      for (Eigen::Index s = 0; s < n_samples; ++s)
        emg(c, s) = env[s] * (0.6 + 0.4 * rng.normal()) + 0.3 * rng.normal();

    // ----- write files
    char id[32];
    std::snprintf(id, sizeof(id), "utt%04d", u);
    const std::string wav_name = std::string(id) + ".wav";
    const std::string eeg_name = std::string(id) + "_eeg.csv";
    const std::string emg_name = std::string(id) + "_emg.csv";
    write_wav((fs::path(out_dir) / wav_name).string(), audio, kAudioRateHz);
    write_signal_csv((fs::path(out_dir) / eeg_name).string(), eeg, eeg_channel_names());
    write_signal_csv((fs::path(out_dir) / emg_name).string(), emg, emg_channel_names());
    manifest_text += std::string(id) + "," + wav_name + "," + eeg_name + "," + emg_name + "," +
                     sentence + ",synth\n";
  }

  const std::string manifest_path = (fs::path(out_dir) / "manifest.csv").string();
  std::ofstream mf(manifest_path, std::ios::trunc);
  if (!mf) throw IoError("io_error", "cannot write manifest: " + manifest_path);
  mf << manifest_text;
  return manifest_path;
}

}  // namespace eegasr
