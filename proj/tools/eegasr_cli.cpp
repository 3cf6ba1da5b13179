// Command-line front end for the EEG-augmented speech recognition pipeline.
//
// Exit codes: 0 success, 2 bad flags, 3 malformed config, 4 missing corpus,
// 1 any other failure. Errors print one line: `error_code: message`.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "eegasr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace eegasr;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string corpus_dir;
  std::string mode;
  std::string band;
  std::string sensors;
  std::string rep_source;
  bool half_length = false;
  bool baseline_only = false;
  std::int64_t seed = -1;
  // synth options
  int n_utterances = 60;
  int n_sentences = 5;
};

RunConfig resolve_config(const CliOptions& opt) {
  std::string text = "{}";
  if (!opt.config_path.empty()) {
    std::ifstream f(opt.config_path);
    if (!f) throw ParameterError("cannot open config file: " + opt.config_path);
    text.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  }
  RunConfig cfg = run_config_from_json(text);
  // Flags override the file.
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (!opt.corpus_dir.empty()) cfg.corpus_dir = opt.corpus_dir;
  if (!opt.mode.empty()) cfg.mode = opt.mode;
  if (opt.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(opt.seed);
    cfg.split.seed = cfg.seed;
    cfg.regression.seed = cfg.seed;
    cfg.isolated.seed = cfg.seed;
    cfg.ctc.seed = cfg.seed;
  }
  if (opt.baseline_only) cfg.baseline_only = true;
  if (opt.half_length) cfg.ablation.half_length = true;
  if (!opt.band.empty()) {
    if (opt.band == "low") cfg.ablation.band = BandMode::Low;
    else if (opt.band == "high") cfg.ablation.band = BandMode::High;
    else if (opt.band == "all") cfg.ablation.band = BandMode::All;
    else throw ParameterError("unknown band: " + opt.band);
  }
  if (!opt.sensors.empty()) {
    if (opt.sensors == "all") cfg.ablation.sensor_set = SensorSet::All;
    else if (opt.sensors == "frontal") cfg.ablation.sensor_set = SensorSet::Frontal;
    else if (opt.sensors == "temporal") cfg.ablation.sensor_set = SensorSet::Temporal;
    else if (opt.sensors == "frontal_temporal")
      cfg.ablation.sensor_set = SensorSet::FrontalPlusTemporal;
    else throw ParameterError("unknown sensor set: " + opt.sensors);
    cfg.ablation.kpca_components = default_kpca_components(cfg.ablation.sensor_set);
  }
  if (!opt.rep_source.empty()) {
    if (opt.rep_source == "eeg") cfg.ablation.rep_source = RepSource::EEG;
    else if (opt.rep_source == "emg") cfg.ablation.rep_source = RepSource::EMG;
    else throw ParameterError("unknown rep source: " + opt.rep_source);
  }
  if (cfg.mode != "isolated" && cfg.mode != "continuous")
    throw ParameterError("mode must be isolated or continuous");
  return cfg;
}

Manifest open_corpus(const RunConfig& cfg) {
  if (cfg.corpus_dir.empty())
    throw IoError("missing_corpus", "no corpus directory given (--corpus or config)");
  const std::string manifest_path = (fs::path(cfg.corpus_dir) / "manifest.csv").string();
  if (!fs::exists(manifest_path))
    throw IoError("missing_corpus", "manifest not found: " + manifest_path);
  return load_manifest(manifest_path);
}

int dispatch(const std::string& command, const CliOptions& opt) {
  RunConfig cfg = resolve_config(opt);

  if (command == "synth") {
    if (cfg.out_dir.empty()) throw ParameterError("synth requires --out-dir");
    SynthConfig synth;
    synth.n_utterances = opt.n_utterances;
    synth.n_sentences = opt.n_sentences;
    synth.seed = cfg.seed;
    const std::string manifest = generate_synthetic(cfg.out_dir, synth);
    std::cout << "wrote " << manifest << "\n";
    return 0;
  }

  if (command == "validate") {
    const Manifest m = open_corpus(cfg);
    std::cout << "ok: " << m.entries.size() << " utterances\n";
    return 0;
  }

  const Manifest manifest = open_corpus(cfg);

  if (command == "features") {
    const PreparedData data = prepare_data(manifest, cfg);
    std::cout << "utterances: " << data.model_inputs.size() << "\n"
              << "raw feature dim: " << data.raw_dim << "\n"
              << "model input dim: " << data.model_inputs.front().cols() << "\n"
              << "kpca: " << (data.kpca_used ? "yes" : "no (dim <= components)") << "\n";
    return 0;
  }

  if (command == "variance-curve") {
    const PreparedData data = prepare_data(manifest, cfg);
    const std::string csv = variance_curve_csv(data);
    if (!cfg.out_dir.empty()) {
      std::error_code ec;
      fs::create_directories(cfg.out_dir, ec);
      write_text_file((fs::path(cfg.out_dir) / "variance.csv").string(), csv);
      write_text_file((fs::path(cfg.out_dir) / "run.json").string(), run_config_to_json(cfg));
    } else {
      std::cout << csv;
    }
    return 0;
  }

  if (command == "train" || command == "eval") {
    // Training and evaluation share one deterministic pass; `eval` additionally
    // implies artifacts must land somewhere.
    if (command == "eval" && cfg.out_dir.empty())
      throw ParameterError("eval requires --out-dir");
    const PreparedData data = prepare_data(manifest, cfg);
    if (cfg.mode == "isolated") {
      const IsolatedOutcome res = run_isolated_experiment(data, cfg);
      std::cout << "baseline accuracy: " << res.baseline.accuracy << "%\n";
      if (!cfg.baseline_only) std::cout << "fused accuracy: " << res.fused.accuracy << "%\n";
    } else {
      const ContinuousOutcome res = run_continuous_experiment(data, cfg);
      std::cout << "greedy WER: " << 100.0 * res.greedy_wer << "%\n"
                << "beam WER: " << 100.0 * res.beam_wer << "%\n";
    }
    return 0;
  }

  if (command == "ablate") {
    const std::string csv = run_ablation_suite(manifest, cfg);
    std::cout << csv;
    return 0;
  }

  throw ParameterError("unknown command: " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG-augmented speech recognition pipeline"};
  app.require_subcommand(1);

  CliOptions opt;
  std::vector<CLI::App*> subs;
  for (const char* name : {"synth", "validate", "features", "train", "eval",
                           "variance-curve", "ablate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config_path, "JSON config file");
    sub->add_option("--seed", opt.seed, "master seed (overrides config)");
    sub->add_option("--mode", opt.mode, "isolated | continuous");
    sub->add_option("--band", opt.band, "all | low | high");
    sub->add_option("--sensors", opt.sensors, "all | frontal | temporal | frontal_temporal");
    sub->add_option("--rep-source", opt.rep_source, "eeg | emg");
    sub->add_flag("--half-length", opt.half_length, "use only the first half of each sequence");
    sub->add_flag("--baseline-only", opt.baseline_only, "train the MFCC baseline only");
    sub->add_option("--out-dir", opt.out_dir, "output directory");
    sub->add_option("--corpus", opt.corpus_dir, "corpus directory (contains manifest.csv)");
    if (std::string(name) == "synth") {
      sub->add_option("--utterances", opt.n_utterances, "number of utterances");
      sub->add_option("--sentences", opt.n_sentences, "number of distinct sentences");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << "usage_error: " << e.what() << "\n";
    return 2;
  }

  try {
    return dispatch(app.get_subcommands().front()->get_name(), opt);
  } catch (const IoError& e) {
    std::cerr << e.what() << "\n";
    return std::string(e.code()) == "missing_corpus" ? 4 : 1;
  } catch (const ParameterError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
