#include "faultscope/commands.hpp"

#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "faultscope/config.hpp"
#include "faultscope/cwt.hpp"
#include "faultscope/dataset.hpp"
#include "faultscope/error.hpp"
#include "faultscope/metrics.hpp"
#include "faultscope/render.hpp"
#include "faultscope/report.hpp"
#include "faultscope/segmentation.hpp"

namespace faultscope {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEnvPrefix = "FAULTSCOPE_";

nlohmann::ordered_json spec_to_json(const FaultSpec& s) {
  nlohmann::ordered_json j;
  j["shaft_hz"] = s.shaft_hz;
  j["shaft_amplitude"] = s.shaft_amplitude;
  j["fault_hz"] = s.fault_hz;
  j["resonance_hz"] = s.resonance_hz;
  j["decay_rate"] = s.decay_rate;
  j["impulse_amplitude"] = s.impulse_amplitude;
  j["noise_std"] = s.noise_std;
  return j;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string padded(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, v);
  return buf;
}

} // namespace

void apply_spec_overrides(SynthOptions& options, const fs::path& spec_file) {
  std::ifstream in(spec_file);
  if (!in) throw DataError("cannot open fault spec file '" + spec_file.string() + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [name, fields] : j.items()) {
      auto cls = class_from_name(name);
      if (!cls) throw DataError("fault spec file: unknown class '" + name + "'");
      FaultSpec& s = options.specs[static_cast<std::size_t>(class_id(*cls))];
      s.shaft_hz = fields.value("shaft_hz", s.shaft_hz);
      s.shaft_amplitude = fields.value("shaft_amplitude", s.shaft_amplitude);
      s.fault_hz = fields.value("fault_hz", s.fault_hz);
      s.resonance_hz = fields.value("resonance_hz", s.resonance_hz);
      s.decay_rate = fields.value("decay_rate", s.decay_rate);
      s.impulse_amplitude = fields.value("impulse_amplitude", s.impulse_amplitude);
      s.noise_std = fields.value("noise_std", s.noise_std);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("fault spec file '" + spec_file.string() + "': " + e.what());
  }
}

void synthesize_corpus(const SynthOptions& options, const fs::path& out_dir) {
  if (options.count == 0) throw InvalidArgument("synth: count must be at least 1");
  fs::create_directories(out_dir);
  nlohmann::ordered_json index;
  index["seed"] = options.seed;
  index["duration_s"] = options.duration_s;
  index["sample_rate_hz"] = options.sample_rate_hz;
  auto specs = nlohmann::ordered_json::object();
  for (FaultClass c : kAllClasses)
    specs[std::string(class_name(c))] = spec_to_json(options.specs[static_cast<std::size_t>(class_id(c))]);
  index["specs"] = std::move(specs);

  auto records = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < options.count; ++i) {
    const auto cls = static_cast<FaultClass>(i % kNumClasses);
    FaultSpec spec = options.specs[static_cast<std::size_t>(class_id(cls))];
    spec.fault_class = cls;
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32), static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    spec.fault_hz *= 1.0 + jitter(rng);
    spec.resonance_hz *= 1.0 + jitter(rng);
    const std::uint64_t noise_seed = rng();

    const Signal sig = generate_fault_signal(spec, options.duration_s, options.sample_rate_hz, noise_seed);
    const std::string id = "sig" + padded(i, 4) + "_" + std::string(class_name(cls));
    write_wav_f32(sig, out_dir / (id + ".wav"));

    nlohmann::ordered_json rec;
    rec["id"] = id;
    rec["file"] = id + ".wav";
    rec["format"] = "wav";
    rec["class"] = std::string(class_name(cls));
    rec["sample_rate_hz"] = options.sample_rate_hz;
    rec["fault_hz"] = spec.fault_hz;
    rec["resonance_hz"] = spec.resonance_hz;
    rec["noise_seed"] = noise_seed;
    records.push_back(std::move(rec));
  }
  index["signals"] = std::move(records);
  write_json(out_dir / "signals.json", index);
}

namespace {

/// Pipeline flags shared by `transform` and `build`. Command-line values and
/// FAULTSCOPE_* environment variables override the --config file, which
/// overrides the built-in defaults.
class ConfigFlags {
public:
  void attach(CLI::App* app) {
    const PipelineConfig d;
    app->add_option("--config", config_file_, "JSON pipeline config file (flags take precedence)")
        ->envname(std::string(kEnvPrefix) + "CONFIG");
    add<std::size_t>(app, "--window", d.window_len, "samples per segment", "WINDOW",
                     [](PipelineConfig& c, std::size_t v) { c.window_len = v; });
    add<double>(app, "--overlap", d.overlap, "fractional overlap between segments in [0,1)", "OVERLAP",
                [](PipelineConfig& c, double v) { c.overlap = v; });
    add<std::size_t>(app, "--num-scales", d.num_scales, "number of log-spaced CWT scales", "NUM_SCALES",
                     [](PipelineConfig& c, std::size_t v) { c.num_scales = v; });
    add<double>(app, "--f-min", 0.0, "lowest pseudo-frequency in Hz (default fs/500)", "F_MIN",
                [](PipelineConfig& c, double v) { c.f_min_hz = v; }, false);
    add<double>(app, "--f-max", 0.0, "highest pseudo-frequency in Hz (default fs/4)", "F_MAX",
                [](PipelineConfig& c, double v) { c.f_max_hz = v; }, false);
    add<std::size_t>(app, "--image-size", d.image_height, "square image side in pixels", "IMAGE_SIZE",
                     [](PipelineConfig& c, std::size_t v) { c.image_height = c.image_width = v; });
    add<std::size_t>(app, "--image-height", d.image_height, "image height in pixels", "IMAGE_HEIGHT",
                     [](PipelineConfig& c, std::size_t v) { c.image_height = v; });
    add<std::size_t>(app, "--image-width", d.image_width, "image width in pixels", "IMAGE_WIDTH",
                     [](PipelineConfig& c, std::size_t v) { c.image_width = v; });
    add<std::string>(app, "--colormap", std::string(colormap_name(d.colormap)),
                     "grayscale or viridis", "COLORMAP", [](PipelineConfig& c, const std::string& v) {
                       auto cm = parse_colormap(v);
                       if (!cm) throw InvalidArgument("unknown colormap '" + v + "'");
                       c.colormap = *cm;
                     });
    add<double>(app, "--log-epsilon", d.log_epsilon, "floor added before the log compression",
                "LOG_EPSILON", [](PipelineConfig& c, double v) { c.log_epsilon = v; });
    add<double>(app, "--energy-quantile", d.energy_quantile,
                "quantile of log energy enclosed by synthesized boxes", "ENERGY_QUANTILE",
                [](PipelineConfig& c, double v) { c.energy_quantile = v; });
    add<double>(app, "--train-ratio", d.ratios.train, "training split fraction", "TRAIN_RATIO",
                [](PipelineConfig& c, double v) { c.ratios.train = v; });
    add<double>(app, "--val-ratio", d.ratios.val, "validation split fraction", "VAL_RATIO",
                [](PipelineConfig& c, double v) { c.ratios.val = v; });
    add<double>(app, "--test-ratio", d.ratios.test, "test split fraction", "TEST_RATIO",
                [](PipelineConfig& c, double v) { c.ratios.test = v; });
    add<std::size_t>(app, "--augment-copies", d.augment.copies,
                     "augmented copies per training image (0 disables augmentation)", "AUGMENT_COPIES",
                     [](PipelineConfig& c, std::size_t v) { c.augment.copies = v; });
    add<bool>(app, "--augment-flip", d.augment.flip, "allow random horizontal flips", "AUGMENT_FLIP",
              [](PipelineConfig& c, bool v) { c.augment.flip = v; });
    add<double>(app, "--max-rotation", d.augment.max_rotation_deg, "rotation range in degrees (<= 5)",
                "MAX_ROTATION", [](PipelineConfig& c, double v) { c.augment.max_rotation_deg = v; });
    add<double>(app, "--contrast-min", d.augment.contrast_min, "lowest contrast factor (>= 0.8)",
                "CONTRAST_MIN", [](PipelineConfig& c, double v) { c.augment.contrast_min = v; });
    add<double>(app, "--contrast-max", d.augment.contrast_max, "highest contrast factor (<= 1.2)",
                "CONTRAST_MAX", [](PipelineConfig& c, double v) { c.augment.contrast_max = v; });
    add<double>(app, "--min-box-area", d.augment.min_box_area_fraction,
                "drop rotated boxes keeping less than this fraction of their area", "MIN_BOX_AREA",
                [](PipelineConfig& c, double v) { c.augment.min_box_area_fraction = v; });
    add<std::uint64_t>(app, "--seed", d.seed, "random seed for splitting and augmentation", "SEED",
                       [](PipelineConfig& c, std::uint64_t v) { c.seed = v; });
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    if (!config_file_.empty()) c = load_config(config_file_);
    for (const auto& apply : appliers_) apply(c);
    validate(c);
    return c;
  }

private:
  template <typename T, typename Set>
  void add(CLI::App* app, const std::string& flag, T def, const std::string& help,
           const std::string& env, Set set, bool show_default = true) {
    auto value = std::make_shared<T>(def);
    CLI::Option* opt = app->add_option(flag, *value, help)->envname(kEnvPrefix + env);
    if (show_default) opt->capture_default_str();
    appliers_.push_back([opt, value, set](PipelineConfig& c) {
      if (opt->count() > 0) set(c, *value);
    });
  }

  std::string config_file_;
  std::vector<std::function<void(PipelineConfig&)>> appliers_;
};

SignalFormat infer_format(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".csv" || ext == ".txt") return SignalFormat::Csv;
  if (ext == ".wav") return SignalFormat::Wav;
  return SignalFormat::RawF32Le;
}

void run_transform(const std::vector<std::string>& inputs, const std::string& format_name_opt,
                   double rate, const fs::path& out_dir, bool dump, const PipelineConfig& config,
                   std::ostream& out) {
  fs::create_directories(out_dir);
  save_config(config, out_dir / "config.json");
  std::size_t written = 0;
  for (const auto& input : inputs) {
    const fs::path path(input);
    SignalFormat format = infer_format(path);
    if (!format_name_opt.empty()) {
      auto f = parse_signal_format(format_name_opt);
      if (!f) throw InvalidArgument("unknown format '" + format_name_opt + "'");
      format = *f;
    }
    if (format != SignalFormat::Wav && !(rate > 0.0))
      throw InvalidArgument("--rate is required for " + std::string(faultscope::format_name(format)) +
                            " input '" + input + "'");
    if (!fs::exists(path)) throw DataError("input file '" + input + "' does not exist");
    const Signal signal = load_signal(path, format, rate);
    const ScaleGrid grid = config.scale_grid(signal.sample_rate_hz);
    std::vector<Segment> segments;
    try {
      segments = segment_signal(signal, config.window_len, config.overlap);
    } catch (const Error& e) {
      throw Error(e.kind(), "'" + input + "': " + e.what());
    }
    const std::string stem = path.stem().string();
    std::vector<std::exception_ptr> errors(segments.size());
    const auto n = static_cast<std::int64_t>(segments.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t k = 0; k < n; ++k) {
      const auto i = static_cast<std::size_t>(k);
      try {
        const Scalogram s = cwt_fft(segments[i].samples, grid);
        const std::string name = stem + "_seg" + padded(i, 4);
        if (dump) write_scalogram(s.coefficients, out_dir / (name + ".cwt"));
        render_png(make_spectrogram(s, config.image_height, config.image_width, config.colormap,
                                    config.log_epsilon),
                   out_dir / (name + ".png"));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i]) continue;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const Error& e) {
        throw Error(e.kind(), "'" + input + "' segment " + std::to_string(i) + ": " + e.what());
      }
    }
    written += segments.size();
    out << input << ": " << segments.size() << " spectrograms\n";
  }
  out << "wrote " << written << " images to " << out_dir.string() << '\n';
}

int exit_code(ErrorKind k) { return static_cast<int>(k); }

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"faultscope: vibration signals to CWT spectrogram detection datasets, and "
               "detection metrics"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("-j,--jobs", jobs, "worker threads for per-file stages (0 = all cores)")
      ->envname(std::string(kEnvPrefix) + "JOBS")
      ->capture_default_str();

  // transform
  auto* transform = app.add_subcommand("transform", "Render CWT spectrogram PNGs from signal files");
  std::vector<std::string> t_inputs;
  std::string t_format;
  double t_rate = 0.0;
  std::string t_out;
  bool t_dump = false;
  transform->add_option("inputs", t_inputs, "signal files (csv, wav, raw_f32le)")->required();
  transform->add_option("--format", t_format, "csv | wav | raw_f32le (default: by extension)");
  transform->add_option("--rate", t_rate, "sample rate in Hz (ignored for wav)")
      ->envname(std::string(kEnvPrefix) + "RATE");
  transform->add_option("-o,--out", t_out, "output directory")->required();
  transform->add_flag("--dump-scalograms", t_dump, "also write raw coefficient matrices (.cwt)");
  ConfigFlags t_config;
  t_config.attach(transform);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled bearing-fault corpus");
  SynthOptions s_opts;
  std::string s_spec, s_out;
  synth->add_option("--spec", s_spec, "JSON file of per-class fault model overrides");
  synth->add_option("-n,--count", s_opts.count, "number of signals (class = index mod 4)")
      ->capture_default_str();
  synth->add_option("--seed", s_opts.seed, "random seed")
      ->envname(std::string(kEnvPrefix) + "SEED")
      ->capture_default_str();
  synth->add_option("--duration", s_opts.duration_s, "seconds per signal")->capture_default_str();
  synth->add_option("--rate", s_opts.sample_rate_hz, "sample rate in Hz")->capture_default_str();
  synth->add_option("-o,--out", s_out, "output directory")->required();

  // build
  auto* build = app.add_subcommand("build", "Build an image/label detection dataset from a signal set");
  std::string b_signals, b_out;
  build->add_option("--signals", b_signals, "directory holding signals.json")->required();
  build->add_option("-o,--out", b_out, "dataset output directory")->required();
  ConfigFlags b_config;
  b_config.attach(build);

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score prediction files against dataset labels");
  std::string e_dataset, e_preds, e_split = "test", e_out;
  double e_iou = kDefaultIouThreshold, e_conf = kDefaultConfidenceThreshold;
  evaluate_cmd->add_option("--dataset", e_dataset, "dataset directory (with manifest.json)")->required();
  evaluate_cmd->add_option("--predictions", e_preds, "directory of <image-stem>.txt prediction files")
      ->required();
  evaluate_cmd->add_option("--split", e_split, "train | val | test")->capture_default_str();
  evaluate_cmd->add_option("--iou", e_iou, "IoU threshold for a match")
      ->envname(std::string(kEnvPrefix) + "IOU")
      ->capture_default_str();
  evaluate_cmd->add_option("--conf", e_conf, "confidence threshold for PRE/REC/F1")
      ->envname(std::string(kEnvPrefix) + "CONF")
      ->capture_default_str();
  evaluate_cmd->add_option("-o,--out", e_out, "write report.json and report.txt here");

  // report
  auto* report_cmd = app.add_subcommand("report", "Compare an evaluation report with published results");
  std::string r_eval, r_dataset, r_model, r_out;
  report_cmd->add_option("--eval", r_eval, "report.json written by evaluate")->required();
  report_cmd->add_option("--dataset", r_dataset, "CWRU | PU | IMS")->required();
  report_cmd->add_option("--model", r_model, "YOLOv9 | YOLOv10 | YOLOv11 | MCNN-LSTM")->required();
  report_cmd->add_option("-o,--out", r_out, "write the comparison as JSON to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Usage);
  }

  try {
    if (jobs < 0) throw InvalidArgument("--jobs must be nonnegative");
    if (jobs > 0) omp_set_num_threads(jobs);

    if (transform->parsed()) {
      run_transform(t_inputs, t_format, t_rate, t_out, t_dump, t_config.resolve(), out);
    } else if (synth->parsed()) {
      if (!s_spec.empty()) apply_spec_overrides(s_opts, s_spec);
      synthesize_corpus(s_opts, s_out);
      out << "wrote " << s_opts.count << " signals to " << s_out << '\n';
    } else if (build->parsed()) {
      const PipelineConfig config = b_config.resolve();
      const auto signals = load_signal_set(b_signals);
      fs::create_directories(b_out);
      save_config(config, fs::path(b_out) / "config.json");
      const auto m = build_dataset(signals, config, b_out);
      out << "dataset " << b_out << ": train " << m.counts[0] << ", val " << m.counts[1]
          << ", test " << m.counts[2] << '\n';
    } else if (evaluate_cmd->parsed()) {
      auto split = parse_split(e_split);
      if (!split) throw InvalidArgument("unknown split '" + e_split + "'");
      const auto manifest = load_manifest(fs::path(e_dataset) / "manifest.json");
      const auto images = load_eval_split(e_dataset, manifest, *split, e_preds);
      const EvalReport r = evaluate(images, e_iou, e_conf);
      const std::string table = format_report(r);
      out << table;
      if (!e_out.empty()) {
        fs::create_directories(e_out);
        write_json(fs::path(e_out) / "report.json", report_to_json(r));
        std::ofstream txt(fs::path(e_out) / "report.txt", std::ios::trunc);
        txt << table;
        if (!txt) throw DataError("cannot write report.txt in '" + e_out + "'");
      }
    } else if (report_cmd->parsed()) {
      std::ifstream in(r_eval);
      if (!in) throw DataError("cannot open evaluation report '" + r_eval + "'");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError("evaluation report '" + r_eval + "': " + e.what());
      }
      const Comparison c = compare(report_from_json(j), {r_dataset, r_model});
      out << format_comparison(c);
      if (!r_out.empty()) write_json(r_out, comparison_to_json(c));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Data);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return exit_code(ErrorKind::Internal);
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("faultscope");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace faultscope
