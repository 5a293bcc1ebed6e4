#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "havok/embedding.hpp"
#include "havok/error.hpp"
#include "havok/intermittency.hpp"
#include "havok/io.hpp"
#include "havok/model.hpp"
#include "havok/physio.hpp"
#include "havok/pipeline.hpp"
#include "havok/spectral.hpp"
#include "havok/svg.hpp"
#include "havok/systems.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace havok;

namespace {

enum class Kind { Int, Real, Bool, Text };

// Config keys exposed as flags; the flag name is the key with '-' for '_'.
const std::vector<std::pair<std::string, Kind>> kConfigKeys = {
    {"window_p", Kind::Int},          {"lag_tau", Kind::Int},
    {"rank", Kind::Text},             {"mode", Kind::Text},
    {"psi", Kind::Real},              {"min_duration", Kind::Real},
    {"merge_gap", Kind::Real},        {"energy_fraction", Kind::Real},
    {"wavelet_gamma", Kind::Real},    {"wavelet_time_bandwidth", Kind::Real},
    {"wavelet_voices", Kind::Int},    {"hrv_feature", Kind::Text},
    {"filter_low_hz", Kind::Real},    {"filter_high_hz", Kind::Real},
    {"filter_order", Kind::Int},      {"zero_phase", Kind::Bool},
    {"scalogram", Kind::Bool},        {"scalogram_binary", Kind::Bool},
    {"max_plot_columns", Kind::Int},
};

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    for (const auto& [key, kind] : kConfigKeys) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      options[key] = app->add_option(flag, raw[key], "config key '" + key + "'")->group("Analysis settings");
    }
  }

  pipeline::AnalysisConfig resolve() const {
    pipeline::AnalysisConfig cfg;
    if (!config_path.empty()) cfg = pipeline::config_from_json(io::read_json(config_path));
    json overrides = json::object();
    for (const auto& [key, kind] : kConfigKeys) {
      if (options.at(key)->count() == 0) continue;
      const std::string& text = raw.at(key);
      try {
        switch (kind) {
          case Kind::Int: {
            std::size_t used = 0;
            const long v = std::stol(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            overrides[key] = v;
            break;
          }
          case Kind::Real: {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            overrides[key] = v;
            break;
          }
          case Kind::Bool:
            if (text == "true" || text == "1" || text == "on") overrides[key] = true;
            else if (text == "false" || text == "0" || text == "off") overrides[key] = false;
            else throw std::invalid_argument(text);
            break;
          case Kind::Text: overrides[key] = text; break;
        }
      } catch (const std::logic_error&) {
        fail(ErrorCode::InvalidArgument, "bad value '" + text + "' for --" + key);
      }
    }
    return pipeline::config_from_json(overrides, cfg);
  }
};

struct SeriesInput {
  std::string series;
  std::string forcing;
  double dt = 0.0;

  void attach(CLI::App* app, bool allow_forcing) {
    app->add_option("--series", series, "time series CSV (time,value or one headerless column)");
    app->add_option("--dt", dt, "sample spacing in seconds for headerless input");
    if (allow_forcing) app->add_option("--forcing", forcing, "forcing CSV (time,vr) from `fit`");
  }

  TimeSeries load() const {
    if (!forcing.empty()) {
      const model::ForcingSeries f = io::read_forcing(forcing);
      TimeSeries z;
      z.values = f.vr;
      z.dt = f.dt;
      z.t0 = f.t0;
      z.label = "vr";
      return z;
    }
    if (series.empty()) fail(ErrorCode::InvalidArgument, "an input series is required (--series or --forcing)");
    return io::read_time_series(series, dt > 0.0 ? std::optional<double>(dt) : std::nullopt);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

model::ForcingSeries forcing_of(const TimeSeries& z, const pipeline::AnalysisConfig& cfg, bool already_forcing) {
  if (already_forcing) {
    model::ForcingSeries f;
    f.vr = z.values;
    f.dt = z.dt;
    f.t0 = z.t0;
    return f;
  }
  const auto e = embedding::embed(z, cfg.window_p, cfg.lag_tau, cfg.rank.policy());
  return model::forcing(e, z.dt, z.t0);
}

// Parses "a:b:step" into an inclusive grid.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    try {
      parts.push_back(std::stod(text.substr(start, colon - start)));
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "bad grid '" + text + "'");
    }
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
    fail(ErrorCode::InvalidArgument, "grid must be a:b:step with a <= b and step > 0");
  }
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long k = 0; k <= n; ++k) grid.push_back(parts[0] + static_cast<double>(k) * parts[2]);
  return grid;
}

std::vector<double> split_numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(sep, start);
    const std::string part = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidArgument, "bad number '" + part + "' in '" + text + "'");
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

struct RecordSources {
  std::string record_id = "record";
  std::string series, ecg, ecg_bin, sidecar, rr, annotations;
  double dt = 0.0;
  std::optional<double> ahi;
};

pipeline::PipelineInput load_input(const RecordSources& s) {
  pipeline::PipelineInput in;
  in.record_id = s.record_id;
  in.ahi = s.ahi;
  const int given = !s.series.empty() + !s.ecg.empty() + !s.ecg_bin.empty() + !s.rr.empty();
  if (given != 1) fail(ErrorCode::InvalidArgument, "exactly one of series, ecg, ecg_bin or rr is required");
  if (!s.series.empty()) {
    in.series = io::read_time_series(s.series, s.dt > 0.0 ? std::optional<double>(s.dt) : std::nullopt);
  } else if (!s.ecg.empty()) {
    in.ecg = io::read_ecg_csv(s.ecg);
  } else if (!s.ecg_bin.empty()) {
    if (s.sidecar.empty()) fail(ErrorCode::InvalidArgument, "binary ECG needs a JSON sidecar");
    in.ecg = io::read_ecg_binary(s.ecg_bin, s.sidecar);
  } else {
    in.rr = io::read_rr(s.rr);
  }
  if (!s.annotations.empty()) in.annotations = io::read_annotations(s.annotations);
  return in;
}

struct Failure {
  int exit_code = 0;
  json body;
};

Failure describe(const std::exception& ex, const std::string& default_stage) {
  if (const auto* se = dynamic_cast<const pipeline::StageError*>(&ex)) {
    return {pipeline::exit_code_for(se->category()), pipeline::error_json(*se, se->stage())};
  }
  if (const auto* e = dynamic_cast<const Error*>(&ex)) {
    return {pipeline::exit_code_for(e->category()), pipeline::error_json(*e, default_stage)};
  }
  const Error wrapped(ErrorCode::IoError, ex.what());
  return {2, pipeline::error_json(wrapped, default_stage)};
}

std::vector<RecordSources> read_manifest(const fs::path& path) {
  const io::CsvTable t = io::read_csv(path);
  const auto id = t.column("record_id");
  if (!id) fail(ErrorCode::ParseError, path.string() + ": manifest needs a record_id column");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return p.empty() ? p : (base / p).lexically_normal().string(); };
  std::vector<RecordSources> out;
  for (const auto& row : t.rows) {
    auto get = [&](const char* name) -> std::string {
      const auto c = t.column(name);
      return c && *c < row.size() ? row[*c] : std::string();
    };
    RecordSources s;
    s.record_id = get("record_id");
    if (s.record_id.empty()) fail(ErrorCode::ParseError, path.string() + ": empty record_id");
    s.series = resolve(get("series"));
    s.ecg = resolve(get("ecg"));
    s.ecg_bin = resolve(get("ecg_bin"));
    s.sidecar = resolve(get("sidecar"));
    s.rr = resolve(get("rr"));
    s.annotations = resolve(get("annotations"));
    if (const std::string dt = get("dt"); !dt.empty()) s.dt = split_numbers(dt, ';').front();
    if (const std::string ahi = get("ahi"); !ahi.empty()) s.ahi = split_numbers(ahi, ';').front();
    out.push_back(s);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-embedding linear models with intermittent forcing: embed, fit, burst statistics, spectra"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pipeline::kToolVersion));

  std::string out_dir;
  std::string out_file;
  std::string failure_stage;

  // generate
  auto* gen = app.add_subcommand("generate", "synthetic signals with known ground truth");
  gen->require_subcommand(1);
  auto* gen_lorenz = gen->add_subcommand("lorenz", "Lorenz x(t) via RK4 plus smoothed lobe-switch times");
  systems::LorenzConfig lorenz;
  double lorenz_t_end = 200.0, lorenz_burn_in = 10.0;
  std::string truth_path;
  gen_lorenz->add_option("--t-end", lorenz_t_end, "retained length after burn-in")->capture_default_str();
  gen_lorenz->add_option("--burn-in", lorenz_burn_in, "discarded transient")->capture_default_str();
  gen_lorenz->add_option("--dt", lorenz.dt)->capture_default_str();
  gen_lorenz->add_option("--sigma", lorenz.sigma)->capture_default_str();
  gen_lorenz->add_option("--rho", lorenz.rho)->capture_default_str();
  gen_lorenz->add_option("--beta", lorenz.beta)->capture_default_str();
  gen_lorenz->add_option("--out", out_file, "TimeSeries CSV")->required();
  gen_lorenz->add_option("--truth", truth_path, "truth JSON with lobe-switch times");

  auto* gen_bursty = gen->add_subcommand("bursty", "noise baseline with planted bursts");
  systems::SyntheticBurstConfig bursty;
  std::vector<std::string> burst_specs;
  gen_bursty->add_option("--duration", bursty.duration)->capture_default_str();
  gen_bursty->add_option("--dt", bursty.dt)->capture_default_str();
  gen_bursty->add_option("--noise-sd", bursty.noise_sd)->capture_default_str();
  gen_bursty->add_option("--seed", bursty.seed)->capture_default_str();
  gen_bursty->add_option("--burst", burst_specs, "t_s:t_e:amplitude[:carrier_hz], repeatable");
  gen_bursty->add_option("--out", out_file, "TimeSeries CSV")->required();
  gen_bursty->add_option("--truth", truth_path, "truth JSON with burst intervals");

  // hrv
  auto* hrv = app.add_subcommand("hrv", "ECG or RR input to per-minute HRV features");
  RecordSources hrv_src;
  ConfigFlags hrv_cfg;
  hrv->add_option("--ecg", hrv_src.ecg, "ECG CSV (time,mv)");
  hrv->add_option("--ecg-bin", hrv_src.ecg_bin, "int16 little-endian ECG samples");
  hrv->add_option("--sidecar", hrv_src.sidecar, "JSON sidecar for --ecg-bin");
  hrv->add_option("--rr", hrv_src.rr, "RR CSV (time,rr)");
  hrv->add_option("--out-dir", out_dir)->required();
  hrv_cfg.attach(hrv);

  // embed
  auto* emb = app.add_subcommand("embed", "Hankel matrix, SVD and rank selection");
  SeriesInput emb_in;
  ConfigFlags emb_cfg;
  emb_in.attach(emb, false);
  emb->add_option("--out-dir", out_dir)->required();
  emb_cfg.attach(emb);

  // fit
  auto* fit = app.add_subcommand("fit", "linear model on delay coordinates with the last one as forcing");
  SeriesInput fit_in;
  ConfigFlags fit_cfg;
  fit_in.attach(fit, false);
  fit->add_option("--out-dir", out_dir)->required();
  fit_cfg.attach(fit);

  // bursts
  auto* bursts = app.add_subcommand("bursts", "burst detection, durations and forcing distribution");
  SeriesInput bursts_in;
  ConfigFlags bursts_cfg;
  std::string psi_grid;
  bursts_in.attach(bursts, true);
  bursts->add_option("--psi-grid", psi_grid, "a:b:step sweep; writes psi_sweep.csv");
  bursts->add_option("--out-dir", out_dir)->required();
  bursts_cfg.attach(bursts);

  // spectrum
  auto* spec = app.add_subcommand("spectrum", "single-sided amplitude spectrum and dominant band");
  SeriesInput spec_in;
  ConfigFlags spec_cfg;
  std::vector<std::string> spec_windows;
  bool hann = false;
  spec_in.attach(spec, true);
  spec->add_option("--window", spec_windows, "t_a:t_b analysis window in seconds, repeatable");
  spec->add_flag("--hann", hann, "apply a Hann taper");
  spec->add_option("--out-dir", out_dir)->required();
  spec_cfg.attach(spec);

  // scalogram
  auto* scal = app.add_subcommand("scalogram", "generalized Morse CWT modulus");
  SeriesInput scal_in;
  ConfigFlags scal_cfg;
  scal_in.attach(scal, true);
  scal->add_option("--out-dir", out_dir)->required();
  scal_cfg.attach(scal);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "full per-record analysis and report");
  RecordSources pipe_src;
  ConfigFlags pipe_cfg;
  std::string manifest;
  std::optional<double> pipe_ahi;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  pipe->add_option("--record-id", pipe_src.record_id)->capture_default_str();
  pipe->add_option("--series", pipe_src.series, "time series CSV");
  pipe->add_option("--dt", pipe_src.dt, "sample spacing for headerless series");
  pipe->add_option("--ecg", pipe_src.ecg, "ECG CSV (time,mv)");
  pipe->add_option("--ecg-bin", pipe_src.ecg_bin, "int16 little-endian ECG samples");
  pipe->add_option("--sidecar", pipe_src.sidecar, "JSON sidecar for --ecg-bin");
  pipe->add_option("--rr", pipe_src.rr, "RR CSV (time,rr)");
  pipe->add_option("--annotations", pipe_src.annotations, "per-minute apnea labels (minute,label)");
  pipe->add_option("--ahi", pipe_ahi, "apnea-hypopnea index metadata");
  pipe->add_option("--manifest", manifest, "CSV of records; one output subdirectory per record_id");
  pipe->add_option("--jobs", jobs, "parallel workers for --manifest")->check(CLI::PositiveNumber);
  pipe->add_option("--out-dir", out_dir)->required();
  pipe_cfg.attach(pipe);

  // pool
  auto* pool = app.add_subcommand("pool", "pooled statistics and AHI correlations across records");
  std::vector<std::string> report_paths;
  std::string table_path;
  pool->add_option("--table", table_path, "per-record summary CSV");
  pool->add_option("reports", report_paths, "report.json files");
  pool->add_option("--out", out_file, "pooled JSON (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  auto ensure_out = [&] { fs::create_directories(out_dir); };

  try {
    if (gen_lorenz->parsed()) {
      failure_stage = "generate";
      lorenz.n_steps = std::lround((lorenz_t_end + lorenz_burn_in) / lorenz.dt);
      const auto traj = systems::discard_transient(systems::integrate_lorenz(lorenz), lorenz_burn_in);
      io::write_time_series(out_file, traj.x_series(), "x");
      if (!truth_path.empty()) {
        io::write_json(truth_path, json{{"system", "lorenz"},
                                        {"sigma", lorenz.sigma},
                                        {"rho", lorenz.rho},
                                        {"beta", lorenz.beta},
                                        {"dt", lorenz.dt},
                                        {"burn_in", lorenz_burn_in},
                                        {"lobe_switch_times", systems::lobe_switch_times(traj)}});
      }
    } else if (gen_bursty->parsed()) {
      failure_stage = "generate";
      for (const auto& text : burst_specs) {
        const auto v = split_numbers(text, ':');
        if (v.size() < 3 || v.size() > 4) fail(ErrorCode::InvalidArgument, "burst must be t_s:t_e:amp[:hz]");
        bursty.bursts.push_back({v[0], v[1], v[2], v.size() == 4 ? v[3] : 0.0});
      }
      const auto sig = systems::generate_bursty(bursty);
      io::write_time_series(out_file, sig.series);
      if (!truth_path.empty()) {
        json intervals = json::array();
        for (const auto& b : sig.truth.bursts) intervals.push_back({b.t_s, b.t_e});
        io::write_json(truth_path, json{{"seed", bursty.seed},
                                        {"bursts", intervals},
                                        {"tb", sig.truth.tb},
                                        {"tib", sig.truth.tib}});
      }
    } else if (hrv->parsed()) {
      failure_stage = "hrv";
      const auto cfg = hrv_cfg.resolve();
      ensure_out();
      physio::RrSeries rr;
      if (!hrv_src.rr.empty()) {
        rr = io::read_rr(hrv_src.rr);
      } else {
        RecordSources s = hrv_src;
        const auto in = load_input(s);
        rr = physio::detect_rpeaks(physio::bandpass_butterworth(*in.ecg, cfg.filter_low_hz, cfg.filter_high_hz,
                                                                cfg.filter_order, cfg.zero_phase));
      }
      io::write_rr(fs::path(out_dir) / "rr.csv", rr);
      const auto frames = physio::hrv_features(rr);
      io::write_hrv_frames(fs::path(out_dir) / "hrv.csv", frames);
      io::write_time_series(fs::path(out_dir) / "feature.csv", physio::feature_series(frames, cfg.hrv_feature),
                            cfg.hrv_feature);
    } else if (emb->parsed()) {
      failure_stage = "embed";
      const auto cfg = emb_cfg.resolve();
      const auto z = emb_in.load();
      ensure_out();
      io::write_embedding(out_dir, embedding::embed(z, cfg.window_p, cfg.lag_tau, cfg.rank.policy()));
    } else if (fit->parsed()) {
      failure_stage = "fit";
      const auto cfg = fit_cfg.resolve();
      const auto z = fit_in.load();
      ensure_out();
      const auto e = embedding::embed(z, cfg.window_p, cfg.lag_tau, cfg.rank.policy());
      const auto m = model::fit(model::coordinates(e, z.dt), cfg.mode);
      io::write_json(fs::path(out_dir) / "model.json", io::model_to_json(m));
      io::write_forcing(fs::path(out_dir) / "forcing.csv", model::forcing(e, z.dt, z.t0));
    } else if (bursts->parsed()) {
      failure_stage = "bursts";
      const auto cfg = bursts_cfg.resolve();
      const auto z = bursts_in.load();
      ensure_out();
      const auto f = forcing_of(z, cfg, !bursts_in.forcing.empty());
      const auto b = intermittency::detect_bursts(f, cfg.psi, cfg.min_duration, cfg.merge_gap);
      io::write_bursts(fs::path(out_dir) / "bursts.csv", b);
      io::write_json(fs::path(out_dir) / "bursts.json", io::burst_summary_json(b));
      const auto d = intermittency::estimate_pdf(f.vr);
      io::write_distribution(fs::path(out_dir) / "distribution.csv", d);
      write_text(fs::path(out_dir) / "forcing.svg", svg::forcing_plot(f, b));
      write_text(fs::path(out_dir) / "distribution.svg", svg::distribution_plot(d));
      if (!psi_grid.empty()) {
        std::ofstream sweep(fs::path(out_dir) / "psi_sweep.csv");
        if (!sweep) fail(ErrorCode::IoError, "cannot write psi_sweep.csv");
        sweep << "psi,n_bursts,tb_mean,tib_mean\n";
        for (double psi : parse_grid(psi_grid)) {
          const auto s = intermittency::burst_statistics(
              intermittency::detect_bursts(f, psi, cfg.min_duration, cfg.merge_gap));
          sweep << io::format_double(psi) << ',' << s.n_bursts << ','
                << (s.tb_mean ? io::format_double(*s.tb_mean) : "") << ','
                << (s.tib_mean ? io::format_double(*s.tib_mean) : "") << '\n';
        }
      }
    } else if (spec->parsed()) {
      failure_stage = "spectrum";
      const auto cfg = spec_cfg.resolve();
      const auto z = spec_in.load();
      ensure_out();
      const auto taper = hann ? spectral::Taper::Hann : spectral::Taper::None;
      auto finish = [&](spectral::SpectrumResult s, const fs::path& path) {
        s.band = spectral::dominant_bandwidth(s, cfg.energy_fraction);
        s.energy_fraction = cfg.energy_fraction;
        io::write_spectrum(path, s);
      };
      if (spec_windows.empty()) {
        finish(spectral::amplitude_spectrum(z, taper), fs::path(out_dir) / "spectrum.csv");
      } else {
        std::vector<spectral::Window> windows;
        for (const auto& text : spec_windows) {
          const auto v = split_numbers(text, ':');
          if (v.size() != 2) fail(ErrorCode::InvalidArgument, "window must be t_a:t_b");
          windows.push_back({v[0], v[1]});
        }
        const auto spectra = spectral::windowed_spectra(z, windows, taper);
        for (std::size_t k = 0; k < spectra.size(); ++k) {
          finish(spectra[k], fs::path(out_dir) / ("spectrum_" + std::to_string(k) + ".csv"));
        }
      }
    } else if (scal->parsed()) {
      failure_stage = "scalogram";
      const auto cfg = scal_cfg.resolve();
      const auto z = scal_in.load();
      ensure_out();
      const auto s = spectral::cwt_morse(z, cfg.wavelet_gamma, cfg.wavelet_time_bandwidth, cfg.wavelet_voices);
      io::write_scalogram_csv(fs::path(out_dir) / "scalogram.csv", spectral::downsample_times(s, cfg.max_plot_columns));
      if (cfg.scalogram_binary) io::write_scalogram_binary(fs::path(out_dir) / "scalogram.bin", s);
      write_text(fs::path(out_dir) / "scalogram.svg", svg::scalogram_plot(s));
    } else if (pipe->parsed()) {
      failure_stage = "config";
      const auto cfg = pipe_cfg.resolve();
      ensure_out();
      if (manifest.empty()) {
        pipe_src.ahi = pipe_ahi;
        failure_stage = "ingest";
        const auto in = load_input(pipe_src);
        pipeline::run_pipeline(in, cfg, out_dir);
      } else {
        const auto records = read_manifest(manifest);
        std::atomic<std::size_t> next{0};
        std::mutex lock;
        json status = json::array();
        std::vector<json> results(records.size());
        int worst = 0;
        auto worker = [&] {
          for (std::size_t k = next++; k < records.size(); k = next++) {
            const fs::path dir = fs::path(out_dir) / records[k].record_id;
            json entry{{"record_id", records[k].record_id}, {"exit_code", 0}};
            try {
              fs::create_directories(dir);
              pipeline::PipelineInput in;
              try {
                in = load_input(records[k]);
              } catch (const Error& e) {
                throw pipeline::StageError("ingest", e.code(), e.what());
              }
              pipeline::run_pipeline(in, cfg, dir);
            } catch (const std::exception& ex) {
              const Failure f = describe(ex, "ingest");
              entry["exit_code"] = f.exit_code;
              entry["error"] = f.body;
              try {
                io::write_json(dir / "error.json", f.body);
              } catch (const std::exception&) {
              }
              std::lock_guard<std::mutex> g(lock);
              worst = std::max(worst, f.exit_code);
            }
            results[k] = entry;
          }
        };
        std::vector<std::thread> threads;
        const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, records.size())));
        for (unsigned t = 0; t < n; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        for (auto& r : results) status.push_back(r);
        io::write_json(fs::path(out_dir) / "status.json", status);
        if (worst != 0) {
          std::cerr << status.dump() << '\n';
          return worst;
        }
      }
    } else if (pool->parsed()) {
      failure_stage = "pool";
      std::vector<pipeline::RecordReport> reports;
      if (!table_path.empty()) reports = pipeline::read_report_table(table_path);
      for (const auto& p : report_paths) reports.push_back(pipeline::report_from_json(io::read_json(p)));
      if (reports.empty()) fail(ErrorCode::InvalidArgument, "no reports given (--table or report.json paths)");
      const auto pooled = pipeline::pool_reports(reports);
      const json j = pipeline::to_json(pooled);
      if (out_file.empty()) std::cout << j.dump(2) << '\n';
      else io::write_json(out_file, j);
      if (!pooled.correlation_error.empty()) {
        const Error e(ErrorCode::InsufficientRecords, pooled.correlation_error);
        std::cerr << pipeline::error_json(e, "pool").dump() << '\n';
        return pipeline::exit_code_for(e.category());
      }
    }
  } catch (const std::exception& ex) {
    const Failure f = describe(ex, failure_stage);
    std::cerr << f.body.dump() << '\n';
    if (!out_dir.empty()) {
      try {
        fs::create_directories(out_dir);
        io::write_json(fs::path(out_dir) / "error.json", f.body);
      } catch (const std::exception&) {
      }
    }
    return f.exit_code;
  }
  return 0;
}
