#include "havok/pipeline.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "havok/intermittency.hpp"
#include "havok/io.hpp"
#include "havok/spectral.hpp"
#include "havok/svg.hpp"

namespace havok::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

embedding::RankPolicy RankSetting::policy() const {
  if (kind == "auto") return embedding::rank::Auto{};
  if (kind == "fixed") return embedding::rank::Fixed{static_cast<int>(std::lround(value))};
  if (kind == "energy") return embedding::rank::Energy{value};
  fail(ErrorCode::InvalidArgument, "unknown rank policy '" + kind + "'");
}

RankSetting RankSetting::parse(const std::string& text) {
  RankSetting r;
  const auto colon = text.find(':');
  r.kind = text.substr(0, colon);
  if (r.kind == "auto") {
    if (colon != std::string::npos) fail(ErrorCode::InvalidArgument, "rank 'auto' takes no value");
    return r;
  }
  if ((r.kind != "fixed" && r.kind != "energy") || colon == std::string::npos) {
    fail(ErrorCode::InvalidArgument, "rank must be auto, fixed:<r> or energy:<fraction>, got '" + text + "'");
  }
  try {
    std::size_t used = 0;
    const std::string rest = text.substr(colon + 1);
    r.value = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(rest);
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "bad rank value in '" + text + "'");
  }
  if (r.kind == "fixed" && (r.value < 2.0 || r.value != std::floor(r.value))) {
    fail(ErrorCode::InvalidArgument, "fixed rank must be an integer >= 2, got '" + text + "'");
  }
  if (r.kind == "energy" && !(r.value > 0.0 && r.value <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "energy fraction must lie in (0, 1], got '" + text + "'");
  }
  return r;
}

std::string RankSetting::str() const {
  if (kind == "auto") return kind;
  if (kind == "fixed") return kind + ":" + std::to_string(std::lround(value));
  return kind + ":" + io::format_double(value);
}

void AnalysisConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidArgument, what); };
  if (window_p < 2) bad("window_p must be >= 2");
  if (lag_tau < 1) bad("lag_tau must be >= 1");
  (void)rank.policy();
  if (!(psi > 0.0 && psi < 1.0)) bad("psi must lie in (0, 1)");
  if (min_duration < 0.0 || merge_gap < 0.0) bad("min_duration and merge_gap must be >= 0");
  if (!(energy_fraction > 0.0 && energy_fraction < 1.0)) bad("energy_fraction must lie in (0, 1)");
  if (!(wavelet_gamma > 0.0) || !(wavelet_time_bandwidth > 0.0) || wavelet_voices < 1) bad("invalid wavelet settings");
  if (filter_order < 1) bad("filter_order must be >= 1");
}

json to_json(const AnalysisConfig& c) {
  return json{{"window_p", c.window_p},
              {"lag_tau", c.lag_tau},
              {"rank", c.rank.str()},
              {"mode", std::string(model::to_string(c.mode))},
              {"psi", c.psi},
              {"min_duration", c.min_duration},
              {"merge_gap", c.merge_gap},
              {"energy_fraction", c.energy_fraction},
              {"wavelet_gamma", c.wavelet_gamma},
              {"wavelet_time_bandwidth", c.wavelet_time_bandwidth},
              {"wavelet_voices", c.wavelet_voices},
              {"hrv_feature", c.hrv_feature},
              {"filter_low_hz", c.filter_low_hz},
              {"filter_high_hz", c.filter_high_hz},
              {"filter_order", c.filter_order},
              {"zero_phase", c.zero_phase},
              {"scalogram", c.scalogram},
              {"scalogram_binary", c.scalogram_binary},
              {"max_plot_columns", c.max_plot_columns}};
}

AnalysisConfig config_from_json(const json& j, const AnalysisConfig& base) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "config must be a JSON object");
  AnalysisConfig c = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "window_p") c.window_p = value.get<int>();
      else if (key == "lag_tau") c.lag_tau = value.get<int>();
      else if (key == "rank") c.rank = RankSetting::parse(value.get<std::string>());
      else if (key == "mode") c.mode = model::parse_fit_mode(value.get<std::string>());
      else if (key == "psi") c.psi = value.get<double>();
      else if (key == "min_duration") c.min_duration = value.get<double>();
      else if (key == "merge_gap") c.merge_gap = value.get<double>();
      else if (key == "energy_fraction") c.energy_fraction = value.get<double>();
      else if (key == "wavelet_gamma") c.wavelet_gamma = value.get<double>();
      else if (key == "wavelet_time_bandwidth") c.wavelet_time_bandwidth = value.get<double>();
      else if (key == "wavelet_voices") c.wavelet_voices = value.get<int>();
      else if (key == "hrv_feature") c.hrv_feature = value.get<std::string>();
      else if (key == "filter_low_hz") c.filter_low_hz = value.get<double>();
      else if (key == "filter_high_hz") c.filter_high_hz = value.get<double>();
      else if (key == "filter_order") c.filter_order = value.get<int>();
      else if (key == "zero_phase") c.zero_phase = value.get<bool>();
      else if (key == "scalogram") c.scalogram = value.get<bool>();
      else if (key == "scalogram_binary") c.scalogram_binary = value.get<bool>();
      else if (key == "max_plot_columns") c.max_plot_columns = value.get<std::size_t>();
      else fail(ErrorCode::ParseError, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_hash(const AnalysisConfig& c) {
  const std::string text = to_json(c).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::optional<double> to_minutes(const std::optional<double>& seconds) {
  if (!seconds) return std::nullopt;
  return *seconds / 60.0;
}

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.code(), e.what());
  } catch (const std::exception& e) {
    throw StageError(name, ErrorCode::IoError, e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace

json to_json(const RecordReport& r) {
  const Diagnostics& d = r.diagnostics;
  return json{{"record_id", r.record_id},
              {"ahi", opt(r.ahi)},
              {"rank_r", r.rank_r},
              {"vr_energy_pct", r.vr_energy_pct},
              {"tb_mean", opt(r.tb_mean)},
              {"tb_sd", opt(r.tb_sd)},
              {"tib_mean", opt(r.tib_mean)},
              {"tib_sd", opt(r.tib_sd)},
              {"f_L_mHz", r.f_L_mHz},
              {"f_H_mHz", r.f_H_mHz},
              {"n_bursts", r.n_bursts},
              {"overlap_fraction", opt(r.overlap_fraction)},
              {"config_hash", r.config_hash},
              {"tool_version", r.tool_version},
              {"diagnostics",
               {{"residual_row_norm", d.residual_row_norm},
                {"residual_ratio", d.residual_ratio},
                {"excess_kurtosis", d.excess_kurtosis},
                {"tail_mass_3sigma", d.tail_mass_3sigma},
                {"psi", d.psi},
                {"threshold", d.threshold},
                {"window_p", d.window_p},
                {"lag_tau", d.lag_tau},
                {"q", d.q},
                {"mode", d.mode},
                {"point_biserial_r", opt(d.point_biserial_r)},
                {"association_p_value", opt(d.association_p_value)},
                {"association_note", d.association_note},
                {"rejected_beats", d.rejected_beats},
                {"warnings", d.warnings}}}};
}

RecordReport report_from_json(const json& j) {
  RecordReport r;
  try {
    r.record_id = j.at("record_id").get<std::string>();
    r.ahi = opt_from(j, "ahi");
    r.rank_r = j.at("rank_r").get<int>();
    r.vr_energy_pct = j.at("vr_energy_pct").get<double>();
    r.tb_mean = opt_from(j, "tb_mean");
    r.tb_sd = opt_from(j, "tb_sd");
    r.tib_mean = opt_from(j, "tib_mean");
    r.tib_sd = opt_from(j, "tib_sd");
    r.f_L_mHz = j.at("f_L_mHz").get<double>();
    r.f_H_mHz = j.at("f_H_mHz").get<double>();
    r.n_bursts = j.value("n_bursts", std::size_t{0});
    r.overlap_fraction = opt_from(j, "overlap_fraction");
    r.config_hash = j.value("config_hash", std::string());
    r.tool_version = j.value("tool_version", std::string(kToolVersion));
    if (j.contains("diagnostics")) {
      const json& dj = j.at("diagnostics");
      Diagnostics& d = r.diagnostics;
      d.residual_row_norm = dj.value("residual_row_norm", 0.0);
      d.residual_ratio = dj.value("residual_ratio", 0.0);
      d.excess_kurtosis = dj.value("excess_kurtosis", 0.0);
      d.tail_mass_3sigma = dj.value("tail_mass_3sigma", 0.0);
      d.psi = dj.value("psi", 0.0);
      d.threshold = dj.value("threshold", 0.0);
      d.window_p = dj.value("window_p", 0);
      d.lag_tau = dj.value("lag_tau", 0);
      d.q = dj.value("q", 0);
      d.mode = dj.value("mode", std::string());
      d.point_biserial_r = opt_from(dj, "point_biserial_r");
      d.association_p_value = opt_from(dj, "association_p_value");
      d.association_note = dj.value("association_note", std::string());
      d.rejected_beats = dj.value("rejected_beats", std::size_t{0});
      d.warnings = dj.value("warnings", std::vector<std::string>{});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("report JSON: ") + e.what());
  }
  return r;
}

RecordReport run_pipeline(const PipelineInput& input, const AnalysisConfig& cfg, const fs::path& out_dir) {
  stage("config", [&] { cfg.validate(); });
  stage("output", [&] { fs::create_directories(out_dir); });

  RecordReport report;
  report.record_id = input.record_id;
  report.ahi = input.ahi;
  report.config_hash = config_hash(cfg);
  Diagnostics& diag = report.diagnostics;

  const TimeSeries z = stage("ingest", [&]() -> TimeSeries {
    if (input.series) {
      validate(*input.series);
      return *input.series;
    }
    physio::RrSeries rr;
    if (input.rr) {
      rr = *input.rr;
    } else if (input.ecg) {
      const physio::EcgRecord filtered = physio::bandpass_butterworth(*input.ecg, cfg.filter_low_hz, cfg.filter_high_hz,
                                                                      cfg.filter_order, cfg.zero_phase);
      rr = physio::detect_rpeaks(filtered);
    } else {
      fail(ErrorCode::InvalidArgument, "no input series, ECG or RR data supplied");
    }
    diag.rejected_beats = rr.rejected_count;
    io::write_rr(out_dir / "rr.csv", rr);
    const auto frames = physio::hrv_features(rr);
    io::write_hrv_frames(out_dir / "hrv.csv", frames);
    TimeSeries feature = physio::feature_series(frames, cfg.hrv_feature);
    io::write_time_series(out_dir / "feature.csv", feature, cfg.hrv_feature);
    return feature;
  });

  const embedding::DelayEmbedding e =
      stage("embed", [&] { return embedding::embed(z, cfg.window_p, cfg.lag_tau, cfg.rank.policy()); });
  report.rank_r = e.rank_r;
  diag.window_p = e.window_p;
  diag.lag_tau = e.lag_tau;
  diag.q = e.q();

  const model::ForcingSeries forcing = stage("fit", [&] {
    const model::HavokModel m = model::fit(model::coordinates(e, z.dt), cfg.mode);
    diag.residual_row_norm = m.residual_row_norm;
    diag.residual_ratio = m.residual_ratio();
    diag.mode = std::string(model::to_string(m.mode));
    if (diag.residual_ratio > 0.1) {
      diag.warnings.push_back("last regression row is not negligible (ratio " + io::format_double(diag.residual_ratio) +
                              ")");
    }
    io::write_json(out_dir / "model.json", io::model_to_json(m));
    model::ForcingSeries f = model::forcing(e, z.dt, z.t0);
    io::write_forcing(out_dir / "forcing.csv", f);
    return f;
  });
  report.vr_energy_pct = 100.0 * forcing.energy_fraction;

  const intermittency::BurstAnalysis bursts = stage("bursts", [&] {
    auto b = intermittency::detect_bursts(forcing, cfg.psi, cfg.min_duration, cfg.merge_gap);
    io::write_bursts(out_dir / "bursts.csv", b);
    io::write_json(out_dir / "bursts.json", io::burst_summary_json(b));
    return b;
  });
  const auto stats = intermittency::burst_statistics(bursts);
  report.n_bursts = stats.n_bursts;
  report.tb_mean = to_minutes(stats.tb_mean);
  report.tb_sd = to_minutes(stats.tb_sd);
  report.tib_mean = to_minutes(stats.tib_mean);
  report.tib_sd = to_minutes(stats.tib_sd);
  diag.psi = bursts.psi;
  diag.threshold = bursts.threshold;

  stage("distribution", [&] {
    const auto d = intermittency::estimate_pdf(forcing.vr);
    diag.excess_kurtosis = d.excess_kurtosis;
    diag.tail_mass_3sigma = d.tail_mass_3sigma;
    io::write_distribution(out_dir / "distribution.csv", d);
    write_text(out_dir / "distribution.svg", svg::distribution_plot(d));
  });

  TimeSeries vr_series;
  vr_series.values = forcing.vr;
  vr_series.dt = forcing.dt;
  vr_series.t0 = forcing.t0;
  vr_series.label = "vr";

  stage("spectrum", [&] {
    auto spec = spectral::amplitude_spectrum(vr_series);
    const auto band = spectral::dominant_bandwidth(spec, cfg.energy_fraction);
    spec.band = band;
    spec.energy_fraction = cfg.energy_fraction;
    report.f_L_mHz = band.f_low * 1e3;
    report.f_H_mHz = band.f_high * 1e3;
    io::write_spectrum(out_dir / "spectrum.csv", spec);
  });

  if (cfg.scalogram) {
    stage("scalogram", [&] {
      const auto s = spectral::cwt_morse(vr_series, cfg.wavelet_gamma, cfg.wavelet_time_bandwidth, cfg.wavelet_voices);
      io::write_scalogram_csv(out_dir / "scalogram.csv", spectral::downsample_times(s, cfg.max_plot_columns));
      if (cfg.scalogram_binary) io::write_scalogram_binary(out_dir / "scalogram.bin", s);
      write_text(out_dir / "scalogram.svg", svg::scalogram_plot(s, input.annotations));
    });
  }

  if (input.annotations) {
    stage("association", [&] {
      const auto assoc = physio::burst_annotation_association(bursts, *input.annotations);
      report.overlap_fraction = assoc.overlap_fraction;
      diag.point_biserial_r = assoc.point_biserial_r;
      diag.association_p_value = assoc.p_value;
      diag.association_note = assoc.reason;
    });
  }

  stage("report", [&] {
    write_text(out_dir / "forcing.svg", svg::forcing_plot(forcing, bursts, input.annotations));
    io::write_json(out_dir / "report.json", to_json(report));
  });
  return report;
}

namespace {

ColumnSummary summarize(const std::vector<double>& v) {
  ColumnSummary s;
  s.n = v.size();
  s.mean = intermittency::sample_mean(v);
  s.sd = intermittency::sample_sd(v);
  return s;
}

json to_json(const ColumnSummary& s) { return json{{"n", s.n}, {"mean", opt(s.mean)}, {"sd", opt(s.sd)}}; }

json to_json(const std::optional<Correlation>& c) {
  if (!c) return nullptr;
  return json{{"r", c->r}, {"p_value", c->p_value}};
}

}  // namespace

PooledSummary pool_reports(const std::vector<RecordReport>& reports) {
  PooledSummary s;
  s.n_records = reports.size();
  std::vector<double> ahi, rank, energy, tb, tib, fl, fh;
  std::vector<double> ahi_tb_x, ahi_tb_y, ahi_tib_x, ahi_tib_y;
  for (const RecordReport& r : reports) {
    if (r.ahi) ahi.push_back(*r.ahi);
    rank.push_back(r.rank_r);
    energy.push_back(r.vr_energy_pct);
    if (r.tb_mean) tb.push_back(*r.tb_mean);
    if (r.tib_mean) tib.push_back(*r.tib_mean);
    fl.push_back(r.f_L_mHz);
    fh.push_back(r.f_H_mHz);
    if (r.ahi && r.tb_mean) {
      ahi_tb_x.push_back(*r.ahi);
      ahi_tb_y.push_back(*r.tb_mean);
    }
    if (r.ahi && r.tib_mean) {
      ahi_tib_x.push_back(*r.ahi);
      ahi_tib_y.push_back(*r.tib_mean);
    }
  }
  s.ahi = summarize(ahi);
  s.rank_r = summarize(rank);
  s.vr_energy_pct = summarize(energy);
  s.tb_mean = summarize(tb);
  s.tib_mean = summarize(tib);
  s.f_L_mHz = summarize(fl);
  s.f_H_mHz = summarize(fh);

  auto correlate = [&](const std::vector<double>& x, const std::vector<double>& y, const char* label)
      -> std::optional<Correlation> {
    try {
      const auto res = intermittency::pearson_test(x, y);
      return Correlation{res.r, res.p_value};
    } catch (const Error& e) {
      if (!s.correlation_error.empty()) s.correlation_error += "; ";
      s.correlation_error += std::string(label) + ": " + e.what();
      return std::nullopt;
    }
  };
  s.ahi_vs_tb = correlate(ahi_tb_x, ahi_tb_y, "ahi_vs_tb");
  s.ahi_vs_tib = correlate(ahi_tib_x, ahi_tib_y, "ahi_vs_tib");
  return s;
}

json to_json(const PooledSummary& s) {
  return json{{"n_records", s.n_records},
              {"ahi", to_json(s.ahi)},
              {"rank_r", to_json(s.rank_r)},
              {"vr_energy_pct", to_json(s.vr_energy_pct)},
              {"tb_mean", to_json(s.tb_mean)},
              {"tib_mean", to_json(s.tib_mean)},
              {"f_L_mHz", to_json(s.f_L_mHz)},
              {"f_H_mHz", to_json(s.f_H_mHz)},
              {"ahi_vs_tb", to_json(s.ahi_vs_tb)},
              {"ahi_vs_tib", to_json(s.ahi_vs_tib)},
              {"correlation_error", s.correlation_error.empty() ? json(nullptr) : json(s.correlation_error)}};
}

std::vector<RecordReport> read_report_table(const fs::path& path) {
  const io::CsvTable t = io::read_csv(path);
  auto col = [&](const char* name) {
    const auto c = t.column(name);
    if (!c) fail(ErrorCode::ParseError, path.string() + ": missing column '" + name + "'");
    return *c;
  };
  const std::size_t id = col("record_id"), ahi = col("ahi"), rank = col("rank_r"), energy = col("vr_energy_pct"),
                    tb = col("tb_mean"), tbsd = col("tb_sd"), tib = col("tib_mean"), tibsd = col("tib_sd"),
                    fl = col("f_L_mHz"), fh = col("f_H_mHz");
  auto cell = [&](std::size_t row, std::size_t c) -> std::optional<double> {
    const std::string& s = t.rows[row].at(c);
    if (s.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, path.string() + " row " + std::to_string(row + 1) + ": bad number '" + s + "'");
    }
  };
  std::vector<RecordReport> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() < t.header.size()) fail(ErrorCode::ParseError, path.string() + ": short row " + std::to_string(r + 1));
    RecordReport rep;
    rep.record_id = t.rows[r][id];
    rep.ahi = cell(r, ahi);
    rep.rank_r = static_cast<int>(cell(r, rank).value_or(0.0));
    rep.vr_energy_pct = cell(r, energy).value_or(0.0);
    rep.tb_mean = cell(r, tb);
    rep.tb_sd = cell(r, tbsd);
    rep.tib_mean = cell(r, tib);
    rep.tib_sd = cell(r, tibsd);
    rep.f_L_mHz = cell(r, fl).value_or(0.0);
    rep.f_H_mHz = cell(r, fh).value_or(0.0);
    out.push_back(rep);
  }
  return out;
}

int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Input: return 2;
    case ErrorCategory::Numeric: return 3;
    case ErrorCategory::InsufficientData: return 4;
  }
  return 2;
}

json error_json(const Error& e, const std::string& stage) {
  return json{{"error", std::string(to_string(e.code()))},
              {"stage", stage.empty() ? json(nullptr) : json(stage)},
              {"message", e.what()},
              {"exit_code", exit_code_for(e.category())}};
}

}  // namespace havok::pipeline
