#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "havok/embedding.hpp"
#include "havok/error.hpp"
#include "havok/model.hpp"
#include "havok/physio.hpp"
#include "havok/time_series.hpp"

namespace havok::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

struct RankSetting {
  std::string kind = "auto";  // auto | fixed | energy
  double value = 0.0;         // rank for fixed, fraction for energy

  embedding::RankPolicy policy() const;
  static RankSetting parse(const std::string& text);  // "auto", "fixed:10", "energy:0.99"
  std::string str() const;
};

struct AnalysisConfig {
  int window_p = 15;
  int lag_tau = 1;
  RankSetting rank;
  model::FitMode mode = model::FitMode::Discrete;
  double psi = 0.12;
  double min_duration = 0.0;  // s
  double merge_gap = 0.0;     // s
  double energy_fraction = 0.95;
  double wavelet_gamma = 3.0;
  double wavelet_time_bandwidth = 60.0;
  int wavelet_voices = 10;
  std::string hrv_feature = "tri";
  double filter_low_hz = 0.5;
  double filter_high_hz = 30.0;
  int filter_order = 5;
  bool zero_phase = true;
  bool scalogram = true;
  bool scalogram_binary = false;
  std::size_t max_plot_columns = 4096;

  void validate() const;
};

nlohmann::json to_json(const AnalysisConfig& c);
// Starts from `base` and overrides the keys present in `j`; unknown keys are rejected.
AnalysisConfig config_from_json(const nlohmann::json& j, const AnalysisConfig& base = {});
// FNV-1a over the canonical JSON dump, hex encoded.
std::string config_hash(const AnalysisConfig& c);

struct Diagnostics {
  double residual_row_norm = 0.0;
  double residual_ratio = 0.0;
  double excess_kurtosis = 0.0;
  double tail_mass_3sigma = 0.0;
  double psi = 0.0;
  double threshold = 0.0;
  int window_p = 0;
  int lag_tau = 0;
  int q = 0;
  std::string mode;
  std::optional<double> point_biserial_r;
  std::optional<double> association_p_value;
  std::string association_note;
  std::size_t rejected_beats = 0;
  std::vector<std::string> warnings;
};

// One per-record summary row. Durations in minutes, frequencies in mHz.
struct RecordReport {
  std::string record_id;
  std::optional<double> ahi;
  int rank_r = 0;
  double vr_energy_pct = 0.0;
  std::optional<double> tb_mean;
  std::optional<double> tb_sd;
  std::optional<double> tib_mean;
  std::optional<double> tib_sd;
  double f_L_mHz = 0.0;
  double f_H_mHz = 0.0;
  std::size_t n_bursts = 0;
  std::optional<double> overlap_fraction;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  Diagnostics diagnostics;
};

nlohmann::json to_json(const RecordReport& r);
RecordReport report_from_json(const nlohmann::json& j);

struct PipelineInput {
  std::string record_id = "record";
  std::optional<TimeSeries> series;
  std::optional<physio::EcgRecord> ecg;
  std::optional<physio::RrSeries> rr;
  std::optional<physio::AnnotationTrack> annotations;
  std::optional<double> ahi;
};

// Error raised by run_pipeline, tagged with the failing stage.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCode code, const std::string& what)
      : Error(code, what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Runs ingest -> embedding -> fit -> bursts -> pdf -> spectrum -> scalogram
// (-> association) and writes report.json plus CSV/SVG artifacts to out_dir.
RecordReport run_pipeline(const PipelineInput& input, const AnalysisConfig& cfg, const std::filesystem::path& out_dir);

struct ColumnSummary {
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> sd;
};

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;
};

struct PooledSummary {
  std::size_t n_records = 0;
  ColumnSummary ahi, rank_r, vr_energy_pct, tb_mean, tib_mean, f_L_mHz, f_H_mHz;
  std::optional<Correlation> ahi_vs_tb;
  std::optional<Correlation> ahi_vs_tib;
  std::string correlation_error;  // empty when both correlations were computed
};

PooledSummary pool_reports(const std::vector<RecordReport>& reports);
nlohmann::json to_json(const PooledSummary& s);

// Per-record summary CSV: record_id,ahi,rank_r,vr_energy_pct,tb_mean,tb_sd,tib_mean,tib_sd,f_L_mHz,f_H_mHz
std::vector<RecordReport> read_report_table(const std::filesystem::path& path);

// Process exit code for a failure category: 2 input, 3 numeric, 4 insufficient data.
int exit_code_for(ErrorCategory c);
nlohmann::json error_json(const Error& e, const std::string& stage = {});

}  // namespace havok::pipeline
