#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "havok/embedding.hpp"
#include "havok/intermittency.hpp"
#include "havok/model.hpp"
#include "havok/physio.hpp"
#include "havok/spectral.hpp"
#include "havok/time_series.hpp"

namespace havok::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Simple comma-separated table; header is empty for headerless files.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
  std::vector<double> numeric_column(std::size_t index) const;
};

CsvTable read_csv(const fs::path& path);

// `time,value` with header, or a single headerless column when `dt` is given.
TimeSeries read_time_series(const fs::path& path, std::optional<double> dt = std::nullopt);
void write_time_series(const fs::path& path, const TimeSeries& z, const std::string& value_name = "value");

void write_matrix(const fs::path& path, const Eigen::MatrixXd& m);
void write_vector(const fs::path& path, const Eigen::VectorXd& v);

// ECG as `time,mv` CSV.
physio::EcgRecord read_ecg_csv(const fs::path& path);
// Headerless little-endian int16 samples with a JSON sidecar
// {"fs": Hz, "gain": adu per mV, "baseline": adu (optional)}.
physio::EcgRecord read_ecg_binary(const fs::path& samples, const fs::path& sidecar);

// `minute,label` with label N or A.
physio::AnnotationTrack read_annotations(const fs::path& path);
// `time,rr`; time is the beat closing each interval.
physio::RrSeries read_rr(const fs::path& path);
void write_rr(const fs::path& path, const physio::RrSeries& rr);
void write_hrv_frames(const fs::path& path, const std::vector<physio::HrvFrame>& frames);

void write_embedding(const fs::path& dir, const embedding::DelayEmbedding& e);

json model_to_json(const model::HavokModel& m);
model::HavokModel model_from_json(const json& j);

void write_forcing(const fs::path& path, const model::ForcingSeries& f);
model::ForcingSeries read_forcing(const fs::path& path);

void write_bursts(const fs::path& path, const intermittency::BurstAnalysis& b);
json burst_summary_json(const intermittency::BurstAnalysis& b);
void write_distribution(const fs::path& path, const intermittency::DistributionEstimate& d);
void write_spectrum(const fs::path& path, const spectral::SpectrumResult& s);
// First row = times, first column = frequencies.
void write_scalogram_csv(const fs::path& path, const spectral::Scalogram& s);
// Header: "HVKSCAL1", uint64 rows, uint64 cols, then rows*cols float64 (row-major).
void write_scalogram_binary(const fs::path& path, const spectral::Scalogram& s);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace havok::io
