#include "havok/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "havok/error.hpp"

namespace havok::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<double> CsvTable::numeric_column(std::size_t index) const {
  std::vector<double> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (index >= rows[r].size()) fail(ErrorCode::ParseError, "row " + std::to_string(r + 1) + " is missing a column");
    const auto v = parse_number(rows[r][index]);
    if (!v) fail(ErrorCode::ParseError, "row " + std::to_string(r + 1) + ": '" + rows[r][index] + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line);
    if (first) {
      first = false;
      if (!parse_number(cells.front())) {
        t.header = std::move(cells);
        continue;
      }
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

TimeSeries read_time_series(const fs::path& path, std::optional<double> dt) {
  const CsvTable t = read_csv(path);
  TimeSeries z;
  z.label = path.stem().string();
  if (t.header.empty()) {
    if (!dt) fail(ErrorCode::InvalidArgument, path.string() + " has no header; pass --dt");
    z.values = t.numeric_column(0);
    z.dt = *dt;
  } else {
    const auto tc = t.column("time");
    if (!tc || t.header.size() < 2) fail(ErrorCode::ParseError, path.string() + ": expected header 'time,<value>'");
    const std::size_t vc = *tc == 0 ? 1 : 0;
    const std::vector<double> times = t.numeric_column(*tc);
    z.values = t.numeric_column(vc);
    if (times.size() < 2) fail(ErrorCode::SeriesTooShort, path.string() + " has fewer than 2 rows");
    z.t0 = times.front();
    z.dt = dt.value_or((times.back() - times.front()) / static_cast<double>(times.size() - 1));
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (std::abs(times[k] - z.time_at(k)) > 1e-6 * z.dt) {
        fail(ErrorCode::ParseError, path.string() + ": time column is not uniformly sampled at row " +
                                        std::to_string(k + 1));
      }
    }
  }
  validate(z);
  return z;
}

void write_time_series(const fs::path& path, const TimeSeries& z, const std::string& value_name) {
  auto out = open_out(path);
  out << "time," << value_name << "\n";
  for (std::size_t k = 0; k < z.size(); ++k) out << format_double(z.time_at(k)) << ',' << format_double(z.values[k]) << "\n";
}

void write_matrix(const fs::path& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << "\n";
  }
}

void write_vector(const fs::path& path, const Eigen::VectorXd& v) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v[i]) << "\n";
}

physio::EcgRecord read_ecg_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto tc = t.column("time");
  const auto vc = t.column("mv");
  if (!tc || !vc) fail(ErrorCode::ParseError, path.string() + ": expected header 'time,mv'");
  const std::vector<double> times = t.numeric_column(*tc);
  physio::EcgRecord ecg;
  ecg.samples = t.numeric_column(*vc);
  ecg.record_id = path.stem().string();
  if (times.size() < 2) fail(ErrorCode::SeriesTooShort, path.string() + " has fewer than 2 samples");
  ecg.fs = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  if (!(ecg.fs > 0.0) || !std::isfinite(ecg.fs)) fail(ErrorCode::ParseError, "time column must increase");
  return ecg;
}

physio::EcgRecord read_ecg_binary(const fs::path& samples, const fs::path& sidecar) {
  const json meta = read_json(sidecar);
  if (!meta.contains("fs") || !meta.contains("gain")) fail(ErrorCode::ParseError, "sidecar needs fs and gain");
  const double fs = meta.at("fs").get<double>();
  const double gain = meta.at("gain").get<double>();
  const double baseline = meta.value("baseline", 0.0);
  if (!(fs > 0.0) || gain == 0.0) fail(ErrorCode::InvalidArgument, "sidecar fs must be > 0 and gain non-zero");

  std::ifstream in(samples, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + samples.string());
  physio::EcgRecord ecg;
  ecg.fs = fs;
  ecg.record_id = meta.value("record_id", samples.stem().string());
  unsigned char raw[2];
  while (in.read(reinterpret_cast<char*>(raw), 2)) {
    const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(raw[0] | (raw[1] << 8)));
    ecg.samples.push_back((static_cast<double>(v) - baseline) / gain);
  }
  return ecg;
}

physio::AnnotationTrack read_annotations(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto mc = t.column("minute");
  const auto lc = t.column("label");
  if (!mc || !lc) fail(ErrorCode::ParseError, path.string() + ": expected header 'minute,label'");
  const std::vector<double> minutes = t.numeric_column(*mc);
  physio::AnnotationTrack ann;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (minutes[r] != static_cast<double>(r)) fail(ErrorCode::ParseError, "annotation minutes must be 0, 1, 2, ...");
    const std::string& label = t.rows[r][*lc];
    if (label != "A" && label != "N") fail(ErrorCode::ParseError, "annotation label must be A or N, got '" + label + "'");
    ann.apnea.push_back(label == "A");
  }
  return ann;
}

physio::RrSeries read_rr(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto tc = t.column("time");
  const auto rc = t.column("rr");
  if (!tc || !rc) fail(ErrorCode::ParseError, path.string() + ": expected header 'time,rr'");
  const std::vector<double> times = t.numeric_column(*tc);
  const std::vector<double> rr = t.numeric_column(*rc);
  return physio::rr_from_intervals(times, rr, times.empty() ? 0.0 : times.back());
}

void write_rr(const fs::path& path, const physio::RrSeries& rr) {
  auto out = open_out(path);
  out << "time,rr,valid\n";
  for (std::size_t k = 0; k < rr.rr.size(); ++k) {
    out << format_double(rr.peak_times[k + 1]) << ',' << format_double(rr.rr[k]) << ',' << (rr.rr_valid[k] ? 1 : 0)
        << "\n";
  }
}

void write_hrv_frames(const fs::path& path, const std::vector<physio::HrvFrame>& frames) {
  auto out = open_out(path);
  out << "minute,n_beats,tri,mean_rr,sdnn,rmssd,pnn50\n";
  for (const auto& f : frames) {
    out << f.minute_index << ',' << f.n_beats << ',' << opt(f.tri) << ',' << opt(f.mean_rr) << ',' << opt(f.sdnn)
        << ',' << opt(f.rmssd) << ',' << opt(f.pnn50) << "\n";
  }
}

void write_embedding(const fs::path& dir, const embedding::DelayEmbedding& e) {
  fs::create_directories(dir);
  write_matrix(dir / "U.csv", e.svd_u);
  write_vector(dir / "S.csv", e.svd_s);
  write_matrix(dir / "V.csv", e.svd_v);
  write_json(dir / "embedding.json", json{{"p", e.window_p}, {"tau", e.lag_tau}, {"q", e.q()}, {"r", e.rank_r}});
}

json model_to_json(const model::HavokModel& m) {
  std::vector<double> a;
  for (Eigen::Index r = 0; r < m.a.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.a.cols(); ++c) a.push_back(m.a(r, c));
  }
  return json{{"r", m.r},
              {"dt", m.dt},
              {"mode", std::string(model::to_string(m.mode))},
              {"A", a},
              {"B", std::vector<double>(m.b.data(), m.b.data() + m.b.size())},
              {"residual_row_norm", m.residual_row_norm}};
}

model::HavokModel model_from_json(const json& j) {
  model::HavokModel m;
  try {
    m.r = j.at("r").get<int>();
    m.dt = j.at("dt").get<double>();
    m.mode = model::parse_fit_mode(j.at("mode").get<std::string>());
    const auto a = j.at("A").get<std::vector<double>>();
    const auto b = j.at("B").get<std::vector<double>>();
    const int d = m.r - 1;
    if (d < 1 || a.size() != static_cast<std::size_t>(d * d) || b.size() != static_cast<std::size_t>(d)) {
      fail(ErrorCode::ParseError, "model JSON shapes do not match r");
    }
    m.a.resize(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) m.a(r, c) = a[static_cast<std::size_t>(r * d + c)];
    }
    m.b = Eigen::Map<const Eigen::VectorXd>(b.data(), d);
    m.residual_row_norm = j.at("residual_row_norm").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("model JSON: ") + e.what());
  }
  return m;
}

void write_forcing(const fs::path& path, const model::ForcingSeries& f) {
  auto out = open_out(path);
  out << "time,vr\n";
  for (std::size_t k = 0; k < f.vr.size(); ++k) out << format_double(f.time_at(k)) << ',' << format_double(f.vr[k]) << "\n";
}

model::ForcingSeries read_forcing(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto tc = t.column("time");
  const auto vc = t.column("vr");
  if (!tc || !vc) fail(ErrorCode::ParseError, path.string() + ": expected header 'time,vr'");
  const std::vector<double> times = t.numeric_column(*tc);
  model::ForcingSeries f;
  f.vr = t.numeric_column(*vc);
  if (times.size() < 2) fail(ErrorCode::SeriesTooShort, "forcing needs at least 2 samples");
  f.t0 = times.front();
  f.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  return f;
}

void write_bursts(const fs::path& path, const intermittency::BurstAnalysis& b) {
  auto out = open_out(path);
  out << "k,t_s,t_e,Tb\n";
  for (std::size_t k = 0; k < b.bursts.size(); ++k) {
    out << k << ',' << format_double(b.bursts[k].t_s) << ',' << format_double(b.bursts[k].t_e) << ','
        << format_double(b.tb[k]) << "\n";
  }
}

json burst_summary_json(const intermittency::BurstAnalysis& b) {
  const auto s = intermittency::burst_statistics(b);
  auto opt_json = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"psi", b.psi},
              {"threshold", b.threshold},
              {"n_bursts", s.n_bursts},
              {"tb_mean", opt_json(s.tb_mean)},
              {"tb_sd", opt_json(s.tb_sd)},
              {"tib_mean", opt_json(s.tib_mean)},
              {"tib_sd", opt_json(s.tib_sd)}};
}

void write_distribution(const fs::path& path, const intermittency::DistributionEstimate& d) {
  auto out = open_out(path);
  out << "bin_center,density,gaussian_ref\n";
  const auto centers = d.bin_centers();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    out << format_double(centers[i]) << ',' << format_double(d.density[i]) << ',' << format_double(d.gaussian_ref[i])
        << "\n";
  }
}

void write_spectrum(const fs::path& path, const spectral::SpectrumResult& s) {
  auto out = open_out(path);
  out << "freq_hz,amplitude,power\n";
  for (std::size_t k = 0; k < s.freqs.size(); ++k) {
    out << format_double(s.freqs[k]) << ',' << format_double(s.amplitude[k]) << ',' << format_double(s.power[k])
        << "\n";
  }
}

void write_scalogram_csv(const fs::path& path, const spectral::Scalogram& s) {
  auto out = open_out(path);
  out << "freq_hz";
  for (double t : s.times) out << ',' << format_double(t);
  out << "\n";
  for (std::size_t i = 0; i < s.freqs.size(); ++i) {
    out << format_double(s.freqs[i]);
    for (Eigen::Index c = 0; c < s.modulus.cols(); ++c) out << ',' << format_double(s.modulus(static_cast<Eigen::Index>(i), c));
    out << "\n";
  }
}

void write_scalogram_binary(const fs::path& path, const spectral::Scalogram& s) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  const std::uint64_t rows = static_cast<std::uint64_t>(s.modulus.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(s.modulus.cols());
  out.write("HVKSCAL1", 8);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = s.modulus;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rows * cols * sizeof(double)));
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace havok::io
