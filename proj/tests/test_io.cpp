#include <doctest.h>

#include <cstdint>
#include <fstream>

#include "havok/error.hpp"
#include "havok/io.hpp"
#include "oracles.hpp"

using namespace havok;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("time series CSV with header and headerless") {
  const auto dir = oracle::scratch_dir("io_series");
  write(dir / "a.csv", "# comment\ntime,value\n10,1.5\n10.5,2\n11,-3\n");
  auto z = io::read_time_series(dir / "a.csv");
  CHECK(z.values == std::vector<double>{1.5, 2, -3});
  CHECK(z.dt == 0.5);
  CHECK(z.t0 == 10.0);

  write(dir / "b.csv", "1\n2\n3\n4\n");
  z = io::read_time_series(dir / "b.csv", 60.0);
  CHECK(z.values.size() == 4);
  CHECK(z.dt == 60.0);
  CHECK(code_of([&] { io::read_time_series(dir / "b.csv"); }) == ErrorCode::InvalidArgument);

  write(dir / "c.csv", "time,value\n0,1\n1,2\n3,3\n");
  CHECK(code_of([&] { io::read_time_series(dir / "c.csv"); }) == ErrorCode::ParseError);
  write(dir / "d.csv", "time,value\n0,1\n1,oops\n");
  CHECK(code_of([&] { io::read_time_series(dir / "d.csv"); }) == ErrorCode::ParseError);
  write(dir / "e.csv", "time,value\n0,1\n1,nan\n");
  CHECK(code_of([&] { io::read_time_series(dir / "e.csv"); }) == ErrorCode::NonFinite);
  CHECK(code_of([&] { io::read_time_series(dir / "missing.csv"); }) == ErrorCode::IoError);
}

TEST_CASE("time series write/read round trip is lossless") {
  const auto dir = oracle::scratch_dir("io_round");
  TimeSeries z;
  z.dt = 0.25;
  z.t0 = 3.0;
  for (int k = 0; k < 50; ++k) z.values.push_back(std::sin(0.1 * k) / 3.0);
  io::write_time_series(dir / "z.csv", z);
  const auto back = io::read_time_series(dir / "z.csv");
  CHECK(back.values == z.values);
  CHECK(back.dt == z.dt);
  CHECK(back.t0 == z.t0);
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) CHECK(std::stod(io::format_double(v)) == v);
}

TEST_CASE("binary ECG with sidecar") {
  const auto dir = oracle::scratch_dir("io_ecg");
  const std::vector<std::int16_t> adu{0, 200, -200, 32767, -32768};
  {
    std::ofstream out(dir / "r.bin", std::ios::binary);
    for (std::int16_t v : adu) {
      const auto u = static_cast<std::uint16_t>(v);
      const char bytes[2] = {static_cast<char>(u & 0xff), static_cast<char>(u >> 8)};
      out.write(bytes, 2);
    }
  }
  write(dir / "r.json", R"({"fs": 100, "gain": 200, "baseline": 0, "record_id": "a99"})");
  const auto ecg = io::read_ecg_binary(dir / "r.bin", dir / "r.json");
  CHECK(ecg.fs == 100.0);
  CHECK(ecg.record_id == "a99");
  REQUIRE(ecg.samples.size() == 5);
  CHECK(ecg.samples[1] == 1.0);
  CHECK(ecg.samples[2] == -1.0);
  CHECK(ecg.samples[3] == 32767.0 / 200.0);
  CHECK(ecg.samples[4] == -32768.0 / 200.0);
  write(dir / "bad.json", R"({"fs": 100})");
  CHECK(code_of([&] { io::read_ecg_binary(dir / "r.bin", dir / "bad.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("ECG CSV, annotations and RR inputs") {
  const auto dir = oracle::scratch_dir("io_physio");
  write(dir / "e.csv", "time,mv\n0,0.1\n0.004,0.2\n0.008,0.3\n");
  const auto ecg = io::read_ecg_csv(dir / "e.csv");
  CHECK(ecg.fs == doctest::Approx(250.0));

  write(dir / "ann.csv", "minute,label\n0,N\n1,A\n2,A\n3,N\n");
  const auto ann = io::read_annotations(dir / "ann.csv");
  CHECK(ann.apnea == std::vector<bool>{false, true, true, false});
  write(dir / "ann_bad.csv", "minute,label\n0,N\n1,X\n");
  CHECK(code_of([&] { io::read_annotations(dir / "ann_bad.csv"); }) == ErrorCode::ParseError);

  write(dir / "rr.csv", "time,rr\n1.6,0.8\n2.4,0.8\n3.3,0.9\n");
  const auto rr = io::read_rr(dir / "rr.csv");
  CHECK(rr.peak_times.size() == 4);
  CHECK(rr.peak_times.front() == doctest::Approx(0.8));
  io::write_rr(dir / "rr_out.csv", rr);
  const auto t = io::read_csv(dir / "rr_out.csv");
  CHECK(t.header == std::vector<std::string>{"time", "rr", "valid"});
  CHECK(t.rows.size() == 3);
}

TEST_CASE("embedding export layout") {
  const auto dir = oracle::scratch_dir("io_embed");
  TimeSeries z;
  for (int k = 0; k < 40; ++k) z.values.push_back(std::cos(0.4 * k));
  const auto e = embedding::embed(z, 5, 1, embedding::rank::Fixed{3});
  io::write_embedding(dir, e);
  for (const char* f : {"U.csv", "S.csv", "V.csv", "embedding.json"}) CHECK(fs::exists(dir / f));
  const auto j = io::read_json(dir / "embedding.json");
  CHECK(j.at("p") == 5);
  CHECK(j.at("tau") == 1);
  CHECK(j.at("q") == 36);
  CHECK(j.at("r") == 3);
  const auto s = io::read_csv(dir / "S.csv");
  REQUIRE(s.rows.size() == 5);
  CHECK(std::stod(s.rows[0][0]) == e.svd_s[0]);
  const auto v = io::read_csv(dir / "V.csv");
  CHECK(v.rows.size() == 36);
}

TEST_CASE("scalogram binary header") {
  const auto dir = oracle::scratch_dir("io_scal");
  spectral::Scalogram s;
  s.modulus = Eigen::MatrixXd::Random(3, 4);
  io::write_scalogram_binary(dir / "s.bin", s);
  std::ifstream in(dir / "s.bin", std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 8) == "HVKSCAL1");
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  CHECK(rows == 3);
  CHECK(cols == 4);
  double v01 = 0.0;
  in.read(reinterpret_cast<char*>(&v01), 8);
  in.read(reinterpret_cast<char*>(&v01), 8);
  CHECK(v01 == s.modulus(0, 1));
}
