#pragma once

// Independent reference implementations used only by the tests.

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <regex>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce k*t mod n first so the phase stays accurate for large n.
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * std::polar(1.0, phase);
    }
    out[k] = acc;
  }
  return out;
}

inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  return naive_dft(std::vector<std::complex<double>>(x.begin(), x.end()));
}

using State = std::array<double, 3>;

inline State lorenz_rhs(const State& s, double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0) {
  return {sigma * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2]};
}

// Classical RK4 written independently of the library integrator.
inline State rk4_step(const State& s, double h) {
  auto axpy = [](const State& a, double c, const State& b) {
    return State{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]};
  };
  const State k1 = lorenz_rhs(s);
  const State k2 = lorenz_rhs(axpy(s, h / 2, k1));
  const State k3 = lorenz_rhs(axpy(s, h / 2, k2));
  const State k4 = lorenz_rhs(axpy(s, h, k3));
  State out;
  for (int i = 0; i < 3; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

inline State lorenz_reference(State s, double horizon, double h) {
  const long steps = std::lround(horizon / h);
  for (long k = 0; k < steps; ++k) s = rk4_step(s, h);
  return s;
}

// Sum of Gaussian R waves (sd 10 ms, 1 mV) plus a small T wave and white
// noise at the requested SNR relative to the clean signal power.
struct SyntheticEcg {
  std::vector<double> samples;
  std::vector<double> r_times;
  double fs = 0.0;
};

inline SyntheticEcg synthetic_ecg(double duration, double fs, const std::vector<double>& rr_pattern, double snr_db,
                                  std::uint64_t seed) {
  SyntheticEcg ecg;
  ecg.fs = fs;
  const auto n = static_cast<std::size_t>(duration * fs);
  ecg.samples.assign(n, 0.0);
  double t = 0.5;
  for (std::size_t k = 0; t < duration - 0.5; ++k) {
    ecg.r_times.push_back(t);
    t += rr_pattern[k % rr_pattern.size()];
  }
  for (double tr : ecg.r_times) {
    const auto lo = static_cast<long>((tr - 0.4) * fs);
    const auto hi = static_cast<long>((tr + 0.5) * fs);
    for (long i = std::max(0L, lo); i < std::min<long>(static_cast<long>(n), hi); ++i) {
      const double ti = static_cast<double>(i) / fs;
      const double r = (ti - tr) / 0.010;
      const double tw = (ti - tr - 0.25) / 0.040;
      ecg.samples[static_cast<std::size_t>(i)] += std::exp(-0.5 * r * r) + 0.2 * std::exp(-0.5 * tw * tw);
    }
  }
  double power = 0.0;
  for (double v : ecg.samples) power += v * v;
  power /= static_cast<double>(n);
  const double noise_sd = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  for (double& v : ecg.samples) v += noise(rng);
  return ecg;
}

// Subset of JSON Schema: type, required, properties, additionalProperties,
// items, enum, pattern, minimum/maximum and their exclusive forms.
inline void validate_schema(const nlohmann::json& v, const nlohmann::json& s, const std::string& path,
                            std::vector<std::string>& errors) {
  using nlohmann::json;
  auto type_ok = [&](const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
  };
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || type_ok(t.get<std::string>());
    } else {
      ok = type_ok(s["type"].get<std::string>());
    }
    if (!ok) {
      errors.push_back(path + ": wrong type");
      return;
    }
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) errors.push_back(path + ": not in enum");
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>()) errors.push_back(path + ": below minimum");
    if (s.contains("maximum") && x > s["maximum"].get<double>()) errors.push_back(path + ": above maximum");
    if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>()) errors.push_back(path + ": <= exclusiveMinimum");
    if (s.contains("exclusiveMaximum") && x >= s["exclusiveMaximum"].get<double>()) errors.push_back(path + ": >= exclusiveMaximum");
  }
  if (v.is_string() && s.contains("pattern") &&
      !std::regex_search(v.get<std::string>(), std::regex(s["pattern"].get<std::string>()))) {
    errors.push_back(path + ": pattern mismatch");
  }
  if (v.is_object()) {
    if (s.contains("required")) {
      for (const auto& key : s["required"]) {
        if (!v.contains(key.get<std::string>())) errors.push_back(path + ": missing " + key.get<std::string>());
      }
    }
    const json props = s.value("properties", json::object());
    for (const auto& [key, value] : v.items()) {
      if (props.contains(key)) {
        validate_schema(value, props[key], path + "." + key, errors);
      } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
        errors.push_back(path + ": unexpected key " + key);
      }
    }
  }
  if (v.is_array() && s.contains("items")) {
    for (std::size_t i = 0; i < v.size(); ++i) validate_schema(v[i], s["items"], path + "[" + std::to_string(i) + "]", errors);
  }
}

inline std::vector<std::string> validate_schema(const nlohmann::json& v, const nlohmann::json& schema) {
  std::vector<std::string> errors;
  validate_schema(v, schema, "$", errors);
  return errors;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("havok_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
