#pragma once

#include <span>
#include <string>
#include <vector>

namespace havok {

// Uniformly sampled scalar measurement.
struct TimeSeries {
  std::vector<double> values;
  double dt = 1.0;   // seconds per sample
  double t0 = 0.0;   // start time, seconds
  std::string label;

  std::size_t size() const { return values.size(); }
  double time_at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double duration() const { return static_cast<double>(values.size()) * dt; }
};

// Throws SeriesTooShort / InvalidArgument / NonFinite when the invariants
// (N >= 2, dt > 0, finite values) do not hold.
void validate(const TimeSeries& z);

bool all_finite(std::span<const double> xs);

}  // namespace havok
