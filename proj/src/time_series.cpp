#include "havok/time_series.hpp"

#include <algorithm>
#include <cmath>

#include "havok/error.hpp"

namespace havok {

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

void validate(const TimeSeries& z) {
  if (z.values.size() < 2) fail(ErrorCode::SeriesTooShort, "time series needs at least 2 samples");
  if (!(z.dt > 0.0) || !std::isfinite(z.dt)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  if (!all_finite(z.values)) fail(ErrorCode::NonFinite, "time series contains NaN/Inf");
}

}  // namespace havok
