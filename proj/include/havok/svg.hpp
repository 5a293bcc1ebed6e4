#pragma once

#include <optional>
#include <string>

#include "havok/intermittency.hpp"
#include "havok/model.hpp"
#include "havok/physio.hpp"
#include "havok/spectral.hpp"

namespace havok::svg {

// Forcing trace with the activity threshold and detected bursts shaded.
std::string forcing_plot(const model::ForcingSeries& f, const intermittency::BurstAnalysis& b,
                         const std::optional<physio::AnnotationTrack>& ann = std::nullopt);

// Log-frequency heatmap of |X_w| with the cone of influence and an optional
// annotation lane underneath.
std::string scalogram_plot(const spectral::Scalogram& s,
                           const std::optional<physio::AnnotationTrack>& ann = std::nullopt);

std::string distribution_plot(const intermittency::DistributionEstimate& d);

}  // namespace havok::svg
