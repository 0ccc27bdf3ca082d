#pragma once

// Gaussian kernel density over prediction samples and the three ways of
// collapsing a sample set into one coordinate (KDE mode, mean, medoid).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grounder/geometry.hpp"

namespace grounder {

/// Isotropic kernel settings. `variance` is expressed in normalized frame
/// units (coordinates divided by W and H), so 0.01 is a ~10% bandwidth.
struct KdeConfig {
    double variance = 0.01;
    int mean_shift_max_iters = 50;
    double mean_shift_tol = 1e-6;
};

void validate(const KdeConfig& cfg);

/// Points in a common frame; the frame fixes the normalization.
struct SampleSet {
    std::vector<PixelCoord> points;
    ImageDims frame;
};

enum class AggregationStrategy { Kde, Center, Medoid };

std::string_view to_string(AggregationStrategy s) noexcept;

/// Accepts "kde", "center", "medoid" in any case.
std::optional<AggregationStrategy> parse_strategy(std::string_view name) noexcept;

/// Mean of unnormalized Gaussian kernels centered on the samples, in (0, 1].
double kde_density_at(const PixelCoord& z, const SampleSet& samples, const KdeConfig& cfg);

/// Approximate maximizer of the density. Mean-shift runs from every sample
/// and the endpoint (or untouched sample) with the highest density wins. A
/// step shorter than the tolerance counts as convergence and is not taken,
/// so an infinite tolerance restricts the answer to the samples themselves.
/// Ties go to the lowest index.
PixelCoord kde_mode(const SampleSet& samples, const KdeConfig& cfg);

PixelCoord aggregate_center(const SampleSet& samples);

/// Sample minimizing the summed Euclidean (pixel) distance to all samples.
PixelCoord aggregate_medoid(const SampleSet& samples);

PixelCoord aggregate(const SampleSet& samples, AggregationStrategy strategy,
                     const KdeConfig& cfg);

}  // namespace grounder
