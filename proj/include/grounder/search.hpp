#pragma once

// Two-stage test-time search: sample N points on the full image, crop a
// fixed-size region around their KDE mode, sample M more points inside the
// crop, and vote over the union in full-image coordinates.

#include <string>

#include "grounder/density.hpp"
#include "grounder/predictor.hpp"
#include "json.hpp"

namespace grounder {

struct SearchConfig {
    int n_initial = 16;
    int n_refine = 16;
    double temperature = 1.0;
    ImageDims roi_dims{840, 840};
    KdeConfig kde;
    AggregationStrategy strategy = AggregationStrategy::Kde;
    bool union_vote = true;
};

void validate(const SearchConfig& cfg);

struct StageTimings {
    double crop_ms = 0.0;
    double vote_ms = 0.0;
};

struct SearchTrace {
    SampleSet initial_samples;  // full-image frame
    RoI roi;
    SampleSet refined_samples;  // mapped into the full-image frame
    PixelCoord final_coord;
    StageTimings timings;
};

struct CropResult {
    SampleSet initial;
    RoI roi;
};

/// Throws AllSamplesFailed when no initial rollout yields a usable point.
CropResult crop_stage(const GroundingQuery& query, const SearchConfig& cfg, Predictor& predictor);

/// Returns the final coordinate; `refined_out` (optional) receives the
/// crop samples mapped back to the full image.
PixelCoord vote_stage(const GroundingQuery& query, const RoI& roi, const SampleSet& initial,
                      const SearchConfig& cfg, Predictor& predictor,
                      SampleSet* refined_out = nullptr);

SearchTrace two_stage_search(const GroundingQuery& query, const SearchConfig& cfg,
                             Predictor& predictor);

/// Aggregates N full-image samples directly, without a crop.
PixelCoord single_stage_search(const GroundingQuery& query, int n, double temperature,
                               AggregationStrategy strategy, const KdeConfig& kde,
                               Predictor& predictor);

/// {"initial_samples": [[x,y],..], "roi": {"x0","y0","w","h"},
///  "refined_samples": [[x,y],..], "final": [x,y],
///  "timings_ms": {"crop", "vote"}}
nlohmann::json trace_to_json(const SearchTrace& trace);

}  // namespace grounder
