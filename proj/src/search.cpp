#include "grounder/search.hpp"

#include <chrono>

#include "grounder/errors.hpp"

namespace grounder {

void validate(const SearchConfig& cfg) {
    if (cfg.n_initial < 1) throw InvalidConfig("N (initial samples) must be at least 1");
    if (cfg.n_refine < 0) throw InvalidConfig("M (refine samples) must be non-negative");
    if (!(cfg.temperature >= 0.0)) throw InvalidConfig("temperature must be non-negative");
    if (!is_valid(cfg.roi_dims)) throw InvalidConfig("RoI dimensions must be positive");
    validate(cfg.kde);
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Parsed points that land inside `frame`; everything else is a failed rollout.
std::vector<PixelCoord> usable_points(const std::vector<SampleSlot>& slots,
                                      const ImageDims& frame) {
    std::vector<PixelCoord> out;
    out.reserve(slots.size());
    for (const auto& slot : slots) {
        if (slot.ok() && is_finite(slot.sample->coord) && point_within(slot.sample->coord, frame)) {
            out.push_back(slot.sample->coord);
        }
    }
    return out;
}

SampleSet full_image_samples(const GroundingQuery& query, int n, double temperature,
                             Predictor& predictor) {
    if (query.region) {
        throw InvalidConfig("full-image sampling expects a query without a region");
    }
    const auto slots = sample_predictions(query, n, temperature, predictor);
    SampleSet set{usable_points(slots, query.dims), query.dims};
    if (set.points.empty()) {
        throw AllSamplesFailed("all " + std::to_string(n) + " initial rollouts failed for '" +
                               query.id + "'");
    }
    return set;
}

}  // namespace

CropResult crop_stage(const GroundingQuery& query, const SearchConfig& cfg, Predictor& predictor) {
    validate(cfg);
    auto initial = full_image_samples(query, cfg.n_initial, cfg.temperature, predictor);
    const PixelCoord mode = kde_mode(initial, cfg.kde);
    const RoI roi = make_roi(mode, cfg.roi_dims, query.dims);
    return {std::move(initial), roi};
}

PixelCoord vote_stage(const GroundingQuery& query, const RoI& roi, const SampleSet& initial,
                      const SearchConfig& cfg, Predictor& predictor, SampleSet* refined_out) {
    validate(cfg);
    SampleSet refined{{}, query.dims};
    if (cfg.n_refine > 0) {
        GroundingQuery crop_query = query;
        crop_query.region = roi;
        const auto slots = sample_predictions(crop_query, cfg.n_refine, cfg.temperature, predictor);
        // Points outside the crop are bad rollouts and are dropped, not clamped.
        for (const auto& local : usable_points(slots, roi.dims)) {
            refined.points.push_back(to_global(local, roi));
        }
    }

    SampleSet votes{{}, query.dims};
    if (cfg.union_vote || refined.points.empty()) {
        votes.points = initial.points;
    }
    votes.points.insert(votes.points.end(), refined.points.begin(), refined.points.end());
    if (votes.points.empty()) {
        throw AllSamplesFailed("no usable rollouts in either stage for '" + query.id + "'");
    }
    if (refined_out != nullptr) {
        *refined_out = std::move(refined);
    }
    return aggregate(votes, cfg.strategy, cfg.kde);
}

SearchTrace two_stage_search(const GroundingQuery& query, const SearchConfig& cfg,
                             Predictor& predictor) {
    SearchTrace trace;
    auto start = Clock::now();
    auto crop = crop_stage(query, cfg, predictor);
    trace.timings.crop_ms = ms_since(start);
    trace.initial_samples = std::move(crop.initial);
    trace.roi = crop.roi;

    start = Clock::now();
    trace.final_coord =
        vote_stage(query, trace.roi, trace.initial_samples, cfg, predictor, &trace.refined_samples);
    trace.timings.vote_ms = ms_since(start);
    return trace;
}

PixelCoord single_stage_search(const GroundingQuery& query, int n, double temperature,
                               AggregationStrategy strategy, const KdeConfig& kde,
                               Predictor& predictor) {
    validate(kde);
    const auto samples = full_image_samples(query, n, temperature, predictor);
    return aggregate(samples, strategy, kde);
}

namespace {

nlohmann::json points_json(const SampleSet& set) {
    auto arr = nlohmann::json::array();
    for (const auto& p : set.points) arr.push_back({p.x, p.y});
    return arr;
}

}  // namespace

nlohmann::json trace_to_json(const SearchTrace& trace) {
    return {{"initial_samples", points_json(trace.initial_samples)},
            {"roi",
             {{"x0", trace.roi.origin.x},
              {"y0", trace.roi.origin.y},
              {"w", trace.roi.dims.width},
              {"h", trace.roi.dims.height}}},
            {"refined_samples", points_json(trace.refined_samples)},
            {"final", {trace.final_coord.x, trace.final_coord.y}},
            {"timings_ms", {{"crop", trace.timings.crop_ms}, {"vote", trace.timings.vote_ms}}}};
}

}  // namespace grounder
