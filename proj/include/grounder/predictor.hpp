#pragma once

// The grounding model abstraction: a query goes in, sampled
// (reasoning, coordinate) rollouts come out.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grounder/geometry.hpp"
#include "grounder/rng.hpp"

namespace grounder {

/// One instruction against one image, optionally restricted to a crop. When
/// `region` is set the predictor sees only that crop and answers in its
/// local frame. `dims` are always the full image's.
struct GroundingQuery {
    std::string id;
    std::string instruction;
    std::string image;                       // path or opaque handle
    std::optional<std::string> image_bytes;  // encoded image, overrides `image`
    ImageDims dims;
    std::optional<RoI> region;

    /// Frame the predictor answers in: the crop when set, else the image.
    ImageDims frame() const noexcept { return region ? region->dims : dims; }
};

struct PredictionSample {
    std::string reasoning;
    PixelCoord coord;
    std::string raw;
};

/// Outcome of one rollout. `sample` is empty when the output did not parse.
struct SampleSlot {
    std::string raw;
    std::optional<PredictionSample> sample;

    bool ok() const noexcept { return sample.has_value(); }
};

class Predictor {
public:
    virtual ~Predictor() = default;

    /// Exactly `n` slots, in sample-index order. Implementations must be safe
    /// to call from max_concurrency() threads at once.
    virtual std::vector<SampleSlot> sample(const GroundingQuery& query, int n,
                                           double temperature) = 0;

    virtual std::string name() const = 0;

    virtual int max_concurrency() const { return 8; }
};

/// Checks the call contract around Predictor::sample.
std::vector<SampleSlot> sample_predictions(const GroundingQuery& query, int n,
                                           double temperature, Predictor& predictor);

// ---------------------------------------------------------------------------
// Output parsing

/// Location of the first top-level <think>...</think> span in a completion.
struct ThinkSpan {
    std::size_t open = 0;           // index of "<think>"
    std::size_t content_begin = 0;  // first byte after "<think>"
    std::size_t content_end = 0;    // index of the matching "</think>"
    std::size_t end = 0;            // first byte after the matching "</think>"
};

/// Tag structure of a completion, scanned with nesting depth.
struct ThinkStructure {
    std::optional<ThinkSpan> first;  // first well-formed outermost span
    int top_level_spans = 0;         // well-formed outermost spans seen
    bool balanced = true;            // no stray close tag, nothing left open
};

ThinkStructure scan_think_tags(std::string_view raw) noexcept;

struct ParsedOutput {
    std::string reasoning;
    PixelCoord coord;
};

/// Reasoning is the trimmed content of the first outermost think span (empty
/// if there is none). The coordinate is the first "x, y" pair after that span,
/// optionally wrapped in () or [], with integer or decimal components.
/// Returns nullopt when no pair can be found.
std::optional<ParsedOutput> parse_model_output(std::string_view raw);

/// First coordinate pair in `text`, if any.
std::optional<PixelCoord> find_coordinate(std::string_view text);

// ---------------------------------------------------------------------------
// Simulated predictor

/// Stochastic stand-in for a grounding model: Gaussian scatter around the
/// target center with uniform outliers, plus an optional second "distractor"
/// cluster for multi-modal experiments. Noise scales with the queried frame.
struct SimPredictorConfig {
    double noise_sigma_frac = 0.02;  // std dev / max(frame W, H)
    double outlier_rate = 0.0;
    bool temperature_scaling = true;
    std::uint64_t rng_seed = 0;

    double distractor_rate = 0.0;         // share of rollouts drawn near the distractor
    double distractor_sigma_frac = 0.0;   // 0 means "same as noise_sigma_frac"
    double distractor_offset_frac = 0.25; // distance from the target, / max(image W, H)
};

void validate(const SimPredictorConfig& cfg);

inline constexpr std::string_view kSimReasoning =
    "The instruction names one on-screen element; matching its label and position "
    "against the layout gives the click point.";

/// One rollout for a target `gt` in `frame` (both in the same frame).
PredictionSample simulate_sample(const BBox& gt, const ImageDims& frame,
                                 const SimPredictorConfig& cfg, double temperature, Rng& rng);

/// Looks up the ground truth for a query id; nullopt when unknown.
using TargetLookup = std::function<std::optional<BBox>(std::string_view id)>;

class SimulatedPredictor final : public Predictor {
public:
    SimulatedPredictor(SimPredictorConfig cfg, TargetLookup lookup);

    std::vector<SampleSlot> sample(const GroundingQuery& query, int n,
                                   double temperature) override;
    std::string name() const override { return "sim"; }

    const SimPredictorConfig& config() const noexcept { return cfg_; }

private:
    SimPredictorConfig cfg_;
    TargetLookup lookup_;
};

/// Renders a simulated completion in the canonical "<think>..</think> (x, y)" form.
std::string render_completion(std::string_view reasoning, const PixelCoord& c);

}  // namespace grounder
