#include "grounder/predictor.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numbers>

#include "grounder/errors.hpp"
#include "grounder/format.hpp"

namespace grounder {

std::vector<SampleSlot> sample_predictions(const GroundingQuery& query, int n,
                                           double temperature, Predictor& predictor) {
    if (n < 1) {
        throw InvalidConfig("sample count must be at least 1");
    }
    if (!(temperature >= 0.0)) {
        throw InvalidConfig("temperature must be non-negative");
    }
    auto slots = predictor.sample(query, n, temperature);
    if (slots.size() != static_cast<std::size_t>(n)) {
        throw PredictorUnavailable(predictor.name() + " returned " +
                                   std::to_string(slots.size()) + " slots for " +
                                   std::to_string(n) + " requests");
    }
    return slots;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

constexpr std::string_view kOpen = "<think>";
constexpr std::string_view kClose = "</think>";

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

// Parses an optionally signed integer or decimal starting at `pos`.
std::optional<double> read_number(std::string_view text, std::size_t& pos) {
    std::size_t i = pos;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) ++i;
    const std::size_t digits_start = i;
    while (i < text.size() && is_digit(text[i])) ++i;
    bool any_digit = i > digits_start;
    if (i < text.size() && text[i] == '.') {
        const std::size_t frac_start = ++i;
        while (i < text.size() && is_digit(text[i])) ++i;
        if (i == frac_start) {
            --i;  // a trailing '.' is punctuation, not part of the number
        } else {
            any_digit = true;
        }
    }
    if (!any_digit) return std::nullopt;

    std::size_t begin = pos;
    if (text[begin] == '+') ++begin;
    double value = 0.0;
    const auto res = std::from_chars(text.data() + begin, text.data() + i, value);
    if (res.ec != std::errc() || !std::isfinite(value)) return std::nullopt;
    pos = i;
    return value;
}

void skip_spaces(std::string_view text, std::size_t& pos) noexcept {
    while (pos < text.size() && is_space(text[pos])) ++pos;
}

}  // namespace

ThinkStructure scan_think_tags(std::string_view raw) noexcept {
    ThinkStructure out;
    int depth = 0;
    std::size_t open_at = 0;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t next_open = raw.find(kOpen, pos);
        const std::size_t next_close = raw.find(kClose, pos);
        if (next_open == std::string_view::npos && next_close == std::string_view::npos) break;
        if (next_open < next_close) {
            if (depth == 0) open_at = next_open;
            ++depth;
            pos = next_open + kOpen.size();
        } else {
            if (depth == 0) {
                out.balanced = false;
            } else if (--depth == 0) {
                ++out.top_level_spans;
                if (!out.first) {
                    out.first = ThinkSpan{open_at, open_at + kOpen.size(), next_close,
                                          next_close + kClose.size()};
                }
            }
            pos = next_close + kClose.size();
        }
    }
    if (depth != 0) out.balanced = false;
    return out;
}

std::optional<PixelCoord> find_coordinate(std::string_view text) {
    for (std::size_t start = 0; start < text.size(); ++start) {
        const char c = text[start];
        const bool starts_number =
            is_digit(c) || ((c == '-' || c == '+' || c == '.') && start + 1 < text.size() &&
                            (is_digit(text[start + 1]) || text[start + 1] == '.'));
        if (!starts_number) continue;
        // Do not start inside a longer number or identifier.
        if (start > 0 && (is_digit(text[start - 1]) || text[start - 1] == '.')) continue;

        std::size_t pos = start;
        const auto x = read_number(text, pos);
        if (!x) continue;
        skip_spaces(text, pos);
        if (pos >= text.size() || text[pos] != ',') {
            start = pos > start ? pos - 1 : start;
            continue;
        }
        ++pos;
        skip_spaces(text, pos);
        const auto y = read_number(text, pos);
        if (!y) continue;
        return PixelCoord{*x, *y};
    }
    return std::nullopt;
}

std::optional<ParsedOutput> parse_model_output(std::string_view raw) {
    const auto tags = scan_think_tags(raw);
    ParsedOutput out;
    std::string_view tail = raw;
    if (tags.first) {
        const auto& span = *tags.first;
        out.reasoning =
            std::string(trim(raw.substr(span.content_begin, span.content_end - span.content_begin)));
        tail = raw.substr(span.end);
    }
    const auto coord = find_coordinate(tail);
    if (!coord) return std::nullopt;
    out.coord = *coord;
    return out;
}

std::string render_completion(std::string_view reasoning, const PixelCoord& c) {
    std::string out;
    out.reserve(reasoning.size() + 48);
    out += kOpen;
    out += reasoning;
    out += kClose;
    out += " (";
    out += format_number(c.x);
    out += ", ";
    out += format_number(c.y);
    out += ")";
    return out;
}

// ---------------------------------------------------------------------------
// Simulated predictor

void validate(const SimPredictorConfig& cfg) {
    if (!(cfg.noise_sigma_frac >= 0.0) || !std::isfinite(cfg.noise_sigma_frac)) {
        throw InvalidConfig("noise_sigma_frac must be non-negative");
    }
    if (!(cfg.outlier_rate >= 0.0 && cfg.outlier_rate < 1.0)) {
        throw InvalidConfig("outlier_rate must lie in [0, 1)");
    }
    if (!(cfg.distractor_rate >= 0.0) || cfg.outlier_rate + cfg.distractor_rate >= 1.0) {
        throw InvalidConfig("outlier_rate + distractor_rate must lie in [0, 1)");
    }
    if (!(cfg.distractor_sigma_frac >= 0.0) || !(cfg.distractor_offset_frac >= 0.0)) {
        throw InvalidConfig("distractor parameters must be non-negative");
    }
}

namespace {

double max_side(const ImageDims& d) noexcept {
    return static_cast<double>(std::max(d.width, d.height));
}

PixelCoord clamp_to(const PixelCoord& p, const ImageDims& frame) noexcept {
    return {std::clamp(p.x, 0.0, static_cast<double>(frame.width)),
            std::clamp(p.y, 0.0, static_cast<double>(frame.height))};
}

PixelCoord uniform_in(const ImageDims& frame, Rng& rng) {
    const double x = rng.uniform(0.0, static_cast<double>(frame.width));
    const double y = rng.uniform(0.0, static_cast<double>(frame.height));
    return {x, y};
}

// Draws one coordinate in `frame`. Anchors that are not visible in the frame
// (nullopt) produce a uniform guess, as does the outlier branch.
PixelCoord draw_point(const std::optional<PixelCoord>& target,
                      const std::optional<PixelCoord>& distractor, const ImageDims& frame,
                      const SimPredictorConfig& cfg, double temperature, Rng& rng) {
    const double t_scale = cfg.temperature_scaling ? temperature : 1.0;
    const double branch = rng.uniform();
    if (branch < cfg.outlier_rate) {
        return uniform_in(frame, rng);
    }
    const bool near_distractor = branch < cfg.outlier_rate + cfg.distractor_rate;
    const auto& anchor = near_distractor ? distractor : target;
    if (!anchor) {
        return uniform_in(frame, rng);
    }
    const double sigma_frac = near_distractor && cfg.distractor_sigma_frac > 0.0
                                  ? cfg.distractor_sigma_frac
                                  : cfg.noise_sigma_frac;
    const double sigma = sigma_frac * max_side(frame) * t_scale;
    if (sigma == 0.0) {
        return *anchor;
    }
    const double dx = sigma * rng.normal();
    const double dy = sigma * rng.normal();
    return clamp_to({anchor->x + dx, anchor->y + dy}, frame);
}

PredictionSample make_sample(const PixelCoord& c) {
    // Round-trip through the rendered text so the coordinate is exactly what
    // a consumer of `raw` would parse.
    PredictionSample s;
    s.reasoning = std::string(kSimReasoning);
    s.raw = render_completion(kSimReasoning, c);
    s.coord = parse_model_output(s.raw)->coord;
    return s;
}

std::uint64_t region_key(const std::optional<RoI>& region) noexcept {
    if (!region) return 0;
    return stream_key(std::bit_cast<std::uint64_t>(region->origin.x),
                      std::bit_cast<std::uint64_t>(region->origin.y),
                      static_cast<std::uint64_t>(region->dims.width),
                      static_cast<std::uint64_t>(region->dims.height));
}

}  // namespace

PredictionSample simulate_sample(const BBox& gt, const ImageDims& frame,
                                 const SimPredictorConfig& cfg, double temperature, Rng& rng) {
    return make_sample(draw_point(center_of_bbox(gt), std::nullopt, frame, cfg, temperature, rng));
}

SimulatedPredictor::SimulatedPredictor(SimPredictorConfig cfg, TargetLookup lookup)
    : cfg_(cfg), lookup_(std::move(lookup)) {
    validate(cfg_);
}

std::vector<SampleSlot> SimulatedPredictor::sample(const GroundingQuery& query, int n,
                                                   double temperature) {
    const auto gt = lookup_ ? lookup_(query.id) : std::nullopt;
    if (!gt) {
        throw PredictorUnavailable("simulated predictor has no target for query '" + query.id +
                                   "'");
    }
    const std::uint64_t id_hash = hash_string(query.id);

    // Anchors in full-image coordinates.
    const PixelCoord target_global = center_of_bbox(*gt);
    std::optional<PixelCoord> distractor_global;
    if (cfg_.distractor_rate > 0.0) {
        Rng placement(stream_key(cfg_.rng_seed, id_hash, 0xD157AC70ULL));
        const double angle = placement.uniform(0.0, 2.0 * std::numbers::pi);
        const double radius = cfg_.distractor_offset_frac * max_side(query.dims);
        distractor_global = clamp_to({target_global.x + radius * std::cos(angle),
                                      target_global.y + radius * std::sin(angle)},
                                     query.dims);
    }

    const auto into_frame = [&](const std::optional<PixelCoord>& p) -> std::optional<PixelCoord> {
        if (!p) return std::nullopt;
        if (!query.region) return p;
        if (!point_in_bbox(*p, query.region->bounds())) return std::nullopt;
        return to_local(*p, *query.region);
    };
    const auto target = into_frame(target_global);
    const auto distractor = into_frame(distractor_global);
    const ImageDims frame = query.frame();
    const std::uint64_t rkey = region_key(query.region);

    std::vector<SampleSlot> slots;
    slots.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(stream_key(cfg_.rng_seed, id_hash, rkey, static_cast<std::uint64_t>(i)));
        auto s = make_sample(draw_point(target, distractor, frame, cfg_, temperature, rng));
        slots.push_back(SampleSlot{s.raw, std::move(s)});
    }
    return slots;
}

}  // namespace grounder
