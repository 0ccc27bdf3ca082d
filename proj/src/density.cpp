#include "grounder/density.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>

#include "grounder/errors.hpp"
#include "grounder/kernels.hpp"

namespace grounder {

namespace {

// Relative margin below which two scores are treated as tied, so the lowest
// index wins regardless of which kernel variant produced the scores.
constexpr double kTieMargin = 1e-12;

struct Normalized {
    std::vector<double> xs;
    std::vector<double> ys;
};

Normalized normalized_points(const SampleSet& samples) {
    const auto w = static_cast<double>(samples.frame.width);
    const auto h = static_cast<double>(samples.frame.height);
    Normalized out;
    out.xs.reserve(samples.points.size());
    out.ys.reserve(samples.points.size());
    for (const auto& p : samples.points) {
        out.xs.push_back(p.x / w);
        out.ys.push_back(p.y / h);
    }
    return out;
}

void require_samples(const SampleSet& samples) {
    if (samples.points.empty()) {
        throw EmptySampleSet();
    }
    if (!is_valid(samples.frame)) {
        throw InvalidConfig("sample set frame must have positive dimensions");
    }
}

}  // namespace

void validate(const KdeConfig& cfg) {
    if (!(cfg.variance > 0.0) || !std::isfinite(cfg.variance)) {
        throw InvalidConfig("KDE variance must be positive and finite");
    }
    if (cfg.mean_shift_max_iters < 1) {
        throw InvalidConfig("mean-shift iteration cap must be at least 1");
    }
    if (!(cfg.mean_shift_tol > 0.0)) {
        throw InvalidConfig("mean-shift tolerance must be positive");
    }
}

std::string_view to_string(AggregationStrategy s) noexcept {
    switch (s) {
        case AggregationStrategy::Center:
            return "center";
        case AggregationStrategy::Medoid:
            return "medoid";
        case AggregationStrategy::Kde:
            break;
    }
    return "kde";
}

std::optional<AggregationStrategy> parse_strategy(std::string_view name) noexcept {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "kde") return AggregationStrategy::Kde;
    if (lower == "center") return AggregationStrategy::Center;
    if (lower == "medoid") return AggregationStrategy::Medoid;
    return std::nullopt;
}

double kde_density_at(const PixelCoord& z, const SampleSet& samples, const KdeConfig& cfg) {
    require_samples(samples);
    validate(cfg);
    const auto pts = normalized_points(samples);
    const auto zn = normalize(z, samples.frame);
    const auto sums = kernels::gaussian_sums(pts.xs, pts.ys, zn.u, zn.v, 0.5 / cfg.variance);
    return sums.weight / static_cast<double>(samples.points.size());
}

PixelCoord kde_mode(const SampleSet& samples, const KdeConfig& cfg) {
    require_samples(samples);
    validate(cfg);
    const auto pts = normalized_points(samples);
    const double k = 0.5 / cfg.variance;
    const std::size_t n = pts.xs.size();

    const auto density = [&](double u, double v) {
        return kernels::gaussian_sums(pts.xs, pts.ys, u, v, k).weight;
    };

    std::size_t best_sample = 0;
    double best_sample_score = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double score = density(pts.xs[i], pts.ys[i]);
        if (score > best_sample_score * (1.0 + kTieMargin)) {
            best_sample = i;
            best_sample_score = score;
        }
    }

    // Every sample seeds a mean-shift climb; the highest summit wins. Seeding
    // only from the best sample can strand the search on a lower hill.
    std::optional<std::size_t> best_start;
    double best_u = 0.0;
    double best_v = 0.0;
    double best_score = best_sample_score;
    for (std::size_t start = 0; start < n; ++start) {
        double zu = pts.xs[start];
        double zv = pts.ys[start];
        bool moved = false;
        for (int iter = 0; iter < cfg.mean_shift_max_iters; ++iter) {
            const auto s = kernels::gaussian_sums(pts.xs, pts.ys, zu, zv, k);
            if (!(s.weight > 0.0)) {
                break;
            }
            const double nu = s.weighted_x / s.weight;
            const double nv = s.weighted_y / s.weight;
            if (std::hypot(nu - zu, nv - zv) < cfg.mean_shift_tol) {
                break;
            }
            zu = nu;
            zv = nv;
            moved = true;
        }
        if (!moved) {
            continue;  // still on its sample; covered by best_sample
        }
        const double score = density(zu, zv);
        if (score > best_score * (1.0 + kTieMargin)) {
            best_start = start;
            best_score = score;
            best_u = zu;
            best_v = zv;
        }
    }

    if (!best_start) {
        return samples.points[best_sample];
    }
    return denormalize({best_u, best_v}, samples.frame);
}

PixelCoord aggregate_center(const SampleSet& samples) {
    if (samples.points.empty()) {
        throw EmptySampleSet();
    }
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : samples.points) {
        sx += p.x;
        sy += p.y;
    }
    const auto n = static_cast<double>(samples.points.size());
    return {sx / n, sy / n};
}

PixelCoord aggregate_medoid(const SampleSet& samples) {
    if (samples.points.empty()) {
        throw EmptySampleSet();
    }
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(samples.points.size());
    ys.reserve(samples.points.size());
    for (const auto& p : samples.points) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }

    std::size_t best = 0;
    double best_sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double total = kernels::distance_sum(xs, ys, xs[i], ys[i]);
        if (i == 0 || total < best_sum * (1.0 - kTieMargin)) {
            best = i;
            best_sum = total;
        }
    }
    return samples.points[best];
}

PixelCoord aggregate(const SampleSet& samples, AggregationStrategy strategy,
                     const KdeConfig& cfg) {
    switch (strategy) {
        case AggregationStrategy::Center:
            return aggregate_center(samples);
        case AggregationStrategy::Medoid:
            return aggregate_medoid(samples);
        case AggregationStrategy::Kde:
            break;
    }
    return kde_mode(samples, cfg);
}

}  // namespace grounder
