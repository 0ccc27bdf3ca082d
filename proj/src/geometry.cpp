#include "grounder/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grounder/errors.hpp"
#include "grounder/rng.hpp"

namespace grounder {

bool is_valid(const ImageDims& dims) noexcept { return dims.width >= 1 && dims.height >= 1; }

bool is_valid(const BBox& box) noexcept {
    return std::isfinite(box.x0) && std::isfinite(box.y0) && std::isfinite(box.x1) &&
           std::isfinite(box.y1) && box.x0 <= box.x1 && box.y0 <= box.y1;
}

bool is_finite(const PixelCoord& p) noexcept { return std::isfinite(p.x) && std::isfinite(p.y); }

bool bbox_within(const BBox& box, const ImageDims& img) noexcept {
    return is_valid(box) && box.x0 >= 0.0 && box.y0 >= 0.0 &&
           box.x1 <= static_cast<double>(img.width) && box.y1 <= static_cast<double>(img.height);
}

bool point_within(const PixelCoord& p, const ImageDims& img) noexcept {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= static_cast<double>(img.width) &&
           p.y <= static_cast<double>(img.height);
}

bool point_in_bbox(const PixelCoord& p, const BBox& b) noexcept {
    return b.x0 <= p.x && p.x <= b.x1 && b.y0 <= p.y && p.y <= b.y1;
}

PixelCoord center_of_bbox(const BBox& b) noexcept {
    return {(b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0};
}

NormCoord normalize(const PixelCoord& p, const ImageDims& frame) noexcept {
    return {p.x / static_cast<double>(frame.width), p.y / static_cast<double>(frame.height)};
}

PixelCoord denormalize(const NormCoord& n, const ImageDims& frame) noexcept {
    return {n.u * static_cast<double>(frame.width), n.v * static_cast<double>(frame.height)};
}

namespace {

// Origin along one axis for a window of `want` pixels centered on `c`.
std::pair<double, std::int64_t> place_axis(double c, std::int64_t want, std::int64_t extent) {
    if (want >= extent) {
        return {0.0, extent};
    }
    const double ideal = std::floor(c - static_cast<double>(want) / 2.0 + 0.5);
    const double hi = static_cast<double>(extent - want);
    return {std::clamp(ideal, 0.0, hi), want};
}

}  // namespace

RoI make_roi(const PixelCoord& center, const ImageDims& roi_dims, const ImageDims& img) {
    if (!is_valid(img) || !is_valid(roi_dims)) {
        throw InvalidConfig("make_roi: image and region sizes must be positive");
    }
    const auto [ox, w] = place_axis(center.x, roi_dims.width, img.width);
    const auto [oy, h] = place_axis(center.y, roi_dims.height, img.height);
    return RoI{{ox, oy}, {w, h}};
}

PixelCoord to_local(const PixelCoord& p_global, const RoI& roi) {
    if (!point_in_bbox(p_global, roi.bounds())) {
        throw OutOfRegion("point (" + std::to_string(p_global.x) + ", " +
                          std::to_string(p_global.y) + ") lies outside the region");
    }
    return {p_global.x - roi.origin.x, p_global.y - roi.origin.y};
}

PixelCoord to_global(const PixelCoord& p_local, const RoI& roi) {
    if (!point_within(p_local, roi.dims)) {
        throw OutOfRegion("local point (" + std::to_string(p_local.x) + ", " +
                          std::to_string(p_local.y) + ") lies outside the crop");
    }
    return {p_local.x + roi.origin.x, p_local.y + roi.origin.y};
}

RoI sample_training_crop(const BBox& gt, const ImageDims& img, double max_area_frac,
                         std::uint64_t rng_seed) {
    if (!(max_area_frac > 0.0 && max_area_frac <= 1.0)) {
        throw InvalidConfig("max_area_frac must lie in (0, 1]");
    }
    if (!is_valid(img) || !bbox_within(gt, img)) {
        throw InvalidConfig("ground-truth box must lie inside the image");
    }

    const auto W = static_cast<double>(img.width);
    const auto H = static_cast<double>(img.height);

    // Whole-pixel span a crop needs along each axis to cover the box.
    const auto span_x = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(gt.x1) - std::floor(gt.x0)));
    const auto span_y = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(gt.y1) - std::floor(gt.y0)));

    const double min_scale =
        std::max(static_cast<double>(span_x) / W, static_cast<double>(span_y) / H);
    const double min_frac = min_scale * min_scale;
    const double area_budget = max_area_frac * W * H;
    if (min_frac > max_area_frac ||
        static_cast<double>(span_x) * static_cast<double>(span_y) > area_budget) {
        throw Infeasible("no crop of at most " + std::to_string(max_area_frac) +
                         " of the image area can contain the box");
    }

    Rng rng(rng_seed);
    const double frac = rng.uniform(min_frac, max_area_frac);
    const double scale = std::sqrt(frac);

    auto cw = std::max(span_x, static_cast<std::int64_t>(std::floor(scale * W)));
    auto ch = std::max(span_y, static_cast<std::int64_t>(std::floor(scale * H)));
    cw = std::min(cw, img.width);
    ch = std::min(ch, img.height);
    // Lifting one side to its span can overshoot the budget by rounding; give
    // back pixels on the side with slack.
    while (static_cast<double>(cw) * static_cast<double>(ch) > area_budget) {
        if (cw > span_x && (ch == span_y || cw * img.height >= ch * img.width)) {
            --cw;
        } else if (ch > span_y) {
            --ch;
        } else {
            throw Infeasible("box does not fit in the area budget");
        }
    }

    const auto place = [&rng](double lo_edge, double hi_edge, std::int64_t side,
                              std::int64_t extent) {
        const auto lo = std::max<std::int64_t>(
            0, static_cast<std::int64_t>(std::ceil(hi_edge)) - side);
        const auto hi =
            std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(lo_edge)), extent - side);
        return rng.uniform_int(lo, hi);
    };
    const auto ox = place(gt.x0, gt.x1, cw, img.width);
    const auto oy = place(gt.y0, gt.y1, ch, img.height);
    return RoI{{static_cast<double>(ox), static_cast<double>(oy)}, {cw, ch}};
}

}  // namespace grounder
