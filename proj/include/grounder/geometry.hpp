#pragma once

// Coordinate algebra for grounding: pixel/normalized points, boxes, regions
// of interest and the translation maps between a full image and a crop.
//
// Every coordinate is a double. Regions are placed on whole-pixel origins so
// that mapping a point into a crop and back is exact in floating point.

#include <cstdint>

namespace grounder {

struct PixelCoord {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Coordinates divided by the frame size: u = x / W, v = y / H.
struct NormCoord {
    double u = 0.0;
    double v = 0.0;

    friend bool operator==(const NormCoord&, const NormCoord&) = default;
};

struct ImageDims {
    std::int64_t width = 1;
    std::int64_t height = 1;

    friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

/// Axis-aligned box [x0, x1] x [y0, y1] in pixels.
struct BBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const noexcept { return x1 - x0; }
    double height() const noexcept { return y1 - y0; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// A rectangular crop of a parent image: top-left origin plus size.
struct RoI {
    PixelCoord origin;
    ImageDims dims;

    BBox bounds() const noexcept {
        return {origin.x, origin.y, origin.x + static_cast<double>(dims.width),
                origin.y + static_cast<double>(dims.height)};
    }

    friend bool operator==(const RoI&, const RoI&) = default;
};

bool is_valid(const ImageDims& dims) noexcept;
bool is_valid(const BBox& box) noexcept;
bool is_finite(const PixelCoord& p) noexcept;

/// True when `box` is well formed and lies inside [0,W] x [0,H].
bool bbox_within(const BBox& box, const ImageDims& img) noexcept;

/// True when 0 <= x <= W and 0 <= y <= H.
bool point_within(const PixelCoord& p, const ImageDims& img) noexcept;

/// Edges are inclusive: a point on the border of `b` is inside.
bool point_in_bbox(const PixelCoord& p, const BBox& b) noexcept;

PixelCoord center_of_bbox(const BBox& b) noexcept;

NormCoord normalize(const PixelCoord& p, const ImageDims& frame) noexcept;
PixelCoord denormalize(const NormCoord& n, const ImageDims& frame) noexcept;

/// Fixed-size region centered on `center`, shifted (never shrunk) to fit
/// inside the image. An axis where the image is smaller than the request is
/// spanned entirely. The origin is rounded to the nearest whole pixel.
RoI make_roi(const PixelCoord& center, const ImageDims& roi_dims, const ImageDims& img);

/// Full-image point to crop-local point. Throws OutOfRegion outside the crop.
PixelCoord to_local(const PixelCoord& p_global, const RoI& roi);

/// Crop-local point to full-image point. Throws OutOfRegion outside the crop.
PixelCoord to_global(const PixelCoord& p_local, const RoI& roi);

/// Random aspect-preserving crop of `img` that contains `gt` and covers at
/// most `max_area_frac` of the image area.
///
/// The crop scale is drawn so that the area fraction is uniform between the
/// smallest feasible fraction and `max_area_frac`; the placement is then
/// uniform over the whole-pixel origins that keep `gt` inside. Crop sides are
/// whole pixels, so the aspect ratio matches the image up to one pixel of
/// rounding per axis. Deterministic in `rng_seed`.
///
/// Throws Infeasible when even the smallest containing crop is too large,
/// InvalidConfig on a bad fraction or a box outside the image.
RoI sample_training_crop(const BBox& gt, const ImageDims& img, double max_area_frac,
                         std::uint64_t rng_seed);

}  // namespace grounder
