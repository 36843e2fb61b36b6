#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "gravit/image.hpp"
#include "gravit/tensor.hpp"

namespace gravit {

// ImageNet channel statistics in RGB order.
struct NormalizationStats {
    std::array<double, 3> mu{0.485, 0.456, 0.406};
    std::array<double, 3> sigma{0.229, 0.224, 0.225};

    NormalizationStats() = default;
    NormalizationStats(std::array<double, 3> mu_, std::array<double, 3> sigma_);
};

struct AugmentConfig {
    int target_side = 224;
    double p_apply = 0.5;
    double rotation_deg = 30.0;          // [-30, 30]
    double crop_scale_lo = 0.8;
    double crop_scale_hi = 1.2;          // area fractions > 1 clamp to the full image
    double perspective_distortion = 0.4;
    int blur_kernel = 5;
    double blur_sigma_lo = 0.1;
    double blur_sigma_hi = 2.0;
    uint64_t seed = 0;
    // FITS fluxes are unbounded; map each image linearly onto [0,1] before
    // geometry and normalization.
    bool rescale_input = true;

    void validate() const;
};

// Which augmentations fired on one invocation.
struct TransformTrace {
    bool hflip = false;
    bool vflip = false;
    bool rotation = false;
    bool crop = false;
    bool perspective = false;
    bool blur = false;
};

// --- primitives (public so the involution/fire-rate properties can target
// them directly) -----------------------------------------------------------

RgbImage minmax_scale(const RgbImage& img);
RgbImage resize_bilinear(const RgbImage& img, int target_side);
RgbImage hflip(const RgbImage& img);
RgbImage vflip(const RgbImage& img);
RgbImage rotate(const RgbImage& img, double degrees);  // zero fill outside
// scale is a crop-area fraction; values >= 1 reduce to the identity crop.
RgbImage resized_crop(const RgbImage& img, double scale, double rx, double ry,
                      int target_side);
// Warps so the image corners land on dst_corners (x, y), zero fill outside.
RgbImage perspective_warp(const RgbImage& img,
                          const std::array<std::array<double, 2>, 4>& dst_corners);
RgbImage gaussian_blur(const RgbImage& img, int kernel, double sigma);

Tensor tensorize(const RgbImage& img);  // HWC -> CHW
void normalize_inplace(Tensor& chw, const NormalizationStats& stats);
Tensor normalize(const Tensor& chw, const NormalizationStats& stats);
Tensor denormalize(const Tensor& chw, const NormalizationStats& stats);

// --- pipelines -------------------------------------------------------------

// Table order: resize, hflip, vflip, rotation, resized crop, perspective,
// gaussian blur, tensorize, normalize. Each augmentation draws its own
// Bernoulli(p_apply).
Tensor train_transform(const RgbImage& img, const AugmentConfig& cfg,
                       const NormalizationStats& stats, std::mt19937_64& rng,
                       TransformTrace* trace = nullptr);

Tensor eval_transform(const RgbImage& img, const NormalizationStats& stats,
                      int target_side = 224, bool rescale_input = true);

}  // namespace gravit
