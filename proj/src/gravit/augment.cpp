#include "gravit/augment.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gravit/errors.hpp"
#include "gravit/rng.hpp"

namespace gravit {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sample_clamped(const RgbImage& img, double x, double y, int c) {
    const int s = img.side_px;
    x = std::clamp(x, 0.0, double(s - 1));
    y = std::clamp(y, 0.0, double(s - 1));
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    int x1 = std::min(x0 + 1, s - 1), y1 = std::min(y0 + 1, s - 1);
    double fx = x - x0, fy = y - y0;
    return img.at(y0, x0, c) * (1 - fx) * (1 - fy) + img.at(y0, x1, c) * fx * (1 - fy) +
           img.at(y1, x0, c) * (1 - fx) * fy + img.at(y1, x1, c) * fx * fy;
}

double sample_zero_fill(const RgbImage& img, double x, double y, int c) {
    const int s = img.side_px;
    if (x < -1.0 || y < -1.0 || x > double(s) || y > double(s)) return 0.0;
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    double fx = x - x0, fy = y - y0;
    auto px = [&](int yy, int xx) -> double {
        if (xx < 0 || yy < 0 || xx >= s || yy >= s) return 0.0;
        return img.at(yy, xx, c);
    };
    return px(y0, x0) * (1 - fx) * (1 - fy) + px(y0, x0 + 1) * fx * (1 - fy) +
           px(y0 + 1, x0) * (1 - fx) * fy + px(y0 + 1, x0 + 1) * fx * fy;
}

// Solves A x = b for an 8x8 system in place (partial pivoting).
void solve8(double A[8][8], double b[8], double x[8]) {
    int perm[8];
    for (int i = 0; i < 8; ++i) perm[i] = i;
    for (int col = 0; col < 8; ++col) {
        int piv = col;
        for (int r = col + 1; r < 8; ++r) {
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        }
        if (std::abs(A[piv][col]) < 1e-12) throw Error("perspective: singular homography");
        std::swap_ranges(A[col], A[col] + 8, A[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < 8; ++r) {
            double f = A[r][col] / A[col][col];
            for (int c = col; c < 8; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 7; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < 8; ++c) acc -= A[r][c] * x[c];
        x[r] = acc / A[r][r];
    }
}

// Homography h (8 params, h22 = 1) with h(src_i) = dst_i for 4 point pairs.
std::array<double, 8> fit_homography(const std::array<std::array<double, 2>, 4>& src,
                                     const std::array<std::array<double, 2>, 4>& dst) {
    double A[8][8] = {};
    double b[8] = {};
    for (int i = 0; i < 4; ++i) {
        double sx = src[i][0], sy = src[i][1];
        double dx = dst[i][0], dy = dst[i][1];
        double* r0 = A[2 * i];
        r0[0] = sx; r0[1] = sy; r0[2] = 1; r0[6] = -sx * dx; r0[7] = -sy * dx;
        b[2 * i] = dx;
        double* r1 = A[2 * i + 1];
        r1[3] = sx; r1[4] = sy; r1[5] = 1; r1[6] = -sx * dy; r1[7] = -sy * dy;
        b[2 * i + 1] = dy;
    }
    std::array<double, 8> h;
    solve8(A, b, h.data());
    return h;
}

std::array<double, 2> apply_homography(const std::array<double, 8>& h, double x,
                                       double y) {
    double w = h[6] * x + h[7] * y + 1.0;
    return {(h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w};
}

RgbImage blank_like(int side) {
    RgbImage out;
    out.side_px = side;
    out.pixels.assign(size_t(side) * side * 3, 0.0);
    return out;
}

}  // namespace

NormalizationStats::NormalizationStats(std::array<double, 3> mu_,
                                       std::array<double, 3> sigma_)
    : mu(mu_), sigma(sigma_) {
    for (double s : sigma) {
        if (!(s > 0.0)) {
            throw Error(fmt::format("NormalizationStats: sigma {} must be > 0", s));
        }
    }
}

void AugmentConfig::validate() const {
    if (p_apply < 0.0 || p_apply > 1.0) {
        throw Error(fmt::format("AugmentConfig: p_apply {} outside [0,1]", p_apply));
    }
    if (target_side <= 0 || blur_kernel <= 0 || blur_kernel % 2 == 0) {
        throw Error("AugmentConfig: target_side must be positive, blur kernel odd");
    }
    if (crop_scale_lo > crop_scale_hi || blur_sigma_lo > blur_sigma_hi) {
        throw Error("AugmentConfig: empty parameter interval");
    }
}

RgbImage minmax_scale(const RgbImage& img) {
    double lo = img.pixels.empty() ? 0.0 : img.pixels[0];
    double hi = lo;
    for (double p : img.pixels) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    RgbImage out = img;
    if (hi > lo) {
        double inv = 1.0 / (hi - lo);
        for (double& p : out.pixels) p = (p - lo) * inv;
    } else {
        for (double& p : out.pixels) p = 0.0;  // constant image
    }
    return out;
}

RgbImage resize_bilinear(const RgbImage& img, int target_side) {
    if (img.side_px == target_side) return img;
    RgbImage out = blank_like(target_side);
    double scale = double(img.side_px) / double(target_side);
    for (int y = 0; y < target_side; ++y) {
        double sy = (y + 0.5) * scale - 0.5;
        for (int x = 0; x < target_side; ++x) {
            double sx = (x + 0.5) * scale - 0.5;
            for (int c = 0; c < 3; ++c) {
                out.at(y, x, c) = sample_clamped(img, sx, sy, c);
            }
        }
    }
    return out;
}

RgbImage hflip(const RgbImage& img) {
    const int s = img.side_px;
    RgbImage out = blank_like(s);
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, s - 1 - x, c);
        }
    }
    return out;
}

RgbImage vflip(const RgbImage& img) {
    const int s = img.side_px;
    RgbImage out = blank_like(s);
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(s - 1 - y, x, c);
        }
    }
    return out;
}

RgbImage rotate(const RgbImage& img, double degrees) {
    const int s = img.side_px;
    RgbImage out = blank_like(s);
    double th = degrees * kPi / 180.0;
    double ct = std::cos(th), st = std::sin(th);
    double cx = (s - 1) / 2.0, cy = (s - 1) / 2.0;
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            // inverse rotation of the output grid
            double dx = x - cx, dy = y - cy;
            double sx = ct * dx + st * dy + cx;
            double sy = -st * dx + ct * dy + cy;
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = sample_zero_fill(img, sx, sy, c);
        }
    }
    return out;
}

RgbImage resized_crop(const RgbImage& img, double scale, double rx, double ry,
                      int target_side) {
    const int s = img.side_px;
    double area = std::min(scale, 1.0);
    int crop = std::clamp(int(std::lround(s * std::sqrt(area))), 1, s);
    int max_off = s - crop;
    int x0 = int(std::lround(rx * max_off));
    int y0 = int(std::lround(ry * max_off));

    RgbImage window = blank_like(crop);
    for (int y = 0; y < crop; ++y) {
        for (int x = 0; x < crop; ++x) {
            for (int c = 0; c < 3; ++c) window.at(y, x, c) = img.at(y0 + y, x0 + x, c);
        }
    }
    return resize_bilinear(window, target_side);
}

RgbImage perspective_warp(const RgbImage& img,
                          const std::array<std::array<double, 2>, 4>& dst_corners) {
    const int s = img.side_px;
    const double m = double(s - 1);
    std::array<std::array<double, 2>, 4> src = {{{0, 0}, {m, 0}, {m, m}, {0, m}}};
    // Inverse map: fit dst -> src and pull samples.
    std::array<double, 8> h = fit_homography(dst_corners, src);
    RgbImage out = blank_like(s);
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            auto [sx, sy] = apply_homography(h, double(x), double(y));
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = sample_zero_fill(img, sx, sy, c);
        }
    }
    return out;
}

RgbImage gaussian_blur(const RgbImage& img, int kernel, double sigma) {
    const int s = img.side_px;
    const int half = kernel / 2;
    std::vector<double> k(size_t(kernel));
    double sum = 0.0;
    for (int i = 0; i < kernel; ++i) {
        double d = i - half;
        k[size_t(i)] = std::exp(-0.5 * d * d / (sigma * sigma));
        sum += k[size_t(i)];
    }
    for (double& x : k) x /= sum;

    auto reflect = [&](int i) {
        if (i < 0) i = -i - 1;
        if (i >= s) i = 2 * s - 1 - i;
        return std::clamp(i, 0, s - 1);
    };

    RgbImage tmp = blank_like(s), out = blank_like(s);
    for (int y = 0; y < s; ++y) {  // horizontal pass
        for (int x = 0; x < s; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int t = -half; t <= half; ++t) {
                    acc += k[size_t(t + half)] * img.at(y, reflect(x + t), c);
                }
                tmp.at(y, x, c) = acc;
            }
        }
    }
    for (int y = 0; y < s; ++y) {  // vertical pass
        for (int x = 0; x < s; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int t = -half; t <= half; ++t) {
                    acc += k[size_t(t + half)] * tmp.at(reflect(y + t), x, c);
                }
                out.at(y, x, c) = acc;
            }
        }
    }
    return out;
}

Tensor tensorize(const RgbImage& img) {
    const int s = img.side_px;
    Tensor t({3, s, s});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) t.at(c, y, x) = img.at(y, x, c);
        }
    }
    return t;
}

void normalize_inplace(Tensor& chw, const NormalizationStats& stats) {
    const int64_t hw = chw.dim(1) * chw.dim(2);
    for (int c = 0; c < 3; ++c) {
        double mu = stats.mu[size_t(c)], inv = 1.0 / stats.sigma[size_t(c)];
        for (int64_t i = 0; i < hw; ++i) {
            double& p = chw.v[size_t(c * hw + i)];
            p = (p - mu) * inv;
        }
    }
}

Tensor normalize(const Tensor& chw, const NormalizationStats& stats) {
    Tensor out = chw;
    normalize_inplace(out, stats);
    return out;
}

Tensor denormalize(const Tensor& chw, const NormalizationStats& stats) {
    Tensor out = chw;
    const int64_t hw = out.dim(1) * out.dim(2);
    for (int c = 0; c < 3; ++c) {
        double mu = stats.mu[size_t(c)], s = stats.sigma[size_t(c)];
        for (int64_t i = 0; i < hw; ++i) {
            double& p = out.v[size_t(c * hw + i)];
            p = p * s + mu;
        }
    }
    return out;
}

Tensor train_transform(const RgbImage& img, const AugmentConfig& cfg,
                       const NormalizationStats& stats, std::mt19937_64& rng,
                       TransformTrace* trace) {
    cfg.validate();
    RgbImage work = cfg.rescale_input ? minmax_scale(img) : img;
    work = resize_bilinear(work, cfg.target_side);

    TransformTrace local;
    if (rand_bernoulli(rng, cfg.p_apply)) {
        local.hflip = true;
        work = hflip(work);
    }
    if (rand_bernoulli(rng, cfg.p_apply)) {
        local.vflip = true;
        work = vflip(work);
    }
    if (rand_bernoulli(rng, cfg.p_apply)) {
        local.rotation = true;
        work = rotate(work, rand_uniform(rng, -cfg.rotation_deg, cfg.rotation_deg));
    }
    if (rand_bernoulli(rng, cfg.p_apply)) {
        local.crop = true;
        double scale = rand_uniform(rng, cfg.crop_scale_lo, cfg.crop_scale_hi);
        double rx = rand_uniform(rng, 0.0, 1.0);
        double ry = rand_uniform(rng, 0.0, 1.0);
        work = resized_crop(work, scale, rx, ry, cfg.target_side);
    }
    if (rand_bernoulli(rng, cfg.p_apply)) {
        local.perspective = true;
        const double m = double(cfg.target_side - 1);
        const double dmax = cfg.perspective_distortion * m / 2.0;
        auto d = [&]() { return rand_uniform(rng, 0.0, dmax); };
        // each corner is pulled inward by an independent random amount
        std::array<std::array<double, 2>, 4> corners = {{
            {0 + d(), 0 + d()},
            {m - d(), 0 + d()},
            {m - d(), m - d()},
            {0 + d(), m - d()},
        }};
        work = perspective_warp(work, corners);
    }
    if (rand_bernoulli(rng, cfg.p_apply)) {
        local.blur = true;
        double sigma = rand_uniform(rng, cfg.blur_sigma_lo, cfg.blur_sigma_hi);
        work = gaussian_blur(work, cfg.blur_kernel, sigma);
    }
    if (trace) *trace = local;

    Tensor out = tensorize(work);
    normalize_inplace(out, stats);
    return out;
}

Tensor eval_transform(const RgbImage& img, const NormalizationStats& stats,
                      int target_side, bool rescale_input) {
    RgbImage work = rescale_input ? minmax_scale(img) : img;
    work = resize_bilinear(work, target_side);
    Tensor out = tensorize(work);
    normalize_inplace(out, stats);
    return out;
}

}  // namespace gravit
