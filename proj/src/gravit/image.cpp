#include "gravit/image.hpp"

#include <fmt/format.h>

#include "gravit/errors.hpp"
#include "gravit/fits.hpp"

namespace gravit {

namespace {
bool allowed_side(int s) { return s == 64 || s == 72 || s == 101; }
}

ImageCube ImageCube::make(std::vector<double> pixels, int side, std::string source_id) {
    if (!allowed_side(side)) {
        throw IngestError(IngestError::Code::bad_side,
                          fmt::format("{}: side {} not in {{64, 72, 101}}", source_id, side));
    }
    if (pixels.size() != 3 * size_t(side) * size_t(side)) {
        throw IngestError(IngestError::Code::wrong_plane_count,
                          fmt::format("{}: pixel buffer does not hold 3 {}x{} planes",
                                      source_id, side, side));
    }
    ImageCube cube;
    cube.pixels = std::move(pixels);
    cube.side_px = side;
    cube.source_id = std::move(source_id);
    return cube;
}

ImageCube load_fits_cube(const std::string& path) {
    fits::RawImage raw = fits::read_image(path);
    if (raw.dims.size() != 3 || raw.dims[2] != 3) {
        throw IngestError(
            IngestError::Code::wrong_plane_count,
            fmt::format("{}: expected a 3-plane cube, got {} axes (NAXIS3={})", path,
                        raw.dims.size(), raw.dims.size() == 3 ? raw.dims[2] : -1));
    }
    if (raw.dims[0] != raw.dims[1]) {
        throw IngestError(IngestError::Code::non_square_planes,
                          fmt::format("{}: planes are {}x{}, not square", path,
                                      raw.dims[0], raw.dims[1]));
    }
    // RawImage is already plane-major with x fastest, matching ImageCube layout.
    return ImageCube::make(std::move(raw.data), int(raw.dims[0]), path);
}

RgbImage cube_to_rgb(const ImageCube& cube) {
    const int s = cube.side_px;
    RgbImage rgb;
    rgb.side_px = s;
    rgb.pixels.resize(size_t(s) * s * 3);
    // (R, G, B) <- bands (i, r, g); band planes are ordered (g, r, i).
    constexpr int band_for_channel[3] = {2, 1, 0};
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            for (int c = 0; c < 3; ++c) {
                rgb.at(y, x, c) = cube.at(band_for_channel[c], y, x);
            }
        }
    }
    return rgb;
}

ImageCube rgb_to_cube(const RgbImage& rgb, const std::string& source_id) {
    const int s = rgb.side_px;
    std::vector<double> planes(size_t(s) * s * 3);
    constexpr int band_for_channel[3] = {2, 1, 0};
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            for (int c = 0; c < 3; ++c) {
                planes[(size_t(band_for_channel[c]) * s + y) * s + x] = rgb.at(y, x, c);
            }
        }
    }
    return ImageCube::make(std::move(planes), s, source_id);
}

}  // namespace gravit
