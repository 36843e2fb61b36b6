#pragma once

#include <array>
#include <string>
#include <vector>

namespace gravit {

// Raw 3-band cutout in instrument flux units. Planes are stored band-major,
// band order fixed (g, r, i); values may be negative and are never clipped
// at ingestion.
struct ImageCube {
    std::vector<double> pixels;  // [band][y][x], 3 * side * side
    std::array<char, 3> band_order{'g', 'r', 'i'};
    std::string source_id;
    int side_px = 0;

    double at(int band, int y, int x) const {
        return pixels[(size_t(band) * side_px + y) * side_px + x];
    }

    static ImageCube make(std::vector<double> pixels, int side, std::string source_id);
};

// Channel order (R, G, B) = bands (i, r, g): increasing wavelength first.
struct RgbImage {
    std::vector<double> pixels;  // [y][x][channel], side * side * 3
    int side_px = 0;

    double at(int y, int x, int c) const {
        return pixels[(size_t(y) * side_px + x) * 3 + c];
    }
    double& at(int y, int x, int c) {
        return pixels[(size_t(y) * side_px + x) * 3 + c];
    }
};

ImageCube load_fits_cube(const std::string& path);

// Pure permutation of planes into interleaved RGB; values unchanged.
RgbImage cube_to_rgb(const ImageCube& cube);

// Inverse permutation; round-trips exactly.
ImageCube rgb_to_cube(const RgbImage& rgb, const std::string& source_id = "");

}  // namespace gravit
