#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gravit::fits {

// Raw primary-HDU image array. Axis order follows the FITS convention:
// dims[0] = NAXIS1 (fastest-varying, x), dims[1] = NAXIS2 (y), dims[2] = NAXIS3.
// data is stored with axis 1 fastest, i.e. data[((k*dims[1]) + j)*dims[0] + i].
struct RawImage {
    std::vector<long> dims;
    std::vector<double> data;
    int bitpix = 0;
};

RawImage read_image(const std::string& path);

// Writes a single-HDU image cube, planes x height x width, plane slowest.
// bitpix must be -32 or -64.
void write_cube(const std::string& path, const std::vector<double>& data,
                int width, int height, int planes, int bitpix = -32);

}  // namespace gravit::fits
