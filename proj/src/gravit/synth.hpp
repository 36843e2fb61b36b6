#pragma once

#include <cstdint>
#include <string>

#include "gravit/image.hpp"

namespace gravit {

// Synthetic demo data: ring-plus-galaxy cutouts for the lens class, plain
// galaxy blobs for non-lenses, Gaussian sky noise (negative values included),
// written as 3-plane FITS cubes with pool manifests in the data-root layout.
struct SynthConfig {
    std::string out_root;
    uint64_t seed = 7;
    int side = 64;
    int train_per_class = 24;       // c21_train pool
    int val_per_class = 8;          // c21_val pool
    int j24_per_class = 10;         // j24 pool
    int distinct_test_images = 24;  // per class; test pool manifests reuse them
    bool test_pools = true;         // write the full-size test pool manifests
};

ImageCube synth_cube(uint64_t seed, bool lens, int side);

void generate_synthetic_root(const SynthConfig& cfg);

// Manifests with paper-scale pool counts and placeholder paths (no pixel
// files); enough for every dataset-assembly bookkeeping check.
void write_paper_scale_manifests(const std::string& out_root);

}  // namespace gravit
