#include "gravit/synth.hpp"

#include <cmath>
#include <filesystem>

#include <fmt/format.h>

#include "gravit/dataset.hpp"
#include "gravit/fits.hpp"
#include "gravit/rng.hpp"

namespace gravit {

namespace {

namespace fs = std::filesystem;

// band amplitudes loosely mimic a red central galaxy with a bluer arc
constexpr double kGalaxyAmp[3] = {0.6, 0.9, 1.2};  // g, r, i
constexpr double kRingAmp[3] = {0.9, 0.7, 0.5};

}  // namespace

ImageCube synth_cube(uint64_t seed, bool lens, int side) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);

    const double c = (side - 1) / 2.0;
    const double r_gal = side * rand_uniform(rng, 0.08, 0.14);
    const double r_ring = side * rand_uniform(rng, 0.22, 0.32);
    const double ring_w = side * 0.04;
    const double cx = c + rand_uniform(rng, -2.0, 2.0);
    const double cy = c + rand_uniform(rng, -2.0, 2.0);

    std::vector<double> pixels(size_t(3) * side * side);
    for (int band = 0; band < 3; ++band) {
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                double dx = x - cx, dy = y - cy;
                double r = std::sqrt(dx * dx + dy * dy);
                double v = kGalaxyAmp[band] * std::exp(-0.5 * (r / r_gal) * (r / r_gal));
                if (lens) {
                    double d = (r - r_ring) / ring_w;
                    v += kRingAmp[band] * std::exp(-0.5 * d * d);
                }
                v += noise(rng);
                pixels[(size_t(band) * side + y) * side + x] = float(v);
            }
        }
    }
    return ImageCube::make(std::move(pixels), side, fmt::format("synth-{}", seed));
}

namespace {

// writes n cubes per class into dir, returns relative paths per class label
std::vector<SampleRef> write_class_pool(const std::string& root, const std::string& pool,
                                        int label, int count, int side, uint64_t seed,
                                        const std::string& subdir) {
    fs::create_directories(fs::path(root) / subdir);
    std::vector<SampleRef> refs;
    for (int i = 0; i < count; ++i) {
        ImageCube cube = synth_cube(derive_seed(seed, pool, uint64_t(i)), label == 1, side);
        std::string rel = fmt::format("{}/{}_{:05}.fits", subdir, pool, i);
        fits::write_cube((fs::path(root) / rel).string(), cube.pixels, side, side, 3);
        SampleRef ref;
        ref.path = rel;
        ref.label = label;
        ref.pool = pool;
        refs.push_back(std::move(ref));
    }
    return refs;
}

// manifest rows cycling over a fixed set of already-written image paths
std::vector<SampleRef> cycled_pool(const std::vector<std::string>& paths,
                                   const std::string& pool, int label, long count) {
    std::vector<SampleRef> refs;
    refs.reserve(size_t(count));
    for (long i = 0; i < count; ++i) {
        SampleRef ref;
        ref.path = paths[size_t(i) % paths.size()];
        ref.label = label;
        ref.pool = pool;
        refs.push_back(std::move(ref));
    }
    return refs;
}

}  // namespace

void generate_synthetic_root(const SynthConfig& cfg) {
    const std::string& root = cfg.out_root;
    fs::create_directories(fs::path(root) / "manifests");

    auto write_pool_manifest = [&](const std::string& pool,
                                   std::vector<SampleRef> refs) {
        DataRoot data(root);
        write_manifest(data.manifest_path(pool), refs);
    };

    // training pools: both classes interleaved in one manifest
    auto mixed_pool = [&](const std::string& pool, int per_class, const std::string& dir,
                          uint64_t salt) {
        auto lens = write_class_pool(root, pool + "_lens", 1, per_class, cfg.side,
                                     derive_seed(cfg.seed, salt, 1), dir);
        auto non = write_class_pool(root, pool + "_nonlens", 0, per_class, cfg.side,
                                    derive_seed(cfg.seed, salt, 0), dir);
        std::vector<SampleRef> all;
        for (int i = 0; i < per_class; ++i) {
            lens[size_t(i)].pool = pool;
            non[size_t(i)].pool = pool;
            all.push_back(lens[size_t(i)]);
            all.push_back(non[size_t(i)]);
        }
        write_pool_manifest(pool, all);
    };

    mixed_pool("c21_train", cfg.train_per_class, "c21", 11);
    mixed_pool("c21_val", cfg.val_per_class, "c21", 12);
    mixed_pool("j24", cfg.j24_per_class, "j24", 13);

    if (!cfg.test_pools) return;

    // distinct test images, reused across the full-size pool manifests
    std::vector<std::string> lens_paths, nonlens_paths;
    for (int i = 0; i < cfg.distinct_test_images; ++i) {
        ImageCube cube =
            synth_cube(derive_seed(cfg.seed, "test_lens", uint64_t(i)), true, cfg.side);
        std::string rel = fmt::format("test/lens_{:04}.fits", i);
        fs::create_directories(fs::path(root) / "test");
        fits::write_cube((fs::path(root) / rel).string(), cube.pixels, cfg.side,
                         cfg.side, 3);
        lens_paths.push_back(rel);

        ImageCube nc = synth_cube(derive_seed(cfg.seed, "test_nonlens", uint64_t(i)),
                                  false, cfg.side);
        rel = fmt::format("test/nonlens_{:04}.fits", i);
        fits::write_cube((fs::path(root) / rel).string(), nc.pixels, cfg.side, cfg.side,
                         3);
        nonlens_paths.push_back(rel);
    }

    for (const std::string& pool : {"L1", "L2", "L3", "L4"}) {
        write_pool_manifest(pool, cycled_pool(lens_paths, pool, 1,
                                              expected_pool_size(pool)));
    }
    for (const std::string& pool : {"N1", "N2", "N3", "N4", "N5"}) {
        write_pool_manifest(pool, cycled_pool(nonlens_paths, pool, 0,
                                              expected_pool_size(pool)));
    }
}

void write_paper_scale_manifests(const std::string& out_root) {
    fs::create_directories(fs::path(out_root) / "manifests");
    DataRoot data(out_root);

    auto synth_refs = [](const std::string& pool, long per_class) {
        std::vector<SampleRef> refs;
        refs.reserve(size_t(2 * per_class));
        for (long i = 0; i < per_class; ++i) {
            refs.push_back({fmt::format("{}/lens_{:06}.fits", pool, i), 1, pool, ""});
            refs.push_back({fmt::format("{}/non_{:06}.fits", pool, i), 0, pool, ""});
        }
        return refs;
    };

    write_manifest(data.manifest_path("c21_train"), synth_refs("c21_train", 40000));
    write_manifest(data.manifest_path("c21_val"), synth_refs("c21_val", 500));
    write_manifest(data.manifest_path("j24"), synth_refs("j24", 18660));

    for (const std::string& pool : {"L1", "L2", "L3", "L4"}) {
        std::vector<SampleRef> refs;
        for (long i = 0; i < expected_pool_size(pool); ++i) {
            refs.push_back({fmt::format("{}/{:06}.fits", pool, i), 1, pool, ""});
        }
        write_manifest(data.manifest_path(pool), refs);
    }
    for (const std::string& pool : {"N1", "N2", "N3", "N4", "N5"}) {
        std::vector<SampleRef> refs;
        for (long i = 0; i < expected_pool_size(pool); ++i) {
            refs.push_back({fmt::format("{}/{:06}.fits", pool, i), 0, pool, ""});
        }
        write_manifest(data.manifest_path(pool), refs);
    }
}

}  // namespace gravit
