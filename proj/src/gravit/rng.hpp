#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gravit {

// splitmix64; used to turn (seed, tag...) tuples into independent stream seeds.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_str(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t derive_seed(uint64_t global, uint64_t a, uint64_t b = 0) {
    return mix64(mix64(global ^ mix64(a)) ^ mix64(b));
}

inline uint64_t derive_seed(uint64_t global, std::string_view tag, uint64_t b = 0) {
    return derive_seed(global, hash_str(tag), b);
}

// Per-worker, per-sample augmentation stream.
inline std::mt19937_64 sample_rng(uint64_t global_seed, uint64_t worker_id,
                                  std::string_view sample_id) {
    return std::mt19937_64(derive_seed(global_seed, worker_id, hash_str(sample_id)));
}

inline double rand_uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline bool rand_bernoulli(std::mt19937_64& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace gravit
