#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gravit/image.hpp"

namespace gravit {

enum class Experiment { A, B, C, S };
enum class Role { train, val };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

// Training-set recipe. A = C21, B = J24, C = C21+J24, S = C21 reduced to the
// J24 sample size (18,660 per class).
struct DatasetSpec {
    Experiment experiment = Experiment::A;
    uint64_t seed = 0;
    double val_fraction_for_B = 0.2;
};

enum class TestId { a, b, c, d, e, f, g, h, i, j, k, l };

std::string to_string(TestId id);
TestId test_id_from_string(const std::string& s);

struct TestSetComposition {
    TestId id;
    std::vector<std::string> lens_pools;
    std::vector<std::string> nonlens_pools;
    long lens_count = 0;
    long nonlens_count = 0;
    long total = 0;
};

// The 12 rows of the common test sample, a through l.
const std::array<TestSetComposition, 12>& test_table();
const TestSetComposition& test_composition(TestId id);

// Expected per-pool sizes of the common test sample.
long expected_pool_size(const std::string& pool);

// One manifest record. id is stable: "<path>#<row>" where row is the
// 0-based line index within the pool manifest.
struct SampleRef {
    std::string path;  // relative to the data root
    int label = 0;     // 0 non-lens, 1 lens
    std::string pool;
    std::string id;
};

struct LabeledDataset {
    std::vector<SampleRef> samples;
    std::variant<DatasetSpec, TestSetComposition> provenance;

    long count_label(int label) const;
    size_t size() const { return samples.size(); }
};

// Directory with a manifests/ subdirectory, one line-oriented manifest per
// pool: "<path>\t<label>\t<pool>". Known pools: c21_train, c21_val, j24,
// L1..L4, N1..N5.
class DataRoot {
public:
    explicit DataRoot(std::string root);

    // Reads and validates a pool manifest. Throws IngestError::missing_pool
    // when the manifest does not exist.
    std::vector<SampleRef> load_pool(const std::string& pool) const;

    std::string resolve(const std::string& relative) const;
    const std::string& root() const { return root_; }

    std::string manifest_path(const std::string& pool) const;

private:
    std::string root_;
};

void write_manifest(const std::string& path, const std::vector<SampleRef>& entries);

std::pair<LabeledDataset, LabeledDataset> build_training_set(const DataRoot& data,
                                                             const DatasetSpec& spec);

LabeledDataset build_test_set(const DataRoot& data, TestId id);

// Loads a sample's pixels and maps bands to RGB order.
RgbImage load_sample_rgb(const DataRoot& data, const SampleRef& ref);

// Seed-stable Fisher-Yates; avoids stdlib distribution differences.
template <typename T, typename Rng>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = size_t(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace gravit
