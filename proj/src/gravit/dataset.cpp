#include "gravit/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "gravit/errors.hpp"
#include "gravit/rng.hpp"

namespace gravit {

namespace {

constexpr long kC21PerClass = 40000;
constexpr long kC21ValPerClass = 500;
constexpr long kJ24PerClass = 18660;
constexpr long kSPerClass = 18660;

const std::map<std::string, long>& pool_sizes() {
    static const std::map<std::string, long> sizes = {
        {"L1", 43},   {"L2", 138},  {"L3", 3000}, {"L4", 3000}, {"N1", 3000},
        {"N2", 3000}, {"N3", 3000}, {"N4", 3000}, {"N5", 730},
    };
    return sizes;
}

std::vector<SampleRef> split_by_label(const std::vector<SampleRef>& pool, int label) {
    std::vector<SampleRef> out;
    for (const auto& s : pool) {
        if (s.label == label) out.push_back(s);
    }
    return out;
}

void check_balanced(const LabeledDataset& ds, const std::string& what) {
    long lens = ds.count_label(1);
    long nonlens = ds.count_label(0);
    if (lens != nonlens) {
        throw IngestError(IngestError::Code::class_imbalance,
                          fmt::format("{}: {} lenses vs {} non-lenses after assembly",
                                      what, lens, nonlens));
    }
}

// Stratified seeded split of one pool into (train, val) with val_count per class.
std::pair<std::vector<SampleRef>, std::vector<SampleRef>> stratified_split(
    const std::vector<SampleRef>& pool, long val_per_class, uint64_t seed) {
    std::vector<SampleRef> train, val;
    for (int label : {1, 0}) {
        auto cls = split_by_label(pool, label);
        std::mt19937_64 rng(derive_seed(seed, "split", uint64_t(label)));
        deterministic_shuffle(cls, rng);
        if (long(cls.size()) < val_per_class) {
            throw IngestError(IngestError::Code::pool_underflow,
                              fmt::format("j24: class {} has {} samples, need {} for "
                                          "validation alone",
                                          label, cls.size(), val_per_class));
        }
        val.insert(val.end(), cls.begin(), cls.begin() + val_per_class);
        train.insert(train.end(), cls.begin() + val_per_class, cls.end());
    }
    return {std::move(train), std::move(val)};
}

std::vector<SampleRef> subsample_per_class(const std::vector<SampleRef>& pool,
                                           long per_class, uint64_t seed,
                                           const std::string& pool_name) {
    std::vector<SampleRef> out;
    for (int label : {1, 0}) {
        auto cls = split_by_label(pool, label);
        if (long(cls.size()) < per_class) {
            throw IngestError(
                IngestError::Code::pool_underflow,
                fmt::format("{}: class {} has {} samples, requested {}", pool_name,
                            label, cls.size(), per_class));
        }
        std::mt19937_64 rng(derive_seed(seed, "subsample", uint64_t(label)));
        deterministic_shuffle(cls, rng);
        out.insert(out.end(), cls.begin(), cls.begin() + per_class);
    }
    return out;
}

}  // namespace

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::A: return "A";
        case Experiment::B: return "B";
        case Experiment::C: return "C";
        case Experiment::S: return "S";
    }
    return "?";
}

Experiment experiment_from_string(const std::string& s) {
    if (s == "A") return Experiment::A;
    if (s == "B") return Experiment::B;
    if (s == "C") return Experiment::C;
    if (s == "S") return Experiment::S;
    throw Error(fmt::format("unknown experiment '{}'", s));
}

std::string to_string(TestId id) {
    return std::string(1, char('a' + int(id)));
}

TestId test_id_from_string(const std::string& s) {
    if (s.size() == 1 && s[0] >= 'a' && s[0] <= 'l') return TestId(s[0] - 'a');
    throw Error(fmt::format("unknown test set '{}'", s));
}

const std::array<TestSetComposition, 12>& test_table() {
    static const std::array<TestSetComposition, 12> table = {{
        {TestId::a, {"L1", "L2"}, {"N1"}, 181, 3000, 3181},
        {TestId::b, {"L1", "L2"}, {"N2"}, 181, 3000, 3181},
        {TestId::c, {"L1", "L2"}, {"N3"}, 181, 3000, 3181},
        {TestId::d, {"L1", "L2"}, {"N4"}, 181, 3000, 3181},
        {TestId::e, {"L1", "L2"}, {"N5"}, 181, 730, 911},
        {TestId::f, {"L1", "L2"}, {"N1", "N2", "N3", "N4", "N5"}, 181, 12730, 12911},
        {TestId::g, {"L3"}, {"N2"}, 3000, 3000, 6000},
        {TestId::h, {"L3"}, {"N3"}, 3000, 3000, 6000},
        {TestId::i, {"L3"}, {"N4"}, 3000, 3000, 6000},
        {TestId::j, {"L4"}, {"N2"}, 3000, 3000, 6000},
        {TestId::k, {"L4"}, {"N4"}, 3000, 3000, 6000},
        {TestId::l,
         {"L1", "L2", "L3", "L4"},
         {"N1", "N2", "N3", "N4", "N5"},
         6181, 12730, 18911},
    }};
    return table;
}

const TestSetComposition& test_composition(TestId id) {
    return test_table()[size_t(id)];
}

long expected_pool_size(const std::string& pool) {
    auto it = pool_sizes().find(pool);
    if (it == pool_sizes().end()) {
        throw Error(fmt::format("unknown test pool '{}'", pool));
    }
    return it->second;
}

long LabeledDataset::count_label(int label) const {
    long n = 0;
    for (const auto& s : samples) {
        if (s.label == label) ++n;
    }
    return n;
}

DataRoot::DataRoot(std::string root) : root_(std::move(root)) {}

std::string DataRoot::resolve(const std::string& relative) const {
    return (std::filesystem::path(root_) / relative).string();
}

std::string DataRoot::manifest_path(const std::string& pool) const {
    return (std::filesystem::path(root_) / "manifests" / (pool + ".txt")).string();
}

std::vector<SampleRef> DataRoot::load_pool(const std::string& pool) const {
    const std::string path = manifest_path(pool);
    std::ifstream in(path);
    if (!in) {
        throw IngestError(IngestError::Code::missing_pool,
                          fmt::format("pool '{}': manifest {} not found", pool, path));
    }
    std::vector<SampleRef> refs;
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            throw IngestError(IngestError::Code::bad_manifest,
                              fmt::format("{}:{}: expected <path>\\t<label>\\t<pool>",
                                          path, row + 1));
        }
        SampleRef ref;
        ref.path = line.substr(0, t1);
        std::string label = line.substr(t1 + 1, t2 - t1 - 1);
        ref.pool = line.substr(t2 + 1);
        if (label != "0" && label != "1") {
            throw IngestError(IngestError::Code::bad_manifest,
                              fmt::format("{}:{}: label must be 0 or 1, got '{}'", path,
                                          row + 1, label));
        }
        if (ref.pool != pool) {
            throw IngestError(IngestError::Code::bad_manifest,
                              fmt::format("{}:{}: pool tag '{}' does not match '{}'",
                                          path, row + 1, ref.pool, pool));
        }
        ref.label = label[0] - '0';
        ref.id = fmt::format("{}#{}", ref.path, row);
        refs.push_back(std::move(ref));
        ++row;
    }
    return refs;
}

void write_manifest(const std::string& path, const std::vector<SampleRef>& entries) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(fmt::format("{}: cannot open for writing", path));
    for (const auto& e : entries) {
        out << e.path << '\t' << e.label << '\t' << e.pool << '\n';
    }
}

std::pair<LabeledDataset, LabeledDataset> build_training_set(const DataRoot& data,
                                                             const DatasetSpec& spec) {
    if (spec.experiment == Experiment::B || spec.experiment == Experiment::C) {
        if (!(spec.val_fraction_for_B > 0.0 && spec.val_fraction_for_B < 1.0)) {
            throw Error(fmt::format("val_fraction_for_B must lie in (0,1), got {}",
                                    spec.val_fraction_for_B));
        }
    }

    LabeledDataset train, val;
    train.provenance = spec;
    val.provenance = spec;

    auto assemble_a = [&](std::vector<SampleRef>& tr, std::vector<SampleRef>& va) {
        auto pool = data.load_pool("c21_train");
        auto vpool = data.load_pool("c21_val");
        tr.insert(tr.end(), pool.begin(), pool.end());
        va.insert(va.end(), vpool.begin(), vpool.end());
    };
    auto assemble_b = [&](std::vector<SampleRef>& tr, std::vector<SampleRef>& va) {
        auto pool = data.load_pool("j24");
        long per_class = std::min(split_by_label(pool, 0).size(),
                                  split_by_label(pool, 1).size());
        long val_per_class = std::llround(double(per_class) * spec.val_fraction_for_B);
        auto [t, v] = stratified_split(pool, val_per_class, spec.seed);
        tr.insert(tr.end(), t.begin(), t.end());
        va.insert(va.end(), v.begin(), v.end());
    };

    switch (spec.experiment) {
        case Experiment::A:
            assemble_a(train.samples, val.samples);
            break;
        case Experiment::B:
            assemble_b(train.samples, val.samples);
            break;
        case Experiment::C:
            assemble_a(train.samples, val.samples);
            assemble_b(train.samples, val.samples);
            break;
        case Experiment::S: {
            auto pool = data.load_pool("c21_train");
            auto picked = subsample_per_class(pool, kSPerClass, spec.seed, "c21_train");
            train.samples = std::move(picked);
            auto vpool = data.load_pool("c21_val");
            val.samples.insert(val.samples.end(), vpool.begin(), vpool.end());
            break;
        }
    }

    check_balanced(train, fmt::format("experiment {} train", to_string(spec.experiment)));
    check_balanced(val, fmt::format("experiment {} val", to_string(spec.experiment)));
    return {std::move(train), std::move(val)};
}

LabeledDataset build_test_set(const DataRoot& data, TestId id) {
    const TestSetComposition& comp = test_composition(id);
    LabeledDataset out;
    out.provenance = comp;

    long lenses = 0, nonlenses = 0;
    for (const auto& pool : comp.lens_pools) {
        auto refs = data.load_pool(pool);
        if (long(refs.size()) != expected_pool_size(pool)) {
            throw IngestError(IngestError::Code::pool_underflow,
                              fmt::format("pool '{}': has {} samples, expected {}", pool,
                                          refs.size(), expected_pool_size(pool)));
        }
        for (const auto& r : refs) {
            if (r.label != 1) {
                throw IngestError(IngestError::Code::bad_manifest,
                                  fmt::format("pool '{}': non-lens label in lens pool "
                                              "({})", pool, r.id));
            }
        }
        lenses += long(refs.size());
        out.samples.insert(out.samples.end(), refs.begin(), refs.end());
    }
    for (const auto& pool : comp.nonlens_pools) {
        auto refs = data.load_pool(pool);
        if (long(refs.size()) != expected_pool_size(pool)) {
            throw IngestError(IngestError::Code::pool_underflow,
                              fmt::format("pool '{}': has {} samples, expected {}", pool,
                                          refs.size(), expected_pool_size(pool)));
        }
        for (const auto& r : refs) {
            if (r.label != 0) {
                throw IngestError(IngestError::Code::bad_manifest,
                                  fmt::format("pool '{}': lens label in non-lens pool "
                                              "({})", pool, r.id));
            }
        }
        nonlenses += long(refs.size());
        out.samples.insert(out.samples.end(), refs.begin(), refs.end());
    }

    if (lenses != comp.lens_count || nonlenses != comp.nonlens_count) {
        throw IngestError(
            IngestError::Code::pool_underflow,
            fmt::format("test set {}: assembled {}/{} lens/non-lens, table says {}/{}",
                        to_string(id), lenses, nonlenses, comp.lens_count,
                        comp.nonlens_count));
    }
    return out;
}

RgbImage load_sample_rgb(const DataRoot& data, const SampleRef& ref) {
    return cube_to_rgb(load_fits_cube(data.resolve(ref.path)));
}

}  // namespace gravit
