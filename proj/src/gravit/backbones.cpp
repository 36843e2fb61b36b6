#include "gravit/backbones.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gravit/errors.hpp"
#include "gravit/nn/mixer.hpp"
#include "gravit/nn/staged.hpp"
#include "gravit/nn/vit.hpp"

namespace gravit {

namespace {

using json = nlohmann::json;

// ---- full-scale structural catalog -----------------------------------------
//
// Canonical pretrain resolution for token bookkeeping (positional tables).
constexpr int kCatalogSide = 224;

struct VitShape {
    int patch, dim, depth, heads, mlp_ratio;
    int prefix_tokens = 1;
    bool layer_scale = false;
    int class_attn_depth = 0;
};

struct MixerShape {
    int patch, dim, depth, token_mlp, channel_mlp;
};

struct StageShape {
    int dim, depth, heads;
};

struct HierShape {
    int patch;
    std::vector<StageShape> stages;
    int mlp_ratio = 4;
};

// (cin, cout, kernel, spatial divisor of the input side at the output)
struct ConvShape {
    int cin, cout, k, out_div;
};

const VitShape& vit_base_shape() {
    static const VitShape s{16, 768, 12, 12, 4};
    return s;
}

const VitShape& cait_shape() {
    static const VitShape s{16, 384, 24, 8, 4, 1, true, 2};
    return s;
}

const MixerShape& mixer_shape() {
    static const MixerShape s{16, 768, 12, 384, 3072};
    return s;
}

const HierShape& hier_shape(Arch a) {
    static const HierShape swin{4, {{128, 2, 4}, {256, 2, 8}, {512, 18, 16}, {1024, 2, 32}}};
    static const HierShape svt{4, {{96, 2, 3}, {192, 2, 6}, {384, 18, 12}, {768, 2, 24}}};
    static const HierShape pcpvt{4, {{64, 3, 1}, {128, 4, 2}, {320, 18, 5}, {512, 3, 8}}};
    static const HierShape pit{14, {{256, 3, 4}, {512, 6, 8}, {1024, 4, 16}}};
    static const HierShape cvt{7, {{64, 1, 1}, {192, 4, 3}, {384, 16, 6}}};
    switch (a) {
        case Arch::swin: return swin;
        case Arch::twins_svt: return svt;
        case Arch::twins_pcpvt: return pcpvt;
        case Arch::pit: return pit;
        case Arch::cvt: return cvt;
        default: throw Error("not a hierarchical architecture");
    }
}

// ResNet-18 stem + four residual stages.
const std::vector<std::vector<ConvShape>>& resnet18_stages() {
    static const std::vector<std::vector<ConvShape>> stages = {
        {{3, 64, 7, 2}},
        {{64, 64, 3, 4}, {64, 64, 3, 4}, {64, 64, 3, 4}, {64, 64, 3, 4}},
        {{64, 128, 3, 8}, {128, 128, 3, 8}, {64, 128, 1, 8}, {128, 128, 3, 8},
         {128, 128, 3, 8}},
        {{128, 256, 3, 16}, {256, 256, 3, 16}, {128, 256, 1, 16}, {256, 256, 3, 16},
         {256, 256, 3, 16}},
        {{256, 512, 3, 32}, {512, 512, 3, 32}, {256, 512, 1, 32}, {512, 512, 3, 32},
         {512, 512, 3, 32}},
    };
    return stages;
}

int64_t attn_block_params(int dim, int mlp_ratio, bool layer_scale) {
    int64_t d = dim;
    int64_t h = d * mlp_ratio;
    int64_t qkv = d * 3 * d + 3 * d;
    int64_t proj = d * d + d;
    int64_t norms = 4 * d;
    int64_t mlp = d * h + h + h * d + d;
    int64_t ls = layer_scale ? 2 * d : 0;
    return qkv + proj + norms + mlp + ls;
}

int64_t mixer_block_params(int tokens, int dim, int tm, int cm) {
    int64_t norms = 4 * int64_t(dim);
    int64_t token_mlp = int64_t(tokens) * tm + tm + int64_t(tm) * tokens + tokens;
    int64_t channel_mlp = int64_t(dim) * cm + cm + int64_t(cm) * dim + dim;
    return norms + token_mlp + channel_mlp;
}

std::vector<GroupInfo> vit_catalog_groups(const VitShape& s, int classes) {
    std::vector<GroupInfo> groups;
    const int64_t d = s.dim;
    const int64_t patches = int64_t(kCatalogSide / s.patch) * (kCatalogSide / s.patch);
    const bool cait = s.class_attn_depth > 0;

    int64_t embed = 3 * int64_t(s.patch) * s.patch * d + d;  // projection
    embed += (cait ? patches : patches + s.prefix_tokens) * d;  // positions
    if (!cait) embed += int64_t(s.prefix_tokens) * d;           // class/dist tokens
    groups.push_back({"embedding", GroupKind::embedding, embed, {}});

    const int total_blocks = s.depth + s.class_attn_depth;
    for (int i = 0; i < total_blocks; ++i) {
        int64_t n = attn_block_params(s.dim, s.mlp_ratio, s.layer_scale);
        if (cait && i == s.depth) n += d;       // class token owned by first CA block
        if (i + 1 == total_blocks) n += 2 * d;  // pre-head norm
        groups.push_back({fmt::format("block{:02}", i + 1), GroupKind::block, n, {}});
    }

    groups.push_back({"head", GroupKind::head, d * classes + classes, {}});
    return groups;
}

std::vector<GroupInfo> mixer_catalog_groups(const MixerShape& s, int classes) {
    std::vector<GroupInfo> groups;
    const int64_t d = s.dim;
    const int tokens = (kCatalogSide / s.patch) * (kCatalogSide / s.patch);
    groups.push_back({"embedding", GroupKind::embedding,
                      3 * int64_t(s.patch) * s.patch * d + d, {}});
    for (int i = 0; i < s.depth; ++i) {
        int64_t n = mixer_block_params(tokens, s.dim, s.token_mlp, s.channel_mlp);
        if (i + 1 == s.depth) n += 2 * d;
        groups.push_back({fmt::format("block{:02}", i + 1), GroupKind::block, n, {}});
    }
    groups.push_back({"head", GroupKind::head, d * classes + classes, {}});
    return groups;
}

std::vector<GroupInfo> hier_catalog_groups(const HierShape& s, int classes) {
    std::vector<GroupInfo> groups;
    groups.push_back({"embedding", GroupKind::embedding,
                      3 * int64_t(s.patch) * s.patch * s.stages[0].dim + s.stages[0].dim,
                      {}});
    for (size_t i = 0; i < s.stages.size(); ++i) {
        int64_t n = 0;
        if (i > 0) {
            n += 4 * int64_t(s.stages[i - 1].dim) * s.stages[i].dim + s.stages[i].dim;
        }
        n += int64_t(s.stages[i].depth) *
             attn_block_params(s.stages[i].dim, s.mlp_ratio, false);
        if (i + 1 == s.stages.size()) n += 2 * int64_t(s.stages[i].dim);
        groups.push_back({fmt::format("stage{}", i + 1), GroupKind::stage, n, {}});
    }
    groups.push_back({"head", GroupKind::head,
                      int64_t(s.stages.back().dim) * classes + classes, {}});
    return groups;
}

std::vector<GroupInfo> resnet_catalog_groups(int classes) {
    std::vector<GroupInfo> groups;
    const auto& stages = resnet18_stages();
    auto conv_params = [](const ConvShape& c) {
        return int64_t(c.cin) * c.cout * c.k * c.k + 2 * int64_t(c.cout);  // conv + bn
    };
    int64_t stem = 0;
    for (const auto& c : stages[0]) stem += conv_params(c);
    groups.push_back({"embedding", GroupKind::embedding, stem, {}});
    for (size_t i = 1; i < stages.size(); ++i) {
        int64_t n = 0;
        for (const auto& c : stages[i]) n += conv_params(c);
        groups.push_back({fmt::format("stage{}", i), GroupKind::stage, n, {}});
    }
    groups.push_back({"head", GroupKind::head, int64_t(512) * classes + classes, {}});
    return groups;
}

std::vector<GroupInfo> catalog_groups(Arch a, int classes) {
    switch (a) {
        case Arch::vit:
        case Arch::deit:
        case Arch::deit3:
            // the three share the ViT-Base/16 structure
            return vit_catalog_groups(vit_base_shape(), classes);
        case Arch::cait: return vit_catalog_groups(cait_shape(), classes);
        case Arch::mlp_mixer: return mixer_catalog_groups(mixer_shape(), classes);
        case Arch::resnet18: return resnet_catalog_groups(classes);
        default: return hier_catalog_groups(hier_shape(a), classes);
    }
}

// ---- MAC estimates ---------------------------------------------------------

int64_t vit_macs(const VitShape& s, int side, int classes) {
    const int64_t d = s.dim;
    const int64_t h = d * int64_t(s.mlp_ratio);
    const int64_t patches = int64_t(side / s.patch) * (side / s.patch);
    int64_t macs = patches * (3 * int64_t(s.patch) * s.patch) * d;  // embedding
    auto block = [&](int64_t T) {
        return 3 * T * d * d + T * d * d + 2 * T * T * d + 2 * T * d * h;
    };
    const bool cait = s.class_attn_depth > 0;
    const int64_t T_sa = cait ? patches : patches + s.prefix_tokens;
    macs += int64_t(s.depth) * block(T_sa);
    if (cait) macs += int64_t(s.class_attn_depth) * block(patches + 1);
    macs += d * classes;
    return macs;
}

int64_t mixer_macs_formula(int patch, int dim, int depth, int tm, int cm, int side,
                           int classes) {
    const int64_t T = int64_t(side / patch) * (side / patch);
    int64_t macs = T * (3 * int64_t(patch) * patch) * dim;
    macs += int64_t(depth) * (2 * int64_t(dim) * T * tm + 2 * T * int64_t(dim) * cm);
    macs += int64_t(dim) * classes;
    return macs;
}

int64_t hier_macs(const HierShape& s, int side, int classes) {
    int64_t grid = side / s.patch;
    int64_t macs = grid * grid * (3 * int64_t(s.patch) * s.patch) * s.stages[0].dim;
    for (size_t i = 0; i < s.stages.size(); ++i) {
        if (i > 0) {
            grid /= 2;
            macs += grid * grid * 4 * int64_t(s.stages[i - 1].dim) * s.stages[i].dim;
        }
        const int64_t T = grid * grid;
        const int64_t d = s.stages[i].dim;
        const int64_t h = d * int64_t(s.mlp_ratio);
        macs += int64_t(s.stages[i].depth) *
                (3 * T * d * d + T * d * d + 2 * T * T * d + 2 * T * d * h);
    }
    macs += int64_t(s.stages.back().dim) * classes;
    return macs;
}

int64_t resnet_macs(int side, int classes) {
    int64_t macs = 0;
    for (const auto& stage : resnet18_stages()) {
        for (const auto& c : stage) {
            int64_t out = int64_t(side / c.out_div) * (side / c.out_div);
            macs += int64_t(c.cin) * c.cout * c.k * c.k * out;
        }
    }
    macs += int64_t(512) * classes;
    return macs;
}

int64_t catalog_macs(Arch a, int side, int classes) {
    switch (a) {
        case Arch::vit:
        case Arch::deit:
        case Arch::deit3: return vit_macs(vit_base_shape(), side, classes);
        case Arch::cait: return vit_macs(cait_shape(), side, classes);
        case Arch::mlp_mixer: {
            const auto& m = mixer_shape();
            return mixer_macs_formula(m.patch, m.dim, m.depth, m.token_mlp,
                                      m.channel_mlp, side, classes);
        }
        case Arch::resnet18: return resnet_macs(side, classes);
        default: return hier_macs(hier_shape(a), side, classes);
    }
}

// ---- toy instances -----------------------------------------------------------

GroupKind kind_from_name(const std::string& name) {
    if (name == "embedding") return GroupKind::embedding;
    if (name == "head") return GroupKind::head;
    if (name.rfind("stage", 0) == 0) return GroupKind::stage;
    return GroupKind::block;
}

void attach_model_groups(BackboneHandle& handle) {
    handle.groups.clear();
    for (auto& g : handle.model->param_groups()) {
        GroupInfo info;
        info.name = g.name;
        info.kind = kind_from_name(g.name);
        info.params = g.params;
        info.count = g.count();
        handle.groups.push_back(std::move(info));
    }
}

std::unique_ptr<nn::Model> make_toy_model(Arch arch, uint64_t seed, int side,
                                          int classes) {
    auto vit_cfg = [&](int depth, bool dist, bool ls, int ca) {
        nn::ToyVitConfig c;
        c.image_side = side;
        c.patch_size = std::max(side / 8, 2);
        c.embed_dim = 24;
        c.depth = depth;
        c.heads = 4;
        c.mlp_ratio = 2;
        c.num_classes = classes;
        c.dist_token = dist;
        c.layer_scale = ls;
        c.class_attn_depth = ca;
        c.init_seed = seed;
        return c;
    };
    auto staged_cfg = [&](int n_stages) {
        nn::ToyStagedConfig c;
        c.image_side = side;
        c.patch_size = std::max(side / 16, 1);
        if (n_stages == 4) {
            c.stage_dims = {12, 24, 48, 96};
            c.stage_depths = {1, 1, 1, 1};
        } else {
            c.stage_dims = {16, 32, 64};
            c.stage_depths = {1, 1, 1};
        }
        c.num_classes = classes;
        c.init_seed = seed;
        return c;
    };

    const std::string name = to_string(arch);
    switch (arch) {
        case Arch::vit: return std::make_unique<nn::ToyVit>(vit_cfg(4, false, false, 0), name);
        case Arch::deit: return std::make_unique<nn::ToyVit>(vit_cfg(4, true, false, 0), name);
        case Arch::deit3: return std::make_unique<nn::ToyVit>(vit_cfg(4, false, true, 0), name);
        case Arch::cait: return std::make_unique<nn::ToyVit>(vit_cfg(3, false, true, 1), name);
        case Arch::mlp_mixer: {
            nn::ToyMixerConfig c;
            c.image_side = side;
            c.patch_size = std::max(side / 8, 2);
            c.embed_dim = 24;
            c.depth = 4;
            c.token_mlp_dim = 32;
            c.channel_mlp_dim = 48;
            c.num_classes = classes;
            c.init_seed = seed;
            return std::make_unique<nn::ToyMixer>(c, name);
        }
        case Arch::swin:
        case Arch::twins_svt:
        case Arch::twins_pcpvt:
        case Arch::resnet18:
            return std::make_unique<nn::ToyStaged>(staged_cfg(4), name);
        case Arch::pit:
        case Arch::cvt:
            return std::make_unique<nn::ToyStaged>(staged_cfg(3), name);
    }
    throw Error("unreachable");
}

}  // namespace

std::string to_string(Arch a) {
    switch (a) {
        case Arch::vit: return "vit";
        case Arch::deit: return "deit";
        case Arch::cait: return "cait";
        case Arch::deit3: return "deit3";
        case Arch::swin: return "swin";
        case Arch::twins_svt: return "twins_svt";
        case Arch::twins_pcpvt: return "twins_pcpvt";
        case Arch::pit: return "pit";
        case Arch::cvt: return "cvt";
        case Arch::mlp_mixer: return "mlp_mixer";
        case Arch::resnet18: return "resnet18";
    }
    return "?";
}

Arch arch_from_string(const std::string& s) {
    for (Arch a : kAllArchs) {
        if (to_string(a) == s) return a;
    }
    throw Error(fmt::format("unknown architecture '{}'", s));
}

std::string to_string(Family f) {
    switch (f) {
        case Family::isotropic_block: return "isotropic-block";
        case Family::hierarchical_stage: return "hierarchical-stage";
        case Family::convolutional: return "convolutional";
    }
    return "?";
}

Family family_of(Arch a) {
    switch (a) {
        case Arch::vit:
        case Arch::deit:
        case Arch::cait:
        case Arch::deit3:
        case Arch::mlp_mixer: return Family::isotropic_block;
        case Arch::resnet18: return Family::convolutional;
        default: return Family::hierarchical_stage;
    }
}

std::optional<std::string> LocalDirWeightProvider::resolve(
    const std::string& identifier) const {
    auto path = std::filesystem::path(dir_) / (identifier + ".ckpt");
    if (std::filesystem::exists(path)) return path.string();
    return std::nullopt;
}

BackboneHandle create_backbone(Arch arch, bool pretrained, int num_classes,
                               const WeightProvider* provider,
                               const std::string& weights_id) {
    BackboneHandle handle;
    handle.arch = arch;
    handle.family = family_of(arch);
    handle.num_classes = num_classes;
    handle.groups = catalog_groups(arch, num_classes);

    if (pretrained) {
        const std::string id = weights_id.empty() ? to_string(arch) : weights_id;
        if (!provider) {
            throw Error(fmt::format("backbone '{}': pretrained requested but no weight "
                                    "provider given", to_string(arch)));
        }
        auto path = provider->resolve(id);
        if (!path) {
            throw Error(fmt::format("backbone '{}': weights '{}' cannot be resolved",
                                    to_string(arch), id));
        }
        handle.pretrained_source = id;

        // The head is always replaced fresh; everything else must match the
        // catalog sizes exactly.
        LoadedCheckpoint ckpt = read_checkpoint(*path);
        int64_t loaded = 0;
        for (const auto& [name, t] : ckpt.tensors) {
            if (name.find(".head.") == std::string::npos) loaded += t.numel();
        }
        int64_t expected = 0;
        for (const auto& g : handle.groups) {
            if (g.kind != GroupKind::head) expected += g.count;
        }
        if (loaded != expected) {
            throw Error(fmt::format(
                "backbone '{}': checkpoint '{}' holds {} non-head parameters, catalog "
                "expects {} (head-dimension or architecture mismatch)",
                to_string(arch), id, loaded, expected));
        }
    }
    return handle;
}

BackboneHandle create_toy_backbone(Arch arch, uint64_t init_seed, int image_side,
                                   int num_classes) {
    BackboneHandle handle;
    handle.arch = arch;
    handle.family = family_of(arch);
    handle.num_classes = num_classes;
    handle.model = make_toy_model(arch, init_seed, image_side, num_classes);
    attach_model_groups(handle);
    return handle;
}

std::string to_string(FinetuneDepth d) {
    switch (d) {
        case FinetuneDepth::head_only: return "1";
        case FinetuneDepth::half: return "2";
        case FinetuneDepth::full: return "3";
    }
    return "?";
}

FinetuneDepth finetune_depth_from_int(int d) {
    if (d < 1 || d > 3) throw Error(fmt::format("fine-tune depth {} not in 1..3", d));
    return FinetuneDepth(d);
}

FreezePartition apply_finetune_policy(BackboneHandle& handle, FinetuneDepth depth) {
    std::vector<bool> trainable(handle.groups.size(), false);

    if (depth == FinetuneDepth::full) {
        trainable.assign(handle.groups.size(), true);
    } else {
        // head group(s) always train
        for (size_t i = 0; i < handle.groups.size(); ++i) {
            if (handle.groups[i].kind == GroupKind::head) trainable[i] = true;
        }
        if (depth == FinetuneDepth::half) {
            std::vector<size_t> middle;
            for (size_t i = 0; i < handle.groups.size(); ++i) {
                GroupKind k = handle.groups[i].kind;
                if (k == GroupKind::block || k == GroupKind::stage) middle.push_back(i);
            }
            size_t n = middle.size();
            size_t unfreeze = (n + 1) / 2;
            for (size_t j = n - unfreeze; j < n; ++j) trainable[middle[j]] = true;
        }
    }

    FreezePartition part;
    for (size_t i = 0; i < handle.groups.size(); ++i) {
        auto& g = handle.groups[i];
        for (auto* p : g.params) p->trainable = trainable[i];
        if (trainable[i]) {
            part.trainable_groups.push_back(g.name);
            part.trainable_params += g.count;
        } else {
            part.frozen_groups.push_back(g.name);
            part.frozen_params += g.count;
        }
    }
    return part;
}

int64_t count_parameters(const BackboneHandle& handle) {
    int64_t n = 0;
    for (const auto& g : handle.groups) n += g.count;
    return n;
}

int64_t estimate_macs(const BackboneHandle& handle, int input_side) {
    if (!handle.has_model()) {
        return catalog_macs(handle.arch, input_side, handle.num_classes);
    }
    // Toy instances: recompute from their live configuration.
    if (auto* vit = dynamic_cast<const nn::ToyVit*>(handle.model.get())) {
        const auto& c = vit->config();
        VitShape s{c.patch_size, c.embed_dim, c.depth, c.heads, c.mlp_ratio,
                   c.dist_token ? 2 : 1, c.layer_scale, c.class_attn_depth};
        return vit_macs(s, input_side, c.num_classes);
    }
    if (auto* mixer = dynamic_cast<const nn::ToyMixer*>(handle.model.get())) {
        const auto& c = mixer->config();
        return mixer_macs_formula(c.patch_size, c.embed_dim, c.depth, c.token_mlp_dim,
                                  c.channel_mlp_dim, input_side, c.num_classes);
    }
    if (auto* staged = dynamic_cast<const nn::ToyStaged*>(handle.model.get())) {
        const auto& c = staged->config();
        int64_t grid = input_side / c.patch_size;
        int64_t macs =
            grid * grid * (3 * int64_t(c.patch_size) * c.patch_size) * c.stage_dims[0];
        for (size_t i = 0; i < c.stage_dims.size(); ++i) {
            if (i > 0) {
                grid /= 2;
                macs += grid * grid * 4 * int64_t(c.stage_dims[i - 1]) * c.stage_dims[i];
            }
            const int64_t T = grid * grid;
            const int64_t d = c.stage_dims[i];
            const int64_t tm = std::max<int64_t>(T / 2, 2);
            const int64_t cm = 2 * d;
            macs += int64_t(c.stage_depths[i]) * (2 * d * T * tm + 2 * T * d * cm);
        }
        macs += int64_t(c.stage_dims.back()) * c.num_classes;
        return macs;
    }
    throw Error("estimate_macs: unknown model type");
}

// ---- checkpoints ---------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'G', 'V', 'T', '1'};
}

void save_checkpoint(const std::string& path, const CheckpointManifest& manifest,
                     const std::vector<nn::Parameter*>& params) {
    json header;
    header["arch"] = manifest.arch;
    header["config"] = manifest.config_note;
    header["finetune_depth"] = manifest.finetune_depth;
    header["dataset"] = manifest.dataset_id;
    header["seed"] = manifest.seed;
    json tensors = json::array();
    uint64_t offset = 0;
    for (const auto* p : params) {
        json t;
        t["name"] = p->name;
        t["shape"] = p->value.shape;
        t["offset"] = offset;
        tensors.push_back(std::move(t));
        offset += uint64_t(p->numel());
    }
    header["tensors"] = std::move(tensors);
    const std::string head_str = header.dump();

    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("{}: cannot open for writing", path));
    out.write(kMagic, 4);
    uint32_t len = uint32_t(head_str.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(head_str.data(), std::streamsize(head_str.size()));
    for (const auto* p : params) {
        out.write(reinterpret_cast<const char*>(p->value.v.data()),
                  std::streamsize(p->value.v.size() * sizeof(double)));
    }
    if (!out) throw Error(fmt::format("{}: checkpoint write failed", path));
}

LoadedCheckpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("{}: cannot open checkpoint", path));
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw Error(fmt::format("{}: not a checkpoint file", path));
    }
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string head_str(len, '\0');
    in.read(head_str.data(), len);
    json header = json::parse(head_str);

    LoadedCheckpoint ckpt;
    ckpt.manifest.arch = header.value("arch", "");
    ckpt.manifest.config_note = header.value("config", "");
    ckpt.manifest.finetune_depth = header.value("finetune_depth", 0);
    ckpt.manifest.dataset_id = header.value("dataset", "");
    ckpt.manifest.seed = header.value("seed", uint64_t(0));

    for (const auto& t : header["tensors"]) {
        std::vector<int64_t> shape = t["shape"].get<std::vector<int64_t>>();
        Tensor tensor(shape);
        in.read(reinterpret_cast<char*>(tensor.v.data()),
                std::streamsize(tensor.v.size() * sizeof(double)));
        if (!in) throw Error(fmt::format("{}: truncated checkpoint", path));
        ckpt.tensors.emplace(t["name"].get<std::string>(), std::move(tensor));
    }
    return ckpt;
}

void load_into_model(const LoadedCheckpoint& ckpt, nn::Model& model, bool skip_head) {
    for (auto* p : model.parameters()) {
        if (skip_head && p->name.find(".head.") != std::string::npos) continue;
        auto it = ckpt.tensors.find(p->name);
        if (it == ckpt.tensors.end()) {
            throw Error(fmt::format("checkpoint: missing tensor '{}'", p->name));
        }
        if (it->second.shape != p->value.shape) {
            throw Error(fmt::format("checkpoint: tensor '{}' shape mismatch", p->name));
        }
        p->value = it->second;
    }
}

}  // namespace gravit
