#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gravit/nn/model.hpp"

namespace gravit {

enum class Arch {
    vit,
    deit,
    cait,
    deit3,
    swin,
    twins_svt,
    twins_pcpvt,
    pit,
    cvt,
    mlp_mixer,
    resnet18,
};

enum class Family { isotropic_block, hierarchical_stage, convolutional };

constexpr std::array<Arch, 11> kAllArchs = {
    Arch::vit,  Arch::deit, Arch::cait,        Arch::deit3,
    Arch::swin, Arch::twins_svt, Arch::twins_pcpvt, Arch::pit,
    Arch::cvt,  Arch::mlp_mixer,  Arch::resnet18,
};

// Default ensemble membership: the ten fine-tuned architectures; the
// ResNet-18 baseline joins only on request.
constexpr std::array<Arch, 10> kEnsembleArchs = {
    Arch::vit,  Arch::deit,      Arch::cait, Arch::deit3, Arch::swin,
    Arch::twins_svt, Arch::twins_pcpvt, Arch::pit,  Arch::cvt,   Arch::mlp_mixer,
};

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);
std::string to_string(Family f);
Family family_of(Arch a);

enum class GroupKind { embedding, block, stage, head };

struct GroupInfo {
    std::string name;
    GroupKind kind = GroupKind::block;
    int64_t count = 0;
    std::vector<nn::Parameter*> params;  // empty for catalog-only handles
};

// A classifier in the registry. Catalog-only handles describe the full-scale
// pretrained architecture (parameter groups with exact counts); toy handles
// additionally own a trainable desk-scale model whose groups carry live
// parameter tensors.
struct BackboneHandle {
    Arch arch = Arch::vit;
    Family family = Family::isotropic_block;
    int num_classes = 2;
    std::optional<std::string> pretrained_source;
    std::unique_ptr<nn::Model> model;
    std::vector<GroupInfo> groups;

    bool has_model() const { return model != nullptr; }
};

class WeightProvider {
public:
    virtual ~WeightProvider() = default;
    virtual std::optional<std::string> resolve(const std::string& identifier) const = 0;
};

// Resolves "<id>" to "<dir>/<id>.ckpt" when that file exists.
class LocalDirWeightProvider : public WeightProvider {
public:
    explicit LocalDirWeightProvider(std::string dir) : dir_(std::move(dir)) {}
    std::optional<std::string> resolve(const std::string& identifier) const override;

private:
    std::string dir_;
};

// Full-scale registry entry with a fresh num_classes head. With pretrained
// set, the weights identifier must resolve through the provider.
BackboneHandle create_backbone(Arch arch, bool pretrained, int num_classes = 2,
                               const WeightProvider* provider = nullptr,
                               const std::string& weights_id = "");

// Desk-scale trainable instance of any registry architecture.
BackboneHandle create_toy_backbone(Arch arch, uint64_t init_seed = 1,
                                   int image_side = 64, int num_classes = 2);

enum class FinetuneDepth { head_only = 1, half = 2, full = 3 };

std::string to_string(FinetuneDepth d);
FinetuneDepth finetune_depth_from_int(int d);

struct FreezePartition {
    std::vector<std::string> trainable_groups;
    std::vector<std::string> frozen_groups;
    int64_t trainable_params = 0;
    int64_t frozen_params = 0;
};

// head_only: just the head. half: head plus the last ceil(n/2) blocks
// (isotropic) or stages (hierarchical / convolutional). full: everything.
// Live parameters get their trainable flags set accordingly.
FreezePartition apply_finetune_policy(BackboneHandle& handle, FinetuneDepth depth);

int64_t count_parameters(const BackboneHandle& handle);

// Forward-pass multiply-accumulate estimate at the given input side. Counts
// matmul/conv MACs only (norms and activations excluded); report FLOPs as
// 2x this figure.
int64_t estimate_macs(const BackboneHandle& handle, int input_side);

// --- checkpoints -----------------------------------------------------------

struct CheckpointManifest {
    std::string arch;
    std::string config_note;
    int finetune_depth = 0;
    std::string dataset_id;
    uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const CheckpointManifest& manifest,
                     const std::vector<nn::Parameter*>& params);

struct LoadedCheckpoint {
    CheckpointManifest manifest;
    std::map<std::string, Tensor> tensors;
};

LoadedCheckpoint read_checkpoint(const std::string& path);

// Copies tensors into matching model parameters by name. skip_head leaves
// head parameters fresh; a shape mismatch on any loaded tensor is an error.
void load_into_model(const LoadedCheckpoint& ckpt, nn::Model& model, bool skip_head);

}  // namespace gravit
