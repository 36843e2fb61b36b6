#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gravit/nn/blocks.hpp"
#include "gravit/nn/model.hpp"

namespace gravit::nn {

struct ToyStagedConfig {
    int image_side = 64;
    int patch_size = 4;  // stage-0 grid must stay even through all merges
    std::vector<int> stage_dims = {8, 16, 32, 64};
    std::vector<int> stage_depths = {1, 1, 1, 1};
    double stochastic_depth_rate = 0.1;
    int num_classes = 2;
    uint64_t init_seed = 1;
};

// Desk-scale stand-in for hierarchical backbones: mixer-style blocks per
// stage with a 2x2 patch-merge downsample between stages, mean pooling and a
// linear head. Stage boundaries carry the freezing semantics.
class ToyStaged : public Model {
public:
    explicit ToyStaged(const ToyStagedConfig& cfg, const std::string& name = "staged");

    Tensor forward(const Tensor& x, bool training = false,
                   std::mt19937_64* rng = nullptr) override;
    void backward(const Tensor& g_logits) override;
    std::vector<ParamGroup> param_groups() override;
    int num_classes() const override { return cfg_.num_classes; }
    int input_side() const override { return cfg_.image_side; }

    const ToyStagedConfig& config() const { return cfg_; }
    int num_stages() const { return int(cfg_.stage_dims.size()); }

private:
    ToyStagedConfig cfg_;
    PatchEmbed embed_;
    std::vector<std::vector<std::unique_ptr<MixerBlock>>> stages_;
    std::vector<std::unique_ptr<PatchMerge>> merges_;  // stages_.size() - 1
    LayerNorm final_norm_;
    Linear head_;
    int64_t final_tokens_ = 0;
};

}  // namespace gravit::nn
