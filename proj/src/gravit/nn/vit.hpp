#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gravit/nn/blocks.hpp"
#include "gravit/nn/model.hpp"

namespace gravit::nn {

struct ToyVitConfig {
    int image_side = 64;
    int patch_size = 16;
    int embed_dim = 32;
    int depth = 2;  // self-attention blocks
    int heads = 4;
    int mlp_ratio = 2;
    double stochastic_depth_rate = 0.1;
    int num_classes = 2;
    bool dist_token = false;     // extra distillation token alongside the class token
    bool layer_scale = false;    // per-branch learned gains
    int class_attn_depth = 0;    // class-attention tail; the class token enters there
    uint64_t init_seed = 1;
};

// Desk-scale ViT. Patch tokens plus a class token (and optionally a
// distillation token), learned positional embeddings, pre-norm encoder
// blocks, classification head on the class token. With class_attn_depth > 0
// the class token instead joins after the self-attention stage and only
// class-attention blocks update it.
class ToyVit : public Model {
public:
    explicit ToyVit(const ToyVitConfig& cfg, const std::string& name = "vit");

    Tensor forward(const Tensor& x, bool training = false,
                   std::mt19937_64* rng = nullptr) override;
    void backward(const Tensor& g_logits) override;
    std::vector<ParamGroup> param_groups() override;
    int num_classes() const override { return cfg_.num_classes; }
    int input_side() const override { return cfg_.image_side; }
    const std::vector<Tensor>* attention_maps() const override { return &attn_maps_; }

    const ToyVitConfig& config() const { return cfg_; }
    int patch_tokens() const { return embed_.tokens(); }

private:
    int prefix_tokens() const;

    ToyVitConfig cfg_;
    PatchEmbed embed_;
    Parameter cls_, dist_, pos_;
    std::vector<std::unique_ptr<EncoderBlock>> blocks_;  // SA then CA
    LayerNorm final_norm_;
    Linear head_;
    std::vector<Tensor> attn_maps_;

    // forward caches
    int64_t batch_ = 0;
    int64_t run_tokens_ = 0;  // token count entering final norm
};

}  // namespace gravit::nn
