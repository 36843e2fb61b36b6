#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gravit/nn/blocks.hpp"
#include "gravit/nn/model.hpp"

namespace gravit::nn {

struct ToyMixerConfig {
    int image_side = 64;
    int patch_size = 16;
    int embed_dim = 32;
    int depth = 2;
    int token_mlp_dim = 16;
    int channel_mlp_dim = 64;
    double stochastic_depth_rate = 0.1;
    int num_classes = 2;
    bool final_norm = true;
    uint64_t init_seed = 1;
};

// Desk-scale MLP-Mixer: patch projection into a tokens x channels matrix,
// alternating token-mixing and channel-mixing MLPs with residuals and layer
// norm, global average pooling over tokens, linear head. No positional
// embeddings and no attention anywhere.
class ToyMixer : public Model {
public:
    explicit ToyMixer(const ToyMixerConfig& cfg, const std::string& name = "mixer");

    Tensor forward(const Tensor& x, bool training = false,
                   std::mt19937_64* rng = nullptr) override;
    void backward(const Tensor& g_logits) override;
    std::vector<ParamGroup> param_groups() override;
    int num_classes() const override { return cfg_.num_classes; }
    int input_side() const override { return cfg_.image_side; }

    const ToyMixerConfig& config() const { return cfg_; }
    int tokens() const { return embed_.tokens(); }

    // Exposed stages so tests can probe the pooling step directly.
    Tensor embed_only(const Tensor& x) { return embed_.forward(x); }
    static Tensor pool_tokens(const Tensor& tokens) { return mean_tokens(tokens); }

private:
    ToyMixerConfig cfg_;
    PatchEmbed embed_;
    std::vector<std::unique_ptr<MixerBlock>> blocks_;
    LayerNorm final_norm_;
    Linear head_;
    int64_t batch_ = 0;
};

}  // namespace gravit::nn
