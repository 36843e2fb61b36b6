#include "gravit/nn/mixer.hpp"

#include <fmt/format.h>

#include "gravit/rng.hpp"

namespace gravit::nn {

ToyMixer::ToyMixer(const ToyMixerConfig& cfg, const std::string& name) : cfg_(cfg) {
    std::mt19937_64 rng(derive_seed(cfg.init_seed, name));
    embed_ = PatchEmbed(name + ".embed", cfg.image_side, cfg.patch_size, cfg.embed_dim,
                        rng);
    for (int i = 0; i < cfg.depth; ++i) {
        blocks_.push_back(std::make_unique<MixerBlock>(
            fmt::format("{}.block{:02}", name, i + 1), embed_.tokens(), cfg.embed_dim,
            cfg.token_mlp_dim, cfg.channel_mlp_dim, cfg.stochastic_depth_rate, rng));
    }
    if (cfg.final_norm) final_norm_ = LayerNorm(name + ".norm", cfg.embed_dim);
    head_ = Linear(name + ".head", cfg.embed_dim, cfg.num_classes, rng);
}

Tensor ToyMixer::forward(const Tensor& x, bool training, std::mt19937_64* rng) {
    batch_ = x.dim(0);
    Tensor z = embed_.forward(x);
    for (auto& block : blocks_) z = block->forward(z, training, rng);
    if (cfg_.final_norm) z = final_norm_.forward(z);
    return head_.forward(mean_tokens(z));
}

void ToyMixer::backward(const Tensor& g_logits) {
    Tensor g_pooled = head_.backward(g_logits);
    Tensor gz = mean_tokens_backward(g_pooled, embed_.tokens());
    if (cfg_.final_norm) gz = final_norm_.backward(gz);
    for (size_t i = blocks_.size(); i-- > 0;) gz = blocks_[i]->backward(gz);
    embed_.backward(gz);
}

std::vector<ParamGroup> ToyMixer::param_groups() {
    std::vector<ParamGroup> groups;
    ParamGroup embedding{"embedding", {}};
    embed_.collect(embedding.params);
    groups.push_back(std::move(embedding));
    for (size_t i = 0; i < blocks_.size(); ++i) {
        ParamGroup g{fmt::format("block{:02}", i + 1), {}};
        blocks_[i]->collect(g.params);
        if (i + 1 == blocks_.size() && cfg_.final_norm) final_norm_.collect(g.params);
        groups.push_back(std::move(g));
    }
    ParamGroup head{"head", {}};
    head_.collect(head.params);
    groups.push_back(std::move(head));
    return groups;
}

}  // namespace gravit::nn
