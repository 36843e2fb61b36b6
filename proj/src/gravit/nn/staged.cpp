#include "gravit/nn/staged.hpp"

#include <fmt/format.h>

#include "gravit/errors.hpp"
#include "gravit/rng.hpp"

namespace gravit::nn {

ToyStaged::ToyStaged(const ToyStagedConfig& cfg, const std::string& name) : cfg_(cfg) {
    if (cfg.stage_dims.size() != cfg.stage_depths.size() || cfg.stage_dims.empty()) {
        throw Error("staged: stage_dims and stage_depths must match and be non-empty");
    }
    std::mt19937_64 rng(derive_seed(cfg.init_seed, name));

    embed_ = PatchEmbed(name + ".embed", cfg.image_side, cfg.patch_size,
                        cfg.stage_dims[0], rng);
    int grid = cfg.image_side / cfg.patch_size;
    const int n_stages = int(cfg.stage_dims.size());
    for (int s = 0; s < n_stages; ++s) {
        if (s > 0) {
            merges_.push_back(std::make_unique<PatchMerge>(
                fmt::format("{}.stage{}.merge", name, s + 1), grid,
                cfg.stage_dims[size_t(s - 1)], cfg.stage_dims[size_t(s)], rng));
            grid /= 2;
        }
        int tokens = grid * grid;
        int dim = cfg.stage_dims[size_t(s)];
        std::vector<std::unique_ptr<MixerBlock>> blocks;
        for (int b = 0; b < cfg.stage_depths[size_t(s)]; ++b) {
            blocks.push_back(std::make_unique<MixerBlock>(
                fmt::format("{}.stage{}.block{:02}", name, s + 1, b + 1), tokens, dim,
                std::max(tokens / 2, 2), 2 * dim, cfg.stochastic_depth_rate, rng));
        }
        stages_.push_back(std::move(blocks));
    }
    final_tokens_ = int64_t(grid) * grid;
    final_norm_ = LayerNorm(name + ".norm", cfg.stage_dims.back());
    head_ = Linear(name + ".head", cfg.stage_dims.back(), cfg.num_classes, rng);
}

Tensor ToyStaged::forward(const Tensor& x, bool training, std::mt19937_64* rng) {
    Tensor z = embed_.forward(x);
    for (size_t s = 0; s < stages_.size(); ++s) {
        if (s > 0) z = merges_[s - 1]->forward(z);
        for (auto& block : stages_[s]) z = block->forward(z, training, rng);
    }
    z = final_norm_.forward(z);
    return head_.forward(mean_tokens(z));
}

void ToyStaged::backward(const Tensor& g_logits) {
    Tensor gz = mean_tokens_backward(head_.backward(g_logits), final_tokens_);
    gz = final_norm_.backward(gz);
    for (size_t s = stages_.size(); s-- > 0;) {
        for (size_t b = stages_[s].size(); b-- > 0;) gz = stages_[s][b]->backward(gz);
        if (s > 0) gz = merges_[s - 1]->backward(gz);
    }
    embed_.backward(gz);
}

std::vector<ParamGroup> ToyStaged::param_groups() {
    std::vector<ParamGroup> groups;
    ParamGroup embedding{"embedding", {}};
    embed_.collect(embedding.params);
    groups.push_back(std::move(embedding));
    for (size_t s = 0; s < stages_.size(); ++s) {
        ParamGroup g{fmt::format("stage{}", s + 1), {}};
        if (s > 0) merges_[s - 1]->collect(g.params);
        for (auto& block : stages_[s]) block->collect(g.params);
        if (s + 1 == stages_.size()) final_norm_.collect(g.params);
        groups.push_back(std::move(g));
    }
    ParamGroup head{"head", {}};
    head_.collect(head.params);
    groups.push_back(std::move(head));
    return groups;
}

}  // namespace gravit::nn
