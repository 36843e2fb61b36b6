#include "gravit/nn/vit.hpp"

#include <fmt/format.h>

#include "gravit/errors.hpp"
#include "gravit/rng.hpp"

namespace gravit::nn {

ToyVit::ToyVit(const ToyVitConfig& cfg, const std::string& name) : cfg_(cfg) {
    std::mt19937_64 rng(derive_seed(cfg.init_seed, name));
    const int64_t dim = cfg.embed_dim;
    const bool cait = cfg.class_attn_depth > 0;
    if (cait && cfg.dist_token) {
        throw Error("toy vit: class-attention mode has no distillation token");
    }

    embed_ = PatchEmbed(name + ".embed", cfg.image_side, cfg.patch_size, dim, rng);

    cls_ = Parameter(name + ".cls", {dim});
    init_normal(cls_.value, rng, 0.02);
    if (cfg.dist_token) {
        dist_ = Parameter(name + ".dist", {dim});
        init_normal(dist_.value, rng, 0.02);
    }
    const int64_t pos_tokens = cait ? embed_.tokens() : embed_.tokens() + prefix_tokens();
    pos_ = Parameter(name + ".pos", {pos_tokens, dim});
    init_normal(pos_.value, rng, 0.02);

    for (int i = 0; i < cfg.depth; ++i) {
        blocks_.push_back(std::make_unique<EncoderBlock>(
            fmt::format("{}.block{:02}", name, i + 1), dim, cfg.heads,
            dim * cfg.mlp_ratio, cfg.stochastic_depth_rate, cfg.layer_scale,
            /*class_attn_only=*/false, rng));
    }
    for (int i = 0; i < cfg.class_attn_depth; ++i) {
        blocks_.push_back(std::make_unique<EncoderBlock>(
            fmt::format("{}.block{:02}", name, cfg.depth + i + 1), dim, cfg.heads,
            dim * cfg.mlp_ratio, cfg.stochastic_depth_rate, cfg.layer_scale,
            /*class_attn_only=*/true, rng));
    }

    final_norm_ = LayerNorm(name + ".norm", dim);
    head_ = Linear(name + ".head", dim, cfg.num_classes, rng);
}

int ToyVit::prefix_tokens() const {
    if (cfg_.class_attn_depth > 0) return 1;  // class token, added late
    return cfg_.dist_token ? 2 : 1;
}

Tensor ToyVit::forward(const Tensor& x, bool training, std::mt19937_64* rng) {
    const bool cait = cfg_.class_attn_depth > 0;
    const int64_t dim = cfg_.embed_dim;
    batch_ = x.dim(0);
    const int64_t B = batch_;
    const int64_t T = embed_.tokens();

    Tensor patches = embed_.forward(x);  // (B, T, D)

    Tensor z;
    if (cait) {
        z = patches;
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t t = 0; t < T; ++t) {
                for (int64_t d = 0; d < dim; ++d) z.at(b, t, d) += pos_.value.at(t, d);
            }
        }
    } else {
        const int64_t P = prefix_tokens();
        z = Tensor({B, P + T, dim});
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t d = 0; d < dim; ++d) z.at(b, 0, d) = cls_.value.at(d);
            if (cfg_.dist_token) {
                for (int64_t d = 0; d < dim; ++d) z.at(b, 1, d) = dist_.value.at(d);
            }
            for (int64_t t = 0; t < T; ++t) {
                for (int64_t d = 0; d < dim; ++d) z.at(b, P + t, d) = patches.at(b, t, d);
            }
            for (int64_t t = 0; t < P + T; ++t) {
                for (int64_t d = 0; d < dim; ++d) z.at(b, t, d) += pos_.value.at(t, d);
            }
        }
    }

    attn_maps_.clear();
    size_t block_idx = 0;
    for (auto& block : blocks_) {
        if (cait && int(block_idx) == cfg_.depth) {
            // class token joins ahead of the class-attention stage
            Tensor with_cls({B, z.dim(1) + 1, dim});
            for (int64_t b = 0; b < B; ++b) {
                for (int64_t d = 0; d < dim; ++d) with_cls.at(b, 0, d) = cls_.value.at(d);
                for (int64_t t = 0; t < z.dim(1); ++t) {
                    for (int64_t d = 0; d < dim; ++d) {
                        with_cls.at(b, t + 1, d) = z.at(b, t, d);
                    }
                }
            }
            z = std::move(with_cls);
        }
        z = block->forward(z, training, rng);
        attn_maps_.push_back(*block->attention());
        ++block_idx;
    }

    run_tokens_ = z.dim(1);
    z = final_norm_.forward(z);

    Tensor cls_feat({B, dim});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t d = 0; d < dim; ++d) cls_feat.at(b, d) = z.at(b, 0, d);
    }
    return head_.forward(cls_feat);
}

void ToyVit::backward(const Tensor& g_logits) {
    const bool cait = cfg_.class_attn_depth > 0;
    const int64_t dim = cfg_.embed_dim;
    const int64_t B = batch_;
    const int64_t T = embed_.tokens();

    Tensor g_cls_feat = head_.backward(g_logits);  // (B, D)
    Tensor gz({B, run_tokens_, dim});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t d = 0; d < dim; ++d) gz.at(b, 0, d) = g_cls_feat.at(b, d);
    }
    gz = final_norm_.backward(gz);

    for (size_t i = blocks_.size(); i-- > 0;) {
        gz = blocks_[i]->backward(gz);
        if (cait && int(i) == cfg_.depth) {
            // peel the class token off again
            for (int64_t b = 0; b < B; ++b) {
                for (int64_t d = 0; d < dim; ++d) cls_.grad.at(d) += gz.at(b, 0, d);
            }
            Tensor rest({B, gz.dim(1) - 1, dim});
            for (int64_t b = 0; b < B; ++b) {
                for (int64_t t = 0; t < rest.dim(1); ++t) {
                    for (int64_t d = 0; d < dim; ++d) rest.at(b, t, d) = gz.at(b, t + 1, d);
                }
            }
            gz = std::move(rest);
        }
    }

    if (cait) {
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t t = 0; t < T; ++t) {
                for (int64_t d = 0; d < dim; ++d) pos_.grad.at(t, d) += gz.at(b, t, d);
            }
        }
        embed_.backward(gz);
    } else {
        const int64_t P = prefix_tokens();
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t t = 0; t < P + T; ++t) {
                for (int64_t d = 0; d < dim; ++d) pos_.grad.at(t, d) += gz.at(b, t, d);
            }
            for (int64_t d = 0; d < dim; ++d) cls_.grad.at(d) += gz.at(b, 0, d);
            if (cfg_.dist_token) {
                for (int64_t d = 0; d < dim; ++d) dist_.grad.at(d) += gz.at(b, 1, d);
            }
        }
        Tensor g_patches({B, T, dim});
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t t = 0; t < T; ++t) {
                for (int64_t d = 0; d < dim; ++d) g_patches.at(b, t, d) = gz.at(b, P + t, d);
            }
        }
        embed_.backward(g_patches);
    }
}

std::vector<ParamGroup> ToyVit::param_groups() {
    const bool cait = cfg_.class_attn_depth > 0;
    std::vector<ParamGroup> groups;

    ParamGroup embedding{"embedding", {}};
    embed_.collect(embedding.params);
    embedding.params.push_back(&pos_);
    if (!cait) {
        embedding.params.push_back(&cls_);
        if (cfg_.dist_token) embedding.params.push_back(&dist_);
    }
    groups.push_back(std::move(embedding));

    for (size_t i = 0; i < blocks_.size(); ++i) {
        ParamGroup g{fmt::format("block{:02}", i + 1), {}};
        if (cait && int(i) == cfg_.depth) g.params.push_back(&cls_);
        blocks_[i]->collect(g.params);
        if (i + 1 == blocks_.size()) final_norm_.collect(g.params);
        groups.push_back(std::move(g));
    }

    ParamGroup head{"head", {}};
    head_.collect(head.params);
    groups.push_back(std::move(head));
    return groups;
}

}  // namespace gravit::nn
