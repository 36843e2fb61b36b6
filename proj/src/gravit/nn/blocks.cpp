#include "gravit/nn/blocks.hpp"

#include <fmt/format.h>

#include "gravit/errors.hpp"

namespace gravit::nn {

namespace {

// Zeroes every token row except row 0 (class-attention stage update).
void keep_row0_only(Tensor& x) {
    const int64_t B = x.dim(0), T = x.dim(1), D = x.dim(2);
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t t = 1; t < T; ++t) {
            for (int64_t d = 0; d < D; ++d) x.at(b, t, d) = 0.0;
        }
    }
}

}  // namespace

void DropPathState::draw(int64_t batch, double rate, bool training,
                         std::mt19937_64* rng) {
    if (!training || rate == 0.0) {
        keep.assign(size_t(batch), 1);
        scale = 1.0;
        return;
    }
    if (!rng) throw Error("stochastic depth needs an rng in training mode");
    keep = drop_path_keep_mask(*rng, batch, rate);
    scale = 1.0 / (1.0 - rate);
}

void DropPathState::apply(Tensor& branch) const {
    const int64_t B = branch.dim(0);
    const int64_t per = branch.numel() / B;
    for (int64_t b = 0; b < B; ++b) {
        double f = keep[size_t(b)] ? scale : 0.0;
        double* p = branch.v.data() + b * per;
        for (int64_t i = 0; i < per; ++i) p[i] *= f;
    }
}

void DropPathState::apply_grad(Tensor& gbranch) const { apply(gbranch); }

// ---- EncoderBlock ------------------------------------------------------------

EncoderBlock::EncoderBlock(const std::string& name, int64_t dim, int64_t heads,
                           int64_t mlp_hidden, double sd_rate, bool layer_scale,
                           bool class_attn_only, std::mt19937_64& rng)
    : ln1(name + ".ln1", dim),
      ln2(name + ".ln2", dim),
      attn(name + ".attn", dim, heads, rng),
      mlp(name + ".mlp", dim, mlp_hidden, rng),
      sd_rate_(sd_rate),
      layer_scale_(layer_scale),
      class_attn_only_(class_attn_only),
      dim_(dim) {
    if (layer_scale_) {
        ls1 = Parameter(name + ".ls1", {dim});
        ls2 = Parameter(name + ".ls2", {dim});
        init_const(ls1.value, 0.1);
        init_const(ls2.value, 0.1);
    }
}

Tensor EncoderBlock::forward(const Tensor& x, bool training, std::mt19937_64* rng) {
    const int64_t B = x.dim(0);

    Tensor a = attn.forward(ln1.forward(x));
    if (layer_scale_) {
        attn_pre_ls_ = a;
        const int64_t rows = a.numel() / dim_;
        for (int64_t r = 0; r < rows; ++r) {
            for (int64_t d = 0; d < dim_; ++d) {
                a.v[size_t(r * dim_ + d)] *= ls1.value.v[size_t(d)];
            }
        }
    }
    if (class_attn_only_) keep_row0_only(a);
    dp1_.draw(B, sd_rate_, training, rng);
    dp1_.apply(a);
    Tensor x1 = x;
    for (size_t i = 0; i < x1.v.size(); ++i) x1.v[i] += a.v[i];

    Tensor m = mlp.forward(ln2.forward(x1));
    if (layer_scale_) {
        mlp_pre_ls_ = m;
        const int64_t rows = m.numel() / dim_;
        for (int64_t r = 0; r < rows; ++r) {
            for (int64_t d = 0; d < dim_; ++d) {
                m.v[size_t(r * dim_ + d)] *= ls2.value.v[size_t(d)];
            }
        }
    }
    if (class_attn_only_) keep_row0_only(m);
    dp2_.draw(B, sd_rate_, training, rng);
    dp2_.apply(m);
    Tensor out = x1;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += m.v[i];
    return out;
}

Tensor EncoderBlock::backward(const Tensor& gy) {
    // MLP branch
    Tensor gm = gy;
    dp2_.apply_grad(gm);
    if (class_attn_only_) keep_row0_only(gm);
    if (layer_scale_) {
        const int64_t rows = gm.numel() / dim_;
        for (int64_t r = 0; r < rows; ++r) {
            for (int64_t d = 0; d < dim_; ++d) {
                ls2.grad.v[size_t(d)] +=
                    gm.v[size_t(r * dim_ + d)] * mlp_pre_ls_.v[size_t(r * dim_ + d)];
                gm.v[size_t(r * dim_ + d)] *= ls2.value.v[size_t(d)];
            }
        }
    }
    Tensor gx1 = ln2.backward(mlp.backward(gm));
    for (size_t i = 0; i < gx1.v.size(); ++i) gx1.v[i] += gy.v[i];

    // attention branch
    Tensor ga = gx1;
    dp1_.apply_grad(ga);
    if (class_attn_only_) keep_row0_only(ga);
    if (layer_scale_) {
        const int64_t rows = ga.numel() / dim_;
        for (int64_t r = 0; r < rows; ++r) {
            for (int64_t d = 0; d < dim_; ++d) {
                ls1.grad.v[size_t(d)] +=
                    ga.v[size_t(r * dim_ + d)] * attn_pre_ls_.v[size_t(r * dim_ + d)];
                ga.v[size_t(r * dim_ + d)] *= ls1.value.v[size_t(d)];
            }
        }
    }
    Tensor gx = ln1.backward(attn.backward(ga));
    for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gx1.v[i];
    return gx;
}

void EncoderBlock::collect(std::vector<Parameter*>& out) {
    ln1.collect(out);
    attn.collect(out);
    ln2.collect(out);
    mlp.collect(out);
    if (layer_scale_) {
        out.push_back(&ls1);
        out.push_back(&ls2);
    }
}

// ---- MixerBlock ------------------------------------------------------------

MixerBlock::MixerBlock(const std::string& name, int64_t tokens, int64_t dim,
                       int64_t token_hidden, int64_t channel_hidden, double sd_rate,
                       std::mt19937_64& rng)
    : ln1(name + ".ln1", dim),
      ln2(name + ".ln2", dim),
      token_mix(name + ".token_mix", tokens, token_hidden, rng),
      channel_mix(name + ".channel_mix", dim, channel_hidden, rng),
      sd_rate_(sd_rate),
      tokens_(tokens) {}

Tensor MixerBlock::forward(const Tensor& x, bool training, std::mt19937_64* rng) {
    const int64_t B = x.dim(0);
    if (x.dim(1) != tokens_) {
        throw Error(fmt::format("mixer block: expected {} tokens, got {}", tokens_,
                                x.dim(1)));
    }

    Tensor t = transpose_last2(token_mix.forward(transpose_last2(ln1.forward(x))));
    dp1_.draw(B, sd_rate_, training, rng);
    dp1_.apply(t);
    Tensor x1 = x;
    for (size_t i = 0; i < x1.v.size(); ++i) x1.v[i] += t.v[i];

    Tensor c = channel_mix.forward(ln2.forward(x1));
    dp2_.draw(B, sd_rate_, training, rng);
    dp2_.apply(c);
    Tensor out = x1;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += c.v[i];
    return out;
}

Tensor MixerBlock::backward(const Tensor& gy) {
    Tensor gc = gy;
    dp2_.apply_grad(gc);
    Tensor gx1 = ln2.backward(channel_mix.backward(gc));
    for (size_t i = 0; i < gx1.v.size(); ++i) gx1.v[i] += gy.v[i];

    Tensor gt = gx1;
    dp1_.apply_grad(gt);
    Tensor gx = ln1.backward(
        transpose_last2(token_mix.backward(transpose_last2(gt))));
    for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gx1.v[i];
    return gx;
}

void MixerBlock::collect(std::vector<Parameter*>& out) {
    ln1.collect(out);
    token_mix.collect(out);
    ln2.collect(out);
    channel_mix.collect(out);
}

}  // namespace gravit::nn
