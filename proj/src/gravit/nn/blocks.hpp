#pragma once

#include <memory>
#include <random>

#include "gravit/nn/layers.hpp"

namespace gravit::nn {

// Residual block with per-sample stochastic depth. Training mode skips each
// residual branch with probability `rate` and scales survivors by 1/(1-rate);
// eval mode is the plain residual sum.
class Block {
public:
    virtual ~Block() = default;
    virtual Tensor forward(const Tensor& x, bool training, std::mt19937_64* rng) = 0;
    virtual Tensor backward(const Tensor& gy) = 0;
    virtual void collect(std::vector<Parameter*>& out) = 0;
    virtual const Tensor* attention() const { return nullptr; }
};

struct DropPathState {
    std::vector<uint8_t> keep;
    double scale = 1.0;

    void draw(int64_t batch, double rate, bool training, std::mt19937_64* rng);
    void apply(Tensor& branch) const;       // in place, per sample
    void apply_grad(Tensor& gbranch) const; // same mask on the gradient
};

// Pre-norm transformer encoder block: LN -> MHSA -> +res, LN -> MLP -> +res.
// Options: LayerScale per branch; class-attention mode restricts both
// residual updates to token 0.
class EncoderBlock : public Block {
public:
    EncoderBlock(const std::string& name, int64_t dim, int64_t heads, int64_t mlp_hidden,
                 double sd_rate, bool layer_scale, bool class_attn_only,
                 std::mt19937_64& rng);

    Tensor forward(const Tensor& x, bool training, std::mt19937_64* rng) override;
    Tensor backward(const Tensor& gy) override;
    void collect(std::vector<Parameter*>& out) override;
    const Tensor* attention() const override { return &attn.attention(); }

    LayerNorm ln1, ln2;
    MultiHeadSelfAttention attn;
    Mlp mlp;
    Parameter ls1, ls2;  // LayerScale gains (empty when disabled)

private:
    double sd_rate_;
    bool layer_scale_;
    bool class_attn_only_;
    DropPathState dp1_, dp2_;
    Tensor attn_pre_ls_, mlp_pre_ls_;
    int64_t dim_;
};

// MLP-Mixer block: LN -> token-mixing MLP (across patches) -> +res,
// LN -> channel-mixing MLP (within patch) -> +res. No attention, no
// positional state.
class MixerBlock : public Block {
public:
    MixerBlock(const std::string& name, int64_t tokens, int64_t dim,
               int64_t token_hidden, int64_t channel_hidden, double sd_rate,
               std::mt19937_64& rng);

    Tensor forward(const Tensor& x, bool training, std::mt19937_64* rng) override;
    Tensor backward(const Tensor& gy) override;
    void collect(std::vector<Parameter*>& out) override;

    LayerNorm ln1, ln2;
    Mlp token_mix;    // operates on (B, D, T)
    Mlp channel_mix;  // operates on (B, T, D)

private:
    double sd_rate_;
    DropPathState dp1_, dp2_;
    int64_t tokens_;
};

}  // namespace gravit::nn
