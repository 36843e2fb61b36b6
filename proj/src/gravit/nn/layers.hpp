#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gravit/nn/param.hpp"
#include "gravit/tensor.hpp"

namespace gravit::nn {

// y = x W^T + b over the last dimension; leading dimensions are batch.
class Linear {
public:
    Linear() = default;
    Linear(const std::string& name, int64_t in, int64_t out, std::mt19937_64& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Parameter*>& out);

    int64_t in_features() const { return in_; }
    int64_t out_features() const { return out_; }

    Parameter w;  // (out, in)
    Parameter b;  // (out)

private:
    int64_t in_ = 0, out_ = 0;
    Tensor x_;
};

// Normalizes the last dimension, affine parameters gamma/beta.
class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(const std::string& name, int64_t dim);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Parameter*>& out);

    Parameter gamma, beta;

private:
    int64_t dim_ = 0;
    Tensor xhat_;
    std::vector<double> inv_std_;
};

// Exact (erf-based) GELU.
class Gelu {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);

private:
    Tensor x_;
};

// Linear -> GELU -> Linear.
class Mlp {
public:
    Mlp() = default;
    Mlp(const std::string& name, int64_t dim, int64_t hidden, std::mt19937_64& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Parameter*>& out);

    Linear fc1, fc2;

private:
    Gelu act_;
};

// Standard multi-head self-attention over (B, T, D) tokens. Softmax rows of
// the attention matrix are cached and exposed.
class MultiHeadSelfAttention {
public:
    MultiHeadSelfAttention() = default;
    MultiHeadSelfAttention(const std::string& name, int64_t dim, int64_t heads,
                           std::mt19937_64& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Parameter*>& out);

    // (B, heads, T, T), rows sum to 1.
    const Tensor& attention() const { return probs_; }

    Linear qkv, proj;

private:
    int64_t dim_ = 0, heads_ = 0, head_dim_ = 0;
    Tensor q_, k_, v_, probs_, x_shape_cache_;
    int64_t batch_ = 0, tokens_ = 0;
};

// (B, 3, S, S) -> (B, T, D): non-overlapping p x p patches, flattened and
// linearly projected.
class PatchEmbed {
public:
    PatchEmbed() = default;
    PatchEmbed(const std::string& name, int image_side, int patch, int64_t dim,
               std::mt19937_64& rng);

    Tensor forward(const Tensor& x);
    // Accumulates projection gradients; the image gradient is not needed.
    void backward(const Tensor& gy);
    void collect(std::vector<Parameter*>& out);

    // Patch extraction alone (no projection); used by tests.
    Tensor extract_patches(const Tensor& x) const;

    int tokens() const { return tokens_; }
    int64_t dim() const { return proj.out_features(); }
    int patch() const { return patch_; }

    Linear proj;

private:
    int side_ = 0, patch_ = 0, tokens_ = 0;
};

// (B, T, D) -> (B, T/4, out_dim): merges 2x2 token neighborhoods (grid side
// must be even) and projects.
class PatchMerge {
public:
    PatchMerge() = default;
    PatchMerge(const std::string& name, int grid, int64_t dim, int64_t out_dim,
               std::mt19937_64& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void collect(std::vector<Parameter*>& out);

    Linear proj;

private:
    int grid_ = 0;
    int64_t dim_ = 0;
};

// (B, T, D) <-> (B, D, T)
Tensor transpose_last2(const Tensor& x);

// Per-sample keep mask for stochastic depth; keep probability 1 - rate.
std::vector<uint8_t> drop_path_keep_mask(std::mt19937_64& rng, int64_t batch,
                                         double rate);

// Mean over the token dimension of (B, T, D) -> (B, D).
Tensor mean_tokens(const Tensor& x);
Tensor mean_tokens_backward(const Tensor& gy, int64_t tokens);

// Stable softmax cross-entropy with mean reduction. Returns the loss and
// writes d(loss)/d(logits) if grad is non-null.
double cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     Tensor* grad = nullptr);

}  // namespace gravit::nn
