#pragma once

#include <memory>
#include <random>
#include <vector>

#include "gravit/nn/param.hpp"
#include "gravit/tensor.hpp"

namespace gravit::nn {

// A trainable classifier. Groups are ordered architecturally: embedding
// first, then blocks/stages, head last; together they partition every
// parameter exactly once.
class Model {
public:
    virtual ~Model() = default;

    // x: (B, 3, S, S). Returns logits (B, num_classes).
    virtual Tensor forward(const Tensor& x, bool training = false,
                           std::mt19937_64* rng = nullptr) = 0;

    // Accumulates parameter gradients from d(loss)/d(logits).
    virtual void backward(const Tensor& g_logits) = 0;

    virtual std::vector<ParamGroup> param_groups() = 0;
    virtual int num_classes() const = 0;
    virtual int input_side() const = 0;

    // Per-block attention maps from the last forward, when the architecture
    // has any.
    virtual const std::vector<Tensor>* attention_maps() const { return nullptr; }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> out;
        for (auto& g : param_groups()) {
            out.insert(out.end(), g.params.begin(), g.params.end());
        }
        return out;
    }

    void zero_grad() {
        for (auto* p : parameters()) p->zero_grad();
    }

    int64_t parameter_count() {
        int64_t n = 0;
        for (auto* p : parameters()) n += p->numel();
        return n;
    }
};

}  // namespace gravit::nn
