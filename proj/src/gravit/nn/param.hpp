#pragma once

#include <random>
#include <string>
#include <vector>

#include "gravit/tensor.hpp"

namespace gravit::nn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, std::vector<int64_t> shape) : name(std::move(n)) {
        value = Tensor(shape);
        grad = Tensor(shape);
    }

    int64_t numel() const { return value.numel(); }
    void zero_grad() { grad.fill(0.0); }
};

struct ParamGroup {
    std::string name;
    std::vector<Parameter*> params;

    int64_t count() const {
        int64_t n = 0;
        for (const auto* p : params) n += p->numel();
        return n;
    }
};

inline void init_normal(Tensor& t, std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> d(0.0, stddev);
    for (double& x : t.v) x = d(rng);
}

inline void init_const(Tensor& t, double c) { t.fill(c); }

}  // namespace gravit::nn
