#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace gravit {

// Dense row-major tensor of doubles. Small and explicit on purpose; every
// consumer indexes it directly.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        v.assign(size_t(numel_of(shape)), 0.0);
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }

    int64_t numel() const { return int64_t(v.size()); }
    int64_t dim(size_t i) const { return shape[i]; }
    size_t rank() const { return shape.size(); }

    double& at(int64_t i) { return v[size_t(i)]; }
    double at(int64_t i) const { return v[size_t(i)]; }
    double& at(int64_t i, int64_t j) { return v[size_t(i * shape[1] + j)]; }
    double at(int64_t i, int64_t j) const { return v[size_t(i * shape[1] + j)]; }
    double& at(int64_t i, int64_t j, int64_t k) {
        return v[size_t((i * shape[1] + j) * shape[2] + k)];
    }
    double at(int64_t i, int64_t j, int64_t k) const {
        return v[size_t((i * shape[1] + j) * shape[2] + k)];
    }
    double& at(int64_t i, int64_t j, int64_t k, int64_t l) {
        return v[size_t(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }
    double at(int64_t i, int64_t j, int64_t k, int64_t l) const {
        return v[size_t(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

}  // namespace gravit
