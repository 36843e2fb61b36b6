#include "gravit/nn/layers.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gravit/errors.hpp"
#include "gravit/rng.hpp"

namespace gravit::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

int64_t rows_of(const Tensor& x, int64_t feat) {
    return x.numel() / feat;
}

}  // namespace

// ---- Linear ---------------------------------------------------------------

Linear::Linear(const std::string& name, int64_t in, int64_t out, std::mt19937_64& rng)
    : w(name + ".w", {out, in}), b(name + ".b", {out}), in_(in), out_(out) {
    init_normal(w.value, rng, 0.02);
}

Tensor Linear::forward(const Tensor& x) {
    x_ = x;
    std::vector<int64_t> out_shape = x.shape;
    out_shape.back() = out_;
    Tensor y(out_shape);
    const int64_t rows = rows_of(x, in_);
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x.v.data() + r * in_;
        double* yr = y.v.data() + r * out_;
        for (int64_t o = 0; o < out_; ++o) {
            const double* wr = w.value.v.data() + o * in_;
            double acc = b.value.v[size_t(o)];
            for (int64_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

Tensor Linear::backward(const Tensor& gy) {
    Tensor gx(x_.shape);
    const int64_t rows = rows_of(x_, in_);
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x_.v.data() + r * in_;
        const double* gr = gy.v.data() + r * out_;
        double* gxr = gx.v.data() + r * in_;
        for (int64_t o = 0; o < out_; ++o) {
            const double g = gr[o];
            if (g == 0.0) continue;
            double* wg = w.grad.v.data() + o * in_;
            const double* wr = w.value.v.data() + o * in_;
            for (int64_t i = 0; i < in_; ++i) {
                wg[i] += g * xr[i];
                gxr[i] += g * wr[i];
            }
            b.grad.v[size_t(o)] += g;
        }
    }
    return gx;
}

void Linear::collect(std::vector<Parameter*>& out) {
    out.push_back(&w);
    out.push_back(&b);
}

// ---- LayerNorm --------------------------------------------------------------

LayerNorm::LayerNorm(const std::string& name, int64_t dim)
    : gamma(name + ".gamma", {dim}), beta(name + ".beta", {dim}), dim_(dim) {
    init_const(gamma.value, 1.0);
}

Tensor LayerNorm::forward(const Tensor& x) {
    const int64_t rows = rows_of(x, dim_);
    xhat_ = Tensor(x.shape);
    inv_std_.assign(size_t(rows), 0.0);
    Tensor y(x.shape);
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x.v.data() + r * dim_;
        double mean = 0.0;
        for (int64_t i = 0; i < dim_; ++i) mean += xr[i];
        mean /= double(dim_);
        double var = 0.0;
        for (int64_t i = 0; i < dim_; ++i) {
            double d = xr[i] - mean;
            var += d * d;
        }
        var /= double(dim_);
        double inv = 1.0 / std::sqrt(var + 1e-6);
        inv_std_[size_t(r)] = inv;
        double* hr = xhat_.v.data() + r * dim_;
        double* yr = y.v.data() + r * dim_;
        for (int64_t i = 0; i < dim_; ++i) {
            hr[i] = (xr[i] - mean) * inv;
            yr[i] = hr[i] * gamma.value.v[size_t(i)] + beta.value.v[size_t(i)];
        }
    }
    return y;
}

Tensor LayerNorm::backward(const Tensor& gy) {
    const int64_t rows = rows_of(gy, dim_);
    Tensor gx(gy.shape);
    for (int64_t r = 0; r < rows; ++r) {
        const double* gr = gy.v.data() + r * dim_;
        const double* hr = xhat_.v.data() + r * dim_;
        double sum_g = 0.0, sum_gh = 0.0;
        for (int64_t i = 0; i < dim_; ++i) {
            double dxh = gr[i] * gamma.value.v[size_t(i)];
            sum_g += dxh;
            sum_gh += dxh * hr[i];
            gamma.grad.v[size_t(i)] += gr[i] * hr[i];
            beta.grad.v[size_t(i)] += gr[i];
        }
        const double inv = inv_std_[size_t(r)];
        double* gxr = gx.v.data() + r * dim_;
        for (int64_t i = 0; i < dim_; ++i) {
            double dxh = gr[i] * gamma.value.v[size_t(i)];
            gxr[i] = inv * (dxh - (sum_g + hr[i] * sum_gh) / double(dim_));
        }
    }
    return gx;
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

// ---- GELU -------------------------------------------------------------------

Tensor Gelu::forward(const Tensor& x) {
    x_ = x;
    Tensor y(x.shape);
    for (size_t i = 0; i < x.v.size(); ++i) {
        double xi = x.v[i];
        y.v[i] = 0.5 * xi * (1.0 + std::erf(xi * kInvSqrt2));
    }
    return y;
}

Tensor Gelu::backward(const Tensor& gy) {
    Tensor gx(gy.shape);
    for (size_t i = 0; i < gy.v.size(); ++i) {
        double xi = x_.v[i];
        double cdf = 0.5 * (1.0 + std::erf(xi * kInvSqrt2));
        double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
        gx.v[i] = gy.v[i] * (cdf + xi * pdf);
    }
    return gx;
}

// ---- MLP ---------------------------------------------------------------------

Mlp::Mlp(const std::string& name, int64_t dim, int64_t hidden, std::mt19937_64& rng)
    : fc1(name + ".fc1", dim, hidden, rng), fc2(name + ".fc2", hidden, dim, rng) {}

Tensor Mlp::forward(const Tensor& x) { return fc2.forward(act_.forward(fc1.forward(x))); }

Tensor Mlp::backward(const Tensor& gy) {
    return fc1.backward(act_.backward(fc2.backward(gy)));
}

void Mlp::collect(std::vector<Parameter*>& out) {
    fc1.collect(out);
    fc2.collect(out);
}

// ---- MultiHeadSelfAttention ----------------------------------------------------

MultiHeadSelfAttention::MultiHeadSelfAttention(const std::string& name, int64_t dim,
                                               int64_t heads, std::mt19937_64& rng)
    : qkv(name + ".qkv", dim, 3 * dim, rng),
      proj(name + ".proj", dim, dim, rng),
      dim_(dim),
      heads_(heads),
      head_dim_(dim / heads) {
    if (dim % heads != 0) {
        throw Error(fmt::format("attention: dim {} not divisible by heads {}", dim, heads));
    }
}

Tensor MultiHeadSelfAttention::forward(const Tensor& x) {
    batch_ = x.dim(0);
    tokens_ = x.dim(1);
    const int64_t B = batch_, T = tokens_, H = heads_, Dh = head_dim_;
    const double scale = 1.0 / std::sqrt(double(Dh));

    Tensor fused = qkv.forward(x);  // (B, T, 3D)
    q_ = Tensor({B, H, T, Dh});
    k_ = Tensor({B, H, T, Dh});
    v_ = Tensor({B, H, T, Dh});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t t = 0; t < T; ++t) {
            const double* f = fused.v.data() + (b * T + t) * 3 * dim_;
            for (int64_t h = 0; h < H; ++h) {
                for (int64_t d = 0; d < Dh; ++d) {
                    q_.at(b, h, t, d) = f[h * Dh + d];
                    k_.at(b, h, t, d) = f[dim_ + h * Dh + d];
                    v_.at(b, h, t, d) = f[2 * dim_ + h * Dh + d];
                }
            }
        }
    }

    probs_ = Tensor({B, H, T, T});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t h = 0; h < H; ++h) {
            for (int64_t i = 0; i < T; ++i) {
                double mx = -1e300;
                std::vector<double> row(size_t(T));
                for (int64_t j = 0; j < T; ++j) {
                    double s = 0.0;
                    for (int64_t d = 0; d < Dh; ++d) s += q_.at(b, h, i, d) * k_.at(b, h, j, d);
                    s *= scale;
                    row[size_t(j)] = s;
                    mx = std::max(mx, s);
                }
                double sum = 0.0;
                for (int64_t j = 0; j < T; ++j) {
                    row[size_t(j)] = std::exp(row[size_t(j)] - mx);
                    sum += row[size_t(j)];
                }
                for (int64_t j = 0; j < T; ++j) probs_.at(b, h, i, j) = row[size_t(j)] / sum;
            }
        }
    }

    Tensor merged({B, T, dim_});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t h = 0; h < H; ++h) {
            for (int64_t i = 0; i < T; ++i) {
                for (int64_t d = 0; d < Dh; ++d) {
                    double acc = 0.0;
                    for (int64_t j = 0; j < T; ++j) {
                        acc += probs_.at(b, h, i, j) * v_.at(b, h, j, d);
                    }
                    merged.at(b, i, h * Dh + d) = acc;
                }
            }
        }
    }
    return proj.forward(merged);
}

Tensor MultiHeadSelfAttention::backward(const Tensor& gy) {
    const int64_t B = batch_, T = tokens_, H = heads_, Dh = head_dim_;
    const double scale = 1.0 / std::sqrt(double(Dh));

    Tensor g_merged = proj.backward(gy);  // (B, T, D)

    Tensor gq({B, H, T, Dh}), gk({B, H, T, Dh}), gv({B, H, T, Dh});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t h = 0; h < H; ++h) {
            // g_ctx rows for this head
            for (int64_t i = 0; i < T; ++i) {
                // gP_ij = sum_d g_ctx(i,d) * v(j,d); gv(j,d) += P_ij * g_ctx(i,d)
                std::vector<double> gP(size_t(T), 0.0);
                for (int64_t j = 0; j < T; ++j) {
                    double acc = 0.0;
                    for (int64_t d = 0; d < Dh; ++d) {
                        acc += g_merged.at(b, i, h * Dh + d) * v_.at(b, h, j, d);
                    }
                    gP[size_t(j)] = acc;
                }
                for (int64_t j = 0; j < T; ++j) {
                    double p = probs_.at(b, h, i, j);
                    for (int64_t d = 0; d < Dh; ++d) {
                        gv.at(b, h, j, d) += p * g_merged.at(b, i, h * Dh + d);
                    }
                }
                // softmax backward: gS = P .* (gP - sum(gP .* P))
                double dot = 0.0;
                for (int64_t j = 0; j < T; ++j) dot += gP[size_t(j)] * probs_.at(b, h, i, j);
                for (int64_t j = 0; j < T; ++j) {
                    double gs = probs_.at(b, h, i, j) * (gP[size_t(j)] - dot) * scale;
                    for (int64_t d = 0; d < Dh; ++d) {
                        gq.at(b, h, i, d) += gs * k_.at(b, h, j, d);
                        gk.at(b, h, j, d) += gs * q_.at(b, h, i, d);
                    }
                }
            }
        }
    }

    Tensor g_fused({B, T, 3 * dim_});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t t = 0; t < T; ++t) {
            double* f = g_fused.v.data() + (b * T + t) * 3 * dim_;
            for (int64_t h = 0; h < H; ++h) {
                for (int64_t d = 0; d < Dh; ++d) {
                    f[h * Dh + d] = gq.at(b, h, t, d);
                    f[dim_ + h * Dh + d] = gk.at(b, h, t, d);
                    f[2 * dim_ + h * Dh + d] = gv.at(b, h, t, d);
                }
            }
        }
    }
    return qkv.backward(g_fused);
}

void MultiHeadSelfAttention::collect(std::vector<Parameter*>& out) {
    qkv.collect(out);
    proj.collect(out);
}

// ---- PatchEmbed -----------------------------------------------------------------

PatchEmbed::PatchEmbed(const std::string& name, int image_side, int patch, int64_t dim,
                       std::mt19937_64& rng)
    : proj(name + ".proj", int64_t(3) * patch * patch, dim, rng),
      side_(image_side),
      patch_(patch) {
    if (image_side % patch != 0) {
        throw Error(fmt::format("patch embed: side {} not divisible by patch {}",
                                image_side, patch));
    }
    int grid = image_side / patch;
    tokens_ = grid * grid;
}

Tensor PatchEmbed::extract_patches(const Tensor& x) const {
    const int64_t B = x.dim(0);
    const int grid = side_ / patch_;
    const int64_t P = int64_t(3) * patch_ * patch_;
    Tensor patches({B, int64_t(tokens_), P});
    for (int64_t b = 0; b < B; ++b) {
        for (int gy = 0; gy < grid; ++gy) {
            for (int gx = 0; gx < grid; ++gx) {
                int64_t t = int64_t(gy) * grid + gx;
                int64_t o = 0;
                for (int c = 0; c < 3; ++c) {
                    for (int py = 0; py < patch_; ++py) {
                        for (int px = 0; px < patch_; ++px) {
                            patches.at(b, t, o++) =
                                x.at(b, c, gy * patch_ + py, gx * patch_ + px);
                        }
                    }
                }
            }
        }
    }
    return patches;
}

Tensor PatchEmbed::forward(const Tensor& x) {
    if (x.dim(2) != side_ || x.dim(3) != side_) {
        throw Error(fmt::format("patch embed: expected {}x{} input, got {}x{}", side_,
                                side_, x.dim(2), x.dim(3)));
    }
    return proj.forward(extract_patches(x));
}

void PatchEmbed::backward(const Tensor& gy) { proj.backward(gy); }

void PatchEmbed::collect(std::vector<Parameter*>& out) { proj.collect(out); }

// ---- PatchMerge -------------------------------------------------------------------

PatchMerge::PatchMerge(const std::string& name, int grid, int64_t dim, int64_t out_dim,
                       std::mt19937_64& rng)
    : proj(name + ".proj", 4 * dim, out_dim, rng), grid_(grid), dim_(dim) {
    if (grid % 2 != 0) {
        throw Error(fmt::format("patch merge: grid side {} must be even", grid));
    }
}

Tensor PatchMerge::forward(const Tensor& x) {
    const int64_t B = x.dim(0);
    const int g2 = grid_ / 2;
    Tensor grouped({B, int64_t(g2) * g2, 4 * dim_});
    for (int64_t b = 0; b < B; ++b) {
        for (int y = 0; y < g2; ++y) {
            for (int xx = 0; xx < g2; ++xx) {
                int64_t t_out = int64_t(y) * g2 + xx;
                const int64_t corners[4] = {
                    int64_t(2 * y) * grid_ + 2 * xx,
                    int64_t(2 * y) * grid_ + 2 * xx + 1,
                    int64_t(2 * y + 1) * grid_ + 2 * xx,
                    int64_t(2 * y + 1) * grid_ + 2 * xx + 1,
                };
                for (int c = 0; c < 4; ++c) {
                    for (int64_t d = 0; d < dim_; ++d) {
                        grouped.at(b, t_out, c * dim_ + d) = x.at(b, corners[c], d);
                    }
                }
            }
        }
    }
    return proj.forward(grouped);
}

Tensor PatchMerge::backward(const Tensor& gy) {
    Tensor g_grouped = proj.backward(gy);
    const int64_t B = g_grouped.dim(0);
    const int g2 = grid_ / 2;
    Tensor gx({B, int64_t(grid_) * grid_, dim_});
    for (int64_t b = 0; b < B; ++b) {
        for (int y = 0; y < g2; ++y) {
            for (int xx = 0; xx < g2; ++xx) {
                int64_t t_out = int64_t(y) * g2 + xx;
                const int64_t corners[4] = {
                    int64_t(2 * y) * grid_ + 2 * xx,
                    int64_t(2 * y) * grid_ + 2 * xx + 1,
                    int64_t(2 * y + 1) * grid_ + 2 * xx,
                    int64_t(2 * y + 1) * grid_ + 2 * xx + 1,
                };
                for (int c = 0; c < 4; ++c) {
                    for (int64_t d = 0; d < dim_; ++d) {
                        gx.at(b, corners[c], d) = g_grouped.at(b, t_out, c * dim_ + d);
                    }
                }
            }
        }
    }
    return gx;
}

void PatchMerge::collect(std::vector<Parameter*>& out) { proj.collect(out); }

// ---- misc ---------------------------------------------------------------------------

Tensor transpose_last2(const Tensor& x) {
    const int64_t B = x.dim(0), T = x.dim(1), D = x.dim(2);
    Tensor y({B, D, T});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t t = 0; t < T; ++t) {
            for (int64_t d = 0; d < D; ++d) y.at(b, d, t) = x.at(b, t, d);
        }
    }
    return y;
}

std::vector<uint8_t> drop_path_keep_mask(std::mt19937_64& rng, int64_t batch,
                                         double rate) {
    std::vector<uint8_t> keep(size_t(batch), 1);
    for (int64_t i = 0; i < batch; ++i) {
        keep[size_t(i)] = rand_bernoulli(rng, rate) ? 0 : 1;
    }
    return keep;
}

Tensor mean_tokens(const Tensor& x) {
    const int64_t B = x.dim(0), T = x.dim(1), D = x.dim(2);
    Tensor y({B, D});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t t = 0; t < T; ++t) {
            for (int64_t d = 0; d < D; ++d) y.at(b, d) += x.at(b, t, d);
        }
    }
    for (double& v : y.v) v /= double(T);
    return y;
}

Tensor mean_tokens_backward(const Tensor& gy, int64_t tokens) {
    const int64_t B = gy.dim(0), D = gy.dim(1);
    Tensor gx({B, tokens, D});
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t t = 0; t < tokens; ++t) {
            for (int64_t d = 0; d < D; ++d) gx.at(b, t, d) = gy.at(b, d) / double(tokens);
        }
    }
    return gx;
}

double cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor* grad) {
    const int64_t B = logits.dim(0), C = logits.dim(1);
    if (int64_t(labels.size()) != B) throw Error("cross_entropy: label count mismatch");
    if (grad) *grad = Tensor({B, C});
    double loss = 0.0;
    for (int64_t b = 0; b < B; ++b) {
        double mx = -1e300;
        for (int64_t c = 0; c < C; ++c) mx = std::max(mx, logits.at(b, c));
        double sum = 0.0;
        for (int64_t c = 0; c < C; ++c) sum += std::exp(logits.at(b, c) - mx);
        double lse = mx + std::log(sum);
        loss += lse - logits.at(b, labels[size_t(b)]);
        if (grad) {
            for (int64_t c = 0; c < C; ++c) {
                double p = std::exp(logits.at(b, c) - lse);
                grad->at(b, c) = (p - (c == labels[size_t(b)] ? 1.0 : 0.0)) / double(B);
            }
        }
    }
    return loss / double(B);
}

}  // namespace gravit::nn
