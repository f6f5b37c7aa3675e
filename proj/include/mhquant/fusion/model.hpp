#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/fusion/config.hpp"
#include "mhquant/fusion/params.hpp"

namespace mhquant::fusion {

/// One training/evaluation case: a normalized grayscale image plus the two
/// tabular vectors, all pre-imputed and scaled by the caller.
struct Sample {
    std::vector<double> image;  ///< image_size * image_size, row-major, [0, 1]
    std::vector<double> v_c;    ///< clinical vector
    std::vector<double> v_v;    ///< values (imaging-feature) vector
    int label = 0;              ///< 1 = Superior outcome
};

namespace detail {

// ---- activations ----------------------------------------------------------

inline double gelu(double x) {
    return 0.5 * x * std::erfc(-x * 0.7071067811865475244);  // x * Phi(x)
}

inline double gelu_prime(double x) {
    const double phi = 0.3989422804014327 * std::exp(-0.5 * x * x);  // pdf
    const double Phi = 0.5 * std::erfc(-x * 0.7071067811865475244);  // cdf
    return Phi + x * phi;
}

// ---- linear layer ----------------------------------------------------------

inline std::vector<double> linear(const Tensor& w, const Tensor& b,
                                  const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != w.cols())
        throw ShapeMismatchError("linear layer input width");
    std::vector<double> y(w.rows());
    for (int r = 0; r < w.rows(); ++r) {
        double s = b[r];
        for (int c = 0; c < w.cols(); ++c) s += w(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

/// Accumulates dW, db and (optionally) the input gradient for y = W x + b.
inline void linear_backward(const Tensor& w, const std::vector<double>& x,
                            const std::vector<double>& dy, Tensor& dw, Tensor& db,
                            std::vector<double>* dx) {
    for (int r = 0; r < w.rows(); ++r) {
        db[static_cast<std::size_t>(r)] += dy[r];
        for (int c = 0; c < w.cols(); ++c) dw(r, c) += dy[r] * x[c];
    }
    if (dx) {
        for (int c = 0; c < w.cols(); ++c) {
            double s = 0.0;
            for (int r = 0; r < w.rows(); ++r) s += w(r, c) * dy[r];
            (*dx)[c] += s;
        }
    }
}

// ---- layer norm ------------------------------------------------------------

constexpr double kLnEps = 1e-5;

struct LnCache {
    std::vector<double> iv;                   ///< 1 / sqrt(var + eps), per token
    std::vector<std::vector<double>> xhat;    ///< normalized inputs, per token
};

inline std::vector<double> layer_norm(const Tensor& g, const Tensor& b,
                                      const std::vector<double>& x, LnCache& cache) {
    const int d = static_cast<int>(x.size());
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= d;
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= d;
    const double iv = 1.0 / std::sqrt(var + kLnEps);
    std::vector<double> xhat(d), y(d);
    for (int i = 0; i < d; ++i) {
        xhat[i] = (x[i] - mu) * iv;
        y[i] = g[static_cast<std::size_t>(i)] * xhat[i] + b[static_cast<std::size_t>(i)];
    }
    cache.iv.push_back(iv);
    cache.xhat.push_back(std::move(xhat));
    return y;
}

/// Backward for one token; `idx` selects the cached statistics.
inline void layer_norm_backward(const Tensor& g, const LnCache& cache, std::size_t idx,
                                const std::vector<double>& dy, Tensor& dg, Tensor& db,
                                std::vector<double>& dx_add) {
    const auto& xhat = cache.xhat[idx];
    const double iv = cache.iv[idx];
    const int d = static_cast<int>(xhat.size());
    double m1 = 0.0, m2 = 0.0;
    std::vector<double> dxhat(d);
    for (int i = 0; i < d; ++i) {
        dg[static_cast<std::size_t>(i)] += dy[i] * xhat[i];
        db[static_cast<std::size_t>(i)] += dy[i];
        dxhat[i] = dy[i] * g[static_cast<std::size_t>(i)];
        m1 += dxhat[i];
        m2 += dxhat[i] * xhat[i];
    }
    m1 /= d;
    m2 /= d;
    for (int i = 0; i < d; ++i) dx_add[i] += iv * (dxhat[i] - m1 - xhat[i] * m2);
}

// ---- multi-head attention ---------------------------------------------------

struct AttnCache {
    std::vector<std::vector<double>> qin, ctx;              ///< layer inputs
    std::vector<std::vector<double>> q, k, v;               ///< projections
    std::vector<std::vector<std::vector<double>>> a;        ///< [head][query][key]
    std::vector<std::vector<double>> concat;                ///< per query, width D
    std::vector<std::vector<double>> out;                   ///< per query, after W_o
};

/// Multi-head attention of `queries` over `context` using tensors named
/// prefix.{wq,bq,wk,bk,wv,bv,wo,bo}. Returns one output row per query.
inline void attention_forward(const FusionConfig& cfg, const ParamStore& p,
                              const std::string& prefix,
                              const std::vector<std::vector<double>>& queries,
                              const std::vector<std::vector<double>>& context,
                              AttnCache& cache) {
    const int nh = cfg.n_heads, dh = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    cache.qin = queries;
    cache.ctx = context;
    for (const auto& x : queries)
        cache.q.push_back(linear(p.at(prefix + ".wq"), p.at(prefix + ".bq"), x));
    for (const auto& x : context) {
        cache.k.push_back(linear(p.at(prefix + ".wk"), p.at(prefix + ".bk"), x));
        cache.v.push_back(linear(p.at(prefix + ".wv"), p.at(prefix + ".bv"), x));
    }
    const std::size_t nq = queries.size(), nk = context.size();
    cache.a.assign(nh, std::vector<std::vector<double>>(nq, std::vector<double>(nk)));
    cache.concat.assign(nq, std::vector<double>(cfg.d_model, 0.0));
    for (int h = 0; h < nh; ++h) {
        const int off = h * dh;
        for (std::size_t i = 0; i < nq; ++i) {
            auto& a = cache.a[h][i];
            double mx = -1e300;
            for (std::size_t j = 0; j < nk; ++j) {
                double s = 0.0;
                for (int d = 0; d < dh; ++d) s += cache.q[i][off + d] * cache.k[j][off + d];
                a[j] = s * scale;
                mx = std::max(mx, a[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < nk; ++j) {
                a[j] = std::exp(a[j] - mx);
                sum += a[j];
            }
            for (std::size_t j = 0; j < nk; ++j) a[j] /= sum;
            for (std::size_t j = 0; j < nk; ++j)
                for (int d = 0; d < dh; ++d)
                    cache.concat[i][off + d] += a[j] * cache.v[j][off + d];
        }
    }
    for (std::size_t i = 0; i < nq; ++i)
        cache.out.push_back(linear(p.at(prefix + ".wo"), p.at(prefix + ".bo"), cache.concat[i]));
}

/// Backward companion; accumulates parameter gradients plus input gradients
/// for both sides. For self-attention pass the same buffer as dqueries and
/// dcontext — every write is an accumulation, so aliasing is safe.
inline void attention_backward(const FusionConfig& cfg, const ParamStore& p,
                               const std::string& prefix, const AttnCache& cache,
                               const std::vector<std::vector<double>>& dout, ParamStore& g,
                               std::vector<std::vector<double>>& dqueries,
                               std::vector<std::vector<double>>& dcontext) {
    const int nh = cfg.n_heads, dh = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const std::size_t nq = cache.qin.size(), nk = cache.ctx.size();

    std::vector<std::vector<double>> dconcat(nq, std::vector<double>(cfg.d_model, 0.0));
    for (std::size_t i = 0; i < nq; ++i)
        linear_backward(p.at(prefix + ".wo"), cache.concat[i], dout[i], g.at(prefix + ".wo"),
                        g.at(prefix + ".bo"), &dconcat[i]);

    std::vector<std::vector<double>> dq(nq, std::vector<double>(cfg.d_model, 0.0));
    std::vector<std::vector<double>> dk(nk, std::vector<double>(cfg.d_model, 0.0));
    std::vector<std::vector<double>> dv(nk, std::vector<double>(cfg.d_model, 0.0));
    std::vector<double> da(nk), ds(nk);
    for (int h = 0; h < nh; ++h) {
        const int off = h * dh;
        for (std::size_t i = 0; i < nq; ++i) {
            const auto& a = cache.a[h][i];
            double dot = 0.0;
            for (std::size_t j = 0; j < nk; ++j) {
                double s = 0.0;
                for (int d = 0; d < dh; ++d) s += dconcat[i][off + d] * cache.v[j][off + d];
                da[j] = s;
                for (int d = 0; d < dh; ++d)
                    dv[j][off + d] += a[j] * dconcat[i][off + d];
                dot += a[j] * da[j];
            }
            for (std::size_t j = 0; j < nk; ++j) {
                ds[j] = a[j] * (da[j] - dot);  // softmax jacobian
                for (int d = 0; d < dh; ++d) {
                    dq[i][off + d] += ds[j] * cache.k[j][off + d] * scale;
                    dk[j][off + d] += ds[j] * cache.q[i][off + d] * scale;
                }
            }
        }
    }
    for (std::size_t i = 0; i < nq; ++i)
        linear_backward(p.at(prefix + ".wq"), cache.qin[i], dq[i], g.at(prefix + ".wq"),
                        g.at(prefix + ".bq"), &dqueries[i]);
    for (std::size_t j = 0; j < nk; ++j) {
        linear_backward(p.at(prefix + ".wk"), cache.ctx[j], dk[j], g.at(prefix + ".wk"),
                        g.at(prefix + ".bk"), &dcontext[j]);
        linear_backward(p.at(prefix + ".wv"), cache.ctx[j], dv[j], g.at(prefix + ".wv"),
                        g.at(prefix + ".bv"), &dcontext[j]);
    }
}

// ---- encoder block ----------------------------------------------------------

struct BlockCache {
    std::vector<std::vector<double>> x_in;
    LnCache ln1;
    std::vector<std::vector<double>> h1;
    AttnCache attn;
    std::vector<std::vector<double>> x_mid;
    LnCache ln2;
    std::vector<std::vector<double>> h2;
    std::vector<std::vector<double>> ff_pre, ff_act;
    std::vector<std::vector<double>> x_out;
};

inline void block_forward(const FusionConfig& cfg, const ParamStore& p, const std::string& b,
                          const std::vector<std::vector<double>>& x, BlockCache& cache) {
    cache.x_in = x;
    for (const auto& t : x)
        cache.h1.push_back(layer_norm(p.at(b + ".ln1.g"), p.at(b + ".ln1.b"), t, cache.ln1));
    attention_forward(cfg, p, b + ".attn", cache.h1, cache.h1, cache.attn);
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto t = x[i];
        for (int d = 0; d < cfg.d_model; ++d) t[d] += cache.attn.out[i][d];
        cache.x_mid.push_back(std::move(t));
    }
    for (const auto& t : cache.x_mid)
        cache.h2.push_back(layer_norm(p.at(b + ".ln2.g"), p.at(b + ".ln2.b"), t, cache.ln2));
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto pre = linear(p.at(b + ".ff.l1.w"), p.at(b + ".ff.l1.b"), cache.h2[i]);
        std::vector<double> act(pre.size());
        for (std::size_t d = 0; d < pre.size(); ++d) act[d] = gelu(pre[d]);
        auto out = linear(p.at(b + ".ff.l2.w"), p.at(b + ".ff.l2.b"), act);
        auto t = cache.x_mid[i];
        for (int d = 0; d < cfg.d_model; ++d) t[d] += out[d];
        cache.ff_pre.push_back(std::move(pre));
        cache.ff_act.push_back(std::move(act));
        cache.x_out.push_back(std::move(t));
    }
}

inline std::vector<std::vector<double>> block_backward(
    const FusionConfig& cfg, const ParamStore& p, const std::string& b, const BlockCache& cache,
    const std::vector<std::vector<double>>& dx_out, ParamStore& g) {
    const std::size_t n = cache.x_in.size();

    // feed-forward path; the residual passes dx_out straight through to x_mid
    std::vector<std::vector<double>> dx_mid = dx_out;
    std::vector<std::vector<double>> dh2(n, std::vector<double>(cfg.d_model, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> dact(cache.ff_act[i].size(), 0.0);
        linear_backward(p.at(b + ".ff.l2.w"), cache.ff_act[i], dx_out[i], g.at(b + ".ff.l2.w"),
                        g.at(b + ".ff.l2.b"), &dact);
        std::vector<double> dpre(dact.size());
        for (std::size_t d = 0; d < dact.size(); ++d)
            dpre[d] = dact[d] * gelu_prime(cache.ff_pre[i][d]);
        linear_backward(p.at(b + ".ff.l1.w"), cache.h2[i], dpre, g.at(b + ".ff.l1.w"),
                        g.at(b + ".ff.l1.b"), &dh2[i]);
    }
    for (std::size_t i = 0; i < n; ++i)
        layer_norm_backward(p.at(b + ".ln2.g"), cache.ln2, i, dh2[i], g.at(b + ".ln2.g"),
                            g.at(b + ".ln2.b"), dx_mid[i]);

    // attention path; residual passes dx_mid through to x_in
    std::vector<std::vector<double>> dx_in = dx_mid;
    std::vector<std::vector<double>> dh1(n, std::vector<double>(cfg.d_model, 0.0));
    attention_backward(cfg, p, b + ".attn", cache.attn, dx_mid, g, dh1, dh1);
    for (std::size_t i = 0; i < n; ++i)
        layer_norm_backward(p.at(b + ".ln1.g"), cache.ln1, i, dh1[i], g.at(b + ".ln1.g"),
                            g.at(b + ".ln1.b"), dx_in[i]);
    return dx_in;
}

// ---- vector embedding MLP ----------------------------------------------------

struct MlpCache {
    std::vector<double> in, pre1, act1, out;
};

inline void mlp_forward(const ParamStore& p, const std::string& m, const std::vector<double>& x,
                        MlpCache& cache) {
    cache.in = x;
    cache.pre1 = linear(p.at(m + ".l1.w"), p.at(m + ".l1.b"), x);
    cache.act1.resize(cache.pre1.size());
    for (std::size_t i = 0; i < cache.pre1.size(); ++i) cache.act1[i] = gelu(cache.pre1[i]);
    cache.out = linear(p.at(m + ".l2.w"), p.at(m + ".l2.b"), cache.act1);
}

inline void mlp_backward(const ParamStore& p, const std::string& m, const MlpCache& cache,
                         const std::vector<double>& dout, ParamStore& g) {
    std::vector<double> dact(cache.act1.size(), 0.0);
    linear_backward(p.at(m + ".l2.w"), cache.act1, dout, g.at(m + ".l2.w"), g.at(m + ".l2.b"),
                    &dact);
    std::vector<double> dpre(dact.size());
    for (std::size_t i = 0; i < dact.size(); ++i)
        dpre[i] = dact[i] * gelu_prime(cache.pre1[i]);
    linear_backward(p.at(m + ".l1.w"), cache.in, dpre, g.at(m + ".l1.w"), g.at(m + ".l1.b"),
                    nullptr);
}

// ---- full forward cache -------------------------------------------------------

struct SampleCache {
    std::vector<std::vector<double>> patches;
    std::vector<std::vector<double>> embedded;
    std::vector<BlockCache> blocks;
    std::vector<std::vector<double>> enc_out;
    std::vector<double> pooled;
    MlpCache mlp_c, mlp_v;
    AttnCache ca_c, ca_v;
    std::vector<double> fused_c, fused_v;
    std::vector<double> z, h1pre, h1act, h2pre, h2act;
    std::array<double, 2> logits{}, probs{};
};

inline std::vector<std::vector<double>> patchify(const FusionConfig& cfg,
                                                 const std::vector<double>& image) {
    if (static_cast<int>(image.size()) != cfg.image_size * cfg.image_size)
        throw ShapeMismatchError("image size does not match configuration");
    const int side = cfg.tokens_per_side(), ps = cfg.patch;
    std::vector<std::vector<double>> patches(cfg.n_tokens(), std::vector<double>(cfg.patch_dim()));
    for (int ty = 0; ty < side; ++ty)
        for (int tx = 0; tx < side; ++tx) {
            auto& patch = patches[ty * side + tx];
            for (int py = 0; py < ps; ++py)
                for (int px = 0; px < ps; ++px)
                    patch[py * ps + px] =
                        image[static_cast<std::size_t>(ty * ps + py) * cfg.image_size +
                              tx * ps + px];
        }
    return patches;
}

inline void encode_image_cached(const FusionConfig& cfg, const ParamStore& p,
                                const std::vector<double>& image, SampleCache& cache) {
    cache.patches = patchify(cfg, image);
    const auto& pos = p.at("pos_embed");
    for (int t = 0; t < cfg.n_tokens(); ++t) {
        auto e = linear(p.at("patch_embed.w"), p.at("patch_embed.b"), cache.patches[t]);
        for (int d = 0; d < cfg.d_model; ++d) e[d] += pos(t, d);
        cache.embedded.push_back(std::move(e));
    }
    auto x = cache.embedded;
    cache.blocks.resize(cfg.n_encoder_blocks);
    for (int i = 0; i < cfg.n_encoder_blocks; ++i) {
        block_forward(cfg, p, "enc" + std::to_string(i), x, cache.blocks[i]);
        x = cache.blocks[i].x_out;
    }
    cache.enc_out = std::move(x);
    cache.pooled.assign(cfg.d_model, 0.0);
    for (const auto& t : cache.enc_out)
        for (int d = 0; d < cfg.d_model; ++d) cache.pooled[d] += t[d];
    for (int d = 0; d < cfg.d_model; ++d) cache.pooled[d] /= cfg.n_tokens();
}

/// Cross-attention fusing one embedded vector token with the image tokens.
/// Forward direction: the vector token is the single query; the fused token
/// is its attended output plus a residual of the query. Reverse direction:
/// every image token queries the vector token, and the fused token is the
/// mean of those attended tokens (softmax over a single key is exactly 1).
inline std::vector<double> cross_attend_cached(const FusionConfig& cfg, const ParamStore& p,
                                               const std::string& prefix,
                                               const std::vector<double>& f,
                                               const std::vector<std::vector<double>>& tokens,
                                               AttnCache& cache) {
    if (static_cast<int>(f.size()) != cfg.d_model)
        throw ShapeMismatchError("cross-attention query width");
    if (cfg.ca_direction == CrossAttentionDirection::VectorQueriesImage) {
        attention_forward(cfg, p, prefix, {f}, tokens, cache);
        auto fused = cache.out[0];
        for (int d = 0; d < cfg.d_model; ++d) fused[d] += f[d];
        return fused;
    }
    attention_forward(cfg, p, prefix, tokens, {f}, cache);
    std::vector<double> fused(cfg.d_model, 0.0);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        for (int d = 0; d < cfg.d_model; ++d) fused[d] += cache.out[i][d] + tokens[i][d];
    for (int d = 0; d < cfg.d_model; ++d) fused[d] /= static_cast<double>(tokens.size());
    return fused;
}

inline void forward_cached(const FusionConfig& cfg, const ParamStore& p, const Sample& s,
                           SampleCache& cache) {
    if (cfg.uses_vectors()) {
        if (static_cast<int>(s.v_c.size()) != cfg.clinical_dim)
            throw ShapeMismatchError("clinical vector width");
        if (static_cast<int>(s.v_v.size()) != cfg.values_dim)
            throw ShapeMismatchError("values vector width");
        mlp_forward(p, "mlp_c", s.v_c, cache.mlp_c);
        mlp_forward(p, "mlp_v", s.v_v, cache.mlp_v);
    }
    if (cfg.uses_image()) encode_image_cached(cfg, p, s.image, cache);

    switch (cfg.modality) {
        case ModalityMode::TriModal:
            cache.fused_c =
                cross_attend_cached(cfg, p, "ca_c", cache.mlp_c.out, cache.enc_out, cache.ca_c);
            cache.fused_v =
                cross_attend_cached(cfg, p, "ca_v", cache.mlp_v.out, cache.enc_out, cache.ca_v);
            cache.z = cache.pooled;
            cache.z.insert(cache.z.end(), cache.fused_c.begin(), cache.fused_c.end());
            cache.z.insert(cache.z.end(), cache.fused_v.begin(), cache.fused_v.end());
            break;
        case ModalityMode::ImageOnly:
            cache.z = cache.pooled;
            break;
        case ModalityMode::VectorsOnly:
            cache.z = cache.mlp_c.out;
            cache.z.insert(cache.z.end(), cache.mlp_v.out.begin(), cache.mlp_v.out.end());
            break;
    }

    cache.h1pre = linear(p.at("head.mlp1.w"), p.at("head.mlp1.b"), cache.z);
    cache.h1act.resize(cache.h1pre.size());
    for (std::size_t i = 0; i < cache.h1pre.size(); ++i) cache.h1act[i] = gelu(cache.h1pre[i]);
    cache.h2pre = linear(p.at("head.mlp2.w"), p.at("head.mlp2.b"), cache.h1act);
    cache.h2act.resize(cache.h2pre.size());
    for (std::size_t i = 0; i < cache.h2pre.size(); ++i) cache.h2act[i] = gelu(cache.h2pre[i]);
    auto logits = linear(p.at("head.cls.w"), p.at("head.cls.b"), cache.h2act);
    cache.logits = {logits[0], logits[1]};

    const double mx = std::max(cache.logits[0], cache.logits[1]);
    const double e0 = std::exp(cache.logits[0] - mx), e1 = std::exp(cache.logits[1] - mx);
    cache.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

inline void backward_cached(const FusionConfig& cfg, const ParamStore& p, const Sample& s,
                            const SampleCache& cache, const std::array<double, 2>& dlogits,
                            ParamStore& g) {
    // head
    std::vector<double> dl = {dlogits[0], dlogits[1]};
    std::vector<double> dh2act(cache.h2act.size(), 0.0);
    linear_backward(p.at("head.cls.w"), cache.h2act, dl, g.at("head.cls.w"), g.at("head.cls.b"),
                    &dh2act);
    std::vector<double> dh2pre(dh2act.size());
    for (std::size_t i = 0; i < dh2act.size(); ++i)
        dh2pre[i] = dh2act[i] * gelu_prime(cache.h2pre[i]);
    std::vector<double> dh1act(cache.h1act.size(), 0.0);
    linear_backward(p.at("head.mlp2.w"), cache.h1act, dh2pre, g.at("head.mlp2.w"),
                    g.at("head.mlp2.b"), &dh1act);
    std::vector<double> dh1pre(dh1act.size());
    for (std::size_t i = 0; i < dh1act.size(); ++i)
        dh1pre[i] = dh1act[i] * gelu_prime(cache.h1pre[i]);
    std::vector<double> dz(cache.z.size(), 0.0);
    linear_backward(p.at("head.mlp1.w"), cache.z, dh1pre, g.at("head.mlp1.w"),
                    g.at("head.mlp1.b"), &dz);

    const int D = cfg.d_model;
    std::vector<std::vector<double>> denc;
    if (cfg.uses_image())
        denc.assign(cache.enc_out.size(), std::vector<double>(D, 0.0));

    auto pool_backward = [&](const double* dpool) {
        const double inv = 1.0 / cfg.n_tokens();
        for (auto& dt : denc)
            for (int d = 0; d < D; ++d) dt[d] += dpool[d] * inv;
    };

    auto ca_backward = [&](const std::string& prefix, const AttnCache& ca,
                           const std::vector<std::vector<double>>& tokens, const double* dfused,
                           std::vector<double>& df) {
        if (cfg.ca_direction == CrossAttentionDirection::VectorQueriesImage) {
            std::vector<std::vector<double>> dout = {std::vector<double>(dfused, dfused + D)};
            std::vector<std::vector<double>> dq(1, std::vector<double>(D, 0.0));
            attention_backward(cfg, p, prefix, ca, dout, g, dq, denc);
            for (int d = 0; d < D; ++d) df[d] += dfused[d] + dq[0][d];  // residual + query
        } else {
            const double inv = 1.0 / static_cast<double>(tokens.size());
            std::vector<std::vector<double>> dout(tokens.size(), std::vector<double>(D));
            for (std::size_t i = 0; i < tokens.size(); ++i)
                for (int d = 0; d < D; ++d) {
                    dout[i][d] = dfused[d] * inv;
                    denc[i][d] += dfused[d] * inv;  // residual on each image token
                }
            std::vector<std::vector<double>> dctx(1, std::vector<double>(D, 0.0));
            attention_backward(cfg, p, prefix, ca, dout, g, denc, dctx);
            for (int d = 0; d < D; ++d) df[d] += dctx[0][d];
        }
    };

    switch (cfg.modality) {
        case ModalityMode::TriModal: {
            std::vector<double> dfc(D, 0.0), dfv(D, 0.0);
            pool_backward(dz.data());
            ca_backward("ca_c", cache.ca_c, cache.enc_out, dz.data() + D, dfc);
            ca_backward("ca_v", cache.ca_v, cache.enc_out, dz.data() + 2 * D, dfv);
            mlp_backward(p, "mlp_c", cache.mlp_c, dfc, g);
            mlp_backward(p, "mlp_v", cache.mlp_v, dfv, g);
            break;
        }
        case ModalityMode::ImageOnly:
            pool_backward(dz.data());
            break;
        case ModalityMode::VectorsOnly: {
            std::vector<double> dfc(dz.begin(), dz.begin() + D);
            std::vector<double> dfv(dz.begin() + D, dz.end());
            mlp_backward(p, "mlp_c", cache.mlp_c, dfc, g);
            mlp_backward(p, "mlp_v", cache.mlp_v, dfv, g);
            break;
        }
    }

    if (cfg.uses_image()) {
        auto dx = denc;
        for (int i = cfg.n_encoder_blocks - 1; i >= 0; --i)
            dx = block_backward(cfg, p, "enc" + std::to_string(i), cache.blocks[i], dx, g);
        auto& dpos = g.at("pos_embed");
        for (int t = 0; t < cfg.n_tokens(); ++t) {
            for (int d = 0; d < D; ++d) dpos(t, d) += dx[t][d];
            linear_backward(p.at("patch_embed.w"), cache.patches[t], dx[t],
                            g.at("patch_embed.w"), g.at("patch_embed.b"), nullptr);
        }
    }
    (void)s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public operations

/// Image token sequence after patch embedding, positional embedding, and the
/// encoder stack: n_tokens rows of width d_model.
inline std::vector<std::vector<double>> encode_image(const FusionConfig& cfg,
                                                     const ParamStore& p,
                                                     const std::vector<double>& image) {
    detail::SampleCache cache;
    detail::encode_image_cached(cfg, p, image, cache);
    return cache.enc_out;
}

/// Single token of width d_model from a tabular vector. `which` selects the
/// branch: "mlp_c" for the clinical vector, "mlp_v" for the values vector.
inline std::vector<double> encode_vector(const FusionConfig& cfg, const ParamStore& p,
                                         const std::string& which,
                                         const std::vector<double>& v) {
    (void)cfg;
    detail::MlpCache cache;
    detail::mlp_forward(p, which, v, cache);
    return cache.out;
}

/// Fused token from cross-attending an embedded vector token with the image
/// token sequence, using tensors under `prefix` ("ca_c" or "ca_v").
inline std::vector<double> cross_attend(const FusionConfig& cfg, const ParamStore& p,
                                        const std::string& prefix, const std::vector<double>& f,
                                        const std::vector<std::vector<double>>& tokens) {
    detail::AttnCache cache;
    return detail::cross_attend_cached(cfg, p, prefix, f, tokens, cache);
}

struct ForwardResult {
    double p_superior = 0.5;
    double p_not_superior = 0.5;
};

/// Class probabilities for one sample (softmax over two logits; logit index
/// 1 is the Superior class, matching Sample::label).
inline ForwardResult forward(const FusionConfig& cfg, const ParamStore& p, const Sample& s) {
    detail::SampleCache cache;
    detail::forward_cached(cfg, p, s, cache);
    return {cache.probs[1], cache.probs[0]};
}

struct LossAndGrads {
    double loss = 0.0;
    ParamStore grads;
};

/// Mean cross-entropy over the batch with exact reverse-mode gradients for
/// every parameter tensor.
inline LossAndGrads loss_and_grads(const FusionConfig& cfg, const ParamStore& p,
                                   const std::vector<Sample>& batch) {
    if (batch.empty()) throw EmptyInputError("loss_and_grads: empty batch");
    LossAndGrads out;
    out.grads = p.zeros_like();
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        if (s.label != 0 && s.label != 1)
            throw std::invalid_argument("sample labels must be 0 or 1");
        detail::SampleCache cache;
        detail::forward_cached(cfg, p, s, cache);
        out.loss -= std::log(std::max(cache.probs[s.label], 1e-300)) * inv_b;
        std::array<double, 2> dlogits = {cache.probs[0] * inv_b, cache.probs[1] * inv_b};
        dlogits[s.label] -= inv_b;
        detail::backward_cached(cfg, p, s, cache, dlogits, out.grads);
    }
    if (!std::isfinite(out.loss)) throw DivergedError("loss is not finite");
    const std::string bad = out.grads.first_non_finite();
    if (!bad.empty()) throw NonFiniteError(bad);
    return out;
}

}  // namespace mhquant::fusion
