#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "epo/util.hpp"

namespace epo::seqmodel {

// ---------------------------------------------------------------------------
// Parameters. One flat 64-bit buffer with named sections, so the optimizer,
// finite-difference checks, and checkpoints can treat the model as a vector.
//
// Architecture: token+position embedding, a single causal mixer block
// (current token, previous token, running mean of the prefix -> tanh), a
// logit projection for autoregressive prediction, and a pooled scalar head
// for scoring.
// ---------------------------------------------------------------------------

struct ModelParams {
    int vocab = 0;
    int dim = 0;
    int maxlen = 0;
    std::vector<double> data;

    // section offsets
    std::size_t off_embed = 0, off_pos = 0, off_wcur = 0, off_wprev = 0, off_wmean = 0,
                off_bmix = 0, off_wout = 0, off_bout = 0, off_wscore = 0, off_bscore = 0;

    static ModelParams shaped(int vocab, int dim, int maxlen) {
        ModelParams p;
        p.vocab = vocab;
        p.dim = dim;
        p.maxlen = maxlen;
        std::size_t v = std::size_t(vocab), d = std::size_t(dim), l = std::size_t(maxlen);
        std::size_t off = 0;
        p.off_embed = off;
        off += v * d;
        p.off_pos = off;
        off += l * d;
        p.off_wcur = off;
        off += d * d;
        p.off_wprev = off;
        off += d * d;
        p.off_wmean = off;
        off += d * d;
        p.off_bmix = off;
        off += d;
        p.off_wout = off;
        off += v * d;
        p.off_bout = off;
        off += v;
        p.off_wscore = off;
        off += d;
        p.off_bscore = off;
        off += 1;
        p.data.assign(off, 0.0);
        return p;
    }

    std::size_t size() const { return data.size(); }

    const double* embed_row(int t) const { return &data[off_embed + std::size_t(t) * std::size_t(dim)]; }
    double* embed_row(int t) { return &data[off_embed + std::size_t(t) * std::size_t(dim)]; }
    const double* pos_row(int i) const { return &data[off_pos + std::size_t(i) * std::size_t(dim)]; }
    double* pos_row(int i) { return &data[off_pos + std::size_t(i) * std::size_t(dim)]; }
    const double* wout_row(int t) const { return &data[off_wout + std::size_t(t) * std::size_t(dim)]; }
    double* wout_row(int t) { return &data[off_wout + std::size_t(t) * std::size_t(dim)]; }

    bool same_shape(const ModelParams& o) const {
        return vocab == o.vocab && dim == o.dim && maxlen == o.maxlen;
    }

    bool finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

using Gradient = ModelParams;

inline ModelParams zeros_like(const ModelParams& p) {
    return ModelParams::shaped(p.vocab, p.dim, p.maxlen);
}

inline void axpy(ModelParams& y, double a, const ModelParams& x) {
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

inline void scale(ModelParams& y, double a) {
    for (double& v : y.data) v *= a;
}

inline double sq_norm(const ModelParams& p) {
    double s = 0;
    for (double v : p.data) s += v * v;
    return s;
}

// Deterministic scaled-uniform initialization, scale 1/sqrt(dim).
inline ModelParams init(int vocab, int dim, int maxlen, std::uint64_t seed) {
    if (dim < 4) throw ConfigError("model dim must be >= 4");
    if (vocab < 2) throw ConfigError("vocab size must be >= 2");
    if (maxlen < 2) throw ConfigError("maxlen must be >= 2");
    ModelParams p = ModelParams::shaped(vocab, dim, maxlen);
    Rng rng(seed);
    double s = 1.0 / std::sqrt(double(dim));
    auto fill = [&](std::size_t off, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) p.data[off + i] = rng.uniform_range(-s, s);
    };
    std::size_t v = std::size_t(vocab), d = std::size_t(dim), l = std::size_t(maxlen);
    fill(p.off_embed, v * d);
    fill(p.off_pos, l * d);
    fill(p.off_wcur, d * d);
    fill(p.off_wprev, d * d);
    fill(p.off_wmean, d * d);
    // b_mix stays zero
    fill(p.off_wout, v * d);
    // b_out stays zero
    fill(p.off_wscore, d);
    // b_score stays zero
    return p;
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

namespace detail {

inline void check_tokens(const ModelParams& p, std::span<const int> tokens) {
    for (int t : tokens)
        if (t < 0 || t >= p.vocab) throw VocabError("token id out of vocabulary range");
}

inline int pos_index(const ModelParams& p, std::size_t i) {
    return int(i) < p.maxlen ? int(i) : p.maxlen - 1;
}

struct ForwardCache {
    std::size_t T = 0;
    std::vector<double> e;  // T x d token+position embeddings
    std::vector<double> m;  // T x d causal running means
    std::vector<double> h;  // T x d mixer activations
};

inline ForwardCache forward_states(const ModelParams& p, std::span<const int> seq) {
    const std::size_t d = std::size_t(p.dim);
    ForwardCache c;
    c.T = seq.size();
    c.e.assign(c.T * d, 0.0);
    c.m.assign(c.T * d, 0.0);
    c.h.assign(c.T * d, 0.0);
    std::vector<double> sum(d, 0.0);
    for (std::size_t i = 0; i < c.T; ++i) {
        const double* er = p.embed_row(seq[i]);
        const double* pr = p.pos_row(pos_index(p, i));
        double* ei = &c.e[i * d];
        for (std::size_t k = 0; k < d; ++k) ei[k] = er[k] + pr[k];
        for (std::size_t k = 0; k < d; ++k) sum[k] += ei[k];
        double inv = 1.0 / double(i + 1);
        double* mi = &c.m[i * d];
        for (std::size_t k = 0; k < d; ++k) mi[k] = sum[k] * inv;
        const double* prev = i > 0 ? &c.e[(i - 1) * d] : nullptr;
        double* hi = &c.h[i * d];
        for (std::size_t r = 0; r < d; ++r) {
            const double* wc = &p.data[p.off_wcur + r * d];
            const double* wp = &p.data[p.off_wprev + r * d];
            const double* wm = &p.data[p.off_wmean + r * d];
            double a = p.data[p.off_bmix + r];
            for (std::size_t k = 0; k < d; ++k) a += wc[k] * ei[k];
            if (prev)
                for (std::size_t k = 0; k < d; ++k) a += wp[k] * prev[k];
            for (std::size_t k = 0; k < d; ++k) a += wm[k] * mi[k];
            hi[r] = std::tanh(a);
        }
    }
    return c;
}

// log-softmax of the logits at state i; returns logZ and fills logits.
inline double logits_at(const ModelParams& p, const ForwardCache& c, std::size_t i,
                        std::vector<double>& logits) {
    const std::size_t d = std::size_t(p.dim);
    logits.assign(std::size_t(p.vocab), 0.0);
    const double* hi = &c.h[i * d];
    for (int t = 0; t < p.vocab; ++t) {
        const double* w = p.wout_row(t);
        double a = p.data[p.off_bout + std::size_t(t)];
        for (std::size_t k = 0; k < d; ++k) a += w[k] * hi[k];
        logits[std::size_t(t)] = a;
    }
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0;
    for (double v : logits) z += std::exp(v - mx);
    return mx + std::log(z);
}

// Shared state-gradient backpropagation: given da (T x d preactivation
// gradients), accumulate into parameter gradients.
inline void backward_states(const ModelParams& p, std::span<const int> seq,
                            const ForwardCache& c, const std::vector<double>& da, Gradient& g) {
    const std::size_t d = std::size_t(p.dim);
    const std::size_t T = c.T;
    std::vector<double> de(T * d, 0.0);

    for (std::size_t i = 0; i < T; ++i) {
        const double* dai = &da[i * d];
        bool any = false;
        for (std::size_t r = 0; r < d; ++r)
            if (dai[r] != 0.0) any = true;
        if (!any) continue;
        const double* ei = &c.e[i * d];
        const double* mi = &c.m[i * d];
        const double* prev = i > 0 ? &c.e[(i - 1) * d] : nullptr;
        for (std::size_t r = 0; r < d; ++r) {
            double v = dai[r];
            if (v == 0.0) continue;
            double* gwc = &g.data[g.off_wcur + r * d];
            double* gwm = &g.data[g.off_wmean + r * d];
            for (std::size_t k = 0; k < d; ++k) gwc[k] += v * ei[k];
            for (std::size_t k = 0; k < d; ++k) gwm[k] += v * mi[k];
            if (prev) {
                double* gwp = &g.data[g.off_wprev + r * d];
                for (std::size_t k = 0; k < d; ++k) gwp[k] += v * prev[k];
            }
            g.data[g.off_bmix + r] += v;
        }
    }

    // de_u collects W_cur^T da_u, W_prev^T da_{u+1}, and the mean-path suffix
    // sum over i >= u of W_mean^T da_i / (i+1).
    std::vector<double> acc(d, 0.0);
    std::vector<double> tmp(d, 0.0);
    for (std::size_t u = T; u-- > 0;) {
        const double* dau = &da[u * d];
        bool any = false;
        for (std::size_t r = 0; r < d; ++r)
            if (dau[r] != 0.0) any = true;
        if (any) {
            double inv = 1.0 / double(u + 1);
            for (std::size_t k = 0; k < d; ++k) tmp[k] = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                double v = dau[r];
                if (v == 0.0) continue;
                const double* wm = &p.data[p.off_wmean + r * d];
                for (std::size_t k = 0; k < d; ++k) tmp[k] += v * wm[k];
            }
            for (std::size_t k = 0; k < d; ++k) acc[k] += tmp[k] * inv;

            double* deu = &de[u * d];
            for (std::size_t r = 0; r < d; ++r) {
                double v = dau[r];
                if (v == 0.0) continue;
                const double* wc = &p.data[p.off_wcur + r * d];
                for (std::size_t k = 0; k < d; ++k) deu[k] += v * wc[k];
            }
            if (u > 0) {
                double* dep = &de[(u - 1) * d];
                for (std::size_t r = 0; r < d; ++r) {
                    double v = dau[r];
                    if (v == 0.0) continue;
                    const double* wp = &p.data[p.off_wprev + r * d];
                    for (std::size_t k = 0; k < d; ++k) dep[k] += v * wp[k];
                }
            }
        }
        double* deu = &de[u * d];
        for (std::size_t k = 0; k < d; ++k) deu[k] += acc[k];
    }

    for (std::size_t u = 0; u < T; ++u) {
        const double* deu = &de[u * d];
        double* ge = g.embed_row(seq[u]);
        double* gp = g.pos_row(pos_index(p, u));
        for (std::size_t k = 0; k < d; ++k) {
            ge[k] += deu[k];
            gp[k] += deu[k];
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Log-probability (teacher forcing), sampling, scoring
// ---------------------------------------------------------------------------

struct LogProbResult {
    double total = 0.0;
    std::vector<double> per_token;
};

inline LogProbResult logprob(const ModelParams& p, std::span<const int> context,
                             std::span<const int> output) {
    if (context.empty()) throw Error("context must be non-empty");
    if (output.empty()) throw Error("output must be non-empty");
    detail::check_tokens(p, context);
    detail::check_tokens(p, output);

    std::vector<int> seq(context.begin(), context.end());
    seq.insert(seq.end(), output.begin(), output.end());
    auto cache = detail::forward_states(p, seq);

    LogProbResult res;
    std::vector<double> logits;
    for (std::size_t j = context.size(); j < seq.size(); ++j) {
        double logZ = detail::logits_at(p, cache, j - 1, logits);
        double lp = logits[std::size_t(seq[j])] - logZ;
        res.per_token.push_back(lp);
        res.total += lp;
    }
    return res;
}

// Exact reverse-mode gradient of logprob(...).total with respect to every
// parameter. Optionally returns the forward result as well.
inline Gradient grad_logprob(const ModelParams& p, std::span<const int> context,
                             std::span<const int> output, LogProbResult* fwd = nullptr) {
    if (context.empty()) throw Error("context must be non-empty");
    if (output.empty()) throw Error("output must be non-empty");
    detail::check_tokens(p, context);
    detail::check_tokens(p, output);

    const std::size_t d = std::size_t(p.dim);
    std::vector<int> seq(context.begin(), context.end());
    seq.insert(seq.end(), output.begin(), output.end());
    auto cache = detail::forward_states(p, seq);

    Gradient g = zeros_like(p);
    std::vector<double> da(cache.T * d, 0.0);
    LogProbResult res;
    std::vector<double> logits;

    for (std::size_t j = context.size(); j < seq.size(); ++j) {
        std::size_t i = j - 1;  // state predicting seq[j]
        double logZ = detail::logits_at(p, cache, i, logits);
        double lp = logits[std::size_t(seq[j])] - logZ;
        res.per_token.push_back(lp);
        res.total += lp;

        // d(logprob)/dlogits = onehot - softmax
        const double* hi = &cache.h[i * d];
        double* dai = &da[i * d];
        for (int t = 0; t < p.vocab; ++t) {
            double soft = std::exp(logits[std::size_t(t)] - logZ);
            double dl = (t == seq[j] ? 1.0 : 0.0) - soft;
            if (dl == 0.0) continue;
            double* gw = g.wout_row(t);
            for (std::size_t k = 0; k < d; ++k) gw[k] += dl * hi[k];
            g.data[g.off_bout + std::size_t(t)] += dl;
            const double* w = p.wout_row(t);
            for (std::size_t k = 0; k < d; ++k)
                dai[k] += dl * w[k] * (1.0 - hi[k] * hi[k]);
        }
    }

    detail::backward_states(p, seq, cache, da, g);
    if (fwd) *fwd = std::move(res);
    return g;
}

// Ancestral sampling until a terminal token or max_len. Deterministic given
// the rng state; greedy mode ignores the rng and picks the argmax (lowest id
// on ties).
inline std::vector<int> sample(const ModelParams& p, std::span<const int> context,
                               double temperature, Rng& rng, int max_len,
                               std::span<const int> terminal_tokens, bool greedy = false) {
    if (context.empty()) throw Error("context must be non-empty");
    if (!greedy && temperature <= 0) throw Error("temperature must be > 0");
    if (max_len < 1) throw Error("max_len must be >= 1");
    detail::check_tokens(p, context);

    std::vector<int> seq(context.begin(), context.end());
    std::vector<int> generated;
    std::vector<double> logits;
    for (int n = 0; n < max_len; ++n) {
        auto cache = detail::forward_states(p, seq);
        detail::logits_at(p, cache, seq.size() - 1, logits);
        int chosen = 0;
        if (greedy) {
            for (int t = 1; t < p.vocab; ++t)
                if (logits[std::size_t(t)] > logits[std::size_t(chosen)]) chosen = t;
        } else {
            double u = rng.uniform();
            // temperature-scaled softmax
            double mx = logits[0] / temperature;
            for (int t = 1; t < p.vocab; ++t) mx = std::max(mx, logits[std::size_t(t)] / temperature);
            double z = 0;
            for (int t = 0; t < p.vocab; ++t) z += std::exp(logits[std::size_t(t)] / temperature - mx);
            double cum = 0;
            chosen = p.vocab - 1;
            for (int t = 0; t < p.vocab; ++t) {
                cum += std::exp(logits[std::size_t(t)] / temperature - mx) / z;
                if (u < cum) {
                    chosen = t;
                    break;
                }
            }
        }
        generated.push_back(chosen);
        seq.push_back(chosen);
        for (int t : terminal_tokens)
            if (chosen == t) return generated;
    }
    return generated;
}

// Pooled scalar head: mean of mixer activations through the score weights.
// logistic(score) is the reward estimate.
inline double score(const ModelParams& p, std::span<const int> tokens) {
    if (tokens.empty()) throw Error("score input must be non-empty");
    detail::check_tokens(p, tokens);
    const std::size_t d = std::size_t(p.dim);
    auto cache = detail::forward_states(p, tokens);
    std::vector<double> pooled(d, 0.0);
    for (std::size_t i = 0; i < cache.T; ++i)
        for (std::size_t k = 0; k < d; ++k) pooled[k] += cache.h[i * d + k];
    double inv = 1.0 / double(cache.T);
    double logit = p.data[p.off_bscore];
    for (std::size_t k = 0; k < d; ++k)
        logit += p.data[p.off_wscore + k] * pooled[k] * inv;
    return logit;
}

inline Gradient grad_score(const ModelParams& p, std::span<const int> tokens,
                           double* logit_out = nullptr) {
    if (tokens.empty()) throw Error("score input must be non-empty");
    detail::check_tokens(p, tokens);
    const std::size_t d = std::size_t(p.dim);
    auto cache = detail::forward_states(p, tokens);

    std::vector<double> pooled(d, 0.0);
    for (std::size_t i = 0; i < cache.T; ++i)
        for (std::size_t k = 0; k < d; ++k) pooled[k] += cache.h[i * d + k];
    double inv = 1.0 / double(cache.T);
    double logit = p.data[p.off_bscore];
    for (std::size_t k = 0; k < d; ++k)
        logit += p.data[p.off_wscore + k] * pooled[k] * inv;

    Gradient g = zeros_like(p);
    for (std::size_t k = 0; k < d; ++k) g.data[g.off_wscore + k] = pooled[k] * inv;
    g.data[g.off_bscore] = 1.0;

    std::vector<double> da(cache.T * d, 0.0);
    for (std::size_t i = 0; i < cache.T; ++i) {
        const double* hi = &cache.h[i * d];
        double* dai = &da[i * d];
        for (std::size_t k = 0; k < d; ++k) {
            double dh = p.data[p.off_wscore + k] * inv;
            dai[k] = dh * (1.0 - hi[k] * hi[k]);
        }
    }
    detail::backward_states(p, tokens, cache, da, g);
    if (logit_out) *logit_out = logit;
    return g;
}

// ---------------------------------------------------------------------------
// Checkpoints: fixed header + flat little-endian 64-bit array
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointMagic = 0x4D4F5045;  // "EPOM"
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const ModelParams& p, const std::string& path,
                            std::uint64_t vocab_hash) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    auto put32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    auto put64 = [&](std::uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    put32(kCheckpointMagic);
    put32(kCheckpointVersion);
    put32(std::uint32_t(p.vocab));
    put32(std::uint32_t(p.dim));
    put32(std::uint32_t(p.maxlen));
    put32(0);  // reserved
    put64(vocab_hash);
    put64(std::uint64_t(p.data.size()));
    f.write(reinterpret_cast<const char*>(p.data.data()),
            std::streamsize(p.data.size() * sizeof(double)));
    if (!f) throw IoError("failed writing checkpoint: " + path);
}

inline ModelParams load_checkpoint(const std::string& path, std::uint64_t expected_vocab_hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read checkpoint: " + path);
    auto get32 = [&] {
        std::uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get64 = [&] {
        std::uint64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    if (get32() != kCheckpointMagic) throw IoError("bad checkpoint magic: " + path);
    if (get32() != kCheckpointVersion) throw IoError("unsupported checkpoint version: " + path);
    int vocab = int(get32());
    int dim = int(get32());
    int maxlen = int(get32());
    get32();  // reserved
    std::uint64_t vocab_hash = get64();
    if (expected_vocab_hash != 0 && vocab_hash != expected_vocab_hash)
        throw IoError("checkpoint vocabulary hash mismatch: " + path);
    std::uint64_t n = get64();
    ModelParams p = ModelParams::shaped(vocab, dim, maxlen);
    if (n != p.data.size()) throw IoError("checkpoint size mismatch: " + path);
    f.read(reinterpret_cast<char*>(p.data.data()), std::streamsize(n * sizeof(double)));
    if (!f) throw IoError("truncated checkpoint: " + path);
    return p;
}

}  // namespace epo::seqmodel
