#include "smt/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace smt {

void AttentionConfig::validate() const {
    if (d_x <= 0 || d_y <= 0 || d_k <= 0 || d_v <= 0 || heads <= 0)
        throw std::invalid_argument("AttentionConfig: dimensions must be positive");
    if (d_v != d_x)
        throw std::invalid_argument("AttentionConfig: d_v must equal d_x for the residual");
    if (d_k % heads != 0 || d_v % heads != 0)
        throw std::invalid_argument("AttentionConfig: d_k and d_v must be divisible by heads");
}

void init_attention_params(ParamStore& store, const std::string& prefix,
                           const AttentionConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const double wq = 1.0 / std::sqrt(static_cast<double>(cfg.d_x));
    const double wy = 1.0 / std::sqrt(static_cast<double>(cfg.d_y));
    const double wv = 1.0 / std::sqrt(static_cast<double>(cfg.d_v));
    store.add_gaussian(prefix + ".wu", cfg.d_x, cfg.d_k, wq, rng);
    store.add_gaussian(prefix + ".wk", cfg.d_y, cfg.d_k, wy, rng);
    store.add_gaussian(prefix + ".wv", cfg.d_y, cfg.d_v, wy, rng);
    store.add_gaussian(prefix + ".ff.w", cfg.d_v, cfg.d_v, wv, rng);
    store.add_zeros(prefix + ".ff.b", 1, cfg.d_v);
    store.add_const(prefix + ".ln1.gain", 1, cfg.d_v, 1.0);
    store.add_zeros(prefix + ".ln1.bias", 1, cfg.d_v);
    store.add_const(prefix + ".ln2.gain", 1, cfg.d_v, 1.0);
    store.add_zeros(prefix + ".ln2.bias", 1, cfg.d_v);
}

Tape::Id att(Tape& t, Tape::Id u, Tape::Id k, Tape::Id v) {
    require_shape(t.value(u).cols == t.value(k).cols,
                  "att key dim of U " + t.value(u).shape_str() + " vs K " +
                      t.value(k).shape_str());
    require_shape(t.value(k).rows == t.value(v).rows,
                  "att K rows " + t.value(k).shape_str() + " vs V rows " +
                      t.value(v).shape_str());
    Tape::Id logits = t.matmul_nt(u, k);
    Tape::Id weights = t.softmax_rows(logits);
    return t.matmul(weights, v);
}

Tape::Id att_block(Tape& t, Tape::Id x, Tape::Id y, const ParamStore& store,
                   const std::string& prefix, const AttentionConfig& cfg) {
    cfg.validate();
    require_shape(t.value(x).cols == cfg.d_x,
                  "att_block X cols " + t.value(x).shape_str() + " vs d_x");
    require_shape(t.value(y).cols == cfg.d_y,
                  "att_block Y cols " + t.value(y).shape_str() + " vs d_y");

    Tape::Id wu = t.param(store, prefix + ".wu");
    Tape::Id wk = t.param(store, prefix + ".wk");
    Tape::Id wv = t.param(store, prefix + ".wv");
    Tape::Id u = t.matmul(x, wu);
    Tape::Id k = t.matmul(y, wk);
    Tape::Id v = t.matmul(y, wv);

    Tape::Id attended;
    if (cfg.heads == 1) {
        attended = att(t, u, k, v);
    } else {
        const int hk = cfg.d_k / cfg.heads;
        const int hv = cfg.d_v / cfg.heads;
        std::vector<Tape::Id> heads;
        heads.reserve(cfg.heads);
        for (int h = 0; h < cfg.heads; ++h) {
            Tape::Id uh = t.slice_cols(u, h * hk, (h + 1) * hk);
            Tape::Id kh = t.slice_cols(k, h * hk, (h + 1) * hk);
            Tape::Id vh = t.slice_cols(v, h * hv, (h + 1) * hv);
            heads.push_back(att(t, uh, kh, vh));
        }
        attended = t.concat_cols(heads);
    }

    Tape::Id ln1g = t.param(store, prefix + ".ln1.gain");
    Tape::Id ln1b = t.param(store, prefix + ".ln1.bias");
    Tape::Id h = t.layer_norm(t.add(attended, x), ln1g, ln1b);

    Tape::Id ffw = t.param(store, prefix + ".ff.w");
    Tape::Id ffb = t.param(store, prefix + ".ff.b");
    Tape::Id fc = t.relu(t.add_rowvec(t.matmul(h, ffw), ffb));

    Tape::Id ln2g = t.param(store, prefix + ".ln2.gain");
    Tape::Id ln2b = t.param(store, prefix + ".ln2.bias");
    return t.layer_norm(t.add(fc, h), ln2g, ln2b);
}

Tape::Id encode(Tape& t, Tape::Id m, const ParamStore& store, const std::string& prefix,
                const AttentionConfig& cfg) {
    if (t.value(m).rows < 1) throw std::logic_error("encode: empty memory");
    return att_block(t, m, m, store, prefix, cfg);
}

Tape::Id decode(Tape& t, Tape::Id q, Tape::Id context, const ParamStore& store,
                const std::string& prefix, const AttentionConfig& cfg) {
    require_shape(t.value(q).rows == 1, "decode query must be a single row, got " +
                                            t.value(q).shape_str());
    return att_block(t, q, context, store, prefix, cfg);
}

Tape::Id att_fact(Tape& t, Tape::Id m, Tape::Id m_centers, const ParamStore& store,
                  const std::string& prefix_inner, const std::string& prefix_outer,
                  const AttentionConfig& cfg) {
    if (t.value(m_centers).rows < 1) throw std::logic_error("att_fact: empty center set");
    Tape::Id inner = att_block(t, m_centers, m, store, prefix_inner, cfg);
    return att_block(t, m, inner, store, prefix_outer, cfg);
}

} // namespace smt
