#pragma once

#include "smt/param_store.hpp"
#include "smt/tape.hpp"

#include <string>

namespace smt {

/// Dimensions of one attention block. d_v must equal d_x so the residual
/// add is well-formed, and d_k/d_v must split evenly across heads.
struct AttentionConfig {
    int d_x = 128;
    int d_y = 128;
    int d_k = 128;
    int d_v = 128;
    int heads = 8;

    void validate() const;
};

/// Registers the projection matrices, feed-forward layer and the two
/// layer-norm gain/bias pairs of one block under `prefix.`.
void init_attention_params(ParamStore& store, const std::string& prefix,
                           const AttentionConfig& cfg, std::mt19937_64& rng);

/// Att(U, K, V) = softmax(U K^T) V.
Tape::Id att(Tape& t, Tape::Id u, Tape::Id k, Tape::Id v);

/// AttBlock(X, Y) = LN(FC(H) + H), H = LN(Att(X W^U, Y W^K, Y W^V) + X),
/// with the attention run per head on d_k/h key and d_v/h value slices and
/// head outputs concatenated before the residual add.
Tape::Id att_block(Tape& t, Tape::Id x, Tape::Id y, const ParamStore& store,
                   const std::string& prefix, const AttentionConfig& cfg);

/// Encoder(M) = AttBlock(M, M).
Tape::Id encode(Tape& t, Tape::Id m, const ParamStore& store, const std::string& prefix,
                const AttentionConfig& cfg);

/// Decoder(q, C) = AttBlock(q, C) with a single query row.
Tape::Id decode(Tape& t, Tape::Id q, Tape::Id context, const ParamStore& store,
                const std::string& prefix, const AttentionConfig& cfg);

/// AttFact(M, M~) = AttBlock(M, AttBlock(M~, M)); the two blocks carry
/// independent parameters under `prefix_inner.` and `prefix_outer.`.
Tape::Id att_fact(Tape& t, Tape::Id m, Tape::Id m_centers, const ParamStore& store,
                  const std::string& prefix_inner, const std::string& prefix_outer,
                  const AttentionConfig& cfg);

} // namespace smt
