#include "smt/attention.hpp"
#include "smt/kernels.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace smt;
using smt::testing::finite_difference_error;
using smt::testing::max_abs_diff;
using smt::testing::random_tensor;

namespace {

AttentionConfig small_cfg(int d = 8, int heads = 2) {
    AttentionConfig cfg;
    cfg.d_x = cfg.d_y = cfg.d_k = cfg.d_v = d;
    cfg.heads = heads;
    return cfg;
}

Tensor2 permute_rows(const Tensor2& m, const std::vector<int>& perm) {
    Tensor2 out(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out.at(i, j) = m.at(perm[i], j);
    return out;
}

} // namespace

TEST_CASE("att matches closed forms") {
    Tape t;
    SUBCASE("identity-like two-key example") {
        Tape::Id u = t.constant(Tensor2(1, 2, {1, 0}));
        Tape::Id k = t.constant(Tensor2(2, 2, {1, 0, 0, 1}));
        Tape::Id v = t.constant(Tensor2(2, 2, {1, 0, 0, 1}));
        Tape::Id y = att(t, u, k, v);
        const double e = std::exp(1.0);
        CHECK(t.value(y).data[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
        CHECK(t.value(y).data[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
    }
    SUBCASE("uniform weights average the values") {
        Tape::Id u = t.constant(Tensor2(1, 2, {0, 0}));
        Tape::Id k = t.constant(Tensor2(3, 2, {1, 0, 1, 0, 1, 0}));
        Tape::Id v = t.constant(Tensor2(3, 1, {3, 6, 9}));
        Tape::Id y = att(t, u, k, v);
        CHECK(t.value(y).data[0] == doctest::Approx(6.0).epsilon(1e-14));
    }
    SUBCASE("straight-line kernel oracle on random inputs") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            Tape tt;
            const Tensor2 uu = random_tensor(5, 6, rng);
            const Tensor2 kk = random_tensor(9, 6, rng);
            const Tensor2 vv = random_tensor(9, 4, rng);
            Tape::Id y = att(tt, tt.constant(uu), tt.constant(kk), tt.constant(vv));
            const Tensor2 expected =
                kernels::mm_nn(kernels::softmax_rows(kernels::mm_nt(uu, kk)), vv);
            CHECK(max_abs_diff(tt.value(y), expected) < 1e-12);
        }
    }
}

TEST_CASE("att_block single head equals an explicit composition") {
    std::mt19937_64 rng(12);
    AttentionConfig cfg = small_cfg(6, 1);
    ParamStore store;
    init_attention_params(store, "blk", cfg, rng);
    const Tensor2 x = random_tensor(4, 6, rng);
    const Tensor2 y = random_tensor(7, 6, rng);

    Tape t;
    Tape::Id out = att_block(t, t.constant(x), t.constant(y), store, "blk", cfg);
    REQUIRE(t.value(out).rows == 4);
    REQUIRE(t.value(out).cols == 6);

    Tape r;
    Tape::Id xi = r.constant(x);
    Tape::Id yi = r.constant(y);
    Tape::Id attn = att(r, r.matmul(xi, r.param(store, "blk.wu")),
                        r.matmul(yi, r.param(store, "blk.wk")),
                        r.matmul(yi, r.param(store, "blk.wv")));
    Tape::Id h = r.layer_norm(r.add(attn, xi), r.param(store, "blk.ln1.gain"),
                              r.param(store, "blk.ln1.bias"));
    Tape::Id ff = r.relu(r.add_rowvec(r.matmul(h, r.param(store, "blk.ff.w")),
                                      r.param(store, "blk.ff.b")));
    Tape::Id ref = r.layer_norm(r.add(ff, h), r.param(store, "blk.ln2.gain"),
                                r.param(store, "blk.ln2.bias"));
    CHECK(max_abs_diff(t.value(out), r.value(ref)) < 1e-12);
}

TEST_CASE("encoder is permutation-equivariant, decoder permutation-invariant") {
    std::mt19937_64 rng(13);
    AttentionConfig cfg = small_cfg(8, 2);
    ParamStore store;
    init_attention_params(store, "enc", cfg, rng);
    init_attention_params(store, "dec", cfg, rng);

    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 14);
        const Tensor2 m = random_tensor(n, cfg.d_x, rng);
        const Tensor2 q = random_tensor(1, cfg.d_x, rng);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const Tensor2 mp = permute_rows(m, perm);

        Tape t1, t2;
        Tape::Id c1 = encode(t1, t1.constant(m), store, "enc", cfg);
        Tape::Id c2 = encode(t2, t2.constant(mp), store, "enc", cfg);
        CHECK(max_abs_diff(permute_rows(t1.value(c1), perm), t2.value(c2)) < 1e-10);

        Tape::Id d1 = decode(t1, t1.constant(q), c1, store, "dec", cfg);
        Tape::Id d2 = decode(t2, t2.constant(q), c2, store, "dec", cfg);
        REQUIRE(t1.value(d1).rows == 1);
        CHECK(max_abs_diff(t1.value(d1), t2.value(d2)) < 1e-10);
    }
}

TEST_CASE("att_fact shape and center-count independence") {
    std::mt19937_64 rng(14);
    AttentionConfig cfg = small_cfg(8, 2);
    ParamStore store;
    init_attention_params(store, "fact.inner", cfg, rng);
    init_attention_params(store, "fact.outer", cfg, rng);

    const Tensor2 m = random_tensor(12, cfg.d_x, rng);
    for (int k : {1, 3, 5}) {
        const Tensor2 centers = random_tensor(k, cfg.d_x, rng);
        Tape t;
        Tape::Id out = att_fact(t, t.constant(m), t.constant(centers), store,
                                "fact.inner", "fact.outer", cfg);
        CHECK(t.value(out).rows == m.rows);
        CHECK(t.value(out).cols == cfg.d_x);
        for (double v : t.value(out).data) CHECK(std::isfinite(v));
    }
}

TEST_CASE("att_fact with centers equal to the memory matches two stacked blocks") {
    std::mt19937_64 rng(15);
    AttentionConfig cfg = small_cfg(6, 1);
    ParamStore store;
    init_attention_params(store, "f.inner", cfg, rng);
    init_attention_params(store, "f.outer", cfg, rng);
    const Tensor2 m = random_tensor(5, cfg.d_x, rng);

    Tape t;
    Tape::Id fact = att_fact(t, t.constant(m), t.constant(m), store, "f.inner",
                             "f.outer", cfg);
    Tape r;
    Tape::Id mi = r.constant(m);
    Tape::Id inner = att_block(r, mi, mi, store, "f.inner", cfg);
    Tape::Id ref = att_block(r, mi, inner, store, "f.outer", cfg);
    CHECK(max_abs_diff(t.value(fact), r.value(ref)) < 1e-12);
}

TEST_CASE("finite differences through encode and att_fact") {
    std::mt19937_64 rng(16);
    AttentionConfig cfg = small_cfg(4, 2);
    ParamStore store;
    init_attention_params(store, "enc", cfg, rng);
    init_attention_params(store, "f.inner", cfg, rng);
    init_attention_params(store, "f.outer", cfg, rng);
    const Tensor2 m = random_tensor(3, cfg.d_x, rng);
    const Tensor2 centers = random_tensor(2, cfg.d_x, rng);

    auto loss_value = [&] {
        Tape t;
        Tape::Id enc = encode(t, t.constant(m), store, "enc", cfg);
        Tape::Id fact = att_fact(t, t.constant(m), t.constant(centers), store,
                                 "f.inner", "f.outer", cfg);
        return t.value(t.sum_all(t.huber(t.add(enc, fact), 0.25))).data[0];
    };
    auto grads_of = [&](const std::string& name) {
        return [&store, &m, &centers, &cfg, name] {
            Tape t;
            Tape::Id enc = encode(t, t.constant(m), store, "enc", cfg);
            Tape::Id fact = att_fact(t, t.constant(m), t.constant(centers), store,
                                     "f.inner", "f.outer", cfg);
            t.backward(t.sum_all(t.huber(t.add(enc, fact), 0.25)));
            GradMap grads;
            t.accumulate_param_grads(grads);
            return grads.at(name);
        };
    };
    for (const char* name :
         {"enc.wu", "enc.wk", "enc.wv", "enc.ff.w", "enc.ln1.gain", "f.inner.wv",
          "f.outer.wu", "f.outer.ln2.bias"}) {
        CHECK_MESSAGE(finite_difference_error(store, name, loss_value, grads_of(name)) <
                          1e-4,
                      name);
    }
}

TEST_CASE("attention config validation") {
    AttentionConfig cfg = small_cfg(8, 3);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg(8, 2);
    cfg.d_v = 6; // residual add needs d_v == d_x
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_NOTHROW(small_cfg(8, 2).validate());
}
