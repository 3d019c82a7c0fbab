#include "smt/policy.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

using namespace smt;
using smt::testing::random_tensor;

namespace {

PolicyConfig tiny_policy(PolicyKind kind) {
    PolicyConfig cfg;
    cfg.kind = kind;
    cfg.capacity = 16;
    cfg.num_centers = 3;
    cfg.q_hidden = 8;
    cfg.emb.rays = 4;
    cfg.emb.num_classes = 2;
    cfg.emb.d_image = 6;
    cfg.emb.d_pose = 4;
    cfg.emb.d_action = 4;
    cfg.emb.d_x = 8;
    cfg.att.d_x = cfg.att.d_y = cfg.att.d_k = cfg.att.d_v = 8;
    cfg.att.heads = 2;
    return cfg;
}

Observation make_obs(const EmbeddingConfig& cfg, int t, std::mt19937_64& rng) {
    Observation o;
    std::uniform_real_distribution<double> depth(0.2, 4.5);
    o.depth.resize(cfg.rays);
    o.validity.assign(cfg.rays, 1.0);
    o.semantic.assign(static_cast<size_t>(cfg.rays) * cfg.semantic_channels(), 0.0);
    for (int i = 0; i < cfg.rays; ++i) {
        o.depth[i] = depth(rng);
        o.semantic[static_cast<size_t>(i) * cfg.semantic_channels() +
                   rng() % cfg.semantic_channels()] = 1.0;
    }
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    o.pose = {u(rng), u(rng), u(rng) / 2.0};
    o.prev_action = static_cast<Action>(t == 0 ? 3 : static_cast<int>(rng() % 3));
    o.t = t;
    return o;
}

SceneMemory filled_memory(const PolicyConfig& cfg, const ParamStore& store, int n,
                          std::mt19937_64& rng) {
    SceneMemory mem(cfg.capacity);
    for (int t = 0; t < n; ++t) mem.update(make_obs(cfg.emb, t, rng), store, cfg.emb);
    return mem;
}

} // namespace

TEST_CASE("random policy is the exact uniform distribution") {
    PolicyConfig cfg = tiny_policy(PolicyKind::Random);
    ParamStore store;
    std::mt19937_64 rng(51);
    init_policy_params(store, cfg, rng);
    SceneMemory mem = filled_memory(cfg, store, 1, rng);
    const Observation o = mem.elements().back().obs;

    const PolicyEval ev = policy_forward(o, mem, cfg, store);
    CHECK(ev.tape == nullptr);
    for (double q : ev.dist.q) CHECK(q == 0.0);
    for (double p : ev.dist.p) CHECK(p == 1.0 / 3.0);
}

TEST_CASE("each policy kind produces a valid distribution and a live tape") {
    std::mt19937_64 rng(52);
    for (PolicyKind kind : {PolicyKind::Smt, PolicyKind::SmtFact, PolicyKind::SmPool,
                            PolicyKind::Reactive}) {
        PolicyConfig cfg = tiny_policy(kind);
        ParamStore store;
        init_policy_params(store, cfg, rng);
        SceneMemory mem = filled_memory(cfg, store, 6, rng);
        const Observation o = mem.elements().back().obs;

        const PolicyEval ev = policy_forward(o, mem, cfg, store);
        REQUIRE(ev.tape != nullptr);
        REQUIRE(ev.q_id >= 0);
        CHECK(ev.tape->value(ev.q_id).rows == 1);
        CHECK(ev.tape->value(ev.q_id).cols == kNumActions);
        double sum = 0.0;
        for (double p : ev.dist.p) {
            CHECK(p > 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        for (int a = 0; a < kNumActions; ++a)
            CHECK(ev.dist.q[a] == ev.tape->value(ev.q_id).data[a]);

        // gradients reach the q-head
        Tape& t = *ev.tape;
        t.backward(t.sum_all(t.huber(ev.q_id, 1.0)));
        GradMap grads;
        t.accumulate_param_grads(grads);
        double norm = 0.0;
        for (double g : grads.at("q.fc1.w").data) norm += g * g;
        CHECK(norm > 0.0);
    }
}

TEST_CASE("with a single memory row attention weights cancel out") {
    // softmax over one key is identically 1 regardless of W^U and W^K, so
    // perturbing them must not change the action distribution.
    std::mt19937_64 rng(53);
    PolicyConfig cfg = tiny_policy(PolicyKind::Smt);
    ParamStore store;
    init_policy_params(store, cfg, rng);
    SceneMemory mem = filled_memory(cfg, store, 1, rng);
    const Observation o = mem.elements().back().obs;

    const ActionDistribution before = policy_forward(o, mem, cfg, store).dist;
    for (const char* name : {"enc.wu", "enc.wk", "dec.wu", "dec.wk"}) {
        for (double& v : store.mutable_value(name).data) v += 0.37;
    }
    const ActionDistribution after = policy_forward(o, mem, cfg, store).dist;
    for (int a = 0; a < kNumActions; ++a)
        CHECK(std::abs(before.p[a] - after.p[a]) <= 1e-10);
}

TEST_CASE("smt policy with temporal mode none ignores insertion order") {
    std::mt19937_64 rng(54);
    PolicyConfig cfg = tiny_policy(PolicyKind::Smt);
    cfg.emb.temporal = TemporalMode::None;
    ParamStore store;
    init_policy_params(store, cfg, rng);

    std::vector<Observation> obs;
    for (int t = 0; t < 5; ++t) obs.push_back(make_obs(cfg.emb, t, rng));

    SceneMemory mem1(cfg.capacity), mem2(cfg.capacity);
    for (const Observation& o : obs) mem1.update(o, store, cfg.emb);
    // same set, different arrival order (timestamps must stay increasing,
    // so re-stamp; with temporal none the stamp does not enter the features)
    const std::vector<int> order{2, 0, 4, 1, 3};
    for (size_t i = 0; i < order.size(); ++i) {
        Observation o = obs[order[i]];
        o.t = static_cast<int>(i);
        mem2.update(o, store, cfg.emb);
    }
    Observation query = obs.back();
    const ActionDistribution d1 = policy_forward(query, mem1, cfg, store).dist;
    const ActionDistribution d2 = policy_forward(query, mem2, cfg, store).dist;
    for (int a = 0; a < kNumActions; ++a) CHECK(std::abs(d1.p[a] - d2.p[a]) <= 1e-10);
}

TEST_CASE("with_temperature") {
    ActionDistribution d;
    d.q = {1.0, 2.0, 3.0};
    SUBCASE("matches the direct softmax of q/T") {
        const ActionDistribution out = with_temperature(d, 0.5);
        double z = 0.0;
        std::array<double, 3> e{};
        for (int a = 0; a < 3; ++a) z += (e[a] = std::exp(d.q[a] / 0.5 - 6.0));
        for (int a = 0; a < 3; ++a)
            CHECK(out.p[a] == doctest::Approx(e[a] / z).epsilon(1e-12));
        CHECK(out.q == d.q);
    }
    SUBCASE("low temperature sharpens toward the argmax") {
        const ActionDistribution sharp = with_temperature(d, 0.01);
        CHECK(sharp.p[2] > 0.999);
    }
    SUBCASE("high temperature flattens") {
        const ActionDistribution flat = with_temperature(d, 1000.0);
        for (double p : flat.p) CHECK(std::abs(p - 1.0 / 3.0) < 1e-3);
    }
}

TEST_CASE("greedy_action breaks ties to the lowest index") {
    ActionDistribution d;
    d.q = {1.0, 3.0, 3.0};
    CHECK(greedy_action(d) == Action::TurnLeft);
    d.q = {5.0, 5.0, 5.0};
    CHECK(greedy_action(d) == Action::GoForward);
    d.q = {0.0, -1.0, 2.0};
    CHECK(greedy_action(d) == Action::TurnRight);
}

TEST_CASE("sample_action frequencies match the distribution") {
    ActionDistribution d;
    d.p = {0.2, 0.3, 0.5};
    std::mt19937_64 rng(55);
    std::array<long, 3> counts{};
    const int n = 30000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<int>(sample_action(d, rng))];
    for (int a = 0; a < 3; ++a)
        CHECK(std::abs(static_cast<double>(counts[a]) / n - d.p[a]) < 0.01);
}

TEST_CASE("policy forward is deterministic given store and memory") {
    std::mt19937_64 rng(56);
    for (PolicyKind kind : {PolicyKind::Smt, PolicyKind::SmtFact, PolicyKind::SmPool}) {
        PolicyConfig cfg = tiny_policy(kind);
        ParamStore store;
        init_policy_params(store, cfg, rng);
        SceneMemory mem = filled_memory(cfg, store, 8, rng);
        const Observation o = mem.elements().back().obs;
        const ActionDistribution d1 = policy_forward(o, mem, cfg, store).dist;
        const ActionDistribution d2 = policy_forward(o, mem, cfg, store).dist;
        CHECK(d1.q == d2.q);
        CHECK(d1.p == d2.p);
    }
}

TEST_CASE("policy config validation") {
    PolicyConfig cfg = tiny_policy(PolicyKind::Smt);
    cfg.capacity = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_policy(PolicyKind::SmtFact);
    cfg.num_centers = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_NOTHROW(tiny_policy(PolicyKind::Smt).validate());
}
