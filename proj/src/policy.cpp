#include "smt/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace smt {

void PolicyConfig::validate() const {
    if (temperature <= 0.0)
        throw std::invalid_argument("PolicyConfig: temperature must be positive");
    if (capacity < 1) throw std::invalid_argument("PolicyConfig: capacity must be >= 1");
    if (kind == PolicyKind::SmtFact && num_centers < 1)
        throw std::invalid_argument("PolicyConfig: smt_fact needs at least one center");
    if (emb.d_x != att.d_x)
        throw std::invalid_argument("PolicyConfig: embedding d_x must match attention d_x");
    att.validate();
}

int PolicyConfig::q_input_dim() const {
    return kind == PolicyKind::SmPool ? 2 * emb.d_x : emb.d_x;
}

void init_policy_params(ParamStore& store, const PolicyConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    init_embedding_params(store, cfg.emb, rng);
    switch (cfg.kind) {
        case PolicyKind::Smt:
            init_attention_params(store, "enc", cfg.att, rng);
            init_attention_params(store, "dec", cfg.att, rng);
            break;
        case PolicyKind::SmtFact:
            init_attention_params(store, "enc_inner", cfg.att, rng);
            init_attention_params(store, "enc_outer", cfg.att, rng);
            init_attention_params(store, "dec", cfg.att, rng);
            if (cfg.center_kind == CenterKind::Static)
                init_static_centers(store, cfg.num_centers, cfg.emb.d_x, rng);
            break;
        case PolicyKind::SmPool:
        case PolicyKind::Reactive:
        case PolicyKind::Random:
            break;
    }
    if (cfg.kind != PolicyKind::Random) {
        const int din = cfg.q_input_dim();
        store.add_gaussian("q.fc1.w", din, cfg.q_hidden, 1.0 / std::sqrt(double(din)), rng);
        store.add_zeros("q.fc1.b", 1, cfg.q_hidden);
        store.add_gaussian("q.fc2.w", cfg.q_hidden, kNumActions,
                           1.0 / std::sqrt(double(cfg.q_hidden)), rng);
        store.add_zeros("q.fc2.b", 1, kNumActions);
    }
}

namespace {

Tape::Id q_head(Tape& t, Tape::Id features, const ParamStore& store) {
    Tape::Id w1 = t.param(store, "q.fc1.w");
    Tape::Id b1 = t.param(store, "q.fc1.b");
    Tape::Id h = t.relu(t.add_rowvec(t.matmul(features, w1), b1));
    Tape::Id w2 = t.param(store, "q.fc2.w");
    Tape::Id b2 = t.param(store, "q.fc2.b");
    return t.add_rowvec(t.matmul(h, w2), b2);
}

Tape::Id gather_rows(Tape& t, Tape::Id m, const std::vector<int>& indices) {
    std::vector<Tape::Id> rows;
    rows.reserve(indices.size());
    for (int i : indices) rows.push_back(t.slice_rows(m, i, i + 1));
    return rows.size() == 1 ? rows[0] : t.concat_rows(rows);
}

ActionDistribution softmax_q(const std::array<double, kNumActions>& q, double temperature) {
    ActionDistribution d;
    d.q = q;
    double mx = q[0] / temperature;
    for (int i = 1; i < kNumActions; ++i) mx = std::max(mx, q[i] / temperature);
    double sum = 0.0;
    for (int i = 0; i < kNumActions; ++i) {
        d.p[i] = std::exp(q[i] / temperature - mx);
        sum += d.p[i];
    }
    for (auto& p : d.p) p /= sum;
    return d;
}

} // namespace

PolicyEval policy_forward(const Observation& o, const SceneMemory& memory,
                          const PolicyConfig& cfg, const ParamStore& store,
                          bool embeddings_on_tape) {
    cfg.validate();
    PolicyEval ev;
    if (cfg.kind == PolicyKind::Random) {
        ev.dist.q = {0.0, 0.0, 0.0};
        ev.dist.p = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        return ev;
    }

    ev.tape = std::make_unique<Tape>();
    Tape& t = *ev.tape;
    const Pose frame = o.pose;
    const int now = o.t;
    Tape::Id query = embed_observation(t, o, frame, now, store, cfg.emb);

    Tape::Id features = -1;
    if (cfg.kind == PolicyKind::Reactive) {
        features = query;
    } else {
        if (memory.empty())
            throw std::logic_error("policy_forward: memory-based policy read on empty memory");
        Tape::Id m;
        if (embeddings_on_tape) {
            m = memory.materialize_on_tape(t, frame, now, store, cfg.emb, true);
        } else {
            m = t.constant(memory.materialize(frame, now, store, cfg.emb));
        }
        switch (cfg.kind) {
            case PolicyKind::Smt: {
                Tape::Id context = encode(t, m, store, "enc", cfg.att);
                features = decode(t, query, context, store, "dec", cfg.att);
                break;
            }
            case PolicyKind::SmtFact: {
                Tape::Id centers;
                if (cfg.center_kind == CenterKind::Static) {
                    centers = t.param(store, "centers.rows");
                } else {
                    const Tensor2& mv = t.value(m);
                    const int k = std::min(cfg.num_centers, mv.rows);
                    CenterSet cs = cfg.center_kind == CenterKind::Fps
                                       ? fps_centers(mv, k, mv.rows - 1)
                                       : window_centers(mv, k);
                    centers = gather_rows(t, m, cs.indices);
                }
                Tape::Id context =
                    att_fact(t, m, centers, store, "enc_inner", "enc_outer", cfg.att);
                features = decode(t, query, context, store, "dec", cfg.att);
                break;
            }
            case PolicyKind::SmPool: {
                Tape::Id pooled = t.max_over_rows(m);
                const std::array<Tape::Id, 2> parts{pooled, query};
                features = t.concat_cols(parts);
                break;
            }
            default:
                break;
        }
    }

    ev.q_id = q_head(t, features, store);
    const Tensor2& qv = t.value(ev.q_id);
    std::array<double, kNumActions> q{qv.data[0], qv.data[1], qv.data[2]};
    ev.dist = softmax_q(q, 1.0);
    return ev;
}

ActionDistribution with_temperature(const ActionDistribution& d, double temperature) {
    if (temperature <= 0.0)
        throw std::invalid_argument("with_temperature: temperature must be positive");
    return softmax_q(d.q, temperature);
}

Action sample_action(const ActionDistribution& d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = u(rng);
    double acc = 0.0;
    for (int i = 0; i < kNumActions; ++i) {
        acc += d.p[i];
        if (r < acc) return static_cast<Action>(i);
    }
    return static_cast<Action>(kNumActions - 1);
}

Action greedy_action(const ActionDistribution& d) {
    int best = 0;
    for (int i = 1; i < kNumActions; ++i)
        if (d.q[i] > d.q[best]) best = i;
    return static_cast<Action>(best);
}

} // namespace smt
