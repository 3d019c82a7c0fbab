#include "smt/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace smt {

std::array<double, kPoseFeatureDim> normalize_pose(const Pose& p_world, const Pose& frame,
                                                   int age, TemporalMode mode, double lambda,
                                                   double tau) {
    const Pose rel = to_frame(p_world, frame);
    double t0 = 1.0, t1 = 0.0;
    switch (mode) {
        case TemporalMode::Exp:
            t0 = std::exp(-static_cast<double>(age) / tau);
            break;
        case TemporalMode::Sin:
            t0 = std::sin(static_cast<double>(age) / tau);
            t1 = std::cos(static_cast<double>(age) / tau);
            break;
        case TemporalMode::None:
            break;
    }
    return {rel.x / lambda, rel.y / lambda, std::cos(rel.theta), std::sin(rel.theta), t0, t1};
}

void init_embedding_params(ParamStore& store, const EmbeddingConfig& cfg,
                           std::mt19937_64& rng) {
    const int din = cfg.image_input_dim();
    store.add_gaussian("emb.phi_i.w1", din, cfg.d_image, 1.0 / std::sqrt(double(din)), rng);
    store.add_zeros("emb.phi_i.b1", 1, cfg.d_image);
    store.add_gaussian("emb.phi_i.w2", cfg.d_image, cfg.d_image,
                       1.0 / std::sqrt(double(cfg.d_image)), rng);
    store.add_zeros("emb.phi_i.b2", 1, cfg.d_image);
    store.add_gaussian("emb.phi_p.w", kPoseFeatureDim, cfg.d_pose,
                       1.0 / std::sqrt(double(kPoseFeatureDim)), rng);
    store.add_zeros("emb.phi_p.b", 1, cfg.d_pose);
    store.add_gaussian("emb.phi_a.w", kActionTokens, cfg.d_action,
                       1.0 / std::sqrt(double(kActionTokens)), rng);
    store.add_zeros("emb.phi_a.b", 1, cfg.d_action);
    const int dc = cfg.concat_dim();
    store.add_gaussian("emb.fc.w", dc, cfg.d_x, 1.0 / std::sqrt(double(dc)), rng);
    store.add_zeros("emb.fc.b", 1, cfg.d_x);
}

void set_embedding_frozen(ParamStore& store, bool frozen) {
    for (const auto& [name, e] : store.entries())
        if (name.rfind("emb.", 0) == 0) store.set_trainable(name, !frozen);
}

Tape::Id embed_rays(Tape& t, const Observation& o, const ParamStore& store,
                    const EmbeddingConfig& cfg) {
    const int r = cfg.rays;
    if (static_cast<int>(o.depth.size()) != r || static_cast<int>(o.validity.size()) != r ||
        static_cast<int>(o.semantic.size()) != r * cfg.semantic_channels())
        throw std::invalid_argument("embed_rays: observation ray layout does not match config");
    Tensor2 input(1, cfg.image_input_dim());
    int off = 0;
    for (int i = 0; i < r; ++i) input.data[off++] = cfg.mask_depth ? 0.0 : o.depth[i];
    for (int i = 0; i < r; ++i) input.data[off++] = cfg.mask_depth ? 0.0 : o.validity[i];
    for (double s : o.semantic) input.data[off++] = cfg.mask_semantic ? 0.0 : s;

    Tape::Id x = t.constant(std::move(input));
    Tape::Id w1 = t.param(store, "emb.phi_i.w1");
    Tape::Id b1 = t.param(store, "emb.phi_i.b1");
    Tape::Id h = t.relu(t.add_rowvec(t.matmul(x, w1), b1));
    Tape::Id w2 = t.param(store, "emb.phi_i.w2");
    Tape::Id b2 = t.param(store, "emb.phi_i.b2");
    return t.relu(t.add_rowvec(t.matmul(h, w2), b2));
}

Tape::Id embed_action(Tape& t, Action prev, const ParamStore& store,
                      const EmbeddingConfig& cfg) {
    Tensor2 onehot(1, kActionTokens);
    if (!cfg.mask_action) onehot.data[static_cast<int>(prev)] = 1.0;
    Tape::Id x = t.constant(std::move(onehot));
    Tape::Id w = t.param(store, "emb.phi_a.w");
    Tape::Id b = t.param(store, "emb.phi_a.b");
    return t.add_rowvec(t.matmul(x, w), b);
}

Tape::Id embed_pose(Tape& t, const Pose& p_world, const Pose& frame, int age,
                    const ParamStore& store, const EmbeddingConfig& cfg) {
    const auto f = normalize_pose(p_world, frame, age, cfg.temporal, cfg.lambda, cfg.tau);
    Tensor2 input(1, kPoseFeatureDim);
    if (!cfg.mask_pose)
        for (int i = 0; i < kPoseFeatureDim; ++i) input.data[i] = f[i];
    Tape::Id x = t.constant(std::move(input));
    Tape::Id w = t.param(store, "emb.phi_p.w");
    Tape::Id b = t.param(store, "emb.phi_p.b");
    return t.add_rowvec(t.matmul(x, w), b);
}

Tape::Id combine_embeddings(Tape& t, Tape::Id phi_i, Tape::Id phi_p, Tape::Id phi_a,
                            const ParamStore& store, const EmbeddingConfig& cfg) {
    (void)cfg;
    const std::array<Tape::Id, 3> parts{phi_i, phi_p, phi_a};
    Tape::Id cat = t.concat_cols(parts);
    Tape::Id w = t.param(store, "emb.fc.w");
    Tape::Id b = t.param(store, "emb.fc.b");
    return t.add_rowvec(t.matmul(cat, w), b);
}

Tape::Id embed_observation(Tape& t, const Observation& o, const Pose& frame, int now,
                           const ParamStore& store, const EmbeddingConfig& cfg) {
    Tape::Id phi_i = embed_rays(t, o, store, cfg);
    Tape::Id phi_p = embed_pose(t, o.pose, frame, now - o.t, store, cfg);
    Tape::Id phi_a = embed_action(t, o.prev_action, store, cfg);
    return combine_embeddings(t, phi_i, phi_p, phi_a, store, cfg);
}

std::vector<double> embed_observation_value(const Observation& o, const Pose& frame, int now,
                                            const ParamStore& store,
                                            const EmbeddingConfig& cfg) {
    Tape t;
    Tape::Id psi = embed_observation(t, o, frame, now, store, cfg);
    return t.value(psi).data;
}

} // namespace smt
