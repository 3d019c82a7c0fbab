#pragma once

#include "smt/geometry.hpp"
#include "smt/param_store.hpp"
#include "smt/tape.hpp"

#include <array>
#include <vector>

namespace smt {

enum class Action : int { GoForward = 0, TurnLeft = 1, TurnRight = 2, None = 3 };
inline constexpr int kNumActions = 3;
inline constexpr int kActionTokens = 4; // three actions plus the NONE token at t=0

enum class TemporalMode { Exp, Sin, None };

/// One time step's sensor tuple. Semantic rays are one-hot over
/// {none, wall, object class 0..N-1}; depth is clamped to sensor range and
/// stored as 0 when the validity bit is 0.
struct Observation {
    std::vector<double> depth;    // R values in [0, range]
    std::vector<double> validity; // R bits
    std::vector<double> semantic; // R x (num_classes + 2) one-hot, row-major
    Pose pose;                    // world frame
    Action prev_action = Action::None;
    int t = 0;
};

inline constexpr int kPoseFeatureDim = 6;

/// (x/lambda, y/lambda, cos, sin, temporal pair). The temporal pair is
/// (e^(-age/tau), 0) in exp mode, (sin(age/tau), cos(age/tau)) in sin mode
/// and (1, 0) with temporal information dropped in none mode.
std::array<double, kPoseFeatureDim> normalize_pose(const Pose& p_world, const Pose& frame,
                                                   int age, TemporalMode mode,
                                                   double lambda = 5.0, double tau = 100.0);

struct EmbeddingConfig {
    int rays = 30;
    int num_classes = 6; // object classes; semantic channels = num_classes + 2
    int d_image = 64;    // ray-modality embedding width
    int d_pose = 16;
    int d_action = 16;
    int d_x = 128; // final embedding width
    TemporalMode temporal = TemporalMode::Exp;
    double lambda = 5.0;
    double tau = 100.0;

    // Modality ablation switches: zero the corresponding inputs.
    bool mask_depth = false;
    bool mask_semantic = false;
    bool mask_pose = false;
    bool mask_action = false;

    int semantic_channels() const { return num_classes + 2; }
    int image_input_dim() const { return rays * (2 + semantic_channels()); }
    int concat_dim() const { return d_image + d_pose + d_action; }
};

/// Registers phi_I (two-layer perceptron), phi_p, phi_a (single affine
/// layers) and the final FC under `emb.`.
void init_embedding_params(ParamStore& store, const EmbeddingConfig& cfg,
                           std::mt19937_64& rng);

/// Marks all embedding parameters frozen (or trainable again).
void set_embedding_frozen(ParamStore& store, bool frozen);

/// phi_I over the concatenated depth/validity/semantic rays. Returns a
/// 1 x d_image node.
Tape::Id embed_rays(Tape& t, const Observation& o, const ParamStore& store,
                    const EmbeddingConfig& cfg);

/// phi_a over the one-hot previous action. Returns a 1 x d_action node.
Tape::Id embed_action(Tape& t, Action prev, const ParamStore& store,
                      const EmbeddingConfig& cfg);

/// phi_p over the normalized pose features. Returns a 1 x d_pose node.
Tape::Id embed_pose(Tape& t, const Pose& p_world, const Pose& frame, int age,
                    const ParamStore& store, const EmbeddingConfig& cfg);

/// Final FC over the concatenated modality embeddings. Returns 1 x d_x.
Tape::Id combine_embeddings(Tape& t, Tape::Id phi_i, Tape::Id phi_p, Tape::Id phi_a,
                            const ParamStore& store, const EmbeddingConfig& cfg);

/// psi(o) relative to `frame` at time `now`: the full observation embedding.
Tape::Id embed_observation(Tape& t, const Observation& o, const Pose& frame, int now,
                           const ParamStore& store, const EmbeddingConfig& cfg);

/// Convenience: evaluate psi(o) to a plain row without keeping a tape.
std::vector<double> embed_observation_value(const Observation& o, const Pose& frame, int now,
                                            const ParamStore& store,
                                            const EmbeddingConfig& cfg);

} // namespace smt
