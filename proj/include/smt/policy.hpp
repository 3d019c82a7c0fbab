#pragma once

#include "smt/attention.hpp"
#include "smt/embedding.hpp"
#include "smt/scene_memory.hpp"

#include <array>
#include <memory>
#include <random>

namespace smt {

enum class PolicyKind { Smt, SmtFact, SmPool, Reactive, Random };
enum class CenterKind { Fps, Window, Static };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Smt;
    CenterKind center_kind = CenterKind::Fps;
    int num_centers = 100;
    int capacity = 500;
    double temperature = 0.5; // evaluation-time sampling temperature
    int q_hidden = 128;
    EmbeddingConfig emb;
    AttentionConfig att;

    void validate() const;
    int q_input_dim() const;
};

/// Categorical distribution over {go_forward, turn_left, turn_right}
/// together with the Q values it was computed from.
struct ActionDistribution {
    std::array<double, kNumActions> q{};
    std::array<double, kNumActions> p{};
};

void init_policy_params(ParamStore& store, const PolicyConfig& cfg, std::mt19937_64& rng);

struct PolicyEval {
    std::unique_ptr<Tape> tape; // null for the random policy
    Tape::Id q_id = -1;         // 1x3 node; -1 for the random policy
    ActionDistribution dist;
};

/// One forward pass of the configured policy. The memory must already
/// contain the current observation. With embeddings_on_tape the memory
/// rows are rebuilt from raw observations so gradients reach the embedding
/// networks; otherwise memory rows enter as constants.
PolicyEval policy_forward(const Observation& o, const SceneMemory& memory,
                          const PolicyConfig& cfg, const ParamStore& store,
                          bool embeddings_on_tape = false);

/// Re-softmax the Q values of `d` at the given temperature.
ActionDistribution with_temperature(const ActionDistribution& d, double temperature);

/// Inverse-CDF sampling from d.p.
Action sample_action(const ActionDistribution& d, std::mt19937_64& rng);

/// argmax of Q; ties break to the lowest action index.
Action greedy_action(const ActionDistribution& d);

} // namespace smt
