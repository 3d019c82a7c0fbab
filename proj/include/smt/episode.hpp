#pragma once

#include "smt/embedding.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace smt {

enum class TaskKind { Roaming, Coverage, Search };

/// Full record of one rollout. observations has one more entry than
/// actions: observations[t] is what the policy saw before actions[t], and
/// observations[t+1] is the post-step observation the reward was computed
/// from.
struct EpisodeTrace {
    TaskKind task = TaskKind::Roaming;
    uint64_t plan_seed = 0;
    uint64_t episode_seed = 0;
    int horizon = 0;
    int n_classes_present = 0;
    std::vector<Observation> observations;
    std::vector<Action> actions;
    std::vector<double> rewards;
    std::vector<uint8_t> collided;
    std::vector<Pose> poses; // true poses s_0..s_T
    std::string policy_fingerprint;

    int length() const { return static_cast<int>(actions.size()); }
};

} // namespace smt
