#pragma once

#include "smt/environment.hpp"
#include "smt/episode.hpp"
#include "smt/policy.hpp"
#include "smt/tasks.hpp"

#include <optional>
#include <string>
#include <vector>

namespace smt {

/// Ring of complete episodes; at capacity a push replaces the oldest.
class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity = 1000) : capacity_(capacity) {}
    void push(EpisodeTrace trace);
    int size() const { return static_cast<int>(episodes_.size()); }
    int capacity() const { return capacity_; }
    const EpisodeTrace& at(int i) const { return episodes_[i]; }
    /// Insertion-age order: 0 is the oldest episode currently stored.
    const EpisodeTrace& oldest_first(int i) const;

private:
    int capacity_;
    std::vector<EpisodeTrace> episodes_;
    int next_ = 0; // overwrite cursor once full
};

struct TrainConfig {
    TaskKind task = TaskKind::Coverage;
    int horizon = 500;
    int batch_episodes = 64;
    double lr = 5e-4;
    double gamma = 0.99;
    int refresh_interval = 500;     // dqn steps per fresh collected episode
    int target_sync_interval = 500; // dqn steps per target-network sync
    int buffer_capacity = 1000;
    int initial_episodes = 1000; // random-policy fill
    int max_iterations = 50000;
    int validation_interval = 500;
    int validation_episodes_per_plan = 10;
    int patience = 10; // validation events without improvement
    double temp_start = 1.0;
    double temp_end = 0.1;
    uint64_t seed = 0;
    int n_plans = 10;
    double validation_fraction = 0.2;
    int pretrain_max_iterations = 4000;
    PolicyConfig policy;
    DynamicsConfig dyn;
    FloorplanConfig plan_cfg;

    void validate() const;
};

std::vector<Floorplan> make_plans(uint64_t seed, int n, const FloorplanConfig& cfg);
void split_plans(const std::vector<Floorplan>& plans, double validation_fraction,
                 std::vector<const Floorplan*>& train, std::vector<const Floorplan*>& val);

/// Rolls the update -> forward -> sample -> step loop until termination.
/// Fully determined by (plan, parameters, episode_seed). When
/// `replay_actions` is given the policy is bypassed and the recorded action
/// sequence is re-executed; the environment noise streams are independent of
/// action sampling, so the replay reproduces the original poses. With
/// `dead_reckoned_pose` the policy sees the noiseless odometry estimate
/// instead of the true pose (the trace still records true poses).
EpisodeTrace collect_episode(const Floorplan& plan, const PolicyConfig& pcfg,
                             const ParamStore& store, const DynamicsConfig& dyn,
                             TaskKind task, int horizon, double temperature,
                             uint64_t episode_seed, bool greedy = false,
                             const std::vector<Action>* replay_actions = nullptr,
                             bool dead_reckoned_pose = false);

/// Mean cumulative reward over episodes_per_plan fixed-seed episodes per
/// plan; episodes run in parallel and are merged by index.
double evaluate_policy(const std::vector<const Floorplan*>& plans, const PolicyConfig& pcfg,
                       const ParamStore& store, const DynamicsConfig& dyn, TaskKind task,
                       int horizon, int episodes_per_plan, uint64_t base_seed,
                       double temperature);

/// One deep Q-learning update: 64 sampled (episode, step) pairs, memories
/// reconstructed from trace prefixes, Huber TD loss against the target
/// network, one Adam step. Returns the batch loss.
double dqn_step(const ReplayBuffer& buffer, ParamStore& store, const ParamStore& target,
                const TrainConfig& cfg, std::mt19937_64& rng);

struct ValidationRow {
    int iteration = 0;
    double mean_reward = 0.0;
};

struct TrainResult {
    double best_validation_reward = 0.0;
    int iterations_run = 0;
    std::vector<ValidationRow> curve;
    ParamStore best_store;
};

/// Full training protocol: random-policy buffer fill, dqn steps with
/// periodic buffer refresh, target sync, validation and patience stopping.
/// With initial_store the embedding parameters come in pretrained (and
/// possibly frozen); otherwise everything is trained from scratch.
TrainResult train(const TrainConfig& cfg, const std::string& out_dir = "",
                  const ParamStore* initial_store = nullptr);

/// Trains a capacity-1 SMT end-to-end and returns the store with the
/// embedding networks frozen.
ParamStore pretrain_embeddings(const TrainConfig& cfg);

} // namespace smt
