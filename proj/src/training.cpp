#include "smt/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace smt {

void ReplayBuffer::push(EpisodeTrace trace) {
    if (static_cast<int>(episodes_.size()) < capacity_) {
        episodes_.push_back(std::move(trace));
    } else {
        episodes_[next_] = std::move(trace);
        next_ = (next_ + 1) % capacity_;
    }
}

const EpisodeTrace& ReplayBuffer::oldest_first(int i) const {
    if (static_cast<int>(episodes_.size()) < capacity_) return episodes_[i];
    return episodes_[(next_ + i) % capacity_];
}

void TrainConfig::validate() const {
    if (horizon < 1 || batch_episodes < 1 || lr <= 0 || gamma < 0 || gamma > 1 ||
        refresh_interval < 1 || target_sync_interval < 1 || buffer_capacity < 1 ||
        max_iterations < 1 || validation_interval < 1 || n_plans < 2)
        throw std::invalid_argument("TrainConfig: invalid field");
    if (batch_episodes > buffer_capacity)
        throw std::invalid_argument("TrainConfig: batch exceeds buffer capacity");
    policy.validate();
}

std::vector<Floorplan> make_plans(uint64_t seed, int n, const FloorplanConfig& cfg) {
    std::vector<Floorplan> plans;
    plans.reserve(n);
    for (int i = 0; i < n; ++i) plans.push_back(generate_floorplan(seed + 1000 + i, cfg));
    return plans;
}

void split_plans(const std::vector<Floorplan>& plans, double validation_fraction,
                 std::vector<const Floorplan*>& train, std::vector<const Floorplan*>& val) {
    const int n = static_cast<int>(plans.size());
    const int n_val = std::max(1, static_cast<int>(std::floor(n * validation_fraction)));
    for (int i = 0; i < n; ++i)
        (i >= n - n_val ? val : train).push_back(&plans[i]);
}

EpisodeTrace collect_episode(const Floorplan& plan, const PolicyConfig& pcfg,
                             const ParamStore& store, const DynamicsConfig& dyn,
                             TaskKind task, int horizon, double temperature,
                             uint64_t episode_seed, bool greedy,
                             const std::vector<Action>* replay_actions,
                             bool dead_reckoned_pose) {
    // Separate streams: replaying recorded actions leaves the environment
    // stream untouched, so poses and observations reproduce exactly.
    std::mt19937_64 env_rng(episode_seed);
    std::mt19937_64 act_rng(episode_seed ^ 0x9e3779b97f4a7c15ull);
    EpisodeTrace trace;
    trace.task = task;
    trace.plan_seed = plan.seed;
    trace.episode_seed = episode_seed;
    trace.horizon = horizon;
    trace.n_classes_present = static_cast<int>(plan.classes_present().size());

    AgentState s;
    s.pose = spawn_pose(plan, env_rng);
    Pose estimate = s.pose;
    TaskState ts = make_task_state(task, s.pose);
    SceneMemory memory(pcfg.capacity);

    Observation o = render_observation(s, plan, dyn, Action::None, env_rng);
    trace.poses.push_back(s.pose);
    trace.observations.push_back(o);
    if (dead_reckoned_pose) o.pose = estimate;

    int step = 0;
    while (!task_terminated(ts, s, step, horizon)) {
        Action a;
        if (replay_actions) {
            if (step >= static_cast<int>(replay_actions->size())) break;
            a = (*replay_actions)[static_cast<size_t>(step)];
        } else {
            const bool memoryless =
                pcfg.kind == PolicyKind::Reactive || pcfg.kind == PolicyKind::Random;
            if (!memoryless) memory.update(o, store, pcfg.emb);
            PolicyEval ev = policy_forward(o, memory, pcfg, store);
            if (greedy) a = greedy_action(ev.dist);
            else a = sample_action(with_temperature(ev.dist, temperature), act_rng);
        }

        const bool hit = env_step(s, a, plan, dyn, env_rng);
        estimate = dead_reckon(estimate, a, dyn);
        Observation o_next = render_observation(s, plan, dyn, a, env_rng);
        const double r = task_reward(ts, s, a, hit, o_next);

        trace.actions.push_back(a);
        trace.rewards.push_back(r);
        trace.collided.push_back(hit ? 1 : 0);
        trace.poses.push_back(s.pose);
        trace.observations.push_back(o_next);
        if (dead_reckoned_pose) o_next.pose = estimate;
        o = std::move(o_next);
        ++step;
    }
    return trace;
}

double evaluate_policy(const std::vector<const Floorplan*>& plans, const PolicyConfig& pcfg,
                       const ParamStore& store, const DynamicsConfig& dyn, TaskKind task,
                       int horizon, int episodes_per_plan, uint64_t base_seed,
                       double temperature) {
    const int total = static_cast<int>(plans.size()) * episodes_per_plan;
    std::vector<double> rewards(total, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < total; ++i) {
        const int plan_idx = i / episodes_per_plan;
        const EpisodeTrace tr =
            collect_episode(*plans[plan_idx], pcfg, store, dyn, task, horizon, temperature,
                            base_seed + static_cast<uint64_t>(i));
        rewards[i] = metrics(tr).cumulative_reward;
    }
    double sum = 0.0;
    for (double r : rewards) sum += r; // fixed order merge
    return total > 0 ? sum / total : 0.0;
}

namespace {

/// Rebuild the scene memory the rollout had at step t (after the step-t
/// update), honoring capacity eviction.
SceneMemory reconstruct_memory(const EpisodeTrace& trace, int t, const PolicyConfig& pcfg,
                               const ParamStore& store) {
    SceneMemory m(pcfg.capacity);
    const int first = std::max(0, t + 1 - pcfg.capacity);
    for (int i = first; i <= t; ++i) m.update(trace.observations[i], store, pcfg.emb);
    return m;
}

} // namespace

double dqn_step(const ReplayBuffer& buffer, ParamStore& store, const ParamStore& target,
                const TrainConfig& cfg, std::mt19937_64& rng) {
    if (buffer.size() == 0) throw std::logic_error("dqn_step: empty replay buffer");
    const int batch = cfg.batch_episodes;
    struct Sample {
        int episode;
        int t;
    };
    std::vector<Sample> samples(batch);
    for (auto& smp : samples) {
        smp.episode = std::uniform_int_distribution<int>(0, buffer.size() - 1)(rng);
        const int len = buffer.at(smp.episode).length();
        smp.t = std::uniform_int_distribution<int>(0, len - 1)(rng);
    }

    const bool emb_trainable = store.trainable("emb.fc.w");
    std::vector<GradMap> grads(batch);
    std::vector<double> losses(batch, 0.0);

#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < batch; ++b) {
        const EpisodeTrace& trace = buffer.at(samples[b].episode);
        const int t = samples[b].t;
        const bool terminal = t == trace.length() - 1;

        double td_target = trace.rewards[t];
        if (!terminal && cfg.gamma > 0.0) {
            SceneMemory m_next = reconstruct_memory(trace, t + 1, cfg.policy, target);
            PolicyEval tgt =
                policy_forward(trace.observations[t + 1], m_next, cfg.policy, target);
            const double maxq =
                *std::max_element(tgt.dist.q.begin(), tgt.dist.q.end());
            td_target += cfg.gamma * maxq;
        }

        SceneMemory m = reconstruct_memory(trace, t, cfg.policy, store);
        PolicyEval ev =
            policy_forward(trace.observations[t], m, cfg.policy, store, emb_trainable);
        Tape& tape = *ev.tape;
        const int a = static_cast<int>(trace.actions[t]);
        Tape::Id qa = tape.slice_cols(ev.q_id, a, a + 1);
        Tape::Id diff = tape.sub(qa, tape.constant(Tensor2(1, 1, {td_target})));
        Tape::Id loss = tape.huber(diff);
        losses[b] = tape.value(loss).data[0];
        tape.backward(loss, 1.0 / batch);
        tape.accumulate_param_grads(grads[b]);
    }

    GradMap total;
    for (int b = 0; b < batch; ++b) // fixed order merge
        for (auto& [name, g] : grads[b]) {
            auto it = total.find(name);
            if (it == total.end()) total.emplace(name, g);
            else
                for (size_t i = 0; i < g.size(); ++i) it->second.data[i] += g.data[i];
        }
    store.adam_step(total, cfg.lr);

    double mean = 0.0;
    for (double l : losses) mean += l;
    return mean / batch;
}

namespace {

double anneal_temperature(const TrainConfig& cfg, int iteration) {
    const double f = std::min(1.0, static_cast<double>(iteration) / cfg.max_iterations);
    return cfg.temp_start + (cfg.temp_end - cfg.temp_start) * f;
}

} // namespace

TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                  const ParamStore* initial_store) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    const auto plans = make_plans(cfg.seed, cfg.n_plans, cfg.plan_cfg);
    std::vector<const Floorplan*> train_plans, val_plans;
    split_plans(plans, cfg.validation_fraction, train_plans, val_plans);

    ParamStore store;
    {
        std::mt19937_64 init_rng(cfg.seed + 7);
        init_policy_params(store, cfg.policy, init_rng);
    }
    if (initial_store) store.absorb(*initial_store);

    // Fill the buffer with random-policy episodes over the training plans.
    ReplayBuffer buffer(cfg.buffer_capacity);
    {
        PolicyConfig random_cfg = cfg.policy;
        random_cfg.kind = PolicyKind::Random;
        const int n_fill = std::min(cfg.initial_episodes, cfg.buffer_capacity);
        std::vector<EpisodeTrace> fill(n_fill);
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n_fill; ++i) {
            const Floorplan& plan = *train_plans[i % train_plans.size()];
            fill[i] = collect_episode(plan, random_cfg, store, cfg.dyn, cfg.task, cfg.horizon,
                                      1.0, cfg.seed * 131 + 17 + i);
        }
        for (auto& tr : fill) buffer.push(std::move(tr));
    }

    ParamStore target = store;
    TrainResult result;
    result.best_store = store;
    result.best_validation_reward = -1e300;

    std::ofstream curve_file;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        curve_file.open(out_dir + "/curves.csv");
        curve_file << "iteration,validation_reward,loss\n";
    }

    int since_best = 0;
    double last_loss = 0.0;
    uint64_t collect_counter = 0;
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        last_loss = dqn_step(buffer, store, target, cfg, rng);
        if (iter % cfg.target_sync_interval == 0) target = store;
        if (iter % cfg.refresh_interval == 0) {
            const double temp = anneal_temperature(cfg, iter);
            const Floorplan& plan =
                *train_plans[collect_counter % train_plans.size()];
            buffer.push(collect_episode(plan, cfg.policy, store, cfg.dyn, cfg.task,
                                        cfg.horizon, temp, cfg.seed * 977 + 101 + iter));
            ++collect_counter;
        }
        if (iter % cfg.validation_interval == 0) {
            const double val = evaluate_policy(
                val_plans, cfg.policy, store, cfg.dyn, cfg.task, cfg.horizon,
                cfg.validation_episodes_per_plan, cfg.seed * 313 + 5, cfg.policy.temperature);
            result.curve.push_back({iter, val});
            if (curve_file.is_open()) {
                char buf[128];
                std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", iter, val, last_loss);
                curve_file << buf;
            }
            if (val > result.best_validation_reward) {
                result.best_validation_reward = val;
                result.best_store = store;
                since_best = 0;
                if (!out_dir.empty()) store.save(out_dir + "/checkpoint_best.ckpt");
            } else if (++since_best >= cfg.patience) {
                result.iterations_run = iter;
                return result;
            }
        }
        result.iterations_run = iter;
    }
    return result;
}

ParamStore pretrain_embeddings(const TrainConfig& cfg) {
    TrainConfig pre = cfg;
    pre.policy.kind = PolicyKind::Smt;
    pre.policy.capacity = 1;
    pre.max_iterations = cfg.pretrain_max_iterations;
    TrainResult r = train(pre);
    ParamStore store = std::move(r.best_store);
    set_embedding_frozen(store, true);
    return store;
}

} // namespace smt
