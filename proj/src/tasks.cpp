#include "smt/tasks.hpp"

#include <cmath>
#include <stdexcept>

namespace smt {

namespace {

std::pair<int, int> coverage_cell_of(const Pose& p, double cell) {
    return {static_cast<int>(std::floor(p.x / cell)), static_cast<int>(std::floor(p.y / cell))};
}

/// Classes detected in `o`: >= 4% of rays carry the label at depth < 2 m.
std::set<int> detected_classes(const Observation& o) {
    std::set<int> out;
    const int rays = static_cast<int>(o.depth.size());
    if (rays == 0) return out;
    const int channels = static_cast<int>(o.semantic.size()) / rays;
    const int threshold = std::max(1, static_cast<int>(std::ceil(0.04 * rays)));
    std::vector<int> counts(channels, 0);
    for (int i = 0; i < rays; ++i) {
        if (o.validity[i] == 0.0 || o.depth[i] >= 2.0) continue;
        for (int c = 2; c < channels; ++c)
            if (o.semantic[static_cast<size_t>(i) * channels + c] == 1.0) ++counts[c];
    }
    for (int c = 2; c < channels; ++c)
        if (counts[c] >= threshold) out.insert(c - 2);
    return out;
}

} // namespace

TaskState make_task_state(TaskKind kind, const Pose& start) {
    TaskState ts;
    ts.kind = kind;
    ts.visited.insert(coverage_cell_of(start, ts.coverage_cell));
    return ts;
}

double task_reward(TaskState& ts, const AgentState& s_after, Action a, bool collided,
                   const Observation& o_after) {
    double r = 0.0;
    const auto cell = coverage_cell_of(s_after.pose, ts.coverage_cell);
    const bool new_cell = ts.visited.insert(cell).second;
    const double coverage_gain = new_cell ? 5.0 : 0.0;

    switch (ts.kind) {
        case TaskKind::Roaming:
            if (a == Action::GoForward && !collided) {
                r += 1.0;
                ts.breakdown.forward += 1.0;
            }
            break;
        case TaskKind::Coverage:
            r += coverage_gain;
            ts.breakdown.coverage += coverage_gain;
            break;
        case TaskKind::Search: {
            for (int c : detected_classes(o_after)) {
                if (ts.found.insert(c).second) {
                    r += 100.0;
                    ts.breakdown.search += 100.0;
                }
            }
            r += 0.2 * coverage_gain;
            ts.breakdown.coverage += 0.2 * coverage_gain;
            break;
        }
    }
    if (collided) {
        r += -1.0;
        ts.breakdown.collision += -1.0;
    }
    ts.cumulative += r;
    return r;
}

bool task_terminated(const TaskState& ts, const AgentState& s, int step, int horizon) {
    return step >= horizon || s.collisions > ts.collision_limit;
}

MetricsReport metrics(const EpisodeTrace& trace) {
    MetricsReport rep;
    rep.classes_present = trace.n_classes_present;
    if (trace.actions.empty()) return rep;

    TaskState ts = make_task_state(trace.task, trace.poses.front());
    AgentState s;
    int clean_forwards = 0, collisions = 0;
    for (int t = 0; t < trace.length(); ++t) {
        s.pose = trace.poses[t + 1];
        const bool hit = trace.collided[t] != 0;
        if (hit) ++collisions;
        if (trace.actions[t] == Action::GoForward && !hit) ++clean_forwards;
        task_reward(ts, s, trace.actions[t], hit, trace.observations[t + 1]);
        rep.found_curve.push_back(static_cast<int>(ts.found.size()));
    }
    rep.cumulative_reward = ts.cumulative;
    rep.distance = 0.25 * clean_forwards;
    rep.collisions = collisions;
    rep.covered_cells = static_cast<int>(ts.visited.size()) - 1;
    rep.found_classes = static_cast<int>(ts.found.size());
    rep.found_ratio = rep.classes_present > 0
                          ? static_cast<double>(rep.found_classes) / rep.classes_present
                          : 0.0;
    return rep;
}

std::string task_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::Roaming: return "roaming";
        case TaskKind::Coverage: return "coverage";
        case TaskKind::Search: return "search";
    }
    return "unknown";
}

TaskKind task_from_name(const std::string& name) {
    if (name == "roaming") return TaskKind::Roaming;
    if (name == "coverage") return TaskKind::Coverage;
    if (name == "search") return TaskKind::Search;
    throw std::invalid_argument("unknown task: " + name);
}

} // namespace smt
