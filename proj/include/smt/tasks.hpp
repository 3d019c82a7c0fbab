#pragma once

#include "smt/environment.hpp"
#include "smt/episode.hpp"

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace smt {

struct RewardBreakdown {
    double forward = 0.0;
    double coverage = 0.0;
    double search = 0.0;
    double collision = 0.0;
    double total() const { return forward + coverage + search + collision; }
};

/// Per-episode task bookkeeping: visited 0.5 m coverage cells, found
/// target classes and the reward decomposition.
struct TaskState {
    TaskKind kind = TaskKind::Roaming;
    double coverage_cell = 0.5; // m
    int collision_limit = 50;
    std::set<std::pair<int, int>> visited;
    std::set<int> found;
    double cumulative = 0.0;
    RewardBreakdown breakdown;
};

/// Marks the start cell visited so staying put never scores.
TaskState make_task_state(TaskKind kind, const Pose& start);

/// Reward for one executed action. `o_after` is the observation rendered
/// after the step; object detection requires at least 4% of rays (>= 2 at
/// 30 rays) to carry the class label at depth below 2 m.
double task_reward(TaskState& ts, const AgentState& s_after, Action a, bool collided,
                   const Observation& o_after);

/// True iff step >= horizon or strictly more than collision_limit collisions.
bool task_terminated(const TaskState& ts, const AgentState& s, int step, int horizon);

struct MetricsReport {
    double cumulative_reward = 0.0;
    double distance = 0.0; // m of clean forward motion
    int collisions = 0;
    int covered_cells = 0; // newly entered 0.5 m cells (start cell excluded)
    int found_classes = 0;
    int classes_present = 0;
    double found_ratio = 0.0;
    std::vector<int> found_curve; // cumulative found classes per step
};

/// Recomputes all task metrics from a complete trace.
MetricsReport metrics(const EpisodeTrace& trace);

std::string task_name(TaskKind kind);
TaskKind task_from_name(const std::string& name);

} // namespace smt
