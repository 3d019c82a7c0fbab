#pragma once

#include "smt/embedding.hpp"
#include "smt/geometry.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace smt {

/// Axis-aligned wall or object boundary segment, in meters.
/// label: -1 for walls, >= 0 for the object class of the occupied cell.
struct BoundarySegment {
    double x1, y1, x2, y2;
    int label;
};

/// 2D occupancy/semantic map at 0.25 m resolution. Cell values: 0 free,
/// 1 wall, 2+c object of class c.
struct Floorplan {
    double cell_size = 0.25;
    int width = 0;
    int height = 0;
    std::vector<int8_t> cells;
    std::vector<std::array<int, 4>> rooms; // x, y, w, h of interior cells
    uint64_t seed = 0;

    int8_t cell(int cx, int cy) const {
        if (cx < 0 || cy < 0 || cx >= width || cy >= height) return 1;
        return cells[static_cast<size_t>(cy) * width + cx];
    }
    bool free_at(double x, double y) const;
    std::vector<int> classes_present() const;

    /// Boundary segments between free and non-free cells; rebuilt by
    /// compile_segments() after any grid edit.
    std::vector<BoundarySegment> segments;
    void compile_segments();

    std::string to_json() const;
    static Floorplan from_json(const std::string& text);
    void save(const std::string& path) const;
    static Floorplan load(const std::string& path);
};

struct FloorplanConfig {
    int min_rooms = 2;
    int max_rooms = 6;
    int min_room_cells = 8;  // 2 m at 0.25 m cells
    int max_room_cells = 14; // 3.5 m
    int min_classes = 1;
    int max_classes = 6;
    int canvas_cells = 96;
    int max_retries = 64;
};

/// Deterministic multi-room floorplan: rectangular rooms chained with door
/// gaps, single connected free component, 1-6 labeled target objects.
Floorplan generate_floorplan(uint64_t seed, const FloorplanConfig& cfg = {});

struct AgentState {
    Pose pose;
    int collisions = 0;
    int step = 0;
};

struct DynamicsConfig {
    double wheel_radius = 0.065; // m
    double axle_width = 0.375;   // m
    double wheel_noise_std = 0.5; // rad/s, per wheel per action
    double step_size = 0.25;      // m per go_forward
    double turn_angle = M_PI / 4; // rad per turn action
    double control_duration = 1.0; // s per discrete action
    int substeps = 10;
    double depth_noise_std = 0.05; // m
    double depth_range = 5.0;      // m
    int rays = 30;
    double fov = M_PI / 2;
    int semantic_classes = 6; // object class budget of the semantic one-hot
};

/// Executes one discrete action under noisy differential-drive dynamics.
/// On collision the agent is reverted to its pre-action pose.
bool env_step(AgentState& s, Action a, const Floorplan& plan, const DynamicsConfig& dyn,
              std::mt19937_64& rng);

/// Casts `rays` depth/semantic rays over the field of view and packages the
/// full observation tuple.
Observation render_observation(const AgentState& s, const Floorplan& plan,
                               const DynamicsConfig& dyn, Action prev_action,
                               std::mt19937_64& rng);

/// Noiseless nominal motion composed onto the pose estimate.
Pose dead_reckon(const Pose& estimate, Action a, const DynamicsConfig& dyn);

/// Uniform random free-cell center with a heading that is a multiple of 45 degrees.
Pose spawn_pose(const Floorplan& plan, std::mt19937_64& rng);

/// Nearest hit of a ray against the plan boundary; returns distance in
/// meters and the segment label, or a negative distance on miss.
std::pair<double, int> raycast(const Floorplan& plan, double x, double y, double angle);

} // namespace smt
