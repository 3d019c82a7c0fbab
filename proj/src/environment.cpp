#include "smt/environment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <stdexcept>

namespace smt {

using nlohmann::json;

bool Floorplan::free_at(double x, double y) const {
    const int cx = static_cast<int>(std::floor(x / cell_size));
    const int cy = static_cast<int>(std::floor(y / cell_size));
    return cell(cx, cy) == 0;
}

std::vector<int> Floorplan::classes_present() const {
    std::set<int> cls;
    for (int8_t c : cells)
        if (c >= 2) cls.insert(c - 2);
    return {cls.begin(), cls.end()};
}

void Floorplan::compile_segments() {
    segments.clear();
    const double cs = cell_size;
    for (int cy = 0; cy < height; ++cy) {
        for (int cx = 0; cx < width; ++cx) {
            if (cell(cx, cy) != 0) continue;
            const double x0 = cx * cs, y0 = cy * cs;
            auto label_of = [this](int nx, int ny) {
                const int8_t v = cell(nx, ny);
                return v >= 2 ? v - 2 : -1;
            };
            if (cell(cx - 1, cy) != 0)
                segments.push_back({x0, y0, x0, y0 + cs, label_of(cx - 1, cy)});
            if (cell(cx + 1, cy) != 0)
                segments.push_back({x0 + cs, y0, x0 + cs, y0 + cs, label_of(cx + 1, cy)});
            if (cell(cx, cy - 1) != 0)
                segments.push_back({x0, y0, x0 + cs, y0, label_of(cx, cy - 1)});
            if (cell(cx, cy + 1) != 0)
                segments.push_back({x0, y0 + cs, x0 + cs, y0 + cs, label_of(cx, cy + 1)});
        }
    }
}

std::string Floorplan::to_json() const {
    json j;
    j["version"] = 1;
    j["cell_size"] = cell_size;
    j["width"] = width;
    j["height"] = height;
    j["seed"] = seed;
    std::vector<std::string> rows;
    rows.reserve(height);
    for (int cy = 0; cy < height; ++cy) {
        std::string row(width, '.');
        for (int cx = 0; cx < width; ++cx) {
            const int8_t v = cell(cx, cy);
            row[cx] = v == 0 ? '.' : (v == 1 ? '#' : static_cast<char>('0' + (v - 2)));
        }
        rows.push_back(std::move(row));
    }
    j["grid"] = rows;
    json jr = json::array();
    for (const auto& r : rooms) jr.push_back({r[0], r[1], r[2], r[3]});
    j["rooms"] = jr;
    return j.dump(2);
}

Floorplan Floorplan::from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("version").get<int>() != 1)
        throw std::runtime_error("floorplan: unsupported version");
    Floorplan p;
    p.cell_size = j.at("cell_size").get<double>();
    p.width = j.at("width").get<int>();
    p.height = j.at("height").get<int>();
    p.seed = j.at("seed").get<uint64_t>();
    p.cells.assign(static_cast<size_t>(p.width) * p.height, 1);
    const auto rows = j.at("grid").get<std::vector<std::string>>();
    for (int cy = 0; cy < p.height; ++cy)
        for (int cx = 0; cx < p.width; ++cx) {
            const char c = rows[cy][cx];
            p.cells[static_cast<size_t>(cy) * p.width + cx] =
                c == '.' ? 0 : (c == '#' ? 1 : static_cast<int8_t>(2 + (c - '0')));
        }
    for (const auto& r : j.at("rooms"))
        p.rooms.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<int>(), r[3].get<int>()});
    p.compile_segments();
    return p;
}

void Floorplan::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("floorplan: cannot write " + path);
    os << to_json() << "\n";
}

Floorplan Floorplan::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("floorplan: cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return from_json(text);
}

namespace {

bool free_space_connected(const Floorplan& p) {
    int total = 0, start = -1;
    for (size_t i = 0; i < p.cells.size(); ++i)
        if (p.cells[i] == 0) {
            ++total;
            if (start < 0) start = static_cast<int>(i);
        }
    if (total == 0) return false;
    std::vector<char> seen(p.cells.size(), 0);
    std::queue<int> q;
    q.push(start);
    seen[start] = 1;
    int reached = 0;
    while (!q.empty()) {
        const int idx = q.front();
        q.pop();
        ++reached;
        const int cx = idx % p.width, cy = idx / p.width;
        const int nbr[4][2] = {{cx - 1, cy}, {cx + 1, cy}, {cx, cy - 1}, {cx, cy + 1}};
        for (auto& n : nbr) {
            if (n[0] < 0 || n[1] < 0 || n[0] >= p.width || n[1] >= p.height) continue;
            const int ni = n[1] * p.width + n[0];
            if (!seen[ni] && p.cells[ni] == 0) {
                seen[ni] = 1;
                q.push(ni);
            }
        }
    }
    return reached == total;
}

std::vector<int> free_cells(const Floorplan& p) {
    std::vector<int> out;
    for (size_t i = 0; i < p.cells.size(); ++i)
        if (p.cells[i] == 0) out.push_back(static_cast<int>(i));
    return out;
}

bool try_generate(uint64_t seed, const FloorplanConfig& cfg, Floorplan& out) {
    std::mt19937_64 rng(seed);
    Floorplan p;
    p.seed = seed;
    p.width = p.height = cfg.canvas_cells;
    p.cells.assign(static_cast<size_t>(p.width) * p.height, 1);

    auto carve = [&p](int x, int y, int w, int h) {
        for (int cy = y; cy < y + h; ++cy)
            for (int cx = x; cx < x + w; ++cx)
                p.cells[static_cast<size_t>(cy) * p.width + cx] = 0;
    };
    auto all_wall = [&p](int x, int y, int w, int h) {
        if (x < 1 || y < 1 || x + w > p.width - 1 || y + h > p.height - 1) return false;
        for (int cy = y; cy < y + h; ++cy)
            for (int cx = x; cx < x + w; ++cx)
                if (p.cell(cx, cy) != 1) return false;
        return true;
    };
    auto rnd = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    const int n_rooms = rnd(cfg.min_rooms, cfg.max_rooms);
    {
        const int w = rnd(cfg.min_room_cells, cfg.max_room_cells);
        const int h = rnd(cfg.min_room_cells, cfg.max_room_cells);
        const int x = (p.width - w) / 2, y = (p.height - h) / 2;
        if (!all_wall(x, y, w, h)) return false;
        carve(x, y, w, h);
        p.rooms.push_back({x, y, w, h});
    }
    for (int i = 1; i < n_rooms; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
            const auto& base = p.rooms[rnd(0, static_cast<int>(p.rooms.size()) - 1)];
            const int side = rnd(0, 3);
            const int w = rnd(cfg.min_room_cells, cfg.max_room_cells);
            const int h = rnd(cfg.min_room_cells, cfg.max_room_cells);
            int x, y;
            if (side == 0) { // east of base
                x = base[0] + base[2] + 1;
                y = rnd(base[1] - h + 2, base[1] + base[3] - 2);
            } else if (side == 1) { // west
                x = base[0] - w - 1;
                y = rnd(base[1] - h + 2, base[1] + base[3] - 2);
            } else if (side == 2) { // north
                y = base[1] + base[3] + 1;
                x = rnd(base[0] - w + 2, base[0] + base[2] - 2);
            } else { // south
                y = base[1] - h - 1;
                x = rnd(base[0] - w + 2, base[0] + base[2] - 2);
            }
            if (!all_wall(x, y, w, h)) continue;
            carve(x, y, w, h);
            // carve a 2-cell door in the shared wall between overlapping spans
            if (side == 0 || side == 1) {
                const int wall_x = side == 0 ? x - 1 : x + w;
                const int lo = std::max(base[1], y), hi = std::min(base[1] + base[3], y + h);
                const int door = rnd(lo, hi - 1);
                p.cells[static_cast<size_t>(door) * p.width + wall_x] = 0;
                if (door + 1 < hi)
                    p.cells[static_cast<size_t>(door + 1) * p.width + wall_x] = 0;
            } else {
                const int wall_y = side == 2 ? y - 1 : y + h;
                const int lo = std::max(base[0], x), hi = std::min(base[0] + base[2], x + w);
                const int door = rnd(lo, hi - 1);
                p.cells[static_cast<size_t>(wall_y) * p.width + door] = 0;
                if (door + 1 < hi)
                    p.cells[static_cast<size_t>(wall_y) * p.width + door + 1] = 0;
            }
            p.rooms.push_back({x, y, w, h});
            placed = true;
        }
        if (!placed) return false;
    }

    const int n_classes = rnd(cfg.min_classes, cfg.max_classes);
    for (int c = 0; c < n_classes; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const auto fc = free_cells(p);
            const int idx = fc[rnd(0, static_cast<int>(fc.size()) - 1)];
            p.cells[idx] = static_cast<int8_t>(2 + c);
            if (free_space_connected(p)) placed = true;
            else p.cells[idx] = 0;
        }
        if (!placed) return false;
    }

    if (!free_space_connected(p)) return false;
    p.compile_segments();
    out = std::move(p);
    return true;
}

} // namespace

Floorplan generate_floorplan(uint64_t seed, const FloorplanConfig& cfg) {
    if (cfg.min_rooms < 1 || cfg.max_rooms < cfg.min_rooms ||
        cfg.min_room_cells < 4 || cfg.max_room_cells < cfg.min_room_cells)
        throw std::invalid_argument("generate_floorplan: invalid config ranges");
    for (int retry = 0; retry < cfg.max_retries; ++retry) {
        Floorplan p;
        if (try_generate(seed + 0x9e3779b97f4a7c15ull * retry, cfg, p)) return p;
    }
    throw std::runtime_error("generate_floorplan: no valid plan after " +
                             std::to_string(cfg.max_retries) + " retries (seed " +
                             std::to_string(seed) + ")");
}

namespace {

// Proper segment intersection including touching endpoints.
bool segments_intersect(double ax, double ay, double bx, double by, double cx, double cy,
                        double dx, double dy) {
    auto orient = [](double px, double py, double qx, double qy, double rx, double ry) {
        const double v = (qx - px) * (ry - py) - (qy - py) * (rx - px);
        if (v > 0) return 1;
        if (v < 0) return -1;
        return 0;
    };
    auto on_seg = [](double px, double py, double qx, double qy, double rx, double ry) {
        return std::min(px, qx) <= rx && rx <= std::max(px, qx) && std::min(py, qy) <= ry &&
               ry <= std::max(py, qy);
    };
    const int o1 = orient(ax, ay, bx, by, cx, cy);
    const int o2 = orient(ax, ay, bx, by, dx, dy);
    const int o3 = orient(cx, cy, dx, dy, ax, ay);
    const int o4 = orient(cx, cy, dx, dy, bx, by);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_seg(ax, ay, bx, by, cx, cy)) return true;
    if (o2 == 0 && on_seg(ax, ay, bx, by, dx, dy)) return true;
    if (o3 == 0 && on_seg(cx, cy, dx, dy, ax, ay)) return true;
    if (o4 == 0 && on_seg(cx, cy, dx, dy, bx, by)) return true;
    return false;
}

bool sweep_hits(const Floorplan& plan, const Pose& a, const Pose& b) {
    if (a.x == b.x && a.y == b.y) return false;
    for (const auto& s : plan.segments)
        if (segments_intersect(a.x, a.y, b.x, b.y, s.x1, s.y1, s.x2, s.y2)) return true;
    return false;
}

Pose pose_at(const Pose& start, double v, double omega, double t) {
    if (std::abs(omega) < 1e-12)
        return {start.x + v * t * std::cos(start.theta),
                start.y + v * t * std::sin(start.theta), start.theta + omega * t};
    const double th = start.theta + omega * t;
    return {start.x + v / omega * (std::sin(th) - std::sin(start.theta)),
            start.y - v / omega * (std::cos(th) - std::cos(start.theta)), th};
}

} // namespace

bool env_step(AgentState& s, Action a, const Floorplan& plan, const DynamicsConfig& dyn,
              std::mt19937_64& rng) {
    double v_nom = 0.0, w_nom = 0.0;
    switch (a) {
        case Action::GoForward: v_nom = dyn.step_size / dyn.control_duration; break;
        case Action::TurnLeft: w_nom = dyn.turn_angle / dyn.control_duration; break;
        case Action::TurnRight: w_nom = -dyn.turn_angle / dyn.control_duration; break;
        default: throw std::logic_error("env_step: NONE is not an executable action");
    }
    double v = v_nom, omega = w_nom;
    if (dyn.wheel_noise_std > 0.0) {
        std::normal_distribution<double> noise(0.0, dyn.wheel_noise_std);
        const double el = noise(rng), er = noise(rng);
        v += dyn.wheel_radius * (el + er) / 2.0;
        omega += dyn.wheel_radius * (er - el) / dyn.axle_width;
    }

    const Pose start = s.pose;
    bool collided = false;
    Pose prev = start;
    for (int i = 1; i <= dyn.substeps; ++i) {
        // closed-form pose at absolute time: no per-substep error accumulation
        const double t =
            i == dyn.substeps ? dyn.control_duration
                              : dyn.control_duration * static_cast<double>(i) / dyn.substeps;
        const Pose next = pose_at(start, v, omega, t);
        if (sweep_hits(plan, prev, next)) {
            collided = true;
            break;
        }
        prev = next;
    }
    if (collided) {
        s.pose = start;
        s.collisions += 1;
    } else {
        s.pose = prev;
    }
    s.step += 1;
    return collided;
}

std::pair<double, int> raycast(const Floorplan& plan, double x, double y, double angle) {
    const double dx = std::cos(angle), dy = std::sin(angle);
    double best = -1.0;
    int label = -1;
    for (const auto& s : plan.segments) {
        double t;
        if (s.x1 == s.x2) { // vertical
            if (std::abs(dx) < 1e-15) continue;
            t = (s.x1 - x) / dx;
            if (t <= 1e-9) continue;
            const double hy = y + t * dy;
            if (hy < std::min(s.y1, s.y2) || hy > std::max(s.y1, s.y2)) continue;
        } else { // horizontal
            if (std::abs(dy) < 1e-15) continue;
            t = (s.y1 - y) / dy;
            if (t <= 1e-9) continue;
            const double hx = x + t * dx;
            if (hx < std::min(s.x1, s.x2) || hx > std::max(s.x1, s.x2)) continue;
        }
        if (best < 0.0 || t < best) {
            best = t;
            label = s.label;
        }
    }
    return {best, label};
}

Observation render_observation(const AgentState& s, const Floorplan& plan,
                               const DynamicsConfig& dyn, Action prev_action,
                               std::mt19937_64& rng) {
    Observation o;
    const int r = dyn.rays;
    o.pose = s.pose;
    o.prev_action = prev_action;
    o.t = s.step;
    o.depth.assign(r, 0.0);
    o.validity.assign(r, 0.0);
    // semantic channel layout: 0 none, 1 wall, 2+c object class c
    const int channels = 2 + dyn.semantic_classes;
    o.semantic.assign(static_cast<size_t>(r) * channels, 0.0);
    std::normal_distribution<double> noise(0.0, dyn.depth_noise_std);
    for (int i = 0; i < r; ++i) {
        const double frac = r == 1 ? 0.5 : static_cast<double>(i) / (r - 1);
        const double angle = s.pose.theta - dyn.fov / 2.0 + dyn.fov * frac;
        const auto [dist, lbl] = raycast(plan, s.pose.x, s.pose.y, angle);
        if (dist > 0.0 && dist <= dyn.depth_range) {
            double d = dist;
            if (dyn.depth_noise_std > 0.0) d += noise(rng);
            o.depth[i] = std::clamp(d, 0.0, dyn.depth_range);
            o.validity[i] = 1.0;
            o.semantic[static_cast<size_t>(i) * channels + (lbl < 0 ? 1 : 2 + lbl)] = 1.0;
        } else {
            o.semantic[static_cast<size_t>(i) * channels + 0] = 1.0;
        }
    }
    return o;
}

Pose dead_reckon(const Pose& estimate, Action a, const DynamicsConfig& dyn) {
    switch (a) {
        case Action::GoForward: return compose(estimate, {dyn.step_size, 0.0, 0.0});
        case Action::TurnLeft: return {estimate.x, estimate.y, estimate.theta + dyn.turn_angle};
        case Action::TurnRight:
            return {estimate.x, estimate.y, estimate.theta - dyn.turn_angle};
        default: return estimate;
    }
}

Pose spawn_pose(const Floorplan& plan, std::mt19937_64& rng) {
    const auto fc = free_cells(plan);
    if (fc.empty()) throw std::runtime_error("spawn_pose: no free cells");
    const int idx = fc[std::uniform_int_distribution<int>(0, static_cast<int>(fc.size()) - 1)(rng)];
    const int cx = idx % plan.width, cy = idx / plan.width;
    const double x = (cx + 0.5) * plan.cell_size;
    const double y = (cy + 0.5) * plan.cell_size;
    const int oct = std::uniform_int_distribution<int>(0, 7)(rng);
    return {x, y, oct * M_PI / 4.0};
}

} // namespace smt
