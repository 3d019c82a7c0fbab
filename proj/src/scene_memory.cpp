#include "smt/scene_memory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace smt {

void SceneMemory::update(const Observation& o, const ParamStore& store,
                         const EmbeddingConfig& cfg) {
    if (!elements_.empty() && o.t <= elements_.back().obs.t)
        throw std::logic_error("SceneMemory::update: step " + std::to_string(o.t) +
                               " is not greater than stored step " +
                               std::to_string(elements_.back().obs.t));
    Element e;
    e.obs = o;
    {
        Tape t;
        e.phi_i = t.value(embed_rays(t, o, store, cfg)).data;
    }
    {
        Tape t;
        e.phi_a = t.value(embed_action(t, o.prev_action, store, cfg)).data;
    }
    elements_.push_back(std::move(e));
    if (static_cast<int>(elements_.size()) > capacity_)
        elements_.erase(elements_.begin()); // FIFO: evict the minimum step index
}

Tensor2 SceneMemory::materialize(const Pose& frame, int now, const ParamStore& store,
                                 const EmbeddingConfig& cfg) const {
    Tape t;
    Tape::Id m = materialize_on_tape(t, frame, now, store, cfg, false);
    return t.value(m);
}

Tape::Id SceneMemory::materialize_on_tape(Tape& t, const Pose& frame, int now,
                                          const ParamStore& store, const EmbeddingConfig& cfg,
                                          bool full_recompute) const {
    if (elements_.empty()) throw std::logic_error("SceneMemory: materialize of empty memory");
    std::vector<Tape::Id> rows;
    rows.reserve(elements_.size());
    for (const auto& e : elements_) {
        if (full_recompute) {
            rows.push_back(embed_observation(t, e.obs, frame, now, store, cfg));
        } else {
            Tape::Id phi_i = t.constant(Tensor2(1, cfg.d_image, e.phi_i));
            Tape::Id phi_a = t.constant(Tensor2(1, cfg.d_action, e.phi_a));
            Tape::Id phi_p = embed_pose(t, e.obs.pose, frame, now - e.obs.t, store, cfg);
            rows.push_back(combine_embeddings(t, phi_i, phi_p, phi_a, store, cfg));
        }
    }
    return rows.size() == 1 ? rows[0] : t.concat_rows(rows);
}

CenterSet fps_centers(const Tensor2& m, int k, int seed_index) {
    if (k < 1 || k > m.rows)
        throw std::logic_error("fps_centers: k=" + std::to_string(k) + " out of range for " +
                               std::to_string(m.rows) + " rows");
    if (seed_index < 0 || seed_index >= m.rows)
        throw std::logic_error("fps_centers: seed index out of range");
    CenterSet cs;
    cs.indices.reserve(k);
    cs.indices.push_back(seed_index);
    // dist2[i] = squared distance from row i to its nearest selected row
    std::vector<double> dist2(m.rows, std::numeric_limits<double>::infinity());
    std::vector<char> selected(m.rows, 0);
    selected[seed_index] = 1;
    int last = seed_index;
    while (static_cast<int>(cs.indices.size()) < k) {
        int best = -1;
        double best_d = -1.0;
        for (int i = 0; i < m.rows; ++i) {
            double d = 0.0;
            for (int j = 0; j < m.cols; ++j) {
                const double diff = m.at(i, j) - m.at(last, j);
                d += diff * diff;
            }
            if (d < dist2[i]) dist2[i] = d;
            if (!selected[i] && dist2[i] > best_d) { // strict: ties keep the lowest index
                best_d = dist2[i];
                best = i;
            }
        }
        cs.indices.push_back(best);
        selected[best] = 1;
        last = best;
    }
    return cs;
}

CenterSet window_centers(const Tensor2& m, int k) {
    if (k < 1) throw std::logic_error("window_centers: k must be >= 1");
    CenterSet cs;
    const int n = std::min(k, m.rows);
    for (int i = m.rows - n; i < m.rows; ++i) cs.indices.push_back(i);
    return cs;
}

void init_static_centers(ParamStore& store, int k, int d_x, std::mt19937_64& rng) {
    store.add_gaussian("centers.rows", k, d_x, 0.1, rng);
}

} // namespace smt
