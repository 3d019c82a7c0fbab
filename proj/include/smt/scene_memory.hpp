#pragma once

#include "smt/embedding.hpp"

#include <vector>

namespace smt {

/// Append-only set of embedded observations with FIFO eviction at capacity.
/// The image and action embeddings are computed once at insertion; pose
/// features are re-embedded on every materialization so the memory is
/// always expressed in the current ego-centric frame.
class SceneMemory {
public:
    struct Element {
        Observation obs; // kept for replay and for end-to-end re-embedding
        std::vector<double> phi_i;
        std::vector<double> phi_a;
    };

    explicit SceneMemory(int capacity = 500) : capacity_(capacity) {}

    void update(const Observation& o, const ParamStore& store, const EmbeddingConfig& cfg);

    int size() const { return static_cast<int>(elements_.size()); }
    bool empty() const { return elements_.empty(); }
    int capacity() const { return capacity_; }
    const std::vector<Element>& elements() const { return elements_; }

    /// |M| x d_x matrix of psi rows for the given frame and current step.
    Tensor2 materialize(const Pose& frame, int now, const ParamStore& store,
                        const EmbeddingConfig& cfg) const;

    /// Same matrix as a tape node. With full_recompute the image/action
    /// embeddings are rebuilt from the raw observations so gradients reach
    /// the embedding parameters (used while they are unfrozen); otherwise
    /// the cached static parts enter as constants and only phi_p and the
    /// final FC sit on the tape.
    Tape::Id materialize_on_tape(Tape& t, const Pose& frame, int now,
                                 const ParamStore& store, const EmbeddingConfig& cfg,
                                 bool full_recompute) const;

private:
    int capacity_;
    std::vector<Element> elements_;
};

/// Representative rows for memory factorization: the selected indices
/// (FPS/Window) or nothing for trainable Static centers.
struct CenterSet {
    std::vector<int> indices;
};

/// Greedy farthest point sampling: start from seed_index, repeatedly add
/// the row with maximal Euclidean distance to the nearest selected row.
/// Ties break to the lowest row index. O(|M| k).
CenterSet fps_centers(const Tensor2& m, int k, int seed_index);

/// The min(k, |M|) most recent rows.
CenterSet window_centers(const Tensor2& m, int k);

/// Registers k trainable center rows under `centers.rows`.
void init_static_centers(ParamStore& store, int k, int d_x, std::mt19937_64& rng);

} // namespace smt
