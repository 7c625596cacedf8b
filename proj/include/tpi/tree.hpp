#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tpi/market_model.hpp"

namespace tpi {

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

/// One vertex of a scenario tree. Node ids are dense (0..n-1) and index
/// every node-indexed array in the library.
struct TreeNode {
    std::size_t parent = kNoNode;
    std::size_t t_index = 0;
    double p_transition = 1.0; ///< reference-measure probability of reaching this node from its parent
    double price = 0.0;        ///< unaffected price P
    double delta = 1.0;        ///< market depth
    double r = 0.0;            ///< resilience rate on [t_index, t_index + 1)
};

/// Finite filtered probability structure on a TimeGrid. Children of a node
/// are kept in a contiguous range ordered by id; every leaf sits at the last
/// grid index.
class ScenarioTree {
public:
    ScenarioTree() = default;
    ScenarioTree(TimeGrid grid, std::vector<TreeNode> nodes);

    /// Single path with one node per grid point.
    static ScenarioTree chain(TimeGrid grid, std::span<const double> prices, const LiquiditySpec& liquidity);

    /// Non-recombining tree where every node has the same multiplicative
    /// moves; branch k multiplies the price by factors[k] with probability probs[k].
    static ScenarioTree multiplicative(TimeGrid grid, double p0, std::span<const double> factors,
                                       std::span<const double> probs, const LiquiditySpec& liquidity);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const TreeNode& node(std::size_t id) const { return nodes_[id]; }
    std::span<const TreeNode> nodes() const noexcept { return nodes_; }
    std::size_t root() const noexcept { return root_; }
    std::size_t last_level() const noexcept { return grid_.steps(); }

    std::span<const std::size_t> children(std::size_t id) const {
        return {child_ids_.data() + child_begin_[id], child_begin_[id + 1] - child_begin_[id]};
    }
    bool is_leaf(std::size_t id) const { return child_begin_[id] == child_begin_[id + 1]; }

    /// Nodes of one level, ascending id.
    std::span<const std::size_t> level(std::size_t t_index) const {
        return {level_ids_.data() + level_begin_[t_index], level_begin_[t_index + 1] - level_begin_[t_index]};
    }
    std::span<const std::size_t> leaves() const { return level(last_level()); }
    /// Position of a leaf within leaves(), kNoNode for internal nodes.
    std::size_t leaf_index(std::size_t id) const { return leaf_pos_[id]; }

    /// Root-to-node path, root first.
    std::vector<std::size_t> path_to(std::size_t id) const;

    /// Same structure with every price replaced.
    ScenarioTree with_prices(std::span<const double> prices) const;

private:
    TimeGrid grid_;
    std::vector<TreeNode> nodes_;
    std::size_t root_ = 0;
    std::vector<std::size_t> child_begin_;
    std::vector<std::size_t> child_ids_;
    std::vector<std::size_t> level_begin_;
    std::vector<std::size_t> level_ids_;
    std::vector<std::size_t> leaf_pos_;
};

/// A measure on the tree given by per-node transition probabilities
/// (probability of the node given its parent; 1 at the root).
struct NodeMeasure {
    std::vector<double> transition;

    /// The reference measure carried by the tree.
    static NodeMeasure reference(const ScenarioTree& tree);

    /// Build transitions from (unnormalized, non-negative) leaf weights in
    /// leaves() order. Nodes without mass inherit the reference transitions.
    static NodeMeasure from_leaf_weights(const ScenarioTree& tree, std::span<const double> leaf_weights);

    /// Throws ValidationError unless every internal node carries a
    /// probability vector supported on reference-positive children.
    void validate(const ScenarioTree& tree) const;
};

/// Unconditional probability of reaching every node.
std::vector<double> node_probabilities(const ScenarioTree& tree, const NodeMeasure& q);

/// Leaf probabilities in leaves() order.
std::vector<double> leaf_probabilities(const ScenarioTree& tree, const NodeMeasure& q);

/// Backward recursion from the leaf entries of node_values.
std::vector<double> conditional_expectation(const ScenarioTree& tree, const NodeMeasure& q,
                                            std::span<const double> node_values);

/// Martingale generated by terminal values given in leaves() order.
std::vector<double> martingale_projection(const ScenarioTree& tree, const NodeMeasure& q,
                                          std::span<const double> terminal);

struct MartingaleCheck {
    bool ok = true;
    double max_defect = 0.0;
    std::size_t worst_node = kNoNode;
};

/// One-step defect |M_n - sum_c q_c M_c| over internal nodes; passes at
/// 1e-10 * (1 + max |M|).
MartingaleCheck is_martingale(const ScenarioTree& tree, const NodeMeasure& q, std::span<const double> m);

struct TiltResult {
    NodeMeasure q;
    std::vector<double> martingale;
    double max_deviation = 0.0;   ///< max over nodes of |P + g - M|
    double tail_probability = 0.0; ///< Q(P_T > eps)
};

/// Two-point zero-drift mixing of P + g at every internal node. g holds one
/// value per grid point and must be non-increasing. Throws NoSignChange when
/// some node lacks children on both sides of the current level.
TiltResult tilt_to_martingale(const ScenarioTree& tree, std::span<const double> g, double eps);

double q_tail_probability(const ScenarioTree& tree, const NodeMeasure& q, double threshold);

/// Values a q-martingale can take at each node while staying inside the
/// node-wise bands [lower, upper] everywhere below (and at) that node.
struct BandIntervals {
    std::vector<double> lo;
    std::vector<double> hi;
    bool feasible = true;
    std::size_t first_empty = kNoNode; ///< deepest-level node found empty first
};

/// Backward interval recursion. An interval counts as non-empty when
/// lo <= hi + tol; near-empty intervals collapse to their midpoint.
BandIntervals martingale_band_intervals(const ScenarioTree& tree, const NodeMeasure& q,
                                        std::span<const double> lower, std::span<const double> upper,
                                        double tol = 0.0);

/// Forward selection of a martingale through feasible intervals, starting
/// from root_value (clamped into the root interval).
std::vector<double> select_band_martingale(const ScenarioTree& tree, const NodeMeasure& q,
                                           const BandIntervals& intervals, double root_value);

/// Forward selection that stays as close as possible to a node-indexed
/// target: children take clamp(target + shift) with one shift per node
/// solving the martingale condition. Returns the target itself whenever it
/// is a q-martingale inside the intervals.
std::vector<double> select_band_martingale_near(const ScenarioTree& tree, const NodeMeasure& q,
                                                const BandIntervals& intervals, std::span<const double> target);

} // namespace tpi
