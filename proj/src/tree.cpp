#include "tpi/tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tpi/errors.hpp"

namespace tpi {

namespace {

constexpr double kSimplexTolerance = 1e-10;

std::string node_msg(const char* what, std::size_t id) {
    std::ostringstream os;
    os << what << " (node " << id << ")";
    return os.str();
}

} // namespace

ScenarioTree::ScenarioTree(TimeGrid grid, std::vector<TreeNode> nodes)
    : grid_(std::move(grid)), nodes_(std::move(nodes)) {
    const std::size_t n = nodes_.size();
    if (n == 0) throw ValidationError("tree has no nodes");
    const std::size_t last = grid_.steps();

    root_ = kNoNode;
    std::vector<std::size_t> child_count(n, 0);
    std::vector<std::size_t> level_count(last + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const TreeNode& node = nodes_[i];
        if (node.t_index > last) throw ValidationError(node_msg("time index beyond grid", i));
        if (!std::isfinite(node.price) || !std::isfinite(node.delta) || !std::isfinite(node.r))
            throw ValidationError(node_msg("non-finite node data", i));
        if (!(node.p_transition >= 0.0 && node.p_transition <= 1.0 + kSimplexTolerance))
            throw ValidationError(node_msg("transition probability outside [0, 1]", i));
        if (node.parent == kNoNode) {
            if (root_ != kNoNode) throw ValidationError("tree has more than one root");
            if (node.t_index != 0) throw ValidationError("root must sit at t_index 0");
            root_ = i;
        } else {
            if (node.parent >= n) throw ValidationError(node_msg("parent id out of range", i));
            if (nodes_[node.parent].t_index + 1 != node.t_index)
                throw ValidationError(node_msg("child must sit one level below its parent", i));
            ++child_count[node.parent];
        }
        ++level_count[node.t_index];
    }
    if (root_ == kNoNode) throw ValidationError("tree has no root");
    nodes_[root_].p_transition = 1.0;

    child_begin_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) child_begin_[i + 1] = child_begin_[i] + child_count[i];
    child_ids_.assign(child_begin_[n], 0);
    std::vector<std::size_t> fill(child_begin_.begin(), child_begin_.end() - 1);
    level_begin_.assign(last + 2, 0);
    for (std::size_t t = 0; t <= last; ++t) level_begin_[t + 1] = level_begin_[t] + level_count[t];
    level_ids_.assign(n, 0);
    std::vector<std::size_t> level_fill(level_begin_.begin(), level_begin_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes_[i].parent != kNoNode) child_ids_[fill[nodes_[i].parent]++] = i;
        level_ids_[level_fill[nodes_[i].t_index]++] = i;
    }

    leaf_pos_.assign(n, kNoNode);
    std::size_t leaf_counter = 0;
    for (std::size_t t = 0; t <= last; ++t) {
        for (std::size_t id : level(t)) {
            if (is_leaf(id)) {
                if (t != last) throw ValidationError(node_msg("leaf before the final grid point", id));
                leaf_pos_[id] = leaf_counter++;
                continue;
            }
            double total = 0.0;
            for (std::size_t c : children(id)) total += nodes_[c].p_transition;
            if (std::abs(total - 1.0) > kSimplexTolerance)
                throw ValidationError(node_msg("transition probabilities do not sum to one", id));
        }
    }
}

ScenarioTree ScenarioTree::chain(TimeGrid grid, std::span<const double> prices, const LiquiditySpec& liquidity) {
    if (prices.size() != grid.size()) throw GridMismatch("price path length differs from grid");
    if (liquidity.delta.size() != grid.size() || liquidity.r.size() != grid.size())
        throw GridMismatch("liquidity length differs from grid");
    std::vector<TreeNode> nodes(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        nodes[i].parent = i == 0 ? kNoNode : i - 1;
        nodes[i].t_index = i;
        nodes[i].p_transition = 1.0;
        nodes[i].price = prices[i];
        nodes[i].delta = liquidity.delta[i];
        nodes[i].r = liquidity.r[i];
    }
    return ScenarioTree(std::move(grid), std::move(nodes));
}

ScenarioTree ScenarioTree::multiplicative(TimeGrid grid, double p0, std::span<const double> factors,
                                          std::span<const double> probs, const LiquiditySpec& liquidity) {
    if (factors.empty() || factors.size() != probs.size()) throw ValidationError("factors and probs must match");
    if (liquidity.delta.size() != grid.size() || liquidity.r.size() != grid.size())
        throw GridMismatch("liquidity length differs from grid");
    std::vector<TreeNode> nodes;
    nodes.push_back({kNoNode, 0, 1.0, p0, liquidity.delta[0], liquidity.r[0]});
    std::size_t level_start = 0;
    for (std::size_t t = 1; t < grid.size(); ++t) {
        const std::size_t level_end = nodes.size();
        for (std::size_t parent = level_start; parent < level_end; ++parent) {
            for (std::size_t k = 0; k < factors.size(); ++k) {
                nodes.push_back({parent, t, probs[k], nodes[parent].price * factors[k], liquidity.delta[t],
                                 liquidity.r[t]});
            }
        }
        level_start = level_end;
    }
    return ScenarioTree(std::move(grid), std::move(nodes));
}

std::vector<std::size_t> ScenarioTree::path_to(std::size_t id) const {
    std::vector<std::size_t> path;
    for (std::size_t cur = id; cur != kNoNode; cur = nodes_[cur].parent) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
}

ScenarioTree ScenarioTree::with_prices(std::span<const double> prices) const {
    if (prices.size() != nodes_.size()) throw GridMismatch("price vector length differs from node count");
    ScenarioTree copy = *this;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!std::isfinite(prices[i])) throw ValidationError(node_msg("non-finite price", i));
        copy.nodes_[i].price = prices[i];
    }
    return copy;
}

NodeMeasure NodeMeasure::reference(const ScenarioTree& tree) {
    NodeMeasure q;
    q.transition.resize(tree.size());
    for (std::size_t i = 0; i < tree.size(); ++i) q.transition[i] = tree.node(i).p_transition;
    return q;
}

NodeMeasure NodeMeasure::from_leaf_weights(const ScenarioTree& tree, std::span<const double> leaf_weights) {
    if (leaf_weights.size() != tree.leaves().size()) throw GridMismatch("leaf weight count differs from leaves");
    std::vector<double> mass(tree.size(), 0.0);
    for (std::size_t k = 0; k < leaf_weights.size(); ++k) {
        if (!(leaf_weights[k] >= 0.0)) throw ValidationError("leaf weights must be non-negative");
        mass[tree.leaves()[k]] = leaf_weights[k];
    }
    for (std::size_t t = tree.last_level(); t-- > 0;) {
        for (std::size_t id : tree.level(t)) {
            for (std::size_t c : tree.children(id)) mass[id] += mass[c];
        }
    }
    NodeMeasure q = reference(tree);
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (tree.is_leaf(id) || !(mass[id] > 0.0)) continue;
        for (std::size_t c : tree.children(id)) q.transition[c] = mass[c] / mass[id];
    }
    q.transition[tree.root()] = 1.0;
    return q;
}

void NodeMeasure::validate(const ScenarioTree& tree) const {
    if (transition.size() != tree.size()) throw GridMismatch("measure size differs from node count");
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (!(transition[id] >= 0.0) || transition[id] > 1.0 + kSimplexTolerance)
            throw ValidationError(node_msg("transition probability outside [0, 1]", id));
        if (transition[id] > 0.0 && tree.node(id).parent != kNoNode && tree.node(id).p_transition == 0.0)
            throw ValidationError(node_msg("measure charges a reference-null branch", id));
        if (tree.is_leaf(id)) continue;
        double total = 0.0;
        for (std::size_t c : tree.children(id)) total += transition[c];
        if (std::abs(total - 1.0) > kSimplexTolerance)
            throw ValidationError(node_msg("transition probabilities do not sum to one", id));
    }
}

std::vector<double> node_probabilities(const ScenarioTree& tree, const NodeMeasure& q) {
    std::vector<double> prob(tree.size(), 0.0);
    prob[tree.root()] = 1.0;
    for (std::size_t t = 1; t <= tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) prob[id] = prob[tree.node(id).parent] * q.transition[id];
    }
    return prob;
}

std::vector<double> leaf_probabilities(const ScenarioTree& tree, const NodeMeasure& q) {
    const auto prob = node_probabilities(tree, q);
    std::vector<double> out;
    out.reserve(tree.leaves().size());
    for (std::size_t id : tree.leaves()) out.push_back(prob[id]);
    return out;
}

std::vector<double> conditional_expectation(const ScenarioTree& tree, const NodeMeasure& q,
                                            std::span<const double> node_values) {
    if (node_values.size() != tree.size()) throw GridMismatch("value vector length differs from node count");
    q.validate(tree);
    std::vector<double> out(tree.size(), 0.0);
    for (std::size_t id : tree.leaves()) out[id] = node_values[id];
    for (std::size_t t = tree.last_level(); t-- > 0;) {
        for (std::size_t id : tree.level(t)) {
            double acc = 0.0;
            for (std::size_t c : tree.children(id)) acc += q.transition[c] * out[c];
            out[id] = acc;
        }
    }
    return out;
}

std::vector<double> martingale_projection(const ScenarioTree& tree, const NodeMeasure& q,
                                          std::span<const double> terminal) {
    if (terminal.size() != tree.leaves().size()) throw GridMismatch("terminal value count differs from leaves");
    std::vector<double> values(tree.size(), 0.0);
    for (std::size_t k = 0; k < terminal.size(); ++k) values[tree.leaves()[k]] = terminal[k];
    return conditional_expectation(tree, q, values);
}

MartingaleCheck is_martingale(const ScenarioTree& tree, const NodeMeasure& q, std::span<const double> m) {
    if (m.size() != tree.size()) throw GridMismatch("process length differs from node count");
    MartingaleCheck check;
    double scale = 1.0;
    for (double v : m) scale = std::max(scale, 1.0 + std::abs(v));
    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (tree.is_leaf(id)) continue;
        double expected = 0.0;
        for (std::size_t c : tree.children(id)) expected += q.transition[c] * m[c];
        const double defect = std::abs(m[id] - expected);
        if (!(defect <= check.max_defect)) {
            check.max_defect = defect;
            check.worst_node = id;
        }
    }
    check.ok = check.max_defect <= 1e-10 * scale;
    return check;
}

TiltResult tilt_to_martingale(const ScenarioTree& tree, std::span<const double> g, double eps) {
    const TimeGrid& grid = tree.grid();
    if (g.size() != grid.size()) throw GridMismatch("g must have one value per grid point");
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (g[i] > g[i - 1]) throw ValidationError("g must be non-increasing");
    }

    TiltResult result;
    result.q.transition.assign(tree.size(), 0.0);
    result.q.transition[tree.root()] = 1.0;
    auto shifted = [&](std::size_t id) { return tree.node(id).price + g[tree.node(id).t_index]; };

    for (std::size_t id = 0; id < tree.size(); ++id) {
        if (tree.is_leaf(id)) continue;
        const double here = shifted(id);
        std::size_t down = kNoNode;
        std::size_t up = kNoNode;
        double lo = 0.0;
        double hi = 0.0;
        for (std::size_t c : tree.children(id)) {
            if (tree.node(c).p_transition <= 0.0) continue;
            const double inc = shifted(c) - here;
            if (down == kNoNode || inc < lo) {
                down = c;
                lo = inc;
            }
            if (up == kNoNode || inc > hi) {
                up = c;
                hi = inc;
            }
        }
        if (down == kNoNode || lo > 0.0 || hi < 0.0) throw NoSignChange(node_msg("no sign change of P + g increments", id));
        if (hi == lo) {
            result.q.transition[down] = 1.0;
        } else {
            result.q.transition[down] = hi / (hi - lo);
            result.q.transition[up] += -lo / (hi - lo);
        }
    }

    std::vector<double> terminal;
    terminal.reserve(tree.leaves().size());
    for (std::size_t id : tree.leaves()) terminal.push_back(shifted(id));
    result.martingale = martingale_projection(tree, result.q, terminal);
    for (std::size_t id = 0; id < tree.size(); ++id) {
        result.max_deviation = std::max(result.max_deviation, std::abs(shifted(id) - result.martingale[id]));
    }
    result.tail_probability = q_tail_probability(tree, result.q, eps);
    return result;
}

double q_tail_probability(const ScenarioTree& tree, const NodeMeasure& q, double threshold) {
    const auto prob = node_probabilities(tree, q);
    double tail = 0.0;
    for (std::size_t id : tree.leaves()) {
        if (tree.node(id).price > threshold) tail += prob[id];
    }
    return tail;
}

BandIntervals martingale_band_intervals(const ScenarioTree& tree, const NodeMeasure& q,
                                        std::span<const double> lower, std::span<const double> upper, double tol) {
    if (lower.size() != tree.size() || upper.size() != tree.size())
        throw GridMismatch("band vectors must be node-indexed");
    BandIntervals out;
    out.lo.assign(tree.size(), 0.0);
    out.hi.assign(tree.size(), 0.0);
    auto settle = [&](std::size_t id, double lo, double hi) {
        if (lo > hi + tol) {
            if (out.feasible) out.first_empty = id;
            out.feasible = false;
        } else if (lo > hi) {
            lo = hi = 0.5 * (lo + hi);
        }
        out.lo[id] = lo;
        out.hi[id] = hi;
    };
    for (std::size_t t = tree.last_level() + 1; t-- > 0;) {
        for (std::size_t id : tree.level(t)) {
            double lo = lower[id];
            double hi = upper[id];
            if (!tree.is_leaf(id)) {
                double e_lo = 0.0;
                double e_hi = 0.0;
                for (std::size_t c : tree.children(id)) {
                    e_lo += q.transition[c] * out.lo[c];
                    e_hi += q.transition[c] * out.hi[c];
                }
                lo = std::max(lo, e_lo);
                hi = std::min(hi, e_hi);
            }
            settle(id, lo, hi);
        }
    }
    return out;
}

std::vector<double> select_band_martingale(const ScenarioTree& tree, const NodeMeasure& q,
                                           const BandIntervals& intervals, double root_value) {
    std::vector<double> m(tree.size(), 0.0);
    const std::size_t root = tree.root();
    m[root] = std::clamp(root_value, intervals.lo[root], std::max(intervals.lo[root], intervals.hi[root]));
    for (std::size_t t = 0; t < tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) {
            double e_lo = 0.0;
            double e_hi = 0.0;
            for (std::size_t c : tree.children(id)) {
                e_lo += q.transition[c] * intervals.lo[c];
                e_hi += q.transition[c] * intervals.hi[c];
            }
            const double width = e_hi - e_lo;
            const double theta = width > 0.0 ? std::clamp((m[id] - e_lo) / width, 0.0, 1.0) : 0.0;
            for (std::size_t c : tree.children(id)) {
                m[c] = intervals.lo[c] + theta * (intervals.hi[c] - intervals.lo[c]);
            }
        }
    }
    return m;
}

std::vector<double> select_band_martingale_near(const ScenarioTree& tree, const NodeMeasure& q,
                                                const BandIntervals& intervals, std::span<const double> target) {
    if (target.size() != tree.size()) throw GridMismatch("target must be node-indexed");
    std::vector<double> m(tree.size(), 0.0);
    const std::size_t root = tree.root();
    m[root] = std::clamp(target[root], intervals.lo[root], std::max(intervals.lo[root], intervals.hi[root]));
    auto pick = [&](std::size_t c, double shift) {
        return std::clamp(target[c] + shift, intervals.lo[c], std::max(intervals.lo[c], intervals.hi[c]));
    };
    for (std::size_t t = 0; t < tree.last_level(); ++t) {
        for (std::size_t id : tree.level(t)) {
            auto mean = [&](double shift) {
                double e = 0.0;
                for (std::size_t c : tree.children(id)) e += q.transition[c] * pick(c, shift);
                return e;
            };
            double a = 0.0;
            double b = 0.0;
            for (std::size_t c : tree.children(id)) {
                a = std::min(a, intervals.lo[c] - target[c]);
                b = std::max(b, intervals.hi[c] - target[c]);
            }
            double shift = 0.0;
            if (mean(0.0) != m[id]) {
                for (int it = 0; it < 200 && a < b; ++it) {
                    const double mid = 0.5 * (a + b);
                    if (mid == a || mid == b) break;
                    if (mean(mid) < m[id]) a = mid;
                    else b = mid;
                }
                shift = std::abs(mean(a) - m[id]) <= std::abs(mean(b) - m[id]) ? a : b;
            }
            for (std::size_t c : tree.children(id)) m[c] = pick(c, shift);
        }
    }
    return m;
}

} // namespace tpi
