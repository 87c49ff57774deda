#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fairsage/graph.hpp"
#include "fairsage/rng.hpp"
#include "fairsage/tape.hpp"

namespace fairsage {

// Layered neighbor sample for one minibatch. layer_nodes[0] is the seed
// list; each deeper list starts with the previous list as a prefix (so a
// node's own row index is stable across layers) followed by newly sampled
// neighbors. neighbor_rows[h] indexes into layer_nodes[h+1]; seg_offsets[h]
// has one segment per node of layer_nodes[h].
struct SampledBlock {
    std::vector<std::vector<std::uint32_t>> layer_nodes;
    std::vector<std::shared_ptr<IndexVec>> seg_offsets;
    std::vector<std::shared_ptr<IndexVec>> neighbor_rows;
    std::vector<std::size_t> fanouts;

    std::size_t layers() const { return fanouts.size(); }
};
bool operator==(const SampledBlock& a, const SampledBlock& b);

// Uniform without replacement, min(degree, fanout) per node. Consumes rng
// only for nodes whose degree exceeds the fanout, so full-fanout blocks are
// identical across streams.
SampledBlock sample_neighbors(const DirectedGraph& g, const std::vector<std::uint32_t>& seeds,
                              const std::vector<std::size_t>& fanouts, Direction direction,
                              RngStream& rng);

// Partial Fisher-Yates: after the call the first k entries are a uniform
// without-replacement sample of the pool.
void sample_prefix(std::vector<std::uint32_t>& pool, std::size_t k, RngStream& rng);

// Random walk with jumps over progressively revealed edges: out-edges are
// always traversable, in-edges only once their source has been visited.
// Jump probability is w / (w + known_degree); a stranded walker (no known
// edges, w = 0) jumps anyway.
class DurwWalk {
public:
    DurwWalk(const DirectedGraph& g, std::uint32_t start);

    std::uint32_t step(double jump_weight, RngStream& rng);
    std::uint32_t current() const { return current_; }
    std::uint64_t steps() const { return steps_; }
    std::size_t distinct_visited() const { return order_.size(); }
    const std::vector<std::uint32_t>& visit_order() const { return order_; }
    std::uint64_t count_of(std::uint32_t node) const { return counts_[node]; }

private:
    void visit(std::uint32_t v);

    const DirectedGraph* g_;
    std::uint32_t current_;
    std::uint64_t steps_ = 0;
    std::vector<std::uint64_t> counts_;
    std::vector<bool> visited_;
    std::vector<std::uint32_t> order_;
    std::vector<std::uint32_t> known_;  // scratch for the revealed neighbor set
};

struct DurwResult {
    std::vector<std::uint32_t> nodes;  // first-visit order
    std::vector<std::uint64_t> visit_counts;
    std::uint64_t steps = 0;
    bool complete = true;  // false when the step cap fired before the budget
};

// Walks until `budget` distinct nodes are visited or 100 * budget steps
// elapse (partial result, flagged).
DurwResult durw_sample(const DirectedGraph& g, std::uint32_t start, double jump_weight,
                       std::size_t budget, RngStream& rng);

// iterations of p <- alpha * A_hat * p + (1 - alpha) * p0 on the
// row-normalized undirected closure; rows without neighbors pass their score
// through unchanged.
std::vector<double> diffusion_scores(const DirectedGraph& g,
                                     const std::vector<double>& seed_scores, double alpha,
                                     std::size_t iterations);

// Quantile-stratified selection: nodes ordered by (score, id), split into
// `strata` contiguous bins (sizes differing by at most one), `per_stratum`
// drawn uniformly from each.
std::vector<std::uint32_t> select_candidates(const std::vector<double>& scores,
                                             std::size_t strata, std::size_t per_stratum,
                                             RngStream& rng);

}  // namespace fairsage
