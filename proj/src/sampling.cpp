#include "fairsage/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fairsage/errors.hpp"

namespace fairsage {

bool operator==(const SampledBlock& a, const SampledBlock& b) {
    if (a.layer_nodes != b.layer_nodes || a.fanouts != b.fanouts) return false;
    if (a.seg_offsets.size() != b.seg_offsets.size()) return false;
    for (std::size_t h = 0; h < a.seg_offsets.size(); ++h) {
        if (*a.seg_offsets[h] != *b.seg_offsets[h]) return false;
        if (*a.neighbor_rows[h] != *b.neighbor_rows[h]) return false;
    }
    return true;
}

void sample_prefix(std::vector<std::uint32_t>& pool, std::size_t k, RngStream& rng) {
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t pick = j + static_cast<std::size_t>(rng.uniform_int(pool.size() - j));
        std::swap(pool[j], pool[pick]);
    }
}

SampledBlock sample_neighbors(const DirectedGraph& g, const std::vector<std::uint32_t>& seeds,
                              const std::vector<std::size_t>& fanouts, Direction direction,
                              RngStream& rng) {
    if (seeds.empty()) throw DataError("sample_neighbors: empty seed set");
    if (fanouts.empty()) throw UsageError("sample_neighbors: need at least one fanout");
    for (std::size_t f : fanouts)
        if (f == 0) throw UsageError("sample_neighbors: fanouts must be positive");
    for (std::uint32_t s : seeds)
        if (s >= g.node_count)
            throw DataError("sample_neighbors: seed " + std::to_string(s) + " out of range");

    SampledBlock block;
    block.fanouts = fanouts;
    block.layer_nodes.push_back(seeds);

    std::vector<std::uint32_t> pool;
    for (std::size_t h = 0; h < fanouts.size(); ++h) {
        const auto& frontier = block.layer_nodes[h];
        // next layer keeps the frontier as a prefix, in order
        std::vector<std::uint32_t> next = frontier;
        std::unordered_map<std::uint32_t, std::uint32_t> pos;
        pos.reserve(next.size() * 2);
        for (std::uint32_t i = 0; i < next.size(); ++i) pos.emplace(next[i], i);

        auto offsets = std::make_shared<IndexVec>();
        auto rows = std::make_shared<IndexVec>();
        offsets->reserve(frontier.size() + 1);
        offsets->push_back(0);
        std::size_t fanout = fanouts[h];
        for (std::uint32_t v : frontier) {
            pool = g.neighbors(v, direction);
            if (pool.size() > fanout) sample_prefix(pool, fanout, rng);
            std::size_t take = std::min(pool.size(), fanout);
            for (std::size_t i = 0; i < take; ++i) {
                std::uint32_t u = pool[i];
                auto [it, fresh] = pos.try_emplace(u, static_cast<std::uint32_t>(next.size()));
                if (fresh) next.push_back(u);
                rows->push_back(it->second);
            }
            offsets->push_back(static_cast<std::uint32_t>(rows->size()));
        }
        block.seg_offsets.push_back(std::move(offsets));
        block.neighbor_rows.push_back(std::move(rows));
        block.layer_nodes.push_back(std::move(next));
    }
    return block;
}

DurwWalk::DurwWalk(const DirectedGraph& g, std::uint32_t start)
    : g_(&g), current_(start), counts_(g.node_count, 0), visited_(g.node_count, false) {
    if (start >= g.node_count)
        throw DataError("walk start " + std::to_string(start) + " out of range");
    visit(start);
}

void DurwWalk::visit(std::uint32_t v) {
    ++counts_[v];
    if (!visited_[v]) {
        visited_[v] = true;
        order_.push_back(v);
    }
}

std::uint32_t DurwWalk::step(double jump_weight, RngStream& rng) {
    known_.clear();
    auto out = g_->edges.row(current_);
    auto in = g_->reverse_edges.row(current_);
    // merge two sorted lists, keeping in-neighbors only once visited
    std::size_t i = 0, j = 0;
    while (i < out.size() || j < in.size()) {
        std::uint32_t candidate;
        if (j >= in.size() || (i < out.size() && out[i] <= in[j])) {
            candidate = out[i];
            if (i < out.size() && j < in.size() && out[i] == in[j]) ++j;
            ++i;
            known_.push_back(candidate);
        } else {
            candidate = in[j];
            ++j;
            if (visited_[candidate]) known_.push_back(candidate);
        }
    }

    std::uint32_t next;
    double deg = static_cast<double>(known_.size());
    bool jump;
    if (known_.empty()) {
        jump = true;
    } else if (jump_weight == 0.0) {
        jump = false;
    } else {
        jump = rng.uniform() < jump_weight / (jump_weight + deg);
    }
    if (jump) {
        next = static_cast<std::uint32_t>(rng.uniform_int(g_->node_count));
    } else {
        next = known_[rng.uniform_int(known_.size())];
    }
    ++steps_;
    current_ = next;
    visit(next);
    return next;
}

DurwResult durw_sample(const DirectedGraph& g, std::uint32_t start, double jump_weight,
                       std::size_t budget, RngStream& rng) {
    if (budget == 0) throw UsageError("walk budget must be positive");
    if (budget > g.node_count)
        throw UsageError("walk budget " + std::to_string(budget) + " exceeds node count " +
                         std::to_string(g.node_count));
    if (!(jump_weight >= 0.0) || !std::isfinite(jump_weight))
        throw UsageError("jump weight must be finite and non-negative");

    DurwWalk walk(g, start);
    std::uint64_t cap = 100 * static_cast<std::uint64_t>(budget);
    while (walk.distinct_visited() < budget && walk.steps() < cap) walk.step(jump_weight, rng);

    DurwResult res;
    res.nodes = walk.visit_order();
    res.visit_counts.reserve(res.nodes.size());
    for (std::uint32_t v : res.nodes) res.visit_counts.push_back(walk.count_of(v));
    res.steps = walk.steps();
    res.complete = walk.distinct_visited() >= budget;
    return res;
}

std::vector<double> diffusion_scores(const DirectedGraph& g,
                                     const std::vector<double>& seed_scores, double alpha,
                                     std::size_t iterations) {
    if (seed_scores.size() != g.node_count)
        throw DataError("diffusion seeds: " + std::to_string(seed_scores.size()) +
                        " scores for " + std::to_string(g.node_count) + " nodes");
    for (double s : seed_scores)
        if (!std::isfinite(s) || s < 0.0)
            throw DataError("diffusion seeds must be finite and non-negative");
    if (!(alpha >= 0.0) || alpha >= 1.0)
        throw UsageError("diffusion alpha must lie in [0, 1)");

    Csr sym = undirected_union(g.edges, g.reverse_edges);
    std::vector<double> p = seed_scores, next(g.node_count);
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::uint32_t v = 0; v < g.node_count; ++v) {
            auto row = sym.row(v);
            double prop;
            if (row.empty()) {
                prop = p[v];
            } else {
                double acc = 0.0;
                for (std::uint32_t u : row) acc += p[u];
                prop = acc / static_cast<double>(row.size());
            }
            next[v] = alpha * prop + (1.0 - alpha) * seed_scores[v];
        }
        std::swap(p, next);
    }
    return p;
}

std::vector<std::uint32_t> select_candidates(const std::vector<double>& scores,
                                             std::size_t strata, std::size_t per_stratum,
                                             RngStream& rng) {
    if (strata == 0) throw UsageError("strata must be positive");
    if (per_stratum == 0) throw UsageError("per-stratum count must be positive");
    std::size_t n = scores.size();

    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

    std::size_t base = n / strata, rem = n % strata;
    std::vector<std::size_t> deficient;
    std::vector<std::pair<std::size_t, std::size_t>> bins;  // [begin, end)
    std::size_t at = 0;
    for (std::size_t s = 0; s < strata; ++s) {
        std::size_t len = base + (s < rem ? 1 : 0);
        bins.emplace_back(at, at + len);
        if (len < per_stratum) deficient.push_back(s);
        at += len;
    }
    if (!deficient.empty()) {
        std::string msg = "strata too small for " + std::to_string(per_stratum) +
                          " draws each:";
        for (std::size_t s : deficient) msg += " " + std::to_string(s);
        throw DataError(msg);
    }

    std::vector<std::uint32_t> out, bin;
    out.reserve(strata * per_stratum);
    for (auto [begin, end] : bins) {
        bin.assign(order.begin() + begin, order.begin() + end);
        sample_prefix(bin, per_stratum, rng);
        out.insert(out.end(), bin.begin(), bin.begin() + per_stratum);
    }
    return out;
}

}  // namespace fairsage
