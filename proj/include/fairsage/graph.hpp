#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fairsage {

// Compressed sparse rows over dense u32 node ids. Adjacency lists are sorted
// ascending and duplicate-free; immutable after construction.
struct Csr {
    std::vector<std::uint64_t> offsets;  // node_count + 1 entries
    std::vector<std::uint32_t> targets;

    std::size_t node_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::size_t edge_count() const { return targets.size(); }
    std::span<const std::uint32_t> row(std::uint32_t v) const {
        return {targets.data() + offsets[v], targets.data() + offsets[v + 1]};
    }
    std::size_t degree(std::uint32_t v) const { return offsets[v + 1] - offsets[v]; }
    bool operator==(const Csr&) const = default;
};

Csr transpose(const Csr& g);
// Union of out- and in-adjacency, sorted and deduplicated per row.
Csr undirected_union(const Csr& out_edges, const Csr& in_edges);

enum class Direction { out, in, both };
Direction parse_direction(const std::string& s);
const char* direction_name(Direction d);

struct DirectedGraph {
    std::size_t node_count = 0;
    Csr edges;          // out-adjacency, self-loops removed
    Csr reverse_edges;  // exact transpose of edges
    std::vector<std::uint64_t> external_ids;             // internal id -> source id
    std::unordered_map<std::uint64_t, std::uint32_t> id_of;  // source id -> internal

    std::size_t edge_count() const { return edges.edge_count(); }
    std::vector<std::uint32_t> neighbors(std::uint32_t node, Direction d) const;
};

struct EdgeLoadReport {
    std::size_t raw_rows = 0;    // data rows in the file
    std::size_t self_loops = 0;  // removed
    std::size_t duplicates = 0;  // collapsed
    std::size_t node_count = 0;
    std::size_t edge_count = 0;  // after cleaning
};

// Two integer columns, optional header on the first line; delimiter '\0'
// sniffs tab/comma/whitespace. Node ids are remapped to dense u32 ids in
// first-appearance order.
DirectedGraph load_edge_list(const std::string& path, char delimiter,
                             EdgeLoadReport* report = nullptr);

struct DegreeStats {
    std::uint64_t min_in = 0, max_in = 0, min_out = 0, max_out = 0;
    double mean_in = 0.0, mean_out = 0.0;
    std::size_t isolated = 0;
};
DegreeStats degree_stats(const DirectedGraph& g);

// Store directory layout: graph.bin (u64 node count, u64 edge count, u64
// offsets, u32 targets, all little-endian) plus ids.tsv mapping line number
// to source id. Standardization statistics live alongside when features are
// ingested.
void save_graph_store(const std::string& dir, const DirectedGraph& g);
DirectedGraph load_graph_store(const std::string& dir);

}  // namespace fairsage
