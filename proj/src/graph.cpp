#include "fairsage/graph.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "fairsage/binio.hpp"
#include "fairsage/errors.hpp"
#include "fairsage/text.hpp"

namespace fairsage {

Csr transpose(const Csr& g) {
    Csr t;
    std::size_t n = g.node_count();
    t.offsets.assign(n + 1, 0);
    for (std::uint32_t v : g.targets) ++t.offsets[v + 1];
    for (std::size_t i = 0; i < n; ++i) t.offsets[i + 1] += t.offsets[i];
    t.targets.resize(g.targets.size());
    std::vector<std::uint64_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
    for (std::uint32_t src = 0; src < n; ++src)
        for (std::uint32_t dst : g.row(src)) t.targets[cursor[dst]++] = src;
    // source rows are visited in ascending order, so each output row is
    // already sorted
    return t;
}

Csr undirected_union(const Csr& out_edges, const Csr& in_edges) {
    Csr u;
    std::size_t n = out_edges.node_count();
    u.offsets.assign(n + 1, 0);
    std::vector<std::uint32_t> merged;
    for (std::uint32_t v = 0; v < n; ++v) {
        auto a = out_edges.row(v);
        auto b = in_edges.row(v);
        merged.clear();
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
        u.targets.insert(u.targets.end(), merged.begin(), merged.end());
        u.offsets[v + 1] = u.targets.size();
    }
    return u;
}

Direction parse_direction(const std::string& s) {
    if (s == "out") return Direction::out;
    if (s == "in") return Direction::in;
    if (s == "both") return Direction::both;
    throw UsageError("unknown direction '" + s + "' (expected out, in, or both)");
}

const char* direction_name(Direction d) {
    switch (d) {
        case Direction::out: return "out";
        case Direction::in: return "in";
        case Direction::both: return "both";
    }
    return "?";
}

std::vector<std::uint32_t> DirectedGraph::neighbors(std::uint32_t node, Direction d) const {
    if (node >= node_count)
        throw DataError("node " + std::to_string(node) + " out of range (" +
                        std::to_string(node_count) + " nodes)");
    switch (d) {
        case Direction::out: {
            auto r = edges.row(node);
            return {r.begin(), r.end()};
        }
        case Direction::in: {
            auto r = reverse_edges.row(node);
            return {r.begin(), r.end()};
        }
        case Direction::both: {
            auto a = edges.row(node);
            auto b = reverse_edges.row(node);
            std::vector<std::uint32_t> u;
            std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
            return u;
        }
    }
    return {};
}

DirectedGraph load_edge_list(const std::string& path, char delimiter, EdgeLoadReport* report) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge list: " + path);

    DirectedGraph g;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    EdgeLoadReport rep;

    auto intern = [&](std::uint64_t ext) -> std::uint32_t {
        auto [it, fresh] = g.id_of.try_emplace(ext, static_cast<std::uint32_t>(g.external_ids.size()));
        if (fresh) g.external_ids.push_back(ext);
        return it->second;
    };

    std::string line;
    std::size_t line_no = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = text::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        if (first_data && delimiter == '\0') delimiter = text::sniff_delimiter(sv);
        auto fields = text::split(sv, delimiter);
        std::uint64_t src, dst;
        if (fields.size() < 2 || !text::parse_u64(fields[0], src) ||
            !text::parse_u64(fields[1], dst)) {
            if (first_data) {  // header row
                first_data = false;
                continue;
            }
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed edge row '" +
                            std::string(sv) + "'");
        }
        first_data = false;
        ++rep.raw_rows;
        if (src == dst) {
            intern(src);
            ++rep.self_loops;
            continue;
        }
        std::uint32_t s = intern(src);
        std::uint32_t d = intern(dst);
        pairs.emplace_back(s, d);
    }
    if (rep.raw_rows == 0) throw DataError("edge list has no data rows: " + path);

    g.node_count = g.external_ids.size();
    std::size_t n = g.node_count;

    g.edges.offsets.assign(n + 1, 0);
    for (auto [s, d] : pairs) ++g.edges.offsets[s + 1];
    for (std::size_t i = 0; i < n; ++i) g.edges.offsets[i + 1] += g.edges.offsets[i];
    g.edges.targets.resize(pairs.size());
    {
        std::vector<std::uint64_t> cursor(g.edges.offsets.begin(), g.edges.offsets.end() - 1);
        for (auto [s, d] : pairs) g.edges.targets[cursor[s]++] = d;
    }
    // sort and collapse duplicates per row, rebuilding offsets in place
    std::size_t write = 0;
    std::uint64_t row_start = 0;
    for (std::size_t v = 0; v < n; ++v) {
        std::uint64_t row_end = g.edges.offsets[v + 1];
        auto begin = g.edges.targets.begin() + row_start;
        auto end = g.edges.targets.begin() + row_end;
        std::sort(begin, end);
        auto last = std::unique(begin, end);
        std::size_t kept = static_cast<std::size_t>(last - begin);
        rep.duplicates += static_cast<std::size_t>(end - last);
        std::move(begin, last, g.edges.targets.begin() + write);
        write += kept;
        row_start = row_end;
        g.edges.offsets[v + 1] = write;
    }
    g.edges.targets.resize(write);
    g.reverse_edges = transpose(g.edges);

    rep.node_count = n;
    rep.edge_count = g.edges.edge_count();
    if (report) *report = rep;
    return g;
}

DegreeStats degree_stats(const DirectedGraph& g) {
    DegreeStats s;
    std::size_t n = g.node_count;
    if (n == 0) return s;
    s.min_in = s.min_out = UINT64_MAX;
    std::uint64_t sum_in = 0, sum_out = 0;
    for (std::uint32_t v = 0; v < n; ++v) {
        std::uint64_t dout = g.edges.degree(v);
        std::uint64_t din = g.reverse_edges.degree(v);
        s.min_out = std::min(s.min_out, dout);
        s.max_out = std::max(s.max_out, dout);
        s.min_in = std::min(s.min_in, din);
        s.max_in = std::max(s.max_in, din);
        sum_out += dout;
        sum_in += din;
        if (dout + din == 0) ++s.isolated;
    }
    s.mean_in = static_cast<double>(sum_in) / static_cast<double>(n);
    s.mean_out = static_cast<double>(sum_out) / static_cast<double>(n);
    return s;
}

void save_graph_store(const std::string& dir, const DirectedGraph& g) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir + "/graph.bin", std::ios::binary);
        if (!out) throw DataError("cannot write " + dir + "/graph.bin");
        binio::put_u64(out, g.node_count);
        binio::put_u64(out, g.edge_count());
        binio::put_array(out, g.edges.offsets.data(), g.edges.offsets.size());
        binio::put_array(out, g.edges.targets.data(), g.edges.targets.size());
        if (!out) throw DataError("short write to " + dir + "/graph.bin");
    }
    {
        std::ofstream out(dir + "/ids.tsv");
        if (!out) throw DataError("cannot write " + dir + "/ids.tsv");
        for (std::uint64_t ext : g.external_ids) out << ext << '\n';
        if (!out) throw DataError("short write to " + dir + "/ids.tsv");
    }
}

DirectedGraph load_graph_store(const std::string& dir) {
    DirectedGraph g;
    std::ifstream in(dir + "/graph.bin", std::ios::binary);
    if (!in) throw DataError("cannot open " + dir + "/graph.bin");
    g.node_count = binio::get_u64(in);
    std::uint64_t edge_count = binio::get_u64(in);
    g.edges.offsets.resize(g.node_count + 1);
    binio::get_array(in, g.edges.offsets.data(), g.edges.offsets.size());
    g.edges.targets.resize(edge_count);
    binio::get_array(in, g.edges.targets.data(), g.edges.targets.size());
    if (g.edges.offsets.front() != 0 || g.edges.offsets.back() != edge_count)
        throw DataError(dir + "/graph.bin: offsets do not cover the edge array");
    for (std::uint32_t t : g.edges.targets)
        if (t >= g.node_count) throw DataError(dir + "/graph.bin: target id out of range");
    g.reverse_edges = transpose(g.edges);

    std::ifstream ids(dir + "/ids.tsv");
    if (!ids) throw DataError("cannot open " + dir + "/ids.tsv");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ids, line)) {
        ++line_no;
        std::string_view sv = text::trim(line);
        if (sv.empty()) continue;
        std::uint64_t ext;
        if (!text::parse_u64(sv, ext))
            throw DataError(dir + "/ids.tsv:" + std::to_string(line_no) + ": bad id");
        g.id_of.emplace(ext, static_cast<std::uint32_t>(g.external_ids.size()));
        g.external_ids.push_back(ext);
    }
    if (g.external_ids.size() != g.node_count)
        throw DataError(dir + "/ids.tsv: " + std::to_string(g.external_ids.size()) +
                        " ids for " + std::to_string(g.node_count) + " nodes");
    return g;
}

}  // namespace fairsage
