#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairsage/graph.hpp"
#include "fairsage/tensor.hpp"

namespace fairsage {

constexpr std::int8_t kLabelNormal = 0;
constexpr std::int8_t kLabelHateful = 1;
constexpr std::int8_t kLabelNone = -1;

struct NodeTableSchema {
    std::string id_column = "user_id";
    std::string label_column;  // empty when the table carries no labels
    std::string group_column;  // empty when no group tags
    // explicit feature column names; empty selects every other column
    std::vector<std::string> feature_columns;
    char delimiter = '\0';  // sniffed from the header when 0
};

struct NodeTable {
    Tensor features;  // [node_count x feature_dim], graph-aligned rows
    std::vector<std::string> feature_names;
    std::vector<std::int8_t> labels;   // kLabel* per node
    std::vector<std::string> groups;   // empty string = untagged
    std::size_t covered_rows = 0;      // nodes with a table row

    std::vector<std::uint32_t> labeled_nodes() const;
    std::size_t count_label(std::int8_t label) const;
};

struct Standardization {
    std::vector<double> mean;
    std::vector<double> stdev;  // 0 marks a constant column

    // (x - mean) / stdev per column; constant columns map to all-zeros.
    void apply(Tensor& rows) const;
};

// Population statistics over the given rows.
Standardization fit_standardization(const Tensor& features,
                                    const std::vector<std::uint32_t>& rows);

// Parses the table, aligns rows to graph internal ids, maps labels
// {hateful,1}->1 and {normal,0}->0 (anything else unlabeled), and leaves
// features raw. Rows whose id is absent from the graph are an error; graph
// nodes without a row keep zero features and no label.
NodeTable load_node_table(const std::string& path, const NodeTableSchema& schema,
                          const DirectedGraph& graph);

void save_standardization(const std::string& path, const Standardization& s,
                          const std::vector<std::string>& names);
Standardization load_standardization(const std::string& path,
                                     std::vector<std::string>* names = nullptr);

}  // namespace fairsage
