#include "fairsage/node_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fairsage/errors.hpp"
#include "fairsage/text.hpp"

namespace fairsage {

std::vector<std::uint32_t> NodeTable::labeled_nodes() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < labels.size(); ++v)
        if (labels[v] != kLabelNone) out.push_back(v);
    return out;
}

std::size_t NodeTable::count_label(std::int8_t label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

Standardization fit_standardization(const Tensor& features,
                                    const std::vector<std::uint32_t>& rows) {
    if (rows.empty()) throw DataError("standardization needs at least one row");
    std::size_t dim = features.cols();
    Standardization s;
    s.mean.assign(dim, 0.0);
    s.stdev.assign(dim, 0.0);
    double inv = 1.0 / static_cast<double>(rows.size());
    for (std::uint32_t r : rows)
        for (std::size_t c = 0; c < dim; ++c) s.mean[c] += features.at(r, c);
    for (std::size_t c = 0; c < dim; ++c) s.mean[c] *= inv;
    for (std::uint32_t r : rows)
        for (std::size_t c = 0; c < dim; ++c) {
            double d = features.at(r, c) - s.mean[c];
            s.stdev[c] += d * d;
        }
    for (std::size_t c = 0; c < dim; ++c) s.stdev[c] = std::sqrt(s.stdev[c] * inv);
    return s;
}

void Standardization::apply(Tensor& rows) const {
    if (rows.cols() != mean.size())
        throw DataError("standardization has " + std::to_string(mean.size()) +
                        " columns, features have " + std::to_string(rows.cols()));
    for (std::size_t r = 0; r < rows.rows(); ++r)
        for (std::size_t c = 0; c < rows.cols(); ++c) {
            double& x = rows.at(r, c);
            x = stdev[c] == 0.0 ? 0.0 : (x - mean[c]) / stdev[c];
        }
}

NodeTable load_node_table(const std::string& path, const NodeTableSchema& schema,
                          const DirectedGraph& graph) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open node table: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("node table is empty: " + path);
    char delim = schema.delimiter ? schema.delimiter : text::sniff_delimiter(line);
    std::vector<std::string> header = text::split(text::trim(line), delim);

    auto column_of = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw DataError(path + ": header lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };

    std::size_t id_col = column_of(schema.id_column);
    std::size_t label_col = schema.label_column.empty() ? SIZE_MAX : column_of(schema.label_column);
    std::size_t group_col = schema.group_column.empty() ? SIZE_MAX : column_of(schema.group_column);

    std::vector<std::size_t> feat_cols;
    NodeTable table;
    if (!schema.feature_columns.empty()) {
        for (const auto& name : schema.feature_columns) {
            feat_cols.push_back(column_of(name));
            table.feature_names.push_back(name);
        }
    } else {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == id_col || c == label_col || c == group_col) continue;
            feat_cols.push_back(c);
            table.feature_names.push_back(header[c]);
        }
    }

    std::size_t n = graph.node_count;
    table.features = Tensor(n, feat_cols.size());
    table.labels.assign(n, kLabelNone);
    table.groups.assign(n, "");
    std::vector<bool> seen(n, false);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = text::trim(line);
        if (sv.empty()) continue;
        auto fields = text::split(sv, delim);
        if (fields.size() != header.size())
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        std::uint64_t ext;
        if (!text::parse_u64(fields[id_col], ext))
            throw DataError(path + ":" + std::to_string(line_no) + ": bad id '" +
                            fields[id_col] + "'");
        auto it = graph.id_of.find(ext);
        if (it == graph.id_of.end())
            throw DataError(path + ":" + std::to_string(line_no) + ": id " +
                            std::to_string(ext) + " not present in the graph");
        std::uint32_t v = it->second;
        if (seen[v])
            throw DataError(path + ":" + std::to_string(line_no) + ": duplicate row for id " +
                            std::to_string(ext));
        seen[v] = true;
        ++table.covered_rows;

        for (std::size_t k = 0; k < feat_cols.size(); ++k) {
            double x;
            if (!text::parse_f64(fields[feat_cols[k]], x))
                throw DataError(path + ":" + std::to_string(line_no) + ": column '" +
                                table.feature_names[k] + "': non-numeric value '" +
                                fields[feat_cols[k]] + "'");
            if (!std::isfinite(x))
                throw DataError(path + ":" + std::to_string(line_no) + ": column '" +
                                table.feature_names[k] + "': non-finite value");
            table.features.at(v, k) = x;
        }
        if (label_col != SIZE_MAX) {
            const std::string& raw = fields[label_col];
            if (raw == "hateful" || raw == "1")
                table.labels[v] = kLabelHateful;
            else if (raw == "normal" || raw == "0")
                table.labels[v] = kLabelNormal;
        }
        if (group_col != SIZE_MAX) table.groups[v] = fields[group_col];
    }
    return table;
}

void save_standardization(const std::string& path, const Standardization& s,
                          const std::vector<std::string>& names) {
    if (names.size() != s.mean.size())
        throw DataError("standardization name/column count mismatch");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "feature\tmean\tstdev\n";
    char buf[64];
    for (std::size_t c = 0; c < names.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g\t%.17g", s.mean[c], s.stdev[c]);
        out << names[c] << '\t' << buf << '\n';
    }
    if (!out) throw DataError("short write to " + path);
}

Standardization load_standardization(const std::string& path, std::vector<std::string>* names) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || text::split(text::trim(line), '\t').size() != 3)
        throw DataError(path + ": expected header 'feature\\tmean\\tstdev'");
    Standardization s;
    if (names) names->clear();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = text::trim(line);
        if (sv.empty()) continue;
        auto fields = text::split(sv, '\t');
        double m, sd;
        if (fields.size() != 3 || !text::parse_f64(fields[1], m) ||
            !text::parse_f64(fields[2], sd))
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed row");
        if (names) names->push_back(fields[0]);
        s.mean.push_back(m);
        s.stdev.push_back(sd);
    }
    if (s.mean.empty()) throw DataError(path + ": no statistics rows");
    return s;
}

}  // namespace fairsage
