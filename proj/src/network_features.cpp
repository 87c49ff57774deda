#include "fairsage/network_features.hpp"

#include <cmath>

#include "fairsage/errors.hpp"
#include "fairsage/kernels.hpp"

namespace fairsage {

namespace {

double norm2(const std::vector<double>& x) {
    double sq = 0.0;
    for (double v : x) sq += v * v;
    return std::sqrt(sq);
}

}  // namespace

std::vector<double> eigenvector_centrality(const Csr& undirected, double tol,
                                           std::size_t max_iters) {
    std::size_t n = undirected.node_count();
    if (n == 0) return {};
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> ax(n);
    double residual = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        kernels::csr_matvec(undirected.offsets.data(), undirected.targets.data(), n, x.data(),
                            ax.data());
        // lambda via Rayleigh quotient; x is unit length
        double lambda = 0.0;
        for (std::size_t i = 0; i < n; ++i) lambda += x[i] * ax[i];
        double rsq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = ax[i] - lambda * x[i];
            rsq += d * d;
        }
        residual = std::sqrt(rsq);
        if (residual < tol) return x;
        for (std::size_t i = 0; i < n; ++i) ax[i] += x[i];  // shift keeps iteration aperiodic
        double nrm = norm2(ax);
        if (nrm == 0.0 || !std::isfinite(nrm))
            throw NumericError("eigenvector centrality: iteration collapsed, residual " +
                               std::to_string(residual));
        for (std::size_t i = 0; i < n; ++i) x[i] = ax[i] / nrm;
    }
    throw NumericError("eigenvector centrality failed to converge in " +
                       std::to_string(max_iters) + " iterations, last residual " +
                       std::to_string(residual));
}

Tensor one_hop_means(const DirectedGraph& g, const Tensor& columns, Direction d) {
    if (columns.rows() != g.node_count)
        throw DataError("one_hop_means: column rows " + std::to_string(columns.rows()) +
                        " != node count " + std::to_string(g.node_count));
    Tensor out(g.node_count, columns.cols());
    for (std::uint32_t v = 0; v < g.node_count; ++v) {
        auto nbrs = g.neighbors(v, d);
        if (nbrs.empty()) continue;
        for (std::uint32_t u : nbrs)
            for (std::size_t c = 0; c < columns.cols(); ++c) out.at(v, c) += columns.at(u, c);
        double inv = 1.0 / static_cast<double>(nbrs.size());
        for (std::size_t c = 0; c < columns.cols(); ++c) out.at(v, c) *= inv;
    }
    return out;
}

NetworkFeatures compute_network_features(const DirectedGraph& g, double tol,
                                         std::size_t max_iters) {
    NetworkFeatures f;
    f.in_degree.resize(g.node_count);
    f.out_degree.resize(g.node_count);
    for (std::uint32_t v = 0; v < g.node_count; ++v) {
        f.out_degree[v] = static_cast<double>(g.edges.degree(v));
        f.in_degree[v] = static_cast<double>(g.reverse_edges.degree(v));
    }
    Csr sym = undirected_union(g.edges, g.reverse_edges);
    f.eigenvector = eigenvector_centrality(sym, tol, max_iters);
    return f;
}

}  // namespace fairsage
