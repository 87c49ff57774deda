#pragma once

#include <cstdint>
#include <vector>

#include "fairsage/graph.hpp"
#include "fairsage/tensor.hpp"

namespace fairsage {

// Dominant eigenvector of the symmetric adjacency, L2-normalized,
// non-negative. Power iteration runs on A + I so bipartite components cannot
// oscillate; convergence is declared on the residual ||Ax - lambda*x||.
std::vector<double> eigenvector_centrality(const Csr& undirected, double tol = 1e-8,
                                           std::size_t max_iters = 1000);

// Per-node mean of `columns` rows over the chosen neighborhood; nodes with an
// empty neighborhood get zero rows.
Tensor one_hop_means(const DirectedGraph& g, const Tensor& columns, Direction d);

struct NetworkFeatures {
    std::vector<double> in_degree;
    std::vector<double> out_degree;
    std::vector<double> eigenvector;
};

NetworkFeatures compute_network_features(const DirectedGraph& g, double tol = 1e-8,
                                         std::size_t max_iters = 1000);

}  // namespace fairsage
