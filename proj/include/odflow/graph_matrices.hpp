#pragma once

#include <cmath>
#include <string>

#include "odflow/errors.hpp"
#include "odflow/matrix.hpp"
#include "odflow/network.hpp"

namespace odflow {

/// How the diagonal degree matrix of the self-looped adjacency is defined.
/// `weighted_row_sum` makes the random-walk operator genuinely row
/// stochastic; `out_link_count` counts outgoing links (plus the self loop).
enum class DegreeMode { weighted_row_sum, out_link_count };

inline std::string to_string(DegreeMode m) {
    return m == DegreeMode::weighted_row_sum ? "weighted_row_sum" : "out_link_count";
}

/// Fixed propagation operators derived from one network. All are N x N.
///   adjacency      A[i][j]  = free-flow time of link i->j, zero diagonal
///   neighborhood   A + I    (unit self loops)
///   degree         diagonal of the neighborhood per DegreeMode
///   random_walk    D^-1 (A+I), rows sum to 1 under weighted_row_sum
///   laplacian      I - D^-1 (A+I)
///   spectral       D^-1/2 (A+I) D^-1/2
struct GraphMatrices {
    Matrix adjacency;
    Matrix neighborhood;
    std::vector<double> degree;
    Matrix random_walk;
    Matrix laplacian;
    Matrix spectral;
    DegreeMode degree_mode = DegreeMode::weighted_row_sum;
};

inline GraphMatrices build_graph_matrices(const Network& net,
                                          DegreeMode mode = DegreeMode::weighted_row_sum) {
    const int n = net.node_count;
    GraphMatrices g;
    g.degree_mode = mode;
    g.adjacency = Matrix(n, n);
    for (const Link& l : net.links) g.adjacency(l.from_node, l.to_node) = l.free_flow_time;

    g.neighborhood = g.adjacency + Matrix::identity(n);

    g.degree.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (mode == DegreeMode::weighted_row_sum) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += g.neighborhood(i, j);
            g.degree[i] = s;
        } else {
            double count = 1.0;  // self loop
            for (int j = 0; j < n; ++j)
                if (j != i && g.neighborhood(i, j) != 0.0) count += 1.0;
            g.degree[i] = count;
        }
        if (g.degree[i] <= 0.0)
            throw ValidationError("node " + std::to_string(i) + " has zero degree");
    }

    g.random_walk = Matrix(n, n);
    g.spectral = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        const double di = g.degree[i];
        for (int j = 0; j < n; ++j) {
            const double a = g.neighborhood(i, j);
            g.random_walk(i, j) = a / di;
            g.spectral(i, j) = a / (std::sqrt(di) * std::sqrt(g.degree[j]));
        }
    }
    g.laplacian = Matrix::identity(n) - g.random_walk;
    return g;
}

}  // namespace odflow
