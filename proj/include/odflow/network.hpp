#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "odflow/errors.hpp"
#include "odflow/matrix.hpp"

namespace odflow {

/// Directed road link. Node ids and link ids are 0-based; the link id is
/// the position in Network::links and defines the canonical link order
/// used by every flow vector and file derived from one network.
struct Link {
    int id = -1;
    int from_node = -1;
    int to_node = -1;
    double free_flow_time = 0.0;  // minutes
    double capacity = 0.0;        // vehicles per period
    double bpr_alpha = 0.15;
    double bpr_beta = 4.0;
    double length = 0.0;  // informational
    // Extra benchmark-file columns, carried so files round-trip losslessly.
    double speed = 0.0;
    double toll = 0.0;
    double link_type = 1.0;
};

/// Length-E nonnegative flows indexed by canonical link order.
using LinkFlowVector = std::vector<double>;

/// N x N origin/destination trip table; row = origin, column = destination.
using DemandMatrix = Matrix;

struct Network {
    int node_count = 0;
    std::vector<Link> links;
    int first_thru_node = 0;  // 0-based; nodes below it may not be path interiors

    int link_count() const { return static_cast<int>(links.size()); }

    void validate() const {
        if (node_count <= 0) throw ValidationError("network: node_count must be positive");
        std::set<std::pair<int, int>> seen;
        for (const Link& l : links) {
            const std::string tag = "link " + std::to_string(l.id);
            if (l.from_node < 0 || l.from_node >= node_count || l.to_node < 0 ||
                l.to_node >= node_count)
                throw ValidationError(tag + ": node id out of range [0, " +
                                      std::to_string(node_count) + ")");
            if (l.from_node == l.to_node) throw ValidationError(tag + ": self loop");
            if (l.free_flow_time <= 0) throw ValidationError(tag + ": free_flow_time must be > 0");
            if (l.capacity <= 0) throw ValidationError(tag + ": capacity must be > 0");
            if (!seen.insert({l.from_node, l.to_node}).second)
                throw ValidationError(tag + ": duplicate (from,to) pair");
        }
        if (first_thru_node < 0 || first_thru_node > node_count)
            throw ValidationError("network: first_thru_node out of range");
    }
};

inline void validate_demand(const DemandMatrix& d, int node_count) {
    if (d.rows() != node_count || d.cols() != node_count)
        throw ShapeError("demand matrix is " + shape_string(d) + ", expected " +
                         std::to_string(node_count) + "x" + std::to_string(node_count));
    for (int i = 0; i < d.rows(); ++i) {
        if (d(i, i) != 0.0)
            throw ValidationError("demand diagonal must be zero (row " + std::to_string(i) + ")");
        for (int j = 0; j < d.cols(); ++j)
            if (d(i, j) < 0.0)
                throw ValidationError("demand must be nonnegative (entry " + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
    }
}

inline void check_flow_vector(const LinkFlowVector& f, const Network& net) {
    if (static_cast<int>(f.size()) != net.link_count())
        throw ShapeError("flow vector length " + std::to_string(f.size()) + ", expected " +
                         std::to_string(net.link_count()));
}

}  // namespace odflow
