#pragma once

#include <limits>
#include <queue>
#include <vector>

#include "odflow/errors.hpp"
#include "odflow/network.hpp"

namespace odflow {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

struct ShortestPathTree {
    std::vector<double> dist;          // time from origin, kUnreachable if none
    std::vector<int> predecessor_link; // link id entering each node, -1 at origin
};

// Node-to-outgoing-link index built once per network and reused across the
// many shortest-path calls of an assignment run.
struct OutgoingLinks {
    explicit OutgoingLinks(const Network& net) : by_node(net.node_count) {
        for (const Link& l : net.links) by_node[l.from_node].push_back(l.id);
        // canonical link order within each bucket (file order = id order)
    }
    std::vector<std::vector<int>> by_node;
};

/// Label-setting shortest paths from `origin` under the given link times.
/// Zone nodes below `first_thru_node` are never used as path interiors when
/// `honor_first_thru` is set (they may still start or end a path). Ties
/// between equal-cost predecessors resolve to the lowest link id.
inline ShortestPathTree shortest_paths(const Network& net, const std::vector<double>& travel_times,
                                       int origin, const OutgoingLinks& out,
                                       bool honor_first_thru = true) {
    if (static_cast<int>(travel_times.size()) != net.link_count())
        throw ShapeError("shortest_paths: travel time vector length mismatch");
    if (origin < 0 || origin >= net.node_count)
        throw ValidationError("shortest_paths: origin out of range");

    ShortestPathTree tree;
    tree.dist.assign(net.node_count, kUnreachable);
    tree.predecessor_link.assign(net.node_count, -1);
    tree.dist[origin] = 0.0;

    using Entry = std::pair<double, int>;  // (dist, node); node id breaks ties
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    heap.push({0.0, origin});
    std::vector<char> settled(net.node_count, 0);

    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (settled[u]) continue;
        settled[u] = 1;
        if (honor_first_thru && u != origin && u < net.first_thru_node) continue;
        for (int lid : out.by_node[u]) {
            const Link& l = net.links[lid];
            const double t = travel_times[lid];
            if (t <= 0) throw DomainError("shortest_paths: nonpositive travel time on link " +
                                          std::to_string(lid));
            const double nd = d + t;
            const int v = l.to_node;
            if (nd < tree.dist[v]) {
                tree.dist[v] = nd;
                tree.predecessor_link[v] = lid;
                heap.push({nd, v});
            } else if (nd == tree.dist[v] && lid < tree.predecessor_link[v]) {
                tree.predecessor_link[v] = lid;
            }
        }
    }
    return tree;
}

inline ShortestPathTree shortest_paths(const Network& net, const std::vector<double>& travel_times,
                                       int origin, bool honor_first_thru = true) {
    OutgoingLinks out(net);
    return shortest_paths(net, travel_times, origin, out, honor_first_thru);
}

}  // namespace odflow
