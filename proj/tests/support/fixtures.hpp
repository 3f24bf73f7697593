#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "odflow/network.hpp"
#include "odflow/rng.hpp"
#include "odflow/tntp.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return std::filesystem::path(ODFLOW_DATA_DIR); }

inline odflow::Network sioux_falls_network() {
    std::ifstream in(data_dir() / "SiouxFalls_net.tntp");
    return odflow::parse_tntp_network(in);
}

inline odflow::DemandMatrix sioux_falls_trips(const odflow::Network& net) {
    std::ifstream in(data_dir() / "SiouxFalls_trips.tntp");
    return odflow::parse_tntp_trips(in, net.node_count);
}

inline odflow::Link make_link(int id, int from, int to, double t0, double cap,
                              double alpha = 0.15, double beta = 4.0) {
    odflow::Link l;
    l.id = id;
    l.from_node = from;
    l.to_node = to;
    l.free_flow_time = t0;
    l.capacity = cap;
    l.bpr_alpha = alpha;
    l.bpr_beta = beta;
    l.length = t0;
    return l;
}

// Two competing routes between nodes 0 and 1: a direct link and a two-hop
// detour through node 2 whose halves sum to the alternative's free-flow
// time. Both halves carry the same flow, so this reproduces the classical
// two-parallel-link equilibrium while keeping (from,to) keys unique.
inline odflow::Network two_route_net(double t0_direct, double t0_alt, double cap) {
    odflow::Network net;
    net.node_count = 3;
    net.first_thru_node = 0;
    net.links = {make_link(0, 0, 1, t0_direct, cap), make_link(1, 0, 2, 0.5 * t0_alt, cap),
                 make_link(2, 2, 1, 0.5 * t0_alt, cap)};
    net.validate();
    return net;
}

// 0 -> 1 -> 2 with times 5 and 7.
inline odflow::Network line_net() {
    odflow::Network net;
    net.node_count = 3;
    net.first_thru_node = 0;
    net.links = {make_link(0, 0, 1, 5, 1000), make_link(1, 1, 2, 7, 1000)};
    net.validate();
    return net;
}

// Symmetric pair 0 <-> 1, equal weighted degrees.
inline odflow::Network two_node_net(double t0 = 10) {
    odflow::Network net;
    net.node_count = 2;
    net.first_thru_node = 0;
    net.links = {make_link(0, 0, 1, t0, 1000), make_link(1, 1, 0, t0, 1000)};
    net.validate();
    return net;
}

// Directed 3-cycle with distinct times; every node reachable.
inline odflow::Network ring3_net() {
    odflow::Network net;
    net.node_count = 3;
    net.first_thru_node = 0;
    net.links = {make_link(0, 0, 1, 2, 100), make_link(1, 1, 2, 3, 100),
                 make_link(2, 2, 0, 4, 100)};
    net.validate();
    return net;
}

// Bidirectional 4-cycle with varied times; used for end-to-end gradient
// checks.
inline odflow::Network toy4_net() {
    odflow::Network net;
    net.node_count = 4;
    net.first_thru_node = 0;
    net.links = {make_link(0, 0, 1, 2, 100), make_link(1, 1, 0, 2, 100),
                 make_link(2, 1, 2, 3, 100), make_link(3, 2, 1, 3, 100),
                 make_link(4, 2, 3, 4, 100), make_link(5, 3, 2, 4, 100),
                 make_link(6, 3, 0, 5, 100), make_link(7, 0, 3, 5, 100)};
    net.validate();
    return net;
}

// Random strongly-seeded digraph with small-integer times; node count <= 7.
inline odflow::Network random_net(int n, std::uint64_t seed, double edge_prob = 0.45) {
    odflow::RandomStream rs(seed);
    odflow::Network net;
    net.node_count = n;
    net.first_thru_node = 0;
    int id = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (rs.next_double() < edge_prob) {
                const double t0 = 1.0 + static_cast<double>(rs.next_below(9));
                net.links.push_back(make_link(id++, i, j, t0, 100));
            }
        }
    // make sure at least one link exists so validation passes
    if (net.links.empty()) net.links.push_back(make_link(0, 0, 1, 1, 100));
    net.validate();
    return net;
}

inline odflow::DemandMatrix single_pair_demand(int n, int from, int to, double trips) {
    odflow::DemandMatrix d(n, n);
    d(from, to) = trips;
    return d;
}

}  // namespace fixtures
