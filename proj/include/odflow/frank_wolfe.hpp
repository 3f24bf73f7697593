#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "odflow/bpr.hpp"
#include "odflow/errors.hpp"
#include "odflow/network.hpp"
#include "odflow/numio.hpp"
#include "odflow/shortest_path.hpp"

namespace odflow {

enum class LineSearch { bisection_on_derivative };

struct FwConfig {
    int max_iterations = 500;
    double relative_gap_tol = 1e-4;
    double line_search_tol = 1e-8;
    LineSearch line_search = LineSearch::bisection_on_derivative;
    bool honor_first_thru = true;

    void validate() const {
        if (max_iterations < 1) throw DomainError("FwConfig: max_iterations must be >= 1");
        if (relative_gap_tol <= 0 || line_search_tol <= 0)
            throw DomainError("FwConfig: tolerances must be positive");
    }
};

struct FwResult {
    LinkFlowVector flows;
    int iterations_used = 0;
    double relative_gap = 0.0;
    double beckmann_value = 0.0;
    std::vector<double> travel_times;
    bool converged = false;
    // Per-iteration audit trail: objective after each update and the
    // relative gap measured at each iterate.
    std::vector<double> beckmann_trace;
    std::vector<double> gap_trace;
};

/// Loads each positive OD pair's full demand onto one shortest path under
/// the given link times. The result is the descent target of one
/// conditional-gradient step.
inline LinkFlowVector all_or_nothing(const Network& net, const DemandMatrix& demand,
                                     const std::vector<double>& travel_times,
                                     const OutgoingLinks& out, bool honor_first_thru = true) {
    validate_demand(demand, net.node_count);
    LinkFlowVector flows(net.links.size(), 0.0);
    for (int origin = 0; origin < net.node_count; ++origin) {
        bool any = false;
        for (int j = 0; j < net.node_count; ++j)
            if (demand(origin, j) > 0) {
                any = true;
                break;
            }
        if (!any) continue;
        ShortestPathTree tree = shortest_paths(net, travel_times, origin, out, honor_first_thru);
        for (int dest = 0; dest < net.node_count; ++dest) {
            const double trips = demand(origin, dest);
            if (trips <= 0) continue;
            if (tree.dist[dest] == kUnreachable)
                throw InfeasibleError("no route for positive-demand pair origin " +
                                      std::to_string(origin) + " -> destination " +
                                      std::to_string(dest));
            for (int node = dest; node != origin;) {
                const int lid = tree.predecessor_link[node];
                flows[lid] += trips;
                node = net.links[lid].from_node;
            }
        }
    }
    return flows;
}

inline LinkFlowVector all_or_nothing(const Network& net, const DemandMatrix& demand,
                                     const std::vector<double>& travel_times,
                                     bool honor_first_thru = true) {
    OutgoingLinks out(net);
    return all_or_nothing(net, demand, travel_times, out, honor_first_thru);
}

namespace detail {

// Derivative of the objective along f + lambda * d.
inline double directional_derivative(const Network& net, const LinkFlowVector& f,
                                     const LinkFlowVector& d, double lambda) {
    double g = 0.0;
    for (const Link& l : net.links) {
        const double x = f[l.id] + lambda * d[l.id];
        g += bpr_travel_time(l, x < 0 ? 0.0 : x) * d[l.id];
    }
    return g;
}

inline double bisect_step(const Network& net, const LinkFlowVector& f, const LinkFlowVector& d,
                          double tol) {
    if (directional_derivative(net, f, d, 1.0) <= 0.0) return 1.0;
    if (directional_derivative(net, f, d, 0.0) >= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (directional_derivative(net, f, d, mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Conditional-gradient user-equilibrium assignment: repeat all-or-nothing
/// loading at current times, measure the relative gap
/// (sum t.f - sum t.y) / sum t.f, and move along f + lambda (y - f) with
/// lambda from an exact bisection line search on the objective derivative.
inline FwResult frank_wolfe_solve(const Network& net, const DemandMatrix& demand,
                                  const FwConfig& cfg = {}) {
    cfg.validate();
    validate_demand(demand, net.node_count);
    OutgoingLinks out(net);

    FwResult res;
    const std::vector<double> free_flow = link_travel_times(net, LinkFlowVector(net.links.size(), 0.0));
    LinkFlowVector f = all_or_nothing(net, demand, free_flow, out, cfg.honor_first_thru);
    res.beckmann_trace.push_back(beckmann_objective(net, f));

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        res.iterations_used = iter;
        const std::vector<double> t = link_travel_times(net, f);
        const LinkFlowVector y = all_or_nothing(net, demand, t, out, cfg.honor_first_thru);

        double cost_f = 0.0, cost_y = 0.0;
        for (std::size_t e = 0; e < f.size(); ++e) {
            cost_f += t[e] * f[e];
            cost_y += t[e] * y[e];
        }
        double gap = cost_f > 0.0 ? (cost_f - cost_y) / cost_f : 0.0;
        if (!std::isfinite(gap)) throw NumericError("frank_wolfe_solve: non-finite gap");
        if (gap < 0.0) {
            // the loading minimizes the linearized cost, so a negative gap can
            // only be summation rounding at equilibrium
            if (gap < -1e-12) throw NumericError("frank_wolfe_solve: negative gap " +
                                                 format_double(gap));
            gap = 0.0;
        }
        res.gap_trace.push_back(gap);
        res.relative_gap = gap;
        if (gap <= cfg.relative_gap_tol) {
            res.converged = true;
            break;
        }

        LinkFlowVector d(f.size());
        for (std::size_t e = 0; e < f.size(); ++e) d[e] = y[e] - f[e];
        const double lambda = detail::bisect_step(net, f, d, cfg.line_search_tol);
        for (std::size_t e = 0; e < f.size(); ++e) {
            f[e] += lambda * d[e];
            if (f[e] < 0) f[e] = 0.0;  // guard against rounding at the boundary
        }
        const double obj = beckmann_objective(net, f);
        if (!std::isfinite(obj)) throw NumericError("frank_wolfe_solve: non-finite objective");
        // exact line search makes the objective non-increasing; a rise means
        // a broken step
        if (obj > res.beckmann_trace.back() * (1.0 + 1e-12))
            throw NumericError("frank_wolfe_solve: objective increased at iteration " +
                               std::to_string(iter));
        res.beckmann_trace.push_back(obj);
    }

    res.flows = std::move(f);
    res.beckmann_value = res.beckmann_trace.back();
    res.travel_times = link_travel_times(net, res.flows);
    return res;
}

/// Conservation audit: inflow minus outflow minus the net demand sink at
/// each node. Exactly feasible flows give a zero vector.
inline std::vector<double> node_balance_residual(const Network& net, const DemandMatrix& demand,
                                                 const LinkFlowVector& flows) {
    validate_demand(demand, net.node_count);
    check_flow_vector(flows, net);
    std::vector<double> residual(net.node_count, 0.0);
    for (const Link& l : net.links) {
        residual[l.to_node] += flows[l.id];
        residual[l.from_node] -= flows[l.id];
    }
    for (int n = 0; n < net.node_count; ++n) {
        double attracted = 0.0, produced = 0.0;
        for (int i = 0; i < net.node_count; ++i) attracted += demand(i, n);
        for (int j = 0; j < net.node_count; ++j) produced += demand(n, j);
        residual[n] -= attracted - produced;
    }
    return residual;
}

/// Flow table export: one row per link in canonical order, 0-based ids.
inline std::string flows_to_csv(const Network& net, const LinkFlowVector& flows,
                                const std::vector<double>& travel_times) {
    check_flow_vector(flows, net);
    std::string out = "link_id,from,to,flow,travel_time\n";
    for (const Link& l : net.links) {
        out += std::to_string(l.id) + "," + std::to_string(l.from_node) + "," +
               std::to_string(l.to_node) + "," + format_double(flows[l.id]) + "," +
               format_double(travel_times[l.id]) + "\n";
    }
    return out;
}

}  // namespace odflow
