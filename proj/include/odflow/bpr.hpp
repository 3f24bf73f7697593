#pragma once

#include <cmath>
#include <vector>

#include "odflow/errors.hpp"
#include "odflow/network.hpp"

namespace odflow {

namespace detail {
// pow with a fast path for small integral exponents; the benchmark files
// use beta = 4 on every link.
inline double pow_volume(double base, double exponent) {
    if (exponent == 4.0) {
        const double b2 = base * base;
        return b2 * b2;
    }
    const int ie = static_cast<int>(exponent);
    if (exponent == static_cast<double>(ie) && ie >= 0 && ie <= 16) {
        double r = 1.0;
        for (int k = 0; k < ie; ++k) r *= base;
        return r;
    }
    return std::pow(base, exponent);
}
}  // namespace detail

/// Volume-delay function t0 * (1 + alpha * (flow/capacity)^beta).
inline double bpr_travel_time(double t0, double flow, double capacity, double alpha,
                              double beta) {
    if (flow < 0) throw DomainError("bpr_travel_time: negative flow");
    return t0 * (1.0 + alpha * detail::pow_volume(flow / capacity, beta));
}

inline double bpr_travel_time(const Link& l, double flow) {
    return bpr_travel_time(l.free_flow_time, flow, l.capacity, l.bpr_alpha, l.bpr_beta);
}

/// Closed form of the per-link integral of the delay function:
/// t0 * f * (1 + alpha/(beta+1) * (f/c)^beta).
inline double bpr_integral(const Link& l, double flow) {
    if (flow < 0) throw DomainError("bpr_integral: negative flow");
    const double r = flow / l.capacity;
    return l.free_flow_time * flow *
           (1.0 + l.bpr_alpha / (l.bpr_beta + 1.0) * detail::pow_volume(r, l.bpr_beta));
}

inline std::vector<double> link_travel_times(const Network& net, const LinkFlowVector& flows) {
    check_flow_vector(flows, net);
    std::vector<double> t(net.links.size());
    for (const Link& l : net.links) t[l.id] = bpr_travel_time(l, flows[l.id]);
    return t;
}

/// Sum over links of the integral of the delay function from 0 to the link
/// flow; the convex potential whose minimizer over feasible flows is the
/// user equilibrium.
inline double beckmann_objective(const Network& net, const LinkFlowVector& flows) {
    check_flow_vector(flows, net);
    double total = 0.0;
    for (const Link& l : net.links) total += bpr_integral(l, flows[l.id]);
    if (!std::isfinite(total)) throw NumericError("beckmann_objective: non-finite value");
    return total;
}

}  // namespace odflow
