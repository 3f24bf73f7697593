#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "odflow/bpr.hpp"
#include "odflow/errors.hpp"
#include "odflow/gcnn.hpp"
#include "odflow/network.hpp"
#include "odflow/numio.hpp"
#include "odflow/scenario.hpp"
#include "odflow/shortest_path.hpp"

namespace odflow {

/// Link travel times implied by a flow pattern (the same volume-delay
/// function the solver uses).
inline std::vector<double> equilibrium_travel_times(const Network& net,
                                                    const LinkFlowVector& flows) {
    return link_travel_times(net, flows);
}

/// Brandes' betweenness centrality on the weighted digraph with the given
/// link times: full shortest-path counting with fractional pair
/// dependencies, endpoints excluded, normalized by (N-1)(N-2).
inline std::vector<double> betweenness_centrality(const Network& net,
                                                  const std::vector<double>& travel_times) {
    if (static_cast<int>(travel_times.size()) != net.link_count())
        throw ShapeError("betweenness_centrality: travel time vector length mismatch");
    for (double t : travel_times)
        if (!(t > 0)) throw DomainError("betweenness_centrality: travel times must be positive");

    const int n = net.node_count;
    OutgoingLinks out(net);
    std::vector<double> centrality(n, 0.0);

    std::vector<double> dist(n), sigma(n), delta(n);
    std::vector<std::vector<int>> preds(n);
    std::vector<int> order;  // settle order for the dependency sweep
    order.reserve(n);

    for (int s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), kUnreachable);
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(delta.begin(), delta.end(), 0.0);
        for (auto& p : preds) p.clear();
        order.clear();
        dist[s] = 0.0;
        sigma[s] = 1.0;

        using Entry = std::pair<double, int>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
        heap.push({0.0, s});
        std::vector<char> settled(n, 0);
        while (!heap.empty()) {
            auto [d, u] = heap.top();
            heap.pop();
            if (settled[u]) continue;
            settled[u] = 1;
            order.push_back(u);
            for (int lid : out.by_node[u]) {
                const int v = net.links[lid].to_node;
                const double nd = d + travel_times[lid];
                if (nd < dist[v]) {
                    dist[v] = nd;
                    sigma[v] = sigma[u];
                    preds[v].assign(1, u);
                    heap.push({nd, v});
                } else if (nd == dist[v]) {
                    sigma[v] += sigma[u];
                    preds[v].push_back(u);
                }
            }
        }

        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int w = *it;
            for (int v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            if (w != s) centrality[w] += delta[w];
        }
    }

    const double norm = static_cast<double>(n - 1) * static_cast<double>(n - 2);
    if (norm > 0)
        for (double& c : centrality) c /= norm;
    return centrality;
}

struct NodeDistribution {
    int node = 0;
    std::string scenario;
    double q1 = 0.0, median = 0.0, q3 = 0.0;
    double whisker_lo = 0.0, whisker_hi = 0.0;
    double mean = 0.0;
    double iqr = 0.0;
};

struct CentralityReport {
    // centrality value per (sample, node)
    std::vector<std::string> sample_ids;
    std::vector<ScenarioKind> sample_scenarios;
    std::vector<std::vector<double>> values;  // [sample][node]
    std::vector<NodeDistribution> summaries;  // per node per scenario
};

namespace detail {

// Box-plot summary: quartiles plus whiskers at the most extreme values
// inside the 1.5 IQR fences.
inline NodeDistribution summarize(int node, const std::string& scenario,
                                  std::vector<double> vals) {
    NodeDistribution d;
    d.node = node;
    d.scenario = scenario;
    d.q1 = quantile(vals, 0.25);
    d.median = quantile(vals, 0.5);
    d.q3 = quantile(vals, 0.75);
    d.iqr = d.q3 - d.q1;
    const double lo_fence = d.q1 - 1.5 * d.iqr;
    const double hi_fence = d.q3 + 1.5 * d.iqr;
    double lo = d.q1, hi = d.q3, sum = 0.0;
    for (double v : vals) {
        sum += v;
        if (v >= lo_fence && v < lo) lo = v;
        if (v <= hi_fence && v > hi) hi = v;
    }
    d.whisker_lo = lo;
    d.whisker_hi = hi;
    d.mean = sum / static_cast<double>(vals.size());
    return d;
}

}  // namespace detail

/// Equilibrium-time betweenness for every sample of a dataset plus
/// per-node distribution summaries per scenario.
inline CentralityReport centrality_study(const Network& net, const ScenarioDataset& ds,
                                         const std::vector<ScenarioKind>& scenarios =
                                             all_scenarios()) {
    CentralityReport report;
    for (const auto& s : ds.samples) {
        if (std::find(scenarios.begin(), scenarios.end(), s.scenario) == scenarios.end())
            continue;
        const std::vector<double> times = equilibrium_travel_times(net, s.flows);
        report.sample_ids.push_back(s.sample_id);
        report.sample_scenarios.push_back(s.scenario);
        report.values.push_back(betweenness_centrality(net, times));
    }
    for (ScenarioKind k : scenarios) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < report.values.size(); ++i)
            if (report.sample_scenarios[i] == k) rows.push_back(i);
        if (rows.empty()) continue;
        for (int node = 0; node < net.node_count; ++node) {
            std::vector<double> vals;
            vals.reserve(rows.size());
            for (std::size_t r : rows) vals.push_back(report.values[r][node]);
            report.summaries.push_back(detail::summarize(node, to_string(k), std::move(vals)));
        }
    }
    return report;
}

inline std::string centrality_summary_csv(const CentralityReport& r) {
    std::string out = "node,scenario,q1,median,q3,whisker_lo,whisker_hi,iqr,mean\n";
    for (const auto& d : r.summaries)
        out += std::to_string(d.node) + "," + d.scenario + "," + format_double(d.q1) + "," +
               format_double(d.median) + "," + format_double(d.q3) + "," +
               format_double(d.whisker_lo) + "," + format_double(d.whisker_hi) + "," +
               format_double(d.iqr) + "," + format_double(d.mean) + "\n";
    return out;
}

inline std::string centrality_values_csv(const CentralityReport& r) {
    std::string out = "sample_id,scenario,node,betweenness\n";
    for (std::size_t i = 0; i < r.values.size(); ++i)
        for (std::size_t node = 0; node < r.values[i].size(); ++node)
            out += r.sample_ids[i] + "," + to_string(r.sample_scenarios[i]) + "," +
                   std::to_string(node) + "," + format_double(r.values[i][node]) + "\n";
    return out;
}

struct WeightDistribution {
    std::vector<NodeDistribution> rows;  // per origin node, stats of its W_q row
};

/// Row-wise summary of the node-to-link loading weights: how strongly each
/// origin node drives link flows in the trained model.
inline WeightDistribution weight_distribution(const GcnnModel& model,
                                              const std::string& scenario = "") {
    WeightDistribution wd;
    const ad::Tensor& w = model.params.w_q;
    for (int i = 0; i < w.rows; ++i) {
        std::vector<double> row(w.cols);
        for (int j = 0; j < w.cols; ++j) row[j] = w.v(i, j);
        wd.rows.push_back(detail::summarize(i, scenario, std::move(row)));
    }
    return wd;
}

inline std::string weight_distribution_csv(const WeightDistribution& wd) {
    std::string out = "node,scenario,q1,median,q3,whisker_lo,whisker_hi,iqr,mean\n";
    for (const auto& d : wd.rows)
        out += std::to_string(d.node) + "," + d.scenario + "," + format_double(d.q1) + "," +
               format_double(d.median) + "," + format_double(d.q3) + "," +
               format_double(d.whisker_lo) + "," + format_double(d.whisker_hi) + "," +
               format_double(d.iqr) + "," + format_double(d.mean) + "\n";
    return out;
}

/// Spearman rank correlation (average ranks on ties).
inline double spearman_rank_correlation(const std::vector<double>& a,
                                        const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw DomainError("spearman_rank_correlation: need two equal-length series");
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0 || vb == 0) return 0.0;
    return cov / std::sqrt(va * vb);
}

}  // namespace odflow
