#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "odflow/errors.hpp"
#include "odflow/frank_wolfe.hpp"
#include "odflow/network.hpp"
#include "odflow/rng.hpp"
#include "odflow/tntp.hpp"

namespace odflow {

enum class ScenarioKind { uncongested, moderate, congested };

inline std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::uncongested: return "uncongested";
        case ScenarioKind::moderate: return "moderate";
        case ScenarioKind::congested: return "congested";
    }
    throw DomainError("unknown ScenarioKind");
}

inline ScenarioKind scenario_from_string(const std::string& s) {
    if (s == "uncongested") return ScenarioKind::uncongested;
    if (s == "moderate") return ScenarioKind::moderate;
    if (s == "congested") return ScenarioKind::congested;
    throw ConfigError("unknown scenario '" + s + "'");
}

inline const std::vector<ScenarioKind>& all_scenarios() {
    static const std::vector<ScenarioKind> kinds = {
        ScenarioKind::uncongested, ScenarioKind::moderate, ScenarioKind::congested};
    return kinds;
}

namespace detail {
// Quantile with linear interpolation between closest ranks.
inline double quantile(std::vector<double> v, double p) {
    if (v.empty()) throw DomainError("quantile of empty set");
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}
}  // namespace detail

/// Congestion-regime call for one solved flow pattern, from the profile of
/// flow/capacity ratios: uncongested when the 0.95-quantile stays below
/// 0.5, congested when the median exceeds 1.0, moderate when the
/// 0.95-quantile stays within 0.8. Profiles between the bands are tagged
/// moderate with a warning so classification stays total.
struct Classification {
    ScenarioKind kind = ScenarioKind::moderate;
    bool warning = false;
    double ratio_median = 0.0;
    double ratio_q95 = 0.0;
    double ratio_max = 0.0;
};

inline Classification classify_scenario(const Network& net, const LinkFlowVector& flows) {
    check_flow_vector(flows, net);
    std::vector<double> ratios(net.links.size());
    for (const Link& l : net.links) ratios[l.id] = flows[l.id] / l.capacity;
    Classification c;
    c.ratio_median = detail::quantile(ratios, 0.5);
    c.ratio_q95 = detail::quantile(ratios, 0.95);
    c.ratio_max = *std::max_element(ratios.begin(), ratios.end());
    if (c.ratio_q95 < 0.5) {
        c.kind = ScenarioKind::uncongested;
    } else if (c.ratio_median > 1.0) {
        c.kind = ScenarioKind::congested;
    } else if (c.ratio_q95 <= 0.8) {
        c.kind = ScenarioKind::moderate;
    } else {
        c.kind = ScenarioKind::moderate;
        c.warning = true;
    }
    return c;
}

inline DemandMatrix scale_demand(const DemandMatrix& base, double factor) {
    if (!(factor > 0)) throw DomainError("scale_demand: factor must be > 0");
    DemandMatrix d = base;
    d *= factor;
    return d;
}

struct SampleRecord {
    std::string sample_id;
    double scale_factor = 0.0;
    DemandMatrix demand;
    LinkFlowVector flows;
    double relative_gap = 0.0;
    ScenarioKind scenario = ScenarioKind::moderate;
    bool classification_warning = false;
    int fw_iterations = 0;
};

struct FactorRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct CalibrationPoint {
    double factor = 0.0;
    ScenarioKind kind = ScenarioKind::moderate;
    bool warning = false;
    double ratio_median = 0.0;
    double ratio_q95 = 0.0;
};

struct Calibration {
    std::map<ScenarioKind, FactorRange> ranges;
    std::vector<CalibrationPoint> sweep;
    std::vector<std::string> notes;
};

namespace detail {

inline Classification solve_and_classify(const Network& net, const DemandMatrix& base,
                                         double factor, const FwConfig& cfg) {
    const FwResult r = frank_wolfe_solve(net, scale_demand(base, factor), cfg);
    return classify_scenario(net, r.flows);
}

}  // namespace detail

/// Finds per-regime demand-scale sub-ranges by a coarse sweep over factors
/// 0.1..1.0 plus bisection refinement of the regime boundaries, so that
/// draws from each sub-range land in the target regime.
inline Calibration calibrate_factor_ranges(const Network& net, const DemandMatrix& base,
                                           const FwConfig& cfg) {
    Calibration cal;
    auto probe = [&](double f) {
        Classification c = detail::solve_and_classify(net, base, f, cfg);
        cal.sweep.push_back({f, c.kind, c.warning, c.ratio_median, c.ratio_q95});
        return c;
    };

    std::vector<double> factors;
    std::vector<Classification> cls;
    for (int i = 1; i <= 10; ++i) {
        factors.push_back(0.1 * i);
        cls.push_back(probe(factors.back()));
    }

    // Largest factor that still classifies uncongested.
    double uncong_hi = 0.0;
    {
        double lo = 0.0, hi = 0.0;
        if (cls.front().kind == ScenarioKind::uncongested) {
            lo = factors.front();
            hi = 0.2;
        } else {
            // Even 0.1 is beyond the uncongested band; search below it.
            lo = 0.0;
            hi = factors.front();
            double f = 0.05;
            for (int i = 0; i < 4 && lo == 0.0; ++i, f *= 0.5)
                if (probe(f).kind == ScenarioKind::uncongested) lo = f;
                else hi = f;
        }
        if (lo > 0.0) {
            for (int i = 0; i < 6; ++i) {
                const double mid = 0.5 * (lo + hi);
                (probe(mid).kind == ScenarioKind::uncongested ? lo : hi) = mid;
            }
            uncong_hi = lo;
        } else {
            cal.notes.push_back("calibration: no uncongested factor found down to 0.00625");
        }
    }

    // Largest factor whose profile is still cleanly moderate (no warning).
    double moderate_hi = 0.0;
    {
        double lo = 0.0, hi = 1.0;
        for (std::size_t i = 0; i < factors.size(); ++i) {
            if (cls[i].kind == ScenarioKind::moderate && !cls[i].warning) lo = std::max(lo, factors[i]);
            if ((cls[i].warning || cls[i].kind == ScenarioKind::congested) && lo < factors[i]) {
                hi = std::min(hi, factors[i]);
            }
        }
        if (lo == 0.0) {
            // No clean moderate point in the coarse sweep; bracket between the
            // uncongested boundary and the first over-band factor.
            lo = uncong_hi > 0 ? uncong_hi : 0.05;
            hi = 1.0;
            for (std::size_t i = 0; i < factors.size(); ++i)
                if (cls[i].warning || cls[i].kind == ScenarioKind::congested) {
                    hi = factors[i];
                    break;
                }
        }
        double clean = 0.0;
        for (int i = 0; i < 6; ++i) {
            const double mid = 0.5 * (lo + hi);
            Classification c = probe(mid);
            if (c.kind == ScenarioKind::moderate && !c.warning) {
                clean = mid;
                lo = mid;
            } else {
                hi = mid;
            }
        }
        moderate_hi = clean > 0 ? clean : lo;
    }

    // Smallest factor that classifies congested.
    double cong_lo = 0.0;
    {
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < factors.size(); ++i)
            if (cls[i].kind == ScenarioKind::congested) {
                hi = factors[i];
                lo = i > 0 ? factors[i - 1] : 0.05;
                break;
            }
        if (hi > 0.0) {
            for (int i = 0; i < 6; ++i) {
                const double mid = 0.5 * (lo + hi);
                (probe(mid).kind == ScenarioKind::congested ? hi : lo) = mid;
            }
            cong_lo = hi;
        } else {
            cal.notes.push_back(
                "calibration: no congested factor within (0,1]; using top of the range");
        }
    }

    const double floor_lo = 0.01;
    if (uncong_hi > 0.0) {
        cal.ranges[ScenarioKind::uncongested] = {std::max(floor_lo, 0.5 * uncong_hi), uncong_hi};
    } else {
        cal.ranges[ScenarioKind::uncongested] = {floor_lo, 2 * floor_lo};
        cal.notes.push_back("calibration: uncongested range is a fallback");
    }
    {
        const double lo = uncong_hi > 0 ? 1.02 * uncong_hi : 2 * floor_lo;
        double hi = moderate_hi > lo ? moderate_hi : std::min(1.0, 2.0 * lo);
        if (moderate_hi <= lo)
            cal.notes.push_back("calibration: moderate range is a fallback");
        cal.ranges[ScenarioKind::moderate] = {lo, hi};
    }
    if (cong_lo > 0.0) {
        cal.ranges[ScenarioKind::congested] = {std::min(1.0, 1.02 * cong_lo), 1.0};
    } else {
        cal.ranges[ScenarioKind::congested] = {0.95, 1.0};
        cal.notes.push_back("calibration: congested range is a fallback");
    }
    return cal;
}

struct GenerateOptions {
    int n_per_scenario = 1;
    std::uint64_t seed = 0;
    FwConfig fw;
    std::vector<ScenarioKind> scenarios = all_scenarios();
    int workers = 1;
    int redraw_budget = 8;
};

struct DatasetManifest {
    std::string format = "odflow-dataset-v1";
    std::string network_digest;
    std::string base_demand_digest;
    std::map<std::string, int> sample_counts;
    std::uint64_t rng_seed = 0;
    FwConfig fw_config;
    std::map<ScenarioKind, FactorRange> factor_ranges;
    std::vector<CalibrationPoint> calibration_sweep;
    std::string created_at;
    std::string content_digest;
    std::vector<std::string> warnings;
};

struct ScenarioDataset {
    DatasetManifest manifest;
    std::vector<SampleRecord> samples;

    std::vector<const SampleRecord*> by_scenario(ScenarioKind k) const {
        std::vector<const SampleRecord*> out;
        for (const auto& s : samples)
            if (s.scenario == k) out.push_back(&s);
        return out;
    }
};

/// Draws per-regime scale factors, solves each scaled demand to user
/// equilibrium and records the labelled samples. Deterministic for a given
/// seed: every sample derives its own random substream from (seed, index),
/// so the worker count never changes the output.
inline ScenarioDataset generate_dataset(const Network& net, const DemandMatrix& base,
                                        const GenerateOptions& opt) {
    if (opt.n_per_scenario < 1) throw DomainError("generate_dataset: n_per_scenario must be >= 1");
    validate_demand(base, net.node_count);
    opt.fw.validate();

    const Calibration cal = calibrate_factor_ranges(net, base, opt.fw);

    ScenarioDataset ds;
    ds.manifest.network_digest = digest_string(fnv1a64(serialize_tntp_network(net)));
    ds.manifest.base_demand_digest = digest_string(fnv1a64(matrix_to_csv(base)));
    ds.manifest.rng_seed = opt.seed;
    ds.manifest.fw_config = opt.fw;
    ds.manifest.factor_ranges = cal.ranges;
    ds.manifest.calibration_sweep = cal.sweep;
    ds.manifest.warnings = cal.notes;

    struct Task {
        ScenarioKind target;
        std::uint64_t stream_index;
        std::string id;
    };
    std::vector<Task> tasks;
    for (std::size_t si = 0; si < opt.scenarios.size(); ++si) {
        const ScenarioKind k = opt.scenarios[si];
        for (int j = 0; j < opt.n_per_scenario; ++j) {
            char idbuf[32];
            std::snprintf(idbuf, sizeof(idbuf), "%s_%05d", to_string(k).c_str(), j);
            tasks.push_back({k, si * static_cast<std::uint64_t>(opt.n_per_scenario) +
                                    static_cast<std::uint64_t>(j),
                             idbuf});
        }
    }

    std::vector<SampleRecord> records(tasks.size());
    std::vector<std::string> task_warnings(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto run_task = [&](std::size_t ti) {
        const Task& task = tasks[ti];
        const FactorRange range = cal.ranges.at(task.target);
        RandomStream stream = RandomStream::for_index(opt.seed, task.stream_index);
        SampleRecord rec;
        rec.sample_id = task.id;
        bool matched = false;
        for (int attempt = 0; attempt <= opt.redraw_budget && !matched; ++attempt) {
            const double factor = stream.uniform(range.lo, range.hi);
            const DemandMatrix demand = scale_demand(base, factor);
            const FwResult fw = frank_wolfe_solve(net, demand, opt.fw);
            const Classification cls = classify_scenario(net, fw.flows);
            rec.scale_factor = factor;
            rec.demand = demand;
            rec.flows = fw.flows;
            rec.relative_gap = fw.relative_gap;
            rec.scenario = cls.kind;
            rec.classification_warning = cls.warning;
            rec.fw_iterations = fw.iterations_used;
            matched = cls.kind == task.target;
        }
        if (!matched)
            task_warnings[ti] = "sample " + task.id + ": kept with actual class " +
                                to_string(rec.scenario) + " after " +
                                std::to_string(opt.redraw_budget + 1) + " draws";
        records[ti] = std::move(rec);
    };

    const int workers = std::max(1, opt.workers);
    if (workers == 1) {
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) run_task(ti);
    } else {
        auto worker = [&]() {
            for (;;) {
                const std::size_t ti = next.fetch_add(1);
                if (ti >= tasks.size() || failed.load()) return;
                try {
                    run_task(ti);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    failed.store(true);
                    if (failure.empty()) failure = e.what();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failed.load()) throw Error("generate_dataset: " + failure);
    }

    ds.samples = std::move(records);
    for (const auto& w : task_warnings)
        if (!w.empty()) ds.manifest.warnings.push_back(w);
    for (const auto& s : ds.samples) ds.manifest.sample_counts[to_string(s.scenario)]++;
    return ds;
}

inline ScenarioDataset generate_dataset(const Network& net, const DemandMatrix& base,
                                        int n_per_scenario, std::uint64_t seed,
                                        const FwConfig& cfg) {
    GenerateOptions opt;
    opt.n_per_scenario = n_per_scenario;
    opt.seed = seed;
    opt.fw = cfg;
    return generate_dataset(net, base, opt);
}

/// Sanity audit of regime separation: mean over uncongested samples of the
/// max flow/capacity ratio, against the mean 0.95-quantile of the moderate
/// samples. Reported, not asserted.
struct ClassSeparation {
    double uncongested_mean_max_ratio = 0.0;
    double moderate_mean_q95 = 0.0;
    bool separated = false;
};

inline ClassSeparation class_separation_audit(const Network& net, const ScenarioDataset& ds) {
    ClassSeparation sep;
    int n_u = 0, n_m = 0;
    for (const auto& s : ds.samples) {
        const Classification c = classify_scenario(net, s.flows);
        if (s.scenario == ScenarioKind::uncongested) {
            sep.uncongested_mean_max_ratio += c.ratio_max;
            ++n_u;
        } else if (s.scenario == ScenarioKind::moderate) {
            sep.moderate_mean_q95 += c.ratio_q95;
            ++n_m;
        }
    }
    if (n_u) sep.uncongested_mean_max_ratio /= n_u;
    if (n_m) sep.moderate_mean_q95 /= n_m;
    sep.separated = n_u > 0 && n_m > 0 && sep.uncongested_mean_max_ratio < sep.moderate_mean_q95;
    return sep;
}

}  // namespace odflow
