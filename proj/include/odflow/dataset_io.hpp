#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "odflow/errors.hpp"
#include "odflow/numio.hpp"
#include "odflow/scenario.hpp"

namespace odflow {

namespace fs = std::filesystem;
using nlohmann::json;

inline json fw_config_to_json(const FwConfig& c) {
    return json{{"max_iterations", c.max_iterations},
                {"relative_gap_tol", c.relative_gap_tol},
                {"line_search_tol", c.line_search_tol},
                {"line_search", "bisection_on_derivative"},
                {"honor_first_thru", c.honor_first_thru}};
}

inline FwConfig fw_config_from_json(const json& j) {
    FwConfig c;
    c.max_iterations = j.at("max_iterations").get<int>();
    c.relative_gap_tol = j.at("relative_gap_tol").get<double>();
    c.line_search_tol = j.at("line_search_tol").get<double>();
    c.honor_first_thru = j.value("honor_first_thru", true);
    return c;
}

inline json fw_result_to_json(const FwResult& r) {
    return json{{"flows", r.flows},
                {"relative_gap", r.relative_gap},
                {"iterations", r.iterations_used},
                {"beckmann_value", r.beckmann_value},
                {"converged", r.converged}};
}

inline std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace detail {

inline std::string sample_od_name(const std::string& id) { return id + ".csv"; }

// Digest over the sample payload files, in manifest order. The creation
// timestamp stays outside so identical generations compare equal.
inline std::string dataset_content_digest(const std::vector<SampleRecord>& samples) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : samples) {
        h = fnv1a64(s.sample_id, h);
        h = fnv1a64(std::string(1, '\0'), h);
        h = fnv1a64(matrix_to_csv(s.demand), h);
        h = fnv1a64(std::string(1, '\0'), h);
        h = fnv1a64(vector_to_csv(s.flows), h);
        h = fnv1a64(std::string(1, '\0'), h);
    }
    return digest_string(h);
}

}  // namespace detail

inline json manifest_to_json(const DatasetManifest& m, const std::vector<SampleRecord>& samples) {
    json ranges = json::object();
    for (const auto& [kind, range] : m.factor_ranges)
        ranges[to_string(kind)] = json{{"lo", range.lo}, {"hi", range.hi}};
    json sweep = json::array();
    for (const auto& p : m.calibration_sweep)
        sweep.push_back(json{{"factor", p.factor},
                             {"class", to_string(p.kind)},
                             {"warning", p.warning},
                             {"ratio_median", p.ratio_median},
                             {"ratio_q95", p.ratio_q95}});
    json sample_index = json::array();
    for (const auto& s : samples)
        sample_index.push_back(json{{"id", s.sample_id},
                                    {"scenario", to_string(s.scenario)},
                                    {"scale_factor", s.scale_factor},
                                    {"relative_gap", s.relative_gap},
                                    {"fw_iterations", s.fw_iterations},
                                    {"classification_warning", s.classification_warning}});
    return json{{"format", m.format},
                {"network_digest", m.network_digest},
                {"base_demand_digest", m.base_demand_digest},
                {"sample_counts", m.sample_counts},
                {"rng_seed", m.rng_seed},
                {"fw_config", fw_config_to_json(m.fw_config)},
                {"factor_ranges", ranges},
                {"calibration_sweep", sweep},
                {"created_at", m.created_at},
                {"content_digest", m.content_digest},
                {"warnings", m.warnings},
                {"samples", sample_index}};
}

/// Persists a dataset as manifest.json + od/<id>.csv + flows/<id>.csv.
inline DatasetManifest write_dataset(ScenarioDataset& ds, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "od", ec);
    fs::create_directories(dir / "flows", ec);
    if (!fs::is_directory(dir / "od") || !fs::is_directory(dir / "flows"))
        throw IoError("cannot create dataset directory " + dir.string());

    for (const auto& s : ds.samples) {
        write_file(dir / "od" / detail::sample_od_name(s.sample_id), matrix_to_csv(s.demand));
        write_file(dir / "flows" / detail::sample_od_name(s.sample_id), vector_to_csv(s.flows));
    }
    ds.manifest.content_digest = detail::dataset_content_digest(ds.samples);
    if (ds.manifest.created_at.empty()) ds.manifest.created_at = iso8601_now();
    write_file(dir / "manifest.json", manifest_to_json(ds.manifest, ds.samples).dump(2) + "\n");
    return ds.manifest;
}

inline ScenarioDataset read_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw IntegrityError("dataset manifest not found: " + manifest_path.string());
    json j;
    try {
        j = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw IntegrityError("manifest.json is not valid JSON: " + std::string(e.what()));
    }

    ScenarioDataset ds;
    try {
        DatasetManifest& m = ds.manifest;
        m.format = j.at("format").get<std::string>();
        m.network_digest = j.at("network_digest").get<std::string>();
        m.base_demand_digest = j.at("base_demand_digest").get<std::string>();
        m.sample_counts = j.at("sample_counts").get<std::map<std::string, int>>();
        m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        m.fw_config = fw_config_from_json(j.at("fw_config"));
        for (const auto& [name, r] : j.at("factor_ranges").items())
            m.factor_ranges[scenario_from_string(name)] = {r.at("lo").get<double>(),
                                                           r.at("hi").get<double>()};
        for (const auto& p : j.at("calibration_sweep"))
            m.calibration_sweep.push_back({p.at("factor").get<double>(),
                                           scenario_from_string(p.at("class").get<std::string>()),
                                           p.at("warning").get<bool>(),
                                           p.at("ratio_median").get<double>(),
                                           p.at("ratio_q95").get<double>()});
        m.created_at = j.at("created_at").get<std::string>();
        m.content_digest = j.at("content_digest").get<std::string>();
        m.warnings = j.at("warnings").get<std::vector<std::string>>();

        for (const auto& entry : j.at("samples")) {
            SampleRecord s;
            s.sample_id = entry.at("id").get<std::string>();
            s.scenario = scenario_from_string(entry.at("scenario").get<std::string>());
            s.scale_factor = entry.at("scale_factor").get<double>();
            s.relative_gap = entry.at("relative_gap").get<double>();
            s.fw_iterations = entry.at("fw_iterations").get<int>();
            s.classification_warning = entry.at("classification_warning").get<bool>();
            ds.samples.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw IntegrityError("manifest.json schema violation: " + std::string(e.what()));
    }

    int expected = 0;
    for (const auto& [kind, count] : ds.manifest.sample_counts) expected += count;
    if (expected != static_cast<int>(ds.samples.size()))
        throw IntegrityError("manifest sample_counts disagree with the sample index (" +
                             std::to_string(expected) + " vs " +
                             std::to_string(ds.samples.size()) + ")");

    int od_rows = -1;
    std::size_t flow_len = 0;
    for (auto& s : ds.samples) {
        const fs::path od_path = dir / "od" / detail::sample_od_name(s.sample_id);
        const fs::path flow_path = dir / "flows" / detail::sample_od_name(s.sample_id);
        if (!fs::exists(od_path)) throw IntegrityError("missing sample file " + od_path.string());
        if (!fs::exists(flow_path))
            throw IntegrityError("missing sample file " + flow_path.string());
        s.demand = matrix_from_csv(read_file(od_path), od_path.filename().string());
        s.flows = vector_from_csv(read_file(flow_path), flow_path.filename().string());
        if (s.demand.rows() != s.demand.cols())
            throw IntegrityError(od_path.string() + ": demand matrix is not square");
        if (od_rows < 0) {
            od_rows = s.demand.rows();
            flow_len = s.flows.size();
        }
        if (s.demand.rows() != od_rows || s.flows.size() != flow_len)
            throw IntegrityError(od_path.string() + ": sample dimensions differ from the rest");
        for (double f : s.flows)
            if (f < 0) throw IntegrityError(flow_path.string() + ": negative flow");
    }

    const std::string digest = detail::dataset_content_digest(ds.samples);
    if (digest != ds.manifest.content_digest)
        throw IntegrityError("dataset content digest mismatch: manifest says " +
                             ds.manifest.content_digest + ", files hash to " + digest);
    return ds;
}

}  // namespace odflow
