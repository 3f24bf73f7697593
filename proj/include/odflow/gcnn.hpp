#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "odflow/autodiff.hpp"
#include "odflow/errors.hpp"
#include "odflow/graph_matrices.hpp"
#include "odflow/network.hpp"
#include "odflow/numio.hpp"
#include "odflow/optim.hpp"
#include "odflow/rng.hpp"

// Three-layer graph-convolutional surrogate that maps an origin/destination
// demand matrix straight to link flows:
//
//   H1 = tanh(conv(Theta, P, X))          N x N   demand diffusion
//   H2 = tanh(H1 * Wq)                    N x E   per-origin link loading
//   F  = H2^T * wf                        E       link-flow aggregation
//
// P is one fixed propagation operator (random-walk, Laplacian or
// symmetrically renormalized neighborhood) and Theta modulates it, either
// as an element-wise routing mask on the operator support or as a full
// matrix product. There are no bias terms, so zero demand maps to zero
// flow exactly.

namespace odflow {

enum class FilterKind { random_walk, laplacian, spectral };
enum class ThetaCombine { hadamard, matmul };

inline std::string to_string(FilterKind f) {
    switch (f) {
        case FilterKind::random_walk: return "random_walk";
        case FilterKind::laplacian: return "laplacian";
        case FilterKind::spectral: return "spectral";
    }
    throw DomainError("unknown FilterKind");
}

inline FilterKind filter_from_string(const std::string& s) {
    if (s == "random_walk") return FilterKind::random_walk;
    if (s == "laplacian") return FilterKind::laplacian;
    if (s == "spectral") return FilterKind::spectral;
    throw ConfigError("unknown filter '" + s + "'");
}

inline std::string to_string(ThetaCombine c) {
    return c == ThetaCombine::hadamard ? "hadamard" : "matmul";
}

inline ThetaCombine combine_from_string(const std::string& s) {
    if (s == "hadamard") return ThetaCombine::hadamard;
    if (s == "matmul") return ThetaCombine::matmul;
    throw ConfigError("unknown theta-combine mode '" + s + "'");
}

inline const Matrix& select_operator(const GraphMatrices& g, FilterKind f) {
    switch (f) {
        case FilterKind::random_walk: return g.random_walk;
        case FilterKind::laplacian: return g.laplacian;
        case FilterKind::spectral: return g.spectral;
    }
    throw DomainError("unknown FilterKind");
}

struct ModelConfig {
    FilterKind filter = FilterKind::random_walk;
    ThetaCombine theta_combine = ThetaCombine::hadamard;
    double input_scale = 1.0;  // extra divisor applied on top of the learned norm
    std::string init = "uniform_glorot";
    std::uint64_t seed = 0;

    void validate() const {
        if (!(input_scale > 0)) throw ConfigError("ModelConfig: input_scale must be > 0");
        if (init != "uniform_glorot") throw ConfigError("ModelConfig: unknown init '" + init + "'");
    }
};

struct GcnnParams {
    ad::Tensor theta;  // N x N
    ad::Tensor w_q;    // N x E
    ad::Tensor w_f;    // N x 1

    std::vector<ad::Tensor*> all() { return {&theta, &w_q, &w_f}; }
};

// Demand divisor and flow multiplier learned from the training split. The
// effective demand divisor is input_scale * demand_norm; only the product
// matters, so rescaling one against the other is a no-op.
struct ModelScales {
    double demand_norm = 1.0;
    double flow_scale = 1.0;
};

struct GcnnModel {
    ModelConfig config;
    GcnnParams params;
    ModelScales scales;
    int n_nodes = 0;
    int n_links = 0;
};

namespace detail {
inline void fill_glorot(ad::Tensor& t, int fan_in, int fan_out, std::uint64_t seed,
                        std::uint64_t stream) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    RandomStream rs = RandomStream::for_index(seed, stream);
    for (double& v : t.val) v = rs.uniform(-bound, bound);
}
}  // namespace detail

inline GcnnParams init_params(int n_nodes, int n_links, const ModelConfig& cfg) {
    cfg.validate();
    GcnnParams p;
    p.theta = ad::Tensor(n_nodes, n_nodes, true);
    p.w_q = ad::Tensor(n_nodes, n_links, true);
    p.w_f = ad::Tensor(n_nodes, 1, true);
    detail::fill_glorot(p.theta, n_nodes, n_nodes, cfg.seed, 0);
    detail::fill_glorot(p.w_q, n_nodes, n_links, cfg.seed, 1);
    detail::fill_glorot(p.w_f, n_nodes, 1, cfg.seed, 2);
    return p;
}

inline GcnnModel make_model(const Network& net, const ModelConfig& cfg) {
    GcnnModel m;
    m.config = cfg;
    m.n_nodes = net.node_count;
    m.n_links = net.link_count();
    m.params = init_params(m.n_nodes, m.n_links, cfg);
    return m;
}

/// One graph-convolution application without a tape; the reference path
/// for inference and tests. hadamard: (Theta .* P) X, matmul: Theta (P X).
inline Matrix graph_convolution(const Matrix& P, const Matrix& theta, const Matrix& X,
                                ThetaCombine combine) {
    if (P.rows() != P.cols() || !P.same_shape(theta) || X.rows() != P.rows())
        throw ShapeError("graph_convolution: operator " + shape_string(P) + ", theta " +
                         shape_string(theta) + ", demand " + shape_string(X));
    if (combine == ThetaCombine::hadamard) {
        Matrix masked(P.rows(), P.cols());
        for (int i = 0; i < P.rows(); ++i)
            for (int j = 0; j < P.cols(); ++j) masked(i, j) = theta(i, j) * P(i, j);
        return matmul(masked, X);
    }
    return matmul(theta, matmul(P, X));
}

/// Forward pass in scaled space (inputs already divided by the demand
/// divisor); returns the scaled link-flow vector of length E.
inline std::vector<double> forward_scaled(const GcnnParams& params, const Matrix& P,
                                          const Matrix& x_scaled, ThetaCombine combine) {
    const Matrix conv = graph_convolution(P, params.theta.to_matrix(), x_scaled, combine);
    const int n = conv.rows();
    const int e_count = params.w_q.cols;
    Matrix h1(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h1(i, j) = std::tanh(conv(i, j));
    Matrix h2(n, e_count);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const double v = h1(i, k);
            if (v == 0.0) continue;
            for (int e = 0; e < e_count; ++e) h2(i, e) += v * params.w_q.v(k, e);
        }
    std::vector<double> flows(e_count, 0.0);
    for (int e = 0; e < e_count; ++e) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::tanh(h2(i, e)) * params.w_f.v(i, 0);
        flows[e] = s;
        if (!std::isfinite(s)) throw NumericError("forward: non-finite output");
    }
    return flows;
}

/// Tape-recorded forward pass for training. `px_cached` may carry the
/// precomputed product P * X when the combine mode is matmul (it is
/// constant across iterations).
inline ad::Tensor* forward_tape(ad::Tape& tape, GcnnParams& params, ad::Tensor* P,
                                ad::Tensor* x_scaled, ThetaCombine combine,
                                ad::Tensor* px_cached = nullptr) {
    ad::Tensor* conv = nullptr;
    if (combine == ThetaCombine::hadamard) {
        conv = tape.matmul(tape.hadamard(&params.theta, P), x_scaled);
    } else {
        ad::Tensor* px = px_cached ? px_cached : tape.matmul(P, x_scaled);
        conv = tape.matmul(&params.theta, px);
    }
    ad::Tensor* h1 = tape.tanh_elem(conv);
    ad::Tensor* h2 = tape.tanh_elem(tape.matmul(h1, &params.w_q));
    return tape.matmul(tape.transpose(h2), &params.w_f);  // E x 1
}

struct Prediction {
    LinkFlowVector flows;
    int clamped_negative = 0;
};

/// Full deployment path: divide raw demand by the effective divisor, run
/// the network, multiply by the stored flow scale and clamp negatives.
inline Prediction predict_flows(const GcnnModel& model, const GraphMatrices& g,
                                const DemandMatrix& x_raw) {
    if (x_raw.rows() != model.n_nodes || x_raw.cols() != model.n_nodes)
        throw ShapeError("predict_flows: demand " + shape_string(x_raw) + " but model expects " +
                         std::to_string(model.n_nodes) + "x" + std::to_string(model.n_nodes));
    const double divisor = model.config.input_scale * model.scales.demand_norm;
    Matrix x = x_raw;
    x *= 1.0 / divisor;
    std::vector<double> scaled =
        forward_scaled(model.params, select_operator(g, model.config.filter), x,
                       model.config.theta_combine);
    Prediction out;
    out.flows.resize(scaled.size());
    for (std::size_t e = 0; e < scaled.size(); ++e) {
        double f = scaled[e] * model.scales.flow_scale;
        if (f < 0) {
            f = 0.0;
            ++out.clamped_negative;
        }
        out.flows[e] = f;
    }
    return out;
}

// --- checkpointing -------------------------------------------------------

using nlohmann::json;

inline json tensor_to_json(const ad::Tensor& t) {
    return json{{"rows", t.rows}, {"cols", t.cols}, {"values", t.val}};
}

inline ad::Tensor tensor_from_json(const json& j, bool requires_grad) {
    ad::Tensor t(j.at("rows").get<int>(), j.at("cols").get<int>(), requires_grad);
    const auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != t.size()) throw IntegrityError("checkpoint tensor size mismatch");
    t.val = values;
    return t;
}

struct Checkpoint {
    GcnnModel model;
    ad::OptimizerState optimizer;
    std::uint64_t rng_seed = 0;
    long iterations = 0;
    std::string network_digest;
    std::string dataset_digest;
    std::string scenario;  // empty when trained on a mixed dataset
    double split_train = 0.7, split_val = 0.2, split_test = 0.1;
    std::uint64_t split_seed = 0;
};

inline json checkpoint_to_json(const Checkpoint& c) {
    const GcnnModel& m = c.model;
    json opt = {{"kind", to_string(c.optimizer.kind)},
                {"learning_rate", c.optimizer.learning_rate},
                {"beta1", c.optimizer.beta1},
                {"beta2", c.optimizer.beta2},
                {"eps", c.optimizer.eps},
                {"decay", c.optimizer.decay},
                {"step_count", c.optimizer.step_count},
                {"m1", c.optimizer.m1},
                {"m2", c.optimizer.m2}};
    return json{{"format", "odflow-checkpoint-v1"},
                {"network", {{"nodes", m.n_nodes}, {"links", m.n_links}, {"digest", c.network_digest}}},
                {"model",
                 {{"filter", to_string(m.config.filter)},
                  {"theta_combine", to_string(m.config.theta_combine)},
                  {"input_scale", m.config.input_scale},
                  {"init", m.config.init},
                  {"seed", m.config.seed}}},
                {"scales", {{"demand_norm", m.scales.demand_norm}, {"flow_scale", m.scales.flow_scale}}},
                {"params",
                 {{"theta", tensor_to_json(m.params.theta)},
                  {"w_q", tensor_to_json(m.params.w_q)},
                  {"w_f", tensor_to_json(m.params.w_f)}}},
                {"optimizer", opt},
                {"rng_seed", c.rng_seed},
                {"iterations", c.iterations},
                {"dataset", {{"digest", c.dataset_digest}, {"scenario", c.scenario}}},
                {"split",
                 {{"train", c.split_train},
                  {"val", c.split_val},
                  {"test", c.split_test},
                  {"seed", c.split_seed}}}};
}

inline bool checkpoint_dims_bad(const Checkpoint& c) {
    const GcnnModel& m = c.model;
    return m.params.theta.rows != m.n_nodes || m.params.theta.cols != m.n_nodes ||
           m.params.w_q.rows != m.n_nodes || m.params.w_q.cols != m.n_links ||
           m.params.w_f.rows != m.n_nodes || m.params.w_f.cols != 1;
}

inline Checkpoint checkpoint_from_json(const json& j) {
    Checkpoint c;
    try {
        if (j.at("format").get<std::string>() != "odflow-checkpoint-v1")
            throw IntegrityError("unsupported checkpoint format");
        GcnnModel& m = c.model;
        m.n_nodes = j.at("network").at("nodes").get<int>();
        m.n_links = j.at("network").at("links").get<int>();
        c.network_digest = j.at("network").at("digest").get<std::string>();
        const json& mc = j.at("model");
        m.config.filter = filter_from_string(mc.at("filter").get<std::string>());
        m.config.theta_combine = combine_from_string(mc.at("theta_combine").get<std::string>());
        m.config.input_scale = mc.at("input_scale").get<double>();
        m.config.init = mc.at("init").get<std::string>();
        m.config.seed = mc.at("seed").get<std::uint64_t>();
        m.scales.demand_norm = j.at("scales").at("demand_norm").get<double>();
        m.scales.flow_scale = j.at("scales").at("flow_scale").get<double>();
        m.params.theta = tensor_from_json(j.at("params").at("theta"), true);
        m.params.w_q = tensor_from_json(j.at("params").at("w_q"), true);
        m.params.w_f = tensor_from_json(j.at("params").at("w_f"), true);
        const json& opt = j.at("optimizer");
        c.optimizer.kind = ad::optimizer_from_string(opt.at("kind").get<std::string>());
        c.optimizer.learning_rate = opt.at("learning_rate").get<double>();
        c.optimizer.beta1 = opt.at("beta1").get<double>();
        c.optimizer.beta2 = opt.at("beta2").get<double>();
        c.optimizer.eps = opt.at("eps").get<double>();
        c.optimizer.decay = opt.at("decay").get<double>();
        c.optimizer.step_count = opt.at("step_count").get<long>();
        c.optimizer.m1 = opt.at("m1").get<std::vector<std::vector<double>>>();
        c.optimizer.m2 = opt.at("m2").get<std::vector<std::vector<double>>>();
        c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        c.iterations = j.at("iterations").get<long>();
        c.dataset_digest = j.at("dataset").at("digest").get<std::string>();
        c.scenario = j.at("dataset").at("scenario").get<std::string>();
        c.split_train = j.at("split").at("train").get<double>();
        c.split_val = j.at("split").at("val").get<double>();
        c.split_test = j.at("split").at("test").get<double>();
        c.split_seed = j.at("split").at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw IntegrityError("checkpoint schema violation: " + std::string(e.what()));
    }
    if (checkpoint_dims_bad(c))
        throw IntegrityError("checkpoint parameter shapes disagree with network dims");
    return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    write_file(path, checkpoint_to_json(c).dump(2) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IntegrityError("checkpoint is not valid JSON: " + std::string(e.what()));
    }
    return checkpoint_from_json(j);
}

}  // namespace odflow
