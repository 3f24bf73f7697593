#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "odflow/autodiff.hpp"
#include "odflow/errors.hpp"
#include "odflow/gcnn.hpp"
#include "odflow/optim.hpp"
#include "odflow/rng.hpp"
#include "odflow/scenario.hpp"

namespace odflow {

struct SplitSpec {
    double train = 0.70;
    double val = 0.20;
    double test = 0.10;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(train > 0) || !(val > 0) || !(test > 0))
            throw ConfigError("SplitSpec: fractions must be positive");
        if (std::abs(train + val + test - 1.0) > 1e-9)
            throw ConfigError("SplitSpec: fractions must sum to 1");
    }
};

struct Split {
    std::vector<const SampleRecord*> train, val, test;
};

/// Deterministic shuffled partition. Validation and test sizes are floors
/// of their fractions; the remainder goes to training.
inline Split split_dataset(const std::vector<const SampleRecord*>& samples,
                           const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = samples.size();
    if (n == 0) throw ConfigError("split_dataset: empty dataset");
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test + 1e-9));
    if (n_val == 0 || n_test == 0 || n_val + n_test >= n)
        throw ConfigError("split_dataset: a split would be empty with " + std::to_string(n) +
                          " samples");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    RandomStream rs(spec.seed);
    rs.shuffle(order);
    Split out;
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t i = 0; i < n; ++i) {
        const SampleRecord* s = samples[order[i]];
        if (i < n_train) out.train.push_back(s);
        else if (i < n_train + n_val) out.val.push_back(s);
        else out.test.push_back(s);
    }
    return out;
}

inline Split split_dataset(const ScenarioDataset& ds, const SplitSpec& spec) {
    std::vector<const SampleRecord*> all;
    for (const auto& s : ds.samples) all.push_back(&s);
    return split_dataset(all, spec);
}

struct TrainConfig {
    ad::OptimizerKind optimizer = ad::OptimizerKind::adam;
    double learning_rate = 1e-3;
    int max_iterations = 10000;
    int eval_every = 50;
    int early_stop_patience = 0;  // evals without improvement; 0 disables
    int batch_size = 0;           // 0 = full batch
    std::uint64_t seed = 0;

    void validate() const {
        if (max_iterations < 1) throw ConfigError("TrainConfig: max_iterations must be >= 1");
        if (eval_every < 1) throw ConfigError("TrainConfig: eval_every must be >= 1");
        if (batch_size < 0) throw ConfigError("TrainConfig: batch_size must be >= 0");
    }
};

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    double pct_error_over_mean = 0.0;
    double min_flow = 0.0;
    double max_flow = 0.0;
    double mean_flow = 0.0;
};

struct EvalPoint {
    int iteration = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainReport {
    std::vector<EvalPoint> curve;
    Metrics train_metrics;
    Metrics val_metrics;
    double wall_seconds = 0.0;
    long best_iteration = 0;
    double best_val_mse = 0.0;
    nlohmann::json config_echo;
};

/// Pooled error statistics over per-sample prediction/label pairs. RMSE is
/// the root of the pooled mean squared per-link error (the per-sample mean
/// of means coincides with it since every sample has E links), MAE the
/// pooled mean absolute error, R^2 the coefficient of determination
/// against the pooled label mean.
inline Metrics metrics_from_predictions(const std::vector<LinkFlowVector>& predictions,
                                        const std::vector<LinkFlowVector>& labels) {
    if (predictions.empty() || predictions.size() != labels.size())
        throw ShapeError("metrics_from_predictions: prediction/label sample counts differ");
    double sse = 0.0, sae = 0.0;
    double label_sum = 0.0, label_min = std::numeric_limits<double>::infinity(), label_max = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        if (predictions[s].size() != labels[s].size())
            throw ShapeError("metrics_from_predictions: length mismatch in sample " +
                             std::to_string(s));
        for (std::size_t e = 0; e < predictions[s].size(); ++e) {
            const double err = predictions[s][e] - labels[s][e];
            sse += err * err;
            sae += std::abs(err);
            label_sum += labels[s][e];
            label_min = std::min(label_min, labels[s][e]);
            label_max = std::max(label_max, labels[s][e]);
            ++count;
        }
    }
    Metrics m;
    m.rmse = std::sqrt(sse / static_cast<double>(count));
    m.mae = sae / static_cast<double>(count);
    m.mean_flow = label_sum / static_cast<double>(count);
    m.min_flow = label_min;
    m.max_flow = label_max;
    m.pct_error_over_mean = m.mean_flow > 0 ? 100.0 * m.mae / m.mean_flow : 0.0;
    double sst = 0.0;
    for (const auto& y_s : labels)
        for (double y : y_s) sst += (y - m.mean_flow) * (y - m.mean_flow);
    m.r2 = sst > 0 ? 1.0 - sse / sst : (sse == 0 ? 1.0 : 0.0);
    return m;
}

/// Metrics of the deployed predictor over a sample set.
inline Metrics evaluate(const GcnnModel& model, const GraphMatrices& g,
                        const std::vector<const SampleRecord*>& samples) {
    if (samples.empty()) throw DomainError("evaluate: no samples");
    std::vector<LinkFlowVector> predictions, labels;
    predictions.reserve(samples.size());
    labels.reserve(samples.size());
    for (const SampleRecord* s : samples) {
        predictions.push_back(predict_flows(model, g, s->demand).flows);
        labels.push_back(s->flows);
    }
    return metrics_from_predictions(predictions, labels);
}

namespace detail {

inline double scaled_val_mse(const GcnnModel& model, const Matrix& P,
                             const std::vector<Matrix>& x_scaled,
                             const std::vector<std::vector<double>>& y_scaled,
                             ThetaCombine combine) {
    double total = 0.0;
    for (std::size_t m = 0; m < x_scaled.size(); ++m) {
        const std::vector<double> pred = forward_scaled(model.params, P, x_scaled[m], combine);
        double s = 0.0;
        for (std::size_t e = 0; e < pred.size(); ++e) {
            const double d = pred[e] - y_scaled[m][e];
            s += d * d;
        }
        total += s / static_cast<double>(pred.size());
    }
    return total / static_cast<double>(x_scaled.size());
}

struct ParamSnapshot {
    std::vector<double> theta, w_q, w_f;
    void capture(GcnnParams& p) {
        theta = p.theta.val;
        w_q = p.w_q.val;
        w_f = p.w_f.val;
    }
    void restore(GcnnParams& p) const {
        p.theta.val = theta;
        p.w_q.val = w_q;
        p.w_f.val = w_f;
    }
};

}  // namespace detail

/// Full-batch gradient training on the scaled squared-error loss. Records
/// the loss curve every `eval_every` iterations and returns the parameters
/// at the best recorded validation loss. Deterministic for fixed seeds.
inline TrainReport train(GcnnModel& model, const GraphMatrices& g,
                         const std::vector<const SampleRecord*>& train_set,
                         const std::vector<const SampleRecord*>& val_set,
                         const TrainConfig& tcfg,
                         ad::OptimizerState* optimizer_out = nullptr) {
    tcfg.validate();
    model.config.validate();
    if (train_set.empty()) throw ConfigError("train: empty training set");
    if (val_set.empty()) throw ConfigError("train: empty validation set");
    const auto t_start = std::chrono::steady_clock::now();

    for (const SampleRecord* s : train_set)
        if (s->demand.rows() != model.n_nodes ||
            static_cast<int>(s->flows.size()) != model.n_links)
            throw ShapeError("train: sample '" + s->sample_id +
                             "' does not match the model's network dimensions");

    // Scales come from the training split only.
    double max_demand = 0.0, max_flow = 0.0;
    for (const SampleRecord* s : train_set) {
        max_demand = std::max(max_demand, s->demand.max_abs());
        for (double f : s->flows) max_flow = std::max(max_flow, f);
    }
    if (max_demand <= 0) max_demand = 1.0;
    if (max_flow <= 0) max_flow = 1.0;
    model.scales.demand_norm = max_demand / model.config.input_scale;
    model.scales.flow_scale = max_flow;

    const Matrix& P = select_operator(g, model.config.filter);
    ad::Tensor p_const = ad::Tensor::constant(P);

    const ThetaCombine combine = model.config.theta_combine;
    std::vector<ad::Tensor> xs, ys, pxs;
    std::vector<Matrix> x_val;
    std::vector<std::vector<double>> y_val;
    xs.reserve(train_set.size());
    ys.reserve(train_set.size());
    for (const SampleRecord* s : train_set) {
        Matrix x = s->demand;
        x *= 1.0 / max_demand;
        xs.push_back(ad::Tensor::constant(x));
        ad::Tensor y(model.n_links, 1, false);
        for (int e = 0; e < model.n_links; ++e) y.val[e] = s->flows[e] / max_flow;
        ys.push_back(std::move(y));
        if (combine == ThetaCombine::matmul) pxs.push_back(ad::Tensor::constant(matmul(P, x)));
    }
    for (const SampleRecord* s : val_set) {
        Matrix x = s->demand;
        x *= 1.0 / max_demand;
        x_val.push_back(std::move(x));
        std::vector<double> y(s->flows.size());
        for (std::size_t e = 0; e < y.size(); ++e) y[e] = s->flows[e] / max_flow;
        y_val.push_back(std::move(y));
    }

    ad::OptimizerState opt;
    opt.kind = tcfg.optimizer;
    opt.learning_rate = tcfg.learning_rate;
    std::vector<ad::Tensor*> params = model.params.all();
    opt.attach(params);

    ad::Tape tape;
    TrainReport report;
    detail::ParamSnapshot best;
    best.capture(model.params);
    double best_val = std::numeric_limits<double>::infinity();
    long best_iter = 0;
    int evals_since_best = 0;

    const std::size_t n_train = train_set.size();
    std::vector<std::size_t> batch_order(n_train);
    std::iota(batch_order.begin(), batch_order.end(), 0);
    const std::size_t batch =
        tcfg.batch_size > 0 ? std::min<std::size_t>(tcfg.batch_size, n_train) : n_train;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
    if (batch < n_train) RandomStream::for_index(tcfg.seed, epoch).shuffle(batch_order);

    for (int iter = 1; iter <= tcfg.max_iterations; ++iter) {
        double loss_sum = 0.0;
        try {
            for (std::size_t b = 0; b < batch; ++b) {
                std::size_t m = batch_order[(cursor + b) % n_train];
                tape.reset();
                ad::Tensor* pred =
                    forward_tape(tape, model.params, &p_const, &xs[m], combine,
                                 combine == ThetaCombine::matmul ? &pxs[m] : nullptr);
                ad::Tensor* loss = tape.mse_loss(pred, &ys[m]);
                loss_sum += loss->val[0];
                tape.backward(loss, 1.0 / static_cast<double>(batch));
            }
            if (batch < n_train) {
                cursor += batch;
                if (cursor >= n_train) {
                    cursor = 0;
                    ++epoch;
                    RandomStream::for_index(tcfg.seed, epoch).shuffle(batch_order);
                }
            }
            ad::optimizer_step(opt, params);
        } catch (const NumericError& e) {
            throw NumericError("training aborted at iteration " + std::to_string(iter) + ": " +
                               e.what());
        }
        const double train_mse = loss_sum / static_cast<double>(batch);

        if (iter % tcfg.eval_every == 0 || iter == tcfg.max_iterations) {
            const double val_mse = detail::scaled_val_mse(model, P, x_val, y_val, combine);
            report.curve.push_back({iter, train_mse, val_mse});
            if (val_mse < best_val) {
                best_val = val_mse;
                best_iter = iter;
                best.capture(model.params);
                evals_since_best = 0;
            } else {
                ++evals_since_best;
            }
            if (tcfg.early_stop_patience > 0 && evals_since_best >= tcfg.early_stop_patience)
                break;
        }
    }

    best.restore(model.params);
    report.best_iteration = best_iter;
    report.best_val_mse = best_val;
    report.train_metrics = evaluate(model, g, train_set);
    report.val_metrics = evaluate(model, g, val_set);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    report.config_echo = {{"optimizer", ad::to_string(tcfg.optimizer)},
                          {"learning_rate", tcfg.learning_rate},
                          {"max_iterations", tcfg.max_iterations},
                          {"eval_every", tcfg.eval_every},
                          {"early_stop_patience", tcfg.early_stop_patience},
                          {"batch_size", tcfg.batch_size},
                          {"seed", tcfg.seed},
                          {"filter", to_string(model.config.filter)},
                          {"theta_combine", to_string(model.config.theta_combine)},
                          {"input_scale", model.config.input_scale},
                          {"init", model.config.init},
                          {"model_seed", model.config.seed}};
    if (optimizer_out) *optimizer_out = opt;
    return report;
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
    return nlohmann::json{{"rmse", m.rmse},
                          {"mae", m.mae},
                          {"r2", m.r2},
                          {"pct_error_over_mean", m.pct_error_over_mean},
                          {"min_flow", m.min_flow},
                          {"max_flow", m.max_flow},
                          {"mean_flow", m.mean_flow}};
}

/// Plot-ready loss curve: one row per recorded evaluation.
inline std::string export_loss_curve(const TrainReport& report) {
    std::string out = "iteration,train_mse,val_mse\n";
    for (const EvalPoint& p : report.curve)
        out += std::to_string(p.iteration) + "," + format_double(p.train_mse) + "," +
               format_double(p.val_mse) + "\n";
    return out;
}

/// Actual-vs-predicted pairs, E rows per sample.
inline std::string export_scatter(const GcnnModel& model, const GraphMatrices& g,
                                  const std::vector<const SampleRecord*>& samples) {
    std::string out = "sample_id,link,actual,predicted\n";
    for (const SampleRecord* s : samples) {
        const Prediction p = predict_flows(model, g, s->demand);
        for (std::size_t e = 0; e < p.flows.size(); ++e)
            out += s->sample_id + "," + std::to_string(e) + "," + format_double(s->flows[e]) +
                   "," + format_double(p.flows[e]) + "\n";
    }
    return out;
}

}  // namespace odflow
