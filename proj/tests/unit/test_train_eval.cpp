#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "odflow/scenario.hpp"
#include "odflow/train.hpp"

using namespace odflow;

namespace {

std::vector<SampleRecord> dummy_samples(int n) {
    std::vector<SampleRecord> out(n);
    for (int i = 0; i < n; ++i) out[i].sample_id = "s" + std::to_string(i);
    return out;
}

std::vector<const SampleRecord*> pointers(const std::vector<SampleRecord>& v) {
    std::vector<const SampleRecord*> p;
    for (const auto& s : v) p.push_back(&s);
    return p;
}

// Tiny two-route world with enough samples for a 70/20/10 split.
struct TrainWorld {
    Network net = fixtures::two_route_net(10, 12, 100);
    GraphMatrices g = build_graph_matrices(net);
    ScenarioDataset ds;
    TrainWorld(int n_per_scenario = 4) {
        GenerateOptions opt;
        opt.n_per_scenario = n_per_scenario;
        opt.seed = 11;
        opt.fw.relative_gap_tol = 1e-6;
        opt.fw.max_iterations = 3000;
        ds = generate_dataset(net, fixtures::single_pair_demand(3, 0, 1, 300), opt);
    }
};

}  // namespace

TEST_CASE("dataset splitting") {
    SECTION("published split sizes") {
        const auto samples = dummy_samples(5000);
        const Split s = split_dataset(pointers(samples), SplitSpec{});
        CHECK(s.train.size() == 3500);
        CHECK(s.val.size() == 1000);
        CHECK(s.test.size() == 500);
    }
    SECTION("floor allocation with remainder to train") {
        const auto samples = dummy_samples(10);
        const Split s = split_dataset(pointers(samples), SplitSpec{});
        CHECK(s.train.size() == 7);
        CHECK(s.val.size() == 2);
        CHECK(s.test.size() == 1);
    }
    SECTION("same seed reproduces the membership") {
        const auto samples = dummy_samples(50);
        SplitSpec spec;
        spec.seed = 123;
        const Split a = split_dataset(pointers(samples), spec);
        const Split b = split_dataset(pointers(samples), spec);
        CHECK(a.train == b.train);
        CHECK(a.val == b.val);
        CHECK(a.test == b.test);
    }
    SECTION("splits are disjoint and exhaustive") {
        const auto samples = dummy_samples(53);
        const Split s = split_dataset(pointers(samples), SplitSpec{});
        std::set<const SampleRecord*> seen;
        for (const auto* p : s.train) seen.insert(p);
        for (const auto* p : s.val) seen.insert(p);
        for (const auto* p : s.test) seen.insert(p);
        CHECK(seen.size() == 53);
        CHECK(s.train.size() + s.val.size() + s.test.size() == 53);
    }
    SECTION("an empty split is a config error") {
        const auto samples = dummy_samples(3);
        REQUIRE_THROWS_AS(split_dataset(pointers(samples), SplitSpec{}), ConfigError);
    }
    SECTION("fractions must sum to one") {
        SplitSpec bad;
        bad.train = 0.5;
        const auto samples = dummy_samples(100);
        REQUIRE_THROWS_AS(split_dataset(pointers(samples), bad), ConfigError);
    }
}

TEST_CASE("metric arithmetic") {
    SECTION("perfect predictions") {
        const Metrics m = metrics_from_predictions({{1, 2, 3}}, {{1, 2, 3}});
        CHECK(m.rmse == 0.0);
        CHECK(m.mae == 0.0);
        CHECK(m.r2 == 1.0);
        CHECK(m.pct_error_over_mean == 0.0);
    }
    SECTION("two-link example") {
        const Metrics m = metrics_from_predictions({{1, 3}}, {{2, 5}});
        CHECK(m.mae == Catch::Approx(1.5).margin(1e-15));
        CHECK(m.rmse == Catch::Approx(std::sqrt(2.5)).margin(1e-12));
        CHECK(m.mean_flow == 3.5);
        CHECK(m.min_flow == 2.0);
        CHECK(m.max_flow == 5.0);
    }
    SECTION("matches a brute-force recomputation on two samples") {
        RandomStream rs(5);
        std::vector<LinkFlowVector> preds(2, LinkFlowVector(4)), labels(2, LinkFlowVector(4));
        for (auto& v : preds)
            for (double& x : v) x = rs.uniform(0, 100);
        for (auto& v : labels)
            for (double& x : v) x = rs.uniform(0, 100);
        const Metrics m = metrics_from_predictions(preds, labels);

        double sse = 0, sae = 0, sum = 0;
        int n = 0;
        for (int s = 0; s < 2; ++s)
            for (int e = 0; e < 4; ++e) {
                sse += (preds[s][e] - labels[s][e]) * (preds[s][e] - labels[s][e]);
                sae += std::abs(preds[s][e] - labels[s][e]);
                sum += labels[s][e];
                ++n;
            }
        const double mean = sum / n;
        double sst = 0;
        for (int s = 0; s < 2; ++s)
            for (int e = 0; e < 4; ++e) sst += (labels[s][e] - mean) * (labels[s][e] - mean);
        CHECK(m.rmse == Catch::Approx(std::sqrt(sse / n)).margin(1e-12));
        CHECK(m.mae == Catch::Approx(sae / n).margin(1e-12));
        CHECK(m.r2 == Catch::Approx(1 - sse / sst).margin(1e-12));
        CHECK(m.pct_error_over_mean == Catch::Approx(100 * (sae / n) / mean).margin(1e-12));
    }
    SECTION("rmse dominates mae on random evaluations") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            RandomStream rs(seed);
            std::vector<LinkFlowVector> preds(3, LinkFlowVector(6)), labels(3, LinkFlowVector(6));
            for (auto& v : preds)
                for (double& x : v) x = rs.uniform(0, 50);
            for (auto& v : labels)
                for (double& x : v) x = rs.uniform(0, 50);
            const Metrics m = metrics_from_predictions(preds, labels);
            CHECK(m.rmse >= m.mae);
        }
    }
}

TEST_CASE("training memorizes a single sample") {
    TrainWorld w(4);
    std::vector<const SampleRecord*> train_set{&w.ds.samples[0]};
    std::vector<const SampleRecord*> val_set{&w.ds.samples[0]};
    ModelConfig mc;
    mc.seed = 3;
    GcnnModel model = make_model(w.net, mc);
    TrainConfig tc;
    tc.max_iterations = 2000;
    tc.learning_rate = 3e-3;
    tc.eval_every = 100;
    const TrainReport report = train(model, w.g, train_set, val_set, tc);
    CHECK(report.curve.back().train_mse <= 1e-6);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    TrainWorld w(4);
    const Split split = split_dataset(w.ds, SplitSpec{.train = 0.6, .val = 0.2, .test = 0.2});
    ModelConfig mc;
    mc.seed = 4;
    GcnnModel model = make_model(w.net, mc);
    const std::vector<double> before = model.params.theta.val;
    TrainConfig tc;
    tc.max_iterations = 60;
    tc.learning_rate = 0.0;
    tc.eval_every = 20;
    const TrainReport report = train(model, w.g, split.train, split.val, tc);
    CHECK(model.params.theta.val == before);
    REQUIRE(report.curve.size() == 3);
    CHECK(report.curve[0].train_mse == report.curve[1].train_mse);
    CHECK(report.curve[1].val_mse == report.curve[2].val_mse);
}

TEST_CASE("training tracks the best validation loss") {
    TrainWorld w(6);
    const Split split = split_dataset(w.ds, SplitSpec{});
    ModelConfig mc;
    mc.seed = 5;
    GcnnModel model = make_model(w.net, mc);
    TrainConfig tc;
    tc.max_iterations = 300;
    tc.learning_rate = 2e-3;
    tc.eval_every = 30;
    const TrainReport report = train(model, w.g, split.train, split.val, tc);
    REQUIRE(!report.curve.empty());
    double min_val = report.curve.front().val_mse;
    for (const auto& p : report.curve) min_val = std::min(min_val, p.val_mse);
    CHECK(report.best_val_mse == min_val);
    CHECK(report.wall_seconds > 0.0);
    CHECK(report.curve.size() == 10);
}

TEST_CASE("early stopping cuts the curve short") {
    TrainWorld w(4);
    const Split split = split_dataset(w.ds, SplitSpec{.train = 0.6, .val = 0.2, .test = 0.2});
    ModelConfig mc;
    GcnnModel model = make_model(w.net, mc);
    TrainConfig tc;
    tc.max_iterations = 500;
    tc.learning_rate = 0.0;  // flat loss, never improves after the first eval
    tc.eval_every = 10;
    tc.early_stop_patience = 2;
    const TrainReport report = train(model, w.g, split.train, split.val, tc);
    CHECK(report.curve.size() == 3);  // first eval sets best, two stale evals stop it
}

TEST_CASE("deterministic training") {
    TrainWorld w(4);
    const Split split = split_dataset(w.ds, SplitSpec{.train = 0.6, .val = 0.2, .test = 0.2});
    auto run = [&]() {
        ModelConfig mc;
        mc.seed = 7;
        GcnnModel model = make_model(w.net, mc);
        TrainConfig tc;
        tc.max_iterations = 80;
        tc.eval_every = 20;
        train(model, w.g, split.train, split.val, tc);
        return model.params.theta.val;
    };
    CHECK(run() == run());
}

TEST_CASE("evaluation runs the deployed predictor") {
    TrainWorld w(4);
    const Split split = split_dataset(w.ds, SplitSpec{.train = 0.6, .val = 0.2, .test = 0.2});
    ModelConfig mc;
    mc.seed = 8;
    GcnnModel model = make_model(w.net, mc);
    TrainConfig tc;
    tc.max_iterations = 400;
    tc.learning_rate = 3e-3;
    tc.eval_every = 50;
    const TrainReport report = train(model, w.g, split.train, split.val, tc);
    const Metrics test = evaluate(model, w.g, split.test);
    CHECK(test.rmse >= test.mae);
    CHECK(test.r2 <= 1.0);
    CHECK(report.train_metrics.rmse >= 0.0);
    SECTION("empty evaluation is a domain error") {
        REQUIRE_THROWS_AS(evaluate(model, w.g, {}), DomainError);
    }
}

TEST_CASE("csv exports") {
    TrainReport report;
    report.curve = {{10, 1.0, 2.0}, {20, 0.5, 1.5}, {30, 0.25, 1.25}};
    const std::string curve = export_loss_curve(report);
    CHECK(curve == "iteration,train_mse,val_mse\n10,1,2\n20,0.5,1.5\n30,0.25,1.25\n");

    TrainWorld w(4);
    ModelConfig mc;
    GcnnModel model = make_model(w.net, mc);
    model.scales.demand_norm = 300;
    model.scales.flow_scale = 100;
    std::vector<const SampleRecord*> two{&w.ds.samples[0], &w.ds.samples[1]};
    const std::string scatter = export_scatter(model, w.g, two);
    CHECK(scatter.rfind("sample_id,link,actual,predicted\n", 0) == 0);
    CHECK(std::count(scatter.begin(), scatter.end(), '\n') == 1 + 2 * 3);
}

TEST_CASE("mini-batch mode still trains") {
    TrainWorld w(6);
    const Split split = split_dataset(w.ds, SplitSpec{});
    ModelConfig mc;
    mc.seed = 9;
    GcnnModel model = make_model(w.net, mc);
    TrainConfig tc;
    tc.max_iterations = 200;
    tc.eval_every = 50;
    tc.batch_size = 4;
    tc.learning_rate = 2e-3;
    tc.seed = 13;
    const TrainReport report = train(model, w.g, split.train, split.val, tc);
    CHECK(report.curve.size() == 4);
    CHECK(report.curve.back().val_mse < report.curve.front().val_mse * 5);  // sane, not diverging
}
