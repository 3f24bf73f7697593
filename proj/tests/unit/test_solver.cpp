#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "odflow/bpr.hpp"
#include "odflow/frank_wolfe.hpp"
#include "odflow/shortest_path.hpp"
#include "oracles.hpp"

using namespace odflow;

TEST_CASE("volume-delay function") {
    CHECK(bpr_travel_time(10, 0, 100, 0.15, 4) == 10.0);
    CHECK(bpr_travel_time(10, 100, 100, 0.15, 4) == Catch::Approx(11.5).margin(1e-12));
    CHECK(bpr_travel_time(10, 200, 100, 0.15, 4) == Catch::Approx(34.0).margin(1e-12));
    REQUIRE_THROWS_AS(bpr_travel_time(10, -1, 100, 0.15, 4), DomainError);

    SECTION("strictly increasing in flow, never below free-flow") {
        double prev = bpr_travel_time(7, 0, 120, 0.15, 4);
        for (double f = 10; f <= 400; f += 10) {
            const double t = bpr_travel_time(7, f, 120, 0.15, 4);
            CHECK(t > prev);
            CHECK(t >= 7.0);
            prev = t;
        }
    }
    SECTION("non-integral exponent goes through pow") {
        CHECK(bpr_travel_time(10, 100, 100, 0.15, 3.5) == Catch::Approx(11.5).margin(1e-12));
    }
}

TEST_CASE("convex potential") {
    const Network net = fixtures::two_route_net(10, 12, 100);
    SECTION("zero flows give zero") {
        CHECK(beckmann_objective(net, LinkFlowVector(3, 0.0)) == 0.0);
    }
    SECTION("closed form at ratio one") {
        Network one;
        one.node_count = 2;
        one.links = {fixtures::make_link(0, 0, 1, 10, 100)};
        one.validate();
        CHECK(beckmann_objective(one, {100.0}) == Catch::Approx(1030.0).margin(1e-9));
    }
    SECTION("matches adaptive quadrature on a random instance") {
        const Network rnd = fixtures::random_net(5, 77);
        RandomStream rs(123);
        LinkFlowVector flows(rnd.links.size());
        for (double& f : flows) f = rs.uniform(0.0, 250.0);
        double reference = 0.0;
        for (const Link& l : rnd.links)
            reference += oracles::adaptive_simpson(
                [&](double x) { return bpr_travel_time(l, x); }, 0.0, flows[l.id]);
        CHECK_THAT(beckmann_objective(rnd, flows), Catch::Matchers::WithinRel(reference, 1e-6));
    }
}

TEST_CASE("label-setting shortest paths") {
    SECTION("line graph") {
        const Network net = fixtures::line_net();
        const auto tree = shortest_paths(net, {5, 7}, 0);
        CHECK(tree.dist == std::vector<double>{0, 5, 12});
        CHECK(tree.predecessor_link[2] == 1);
    }
    SECTION("two competing routes pick the faster one") {
        const Network net = fixtures::two_route_net(10, 11, 100);
        const auto tree = shortest_paths(net, {10, 5.5, 5.5}, 0);
        CHECK(tree.dist[1] == 10.0);
        CHECK(tree.predecessor_link[1] == 0);
    }
    SECTION("equal-cost predecessors resolve to the lowest link id") {
        const Network net = fixtures::two_route_net(10, 10, 100);
        const auto tree = shortest_paths(net, {10, 5, 5}, 0);
        CHECK(tree.dist[1] == 10.0);
        CHECK(tree.predecessor_link[1] == 0);
    }
    SECTION("zone nodes below first_thru_node cannot be interior") {
        Network net;
        net.node_count = 3;
        net.first_thru_node = 1;  // node 0 is a pure zone
        net.links = {fixtures::make_link(0, 1, 0, 1, 100), fixtures::make_link(1, 0, 2, 1, 100),
                     fixtures::make_link(2, 1, 2, 10, 100)};
        net.validate();
        const auto restricted = shortest_paths(net, {1, 1, 10}, 1, true);
        CHECK(restricted.dist[2] == 10.0);
        const auto open = shortest_paths(net, {1, 1, 10}, 1, false);
        CHECK(open.dist[2] == 2.0);
    }
    SECTION("Sioux Falls free-flow distances match exhaustive relaxation") {
        const Network net = fixtures::sioux_falls_network();
        const auto times = link_travel_times(net, LinkFlowVector(net.links.size(), 0.0));
        OutgoingLinks out(net);
        for (int origin = 0; origin < net.node_count; ++origin) {
            const auto tree = shortest_paths(net, times, origin, out);
            const auto reference = oracles::bellman_ford(net, times, origin);
            for (int v = 0; v < net.node_count; ++v) {
                REQUIRE(tree.dist[v] != kUnreachable);
                CHECK(tree.dist[v] == Catch::Approx(reference[v]).margin(1e-9));
            }
        }
    }
}

TEST_CASE("all-or-nothing loading") {
    SECTION("single path carries the whole demand") {
        const Network net = fixtures::line_net();
        const auto flows = all_or_nothing(net, fixtures::single_pair_demand(3, 0, 2, 7),
                                          {5, 7});
        CHECK(flows == LinkFlowVector{7, 7});
    }
    SECTION("zero demand loads nothing") {
        const Network net = fixtures::line_net();
        const auto flows = all_or_nothing(net, DemandMatrix(3, 3), {5, 7});
        CHECK(flows == LinkFlowVector{0, 0});
    }
    SECTION("whole demand goes to the faster route") {
        const Network net = fixtures::two_route_net(10, 11, 100);
        const auto flows = all_or_nothing(net, fixtures::single_pair_demand(3, 0, 1, 4),
                                          {10, 5.5, 5.5});
        CHECK(flows == LinkFlowVector{4, 0, 0});
    }
    SECTION("positive demand on a disconnected pair names the pair") {
        const Network net = fixtures::line_net();
        REQUIRE_THROWS_MATCHES(
            all_or_nothing(net, fixtures::single_pair_demand(3, 2, 0, 1), {5, 7}),
            InfeasibleError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("origin 2")));
    }
    SECTION("balance residual of a loading is tiny") {
        const Network net = fixtures::sioux_falls_network();
        const DemandMatrix demand = fixtures::sioux_falls_trips(net);
        const auto times = link_travel_times(net, LinkFlowVector(net.links.size(), 0.0));
        const auto flows = all_or_nothing(net, demand, times);
        const auto residual = node_balance_residual(net, demand, flows);
        for (double r : residual) CHECK(std::abs(r) <= 1e-9);
    }
}

TEST_CASE("equilibrium on two competing routes") {
    SECTION("identical routes split evenly") {
        const Network net = fixtures::two_route_net(10, 10, 100);
        FwConfig cfg;
        cfg.relative_gap_tol = 1e-7;
        const FwResult r = frank_wolfe_solve(net, fixtures::single_pair_demand(3, 0, 1, 60), cfg);
        CHECK(std::abs(r.flows[0] - 30.0) <= 1e-3);
        CHECK(std::abs(r.flows[1] - 30.0) <= 1e-3);
    }
    SECTION("asymmetric boundary case keeps everything on the fast route") {
        const Network net = fixtures::two_route_net(10, 12, 100);
        const auto [xa, xb] = oracles::two_link_equilibrium(10, 12, 100, 0.15, 4, 80);
        CHECK(xa == 80.0);
        const FwResult r = frank_wolfe_solve(net, fixtures::single_pair_demand(3, 0, 1, 80));
        CHECK(std::abs(r.flows[0] - xa) <= 1e-3);
        CHECK(std::abs(r.flows[1] - xb) <= 1e-3);
    }
    SECTION("interior split matches the scalar bisection oracle") {
        const Network net = fixtures::two_route_net(10, 12, 100);
        const auto [xa, xb] = oracles::two_link_equilibrium(10, 12, 100, 0.15, 4, 200);
        REQUIRE(xa > 0.0);
        REQUIRE(xb > 0.0);
        FwConfig cfg;
        cfg.relative_gap_tol = 1e-8;
        cfg.max_iterations = 3000;
        const FwResult r = frank_wolfe_solve(net, fixtures::single_pair_demand(3, 0, 1, 200), cfg);
        CHECK(std::abs(r.flows[0] - xa) <= 1e-3);
        CHECK(std::abs(r.flows[1] - xb) <= 1e-3);
        CHECK(std::abs(r.flows[2] - xb) <= 1e-3);
    }
}

TEST_CASE("solver health on Sioux Falls") {
    const Network net = fixtures::sioux_falls_network();
    const DemandMatrix demand = fixtures::sioux_falls_trips(net);
    FwConfig cfg;
    cfg.max_iterations = 2000;
    const FwResult r = frank_wolfe_solve(net, demand, cfg);

    SECTION("converges to the gap tolerance") {
        CHECK(r.converged);
        CHECK(r.relative_gap <= 1e-4);
    }
    SECTION("objective is non-increasing at every iteration") {
        for (std::size_t i = 1; i < r.beckmann_trace.size(); ++i)
            CHECK(r.beckmann_trace[i] <= r.beckmann_trace[i - 1] * (1 + 1e-12));
    }
    SECTION("gaps are nonnegative") {
        for (double g : r.gap_trace) CHECK(g >= 0.0);
    }
    SECTION("flows conserve demand") {
        const auto residual = node_balance_residual(net, demand, r.flows);
        for (double v : residual) CHECK(std::abs(v) <= 1e-6);
    }
    SECTION("travel times are consistent with the flows") {
        const auto times = link_travel_times(net, r.flows);
        for (std::size_t e = 0; e < times.size(); ++e) CHECK(times[e] == r.travel_times[e]);
    }
}

TEST_CASE("zero demand converges immediately") {
    const Network net = fixtures::line_net();
    const FwResult r = frank_wolfe_solve(net, DemandMatrix(3, 3));
    CHECK(r.converged);
    CHECK(r.relative_gap == 0.0);
    CHECK(r.flows == LinkFlowVector{0, 0});
    const auto residual = node_balance_residual(net, DemandMatrix(3, 3), r.flows);
    CHECK(residual == std::vector<double>{0, 0, 0});
}

TEST_CASE("solver configuration validation") {
    const Network net = fixtures::line_net();
    FwConfig bad;
    bad.max_iterations = 0;
    REQUIRE_THROWS_AS(frank_wolfe_solve(net, DemandMatrix(3, 3), bad), DomainError);
    bad = FwConfig{};
    bad.relative_gap_tol = 0.0;
    REQUIRE_THROWS_AS(frank_wolfe_solve(net, DemandMatrix(3, 3), bad), DomainError);
}

TEST_CASE("flow table export") {
    const Network net = fixtures::line_net();
    const FwResult r = frank_wolfe_solve(net, fixtures::single_pair_demand(3, 0, 2, 7));
    const std::string csv = flows_to_csv(net, r.flows, r.travel_times);
    CHECK(csv.rfind("link_id,from,to,flow,travel_time\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
