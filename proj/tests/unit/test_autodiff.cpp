#include <catch_amalgamated.hpp>

#include "odflow/autodiff.hpp"
#include "odflow/optim.hpp"
#include "odflow/rng.hpp"
#include "oracles.hpp"

using namespace odflow;
using ad::Tensor;

namespace {

Tensor random_tensor(int r, int c, std::uint64_t seed, bool rg) {
    Tensor t(r, c, rg);
    RandomStream rs(seed);
    for (double& v : t.val) v = rs.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("forward op values") {
    ad::Tape tape;
    SECTION("tanh of the zero matrix is zero") {
        Tensor z(3, 3, false);
        Tensor* out = tape.tanh_elem(&z);
        for (double v : out->val) CHECK(v == 0.0);
    }
    SECTION("identity matmul reproduces the input") {
        Tensor i = Tensor::constant(Matrix::identity(4));
        Tensor b = random_tensor(4, 5, 9, false);
        Tensor* out = tape.matmul(&i, &b);
        CHECK(out->val == b.val);
    }
    SECTION("mse examples") {
        Tensor p(2, 1, true), t(2, 1, false);
        p.val = {1, 3};
        t.val = {2, 5};
        CHECK(tape.mse_loss(&p, &t)->val[0] == Catch::Approx(2.5).margin(1e-15));
        Tensor same = p;
        same.requires_grad = false;
        CHECK(tape.mse_loss(&p, &same)->val[0] == 0.0);
    }
    SECTION("shape mismatches name both shapes") {
        Tensor a(2, 3, false), b(2, 3, false);
        REQUIRE_THROWS_MATCHES(
            tape.matmul(&a, &b), ShapeError,
            Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("2x3")));
    }
}

// Re-runs a forward graph builder on a fresh tape and compares analytic
// gradients against central finite differences.
template <typename Builder>
static void check_gradients(Tensor& param, Builder build, double tol = 1e-5) {
    ad::Tape tape;
    param.zero_grad();
    ad::Tensor* loss = build(tape);
    tape.backward(loss);
    const std::vector<double> analytic = param.grad;
    auto eval = [&]() {
        ad::Tape fresh;
        return build(fresh)->val[0];
    };
    const auto res = oracles::finite_difference_check(param.val, analytic, eval);
    INFO("checked " << res.checked << " entries");
    CHECK(res.max_rel_err <= tol);
}

TEST_CASE("per-op gradients match finite differences") {
    Tensor a = random_tensor(3, 4, 1, true);
    Tensor b = random_tensor(4, 2, 2, false);
    Tensor c = random_tensor(3, 4, 3, false);
    Tensor target = random_tensor(3, 2, 4, false);
    Tensor target_a = random_tensor(3, 4, 5, false);
    Tensor target_t = random_tensor(4, 3, 6, false);

    SECTION("matmul, first argument") {
        check_gradients(a, [&](ad::Tape& t) { return t.mse_loss(t.matmul(&a, &b), &target); });
    }
    SECTION("matmul, second argument") {
        Tensor b2 = random_tensor(4, 2, 12, true);
        check_gradients(b2, [&](ad::Tape& t) { return t.mse_loss(t.matmul(&a, &b2), &target); });
    }
    SECTION("hadamard") {
        check_gradients(a, [&](ad::Tape& t) { return t.mse_loss(t.hadamard(&a, &c), &target_a); });
    }
    SECTION("transpose") {
        check_gradients(a, [&](ad::Tape& t) { return t.mse_loss(t.transpose(&a), &target_t); });
    }
    SECTION("tanh") {
        check_gradients(a, [&](ad::Tape& t) { return t.mse_loss(t.tanh_elem(&a), &target_a); });
    }
    SECTION("add") {
        check_gradients(a, [&](ad::Tape& t) { return t.mse_loss(t.add(&a, &c), &target_a); });
    }
    SECTION("scale") {
        check_gradients(a, [&](ad::Tape& t) { return t.mse_loss(t.scale(&a, 1.7), &target_a); });
    }
    SECTION("mse against a fixed target") {
        check_gradients(a, [&](ad::Tape& t) { return t.mse_loss(&a, &target_a); });
    }
}

TEST_CASE("composition gradient: sum of tanh of A x") {
    Tensor a = random_tensor(4, 4, 21, true);
    Tensor x = random_tensor(4, 1, 22, false);
    Tensor ones(1, 4, false);
    std::fill(ones.val.begin(), ones.val.end(), 1.0);
    check_gradients(a, [&](ad::Tape& t) {
        return t.matmul(&ones, t.tanh_elem(t.matmul(&a, &x)));
    }, 1e-6);
}

TEST_CASE("mse gradient closed form") {
    Tensor p(4, 1, true), t(4, 1, false);
    RandomStream rs(31);
    for (int i = 0; i < 4; ++i) {
        p.val[i] = rs.uniform(-2, 2);
        t.val[i] = rs.uniform(-2, 2);
    }
    ad::Tape tape;
    tape.backward(tape.mse_loss(&p, &t));
    for (int i = 0; i < 4; ++i)
        CHECK(p.grad[i] == Catch::Approx(2.0 * (p.val[i] - t.val[i]) / 4.0).margin(1e-15));
}

TEST_CASE("tape state machine") {
    Tensor p = random_tensor(2, 2, 41, true);
    Tensor t = random_tensor(2, 2, 42, false);
    ad::Tape tape;
    ad::Tensor* loss = tape.mse_loss(&p, &t);
    tape.backward(loss);
    SECTION("second backward without a new forward is a state error") {
        REQUIRE_THROWS_AS(tape.backward(loss), StateError);
    }
    SECTION("reset re-arms the tape") {
        tape.reset();
        ad::Tensor* loss2 = tape.mse_loss(&p, &t);
        REQUIRE_NOTHROW(tape.backward(loss2));
    }
    SECTION("backward needs a scalar") {
        tape.reset();
        ad::Tensor* big = tape.add(&p, &p);
        REQUIRE_THROWS_AS(tape.backward(big), ShapeError);
    }
}

TEST_CASE("untouched parameters receive zero gradient") {
    Tensor used = random_tensor(2, 2, 51, true);
    Tensor untouched = random_tensor(2, 2, 52, true);
    Tensor target = random_tensor(2, 2, 53, false);
    ad::Tape tape;
    tape.backward(tape.mse_loss(&used, &target));
    for (double g : untouched.grad) CHECK(g == 0.0);
    bool any = false;
    for (double g : used.grad) any = any || g != 0.0;
    CHECK(any);
}

TEST_CASE("non-finite intermediates abort") {
    Tensor huge(2, 2, false);
    std::fill(huge.val.begin(), huge.val.end(), 1e200);
    ad::Tape tape;
    REQUIRE_THROWS_AS(tape.hadamard(&huge, &huge), NumericError);
}

TEST_CASE("optimizers") {
    SECTION("first adam step moves against the gradient") {
        Tensor p(1, 1, true);
        p.val[0] = 3.0;
        Tensor zero(1, 1, false);
        ad::OptimizerState opt;
        opt.learning_rate = 0.1;
        std::vector<Tensor*> params{&p};
        opt.attach(params);
        ad::Tape tape;
        tape.backward(tape.mse_loss(&p, &zero));  // loss = p^2, grad positive
        REQUIRE(p.grad[0] > 0.0);
        ad::optimizer_step(opt, params);
        CHECK(p.val[0] < 3.0);
        CHECK(opt.step_count == 1);
        CHECK(p.grad[0] == 0.0);  // gradients cleared by the step
    }
    SECTION("adam drives a quadratic bowl to a tiny loss in 200 steps") {
        Tensor p(1, 1, true);
        p.val[0] = 3.0;
        Tensor zero(1, 1, false);
        ad::OptimizerState opt;
        opt.learning_rate = 0.05;
        std::vector<Tensor*> params{&p};
        opt.attach(params);
        ad::Tape tape;
        const double start_loss = 9.0;
        double loss = start_loss;
        for (int i = 0; i < 200; ++i) {
            tape.reset();
            ad::Tensor* l = tape.mse_loss(&p, &zero);
            loss = l->val[0];
            tape.backward(l);
            ad::optimizer_step(opt, params);
        }
        CHECK(loss < 1e-4 * start_loss);
    }
    SECTION("rmsprop also descends the bowl") {
        Tensor p(1, 1, true);
        p.val[0] = 3.0;
        Tensor zero(1, 1, false);
        ad::OptimizerState opt;
        opt.kind = ad::OptimizerKind::rmsprop;
        opt.learning_rate = 0.05;
        std::vector<Tensor*> params{&p};
        opt.attach(params);
        ad::Tape tape;
        double loss = 9.0;
        for (int i = 0; i < 300; ++i) {
            tape.reset();
            ad::Tensor* l = tape.mse_loss(&p, &zero);
            loss = l->val[0];
            tape.backward(l);
            ad::optimizer_step(opt, params);
        }
        CHECK(loss < 1e-3);
    }
    SECTION("stepping without attach is a state error") {
        Tensor p(1, 1, true);
        ad::OptimizerState opt;
        std::vector<Tensor*> params{&p};
        REQUIRE_THROWS_AS(ad::optimizer_step(opt, params), StateError);
    }
}

TEST_CASE("determinism: identical seeds give bit-identical results") {
    auto run = [](std::uint64_t seed) {
        Tensor p = random_tensor(3, 3, seed, true);
        Tensor x = random_tensor(3, 1, seed + 1, false);
        Tensor target = random_tensor(3, 1, seed + 2, false);
        ad::OptimizerState opt;
        std::vector<Tensor*> params{&p};
        opt.attach(params);
        ad::Tape tape;
        for (int i = 0; i < 25; ++i) {
            tape.reset();
            ad::Tensor* loss = tape.mse_loss(tape.tanh_elem(tape.matmul(&p, &x)), &target);
            tape.backward(loss);
            ad::optimizer_step(opt, params);
        }
        return p.val;
    };
    CHECK(run(99) == run(99));
}
