#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "remest/nn.hpp"

using namespace remest;
using nn::Mlp;

TEST_CASE("forward: affine collapse and rectifier behavior") {
    {
        Mlp net = Mlp::zeros({3, 2});
        net.bias(0) << 1.5, -2.0;
        const Eigen::VectorXd out = nn::forward(net, Eigen::Vector3d(1.0, 2.0, 3.0));
        CHECK(out(0) == 1.5);
        CHECK(out(1) == -2.0);  // linear output, no rectification
    }
    {
        Mlp net = Mlp::zeros({2, 3, 2});
        net.weight(0) << 1, 0, 0, 1, 1, 1;
        net.bias(1).setConstant(0.25);
        // all-negative input -> hidden rectifies to zero -> output is the bias
        const Eigen::VectorXd out = nn::forward(net, Eigen::Vector2d(-1.0, -2.0));
        CHECK(out(0) == 0.25);
        CHECK(out(1) == 0.25);
    }
    {
        // bias-free single rectified layer is positively homogeneous
        Rng rng(3);
        Mlp net = Mlp::random({3, 4}, rng, /*relu_output=*/true);
        const Eigen::VectorXd x = Eigen::Vector3d(0.3, -0.2, 0.9);
        const Eigen::VectorXd once = nn::forward(net, x);
        const Eigen::VectorXd twice = nn::forward(net, 2.0 * x);
        CHECK((twice - 2.0 * once).norm() <= 1e-12);
    }
}

TEST_CASE("forward: batched and single-sample paths agree") {
    Rng rng(17);
    Mlp net = Mlp::random({5, 8, 8, 3}, rng);
    Eigen::MatrixXd batch(5, 7);
    for (int j = 0; j < 7; ++j)
        for (int i = 0; i < 5; ++i) batch(i, j) = rng.normal();
    const Eigen::MatrixXd out = nn::forward_batch(net, batch);
    for (int j = 0; j < 7; ++j) {
        const Eigen::VectorXd single = nn::forward(net, batch.col(j));
        CHECK((out.col(j) - single).norm() <= 1e-13);
    }
}

TEST_CASE("actor heads: zero parameters give mean 0 and std ln 2") {
    const Eigen::VectorXd head_pre = Eigen::VectorXd::Zero(6);
    const nn::ActorOutput out = nn::actor_heads(head_pre);
    for (int i = 0; i < 3; ++i) {
        CHECK(out.mean(i) == 0.0);
        CHECK(out.std(i) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    }
}

TEST_CASE("actor heads: softplus asymptote and bounded mean") {
    Eigen::VectorXd head_pre(2);
    head_pre << 0.0, 30.0;
    const nn::ActorOutput big = nn::actor_heads(head_pre);
    CHECK(big.std(0) == doctest::Approx(30.0).epsilon(1e-12));

    Rng rng(9);
    for (int rep = 0; rep < 10000; ++rep) {
        Eigen::VectorXd pre(4);
        for (int i = 0; i < 4; ++i) pre(i) = rng.uniform(-50.0, 50.0);
        const nn::ActorOutput out = nn::actor_heads(pre);
        CHECK(out.mean(0) >= -1.0);
        CHECK(out.mean(0) <= 1.0);
        CHECK(out.mean(1) >= -1.0);
        CHECK(out.mean(1) <= 1.0);
        CHECK(out.std(0) > 0.0);
        CHECK(out.std(1) > 0.0);
    }
}

TEST_CASE("backward: closed-form gradient of a single linear layer") {
    // loss = u . (W x + b)  =>  dW = u x^T, db = u
    Mlp net = Mlp::zeros({3, 2});
    const Eigen::VectorXd x = Eigen::Vector3d(1.0, -2.0, 0.5);
    const Eigen::VectorXd u = Eigen::Vector2d(2.0, -1.0);
    nn::ForwardCache cache;
    nn::forward(net, x, &cache);
    std::vector<double> grad(net.param_count(), 0.0);
    nn::backward(net, cache, u, grad);

    Eigen::Map<Eigen::MatrixXd> dw(grad.data(), 2, 3);
    CHECK((dw - u * x.transpose()).norm() <= 1e-15);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + 6, 2);
    CHECK((db - u).norm() <= 1e-15);
}

TEST_CASE("backward: zero upstream gradient produces zero parameter gradients") {
    Rng rng(4);
    Mlp net = Mlp::random({3, 5, 2}, rng);
    nn::ForwardCache cache;
    nn::forward(net, Eigen::Vector3d(0.1, 0.2, 0.3), &cache);
    std::vector<double> grad(net.param_count(), 0.0);
    nn::backward(net, cache, Eigen::Vector2d::Zero(), grad);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("backward matches central finite differences on random small nets") {
    Rng rng(12);
    for (int rep = 0; rep < 3; ++rep) {
        Mlp net = Mlp::random({4, 8, 6, 3}, rng);
        Eigen::VectorXd x(4);
        for (int i = 0; i < 4; ++i) x(i) = rng.normal();
        Eigen::VectorXd target(3);
        for (int i = 0; i < 3; ++i) target(i) = rng.normal();

        // loss = 0.5 |f(x) - target|^2
        auto loss = [&]() {
            const Eigen::VectorXd out = nn::forward(net, x);
            return 0.5 * (out - target).squaredNorm();
        };
        nn::ForwardCache cache;
        const Eigen::VectorXd out = nn::forward(net, x, &cache);
        std::vector<double> grad(net.param_count(), 0.0);
        nn::backward(net, cache, out - target, grad);

        const auto report = nn::gradient_check(net.params, grad, loss);
        CHECK(report.max_rel_error <= 1e-6);
    }
}

TEST_CASE("gradient_check flags corrupted gradients and passes constant losses") {
    Rng rng(5);
    Mlp net = Mlp::random({3, 4, 2}, rng);
    const Eigen::VectorXd x = Eigen::Vector3d(0.4, -0.1, 0.7);
    auto loss = [&]() { return nn::forward(net, x).sum(); };

    nn::ForwardCache cache;
    nn::forward(net, x, &cache);
    std::vector<double> grad(net.param_count(), 0.0);
    nn::backward(net, cache, Eigen::Vector2d::Ones(), grad);
    CHECK(nn::gradient_check(net.params, grad, loss).max_rel_error <= 1e-6);

    std::vector<double> corrupted = grad;
    corrupted[3] += 0.5;  // fault injection
    const auto report = nn::gradient_check(net.params, corrupted, loss);
    CHECK(report.max_rel_error > 1e-2);
    CHECK(report.worst_index == 3);

    auto constant = [&]() { return 42.0; };
    std::vector<double> zeros(net.param_count(), 0.0);
    CHECK(nn::gradient_check(net.params, zeros, constant).max_rel_error <= 1e-9);
}

TEST_CASE("adam: first-step magnitude, zero-gradient fixpoint, determinism") {
    {
        std::vector<double> params{0.0};
        std::vector<double> grads{1.0};
        nn::AdamState state(1, 0.001);
        nn::adam_step(params, grads, state);
        CHECK(params[0] == doctest::Approx(-0.001).epsilon(1e-6));
    }
    {
        std::vector<double> params{1.0, -2.0};
        std::vector<double> grads{0.0, 0.0};
        nn::AdamState state(2, 0.1);
        nn::adam_step(params, grads, state);
        CHECK(params[0] == 1.0);
        CHECK(params[1] == -2.0);
    }
    {
        std::vector<double> pa{0.5}, pb{0.5};
        std::vector<double> g{0.3};
        nn::AdamState sa(1, 0.01), sb(1, 0.01);
        for (int i = 0; i < 10; ++i) {
            nn::adam_step(pa, g, sa);
            nn::adam_step(pb, g, sb);
        }
        CHECK(pa[0] == pb[0]);
    }
}

TEST_CASE("parameters stay finite through many updates") {
    Rng rng(8);
    Mlp net = Mlp::random({4, 8, 2}, rng);
    nn::AdamState opt(net.param_count(), 0.01);
    std::vector<double> grad(net.param_count(), 0.0);
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd x(4);
        for (int i = 0; i < 4; ++i) x(i) = rng.normal();
        nn::ForwardCache cache;
        const Eigen::VectorXd out = nn::forward(net, x, &cache);
        std::fill(grad.begin(), grad.end(), 0.0);
        nn::backward(net, cache, out, grad);  // descend |f|^2/2
        nn::adam_step(net.params, grad, opt);
    }
    for (double p : net.params) CHECK(std::isfinite(p));
}

TEST_CASE("hidden sizes follow the scale formula") {
    CHECK(nn::hidden_sizes(6, 3) == std::vector<int>{198, 142, 85});
    CHECK(nn::hidden_sizes(10, 5) == std::vector<int>{256, 183, 110});
    const auto sizes = nn::hidden_sizes(50, 25);
    CHECK(sizes.size() == 3);
    CHECK(sizes[0] >= sizes[1]);
    CHECK(sizes[1] >= sizes[2]);
}
