#include <doctest.h>

#include <cmath>

#include "todsec/ml/mlp.hpp"
#include "todsec/ml/tree.hpp"
#include "todsec/rng.hpp"

using namespace todsec;
using namespace todsec::ml;

TEST_CASE("dense tiers expose the documented hidden layouts") {
    CHECK(hidden_dims_for(ModelKind::NarrowNN) == std::vector<int>{10});
    CHECK(hidden_dims_for(ModelKind::MediumNN) == std::vector<int>{25});
    CHECK(hidden_dims_for(ModelKind::WideNN) == std::vector<int>{100});
    CHECK(hidden_dims_for(ModelKind::BiLayeredNN) == std::vector<int>{10, 10});
    CHECK(hidden_dims_for(ModelKind::TriLayeredNN) == std::vector<int>{10, 10, 10});
    CHECK_THROWS_AS(hidden_dims_for(ModelKind::Tree), std::invalid_argument);
    CHECK_THROWS_AS(hidden_dims_for(ModelKind::LSTM), std::invalid_argument);
}

TEST_CASE("an all-zero network answers one third for every class") {
    Rng rng(1);
    MlpModel m = make_mlp(6, ModelKind::NarrowNN, 2, rng);
    m.theta.setZero();
    const Eigen::Vector3d logits = mlp_logits(m, Eigen::VectorXd::Ones(6));
    CHECK(logits.cwiseAbs().maxCoeff() == 0.0);
    const ClassScores s = softmax(logits);
    for (int i = 0; i < 3; ++i) CHECK(s.p[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("a one-unit hidden layer computes the documented chain") {
    MlpModel m;
    m.layer_dims = {2, 1, 3};
    m.theta = Eigen::VectorXd::Zero(m.param_count());
    m.weight(0) << 1.0, -1.0;
    m.bias(0) << 0.5;
    m.weight(1) << 2.0, 0.0, -1.0;
    m.bias(1) << 0.1, 0.0, 0.0;

    Eigen::VectorXd x(2);
    x << 0.3, 0.1;
    const double a = 1.0 / (1.0 + std::exp(-(0.3 - 0.1 + 0.5)));
    const Eigen::Vector3d logits = mlp_logits(m, x);
    CHECK(logits[0] == doctest::Approx(2.0 * a + 0.1).epsilon(1e-15));
    CHECK(logits[1] == 0.0);
    CHECK(logits[2] == doctest::Approx(-a).epsilon(1e-15));
}

TEST_CASE("dense batch loss matches the average of per-sample losses") {
    Rng rng(3);
    const MlpModel m = make_mlp(4, ModelKind::BiLayeredNN, 2, rng);
    Eigen::MatrixXd x(3, 4);
    Rng data(5);
    for (Eigen::Index r = 0; r < 3; ++r) {
        for (Eigen::Index c = 0; c < 4; ++c) x(r, c) = data.gaussian();
    }
    const std::vector<int> y = {0, 2, 1};

    double expect = 0.0;
    for (Eigen::Index r = 0; r < 3; ++r) {
        const ClassScores s = softmax(mlp_logits(m, x.row(r).transpose()));
        expect -= std::log(s.p[y[static_cast<std::size_t>(r)]]);
    }
    expect /= 3.0;
    CHECK(mlp_loss(m, x, y, nullptr) == doctest::Approx(expect).epsilon(1e-12));

    Eigen::VectorXd g_batch;
    mlp_loss(m, x, y, &g_batch);
    Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(m.param_count());
    for (Eigen::Index r = 0; r < 3; ++r) {
        Eigen::VectorXd g;
        mlp_loss(m, x.row(r), {y[static_cast<std::size_t>(r)]}, &g);
        g_sum += g;
    }
    g_sum /= 3.0;
    CHECK((g_batch - g_sum).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense forward rejects shape mismatches and bad labels") {
    Rng rng(3);
    const MlpModel m = make_mlp(4, ModelKind::NarrowNN, 2, rng);
    CHECK_THROWS_AS(mlp_logits(m, Eigen::VectorXd::Zero(5)), std::invalid_argument);
    CHECK_THROWS_AS(mlp_loss(m, Eigen::MatrixXd::Zero(2, 4), {0, 3}, nullptr),
                    std::invalid_argument);
    CHECK_THROWS_AS(mlp_loss(m, Eigen::MatrixXd::Zero(0, 4), {}, nullptr), std::invalid_argument);
}

TEST_CASE("tree interpreter routes through thresholds to leaf frequencies") {
    TreeModel m;
    m.nodes.resize(5);
    m.nodes[0].feature = 1;
    m.nodes[0].threshold = 0.5;
    m.nodes[0].left = 1;
    m.nodes[0].right = 2;
    m.nodes[1].counts = {3.0, 1.0, 0.0};
    m.nodes[2].feature = 0;
    m.nodes[2].threshold = -1.0;
    m.nodes[2].left = 3;
    m.nodes[2].right = 4;
    m.nodes[3].counts = {0.0, 0.0, 2.0};
    m.nodes[4].counts = {1.0, 1.0, 2.0};

    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd x(2);
        x << rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0);
        Eigen::Vector3d expect;
        if (x[1] <= 0.5) {
            expect = Eigen::Vector3d{0.75, 0.25, 0.0};
        } else if (x[0] <= -1.0) {
            expect = Eigen::Vector3d{0.0, 0.0, 1.0};
        } else {
            expect = Eigen::Vector3d{0.25, 0.25, 0.5};
        }
        const ClassScores s = tree_scores(m, x);
        CHECK((s.p - expect).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("greedy construction separates three linearly separable clusters") {
    // Class 0 sits at x0 ~ -2, class 1 at x0 ~ +2, class 2 at x1 ~ +2.
    Eigen::MatrixXd x(12, 2);
    std::vector<int> y;
    Rng rng(4);
    for (int k = 0; k < 4; ++k) {
        x.row(y.size()) << -2.0 + 0.1 * rng.gaussian(), 0.1 * rng.gaussian();
        y.push_back(0);
        x.row(y.size()) << 2.0 + 0.1 * rng.gaussian(), 0.1 * rng.gaussian();
        y.push_back(1);
        x.row(y.size()) << 0.1 * rng.gaussian(), 2.0 + 0.1 * rng.gaussian();
        y.push_back(2);
    }

    const TreeModel m = fit_tree(x, y, 12, 1);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const ClassScores s = tree_scores(m, x.row(r).transpose());
        CHECK(s.p[y[static_cast<std::size_t>(r)]] == 1.0);  // pure leaves
    }

    // Same data, same call: identical structure.
    const TreeModel again = fit_tree(x, y, 12, 1);
    REQUIRE(again.nodes.size() == m.nodes.size());
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        CHECK(again.nodes[i].feature == m.nodes[i].feature);
        CHECK(again.nodes[i].threshold == m.nodes[i].threshold);
    }
}

TEST_CASE("depth zero forces a single leaf holding the class histogram") {
    Eigen::MatrixXd x(4, 1);
    x << 0, 1, 2, 3;
    const TreeModel m = fit_tree(x, {0, 0, 1, 2}, 0, 1);
    REQUIRE(m.nodes.size() == 1);
    const ClassScores s = tree_scores(m, x.row(0).transpose());
    CHECK(s.p[0] == doctest::Approx(0.5));
    CHECK(s.p[1] == doctest::Approx(0.25));
    CHECK(s.p[2] == doctest::Approx(0.25));
}

TEST_CASE("a large leaf minimum stops splitting") {
    Eigen::MatrixXd x(4, 1);
    x << 0, 1, 2, 3;
    const TreeModel m = fit_tree(x, {0, 0, 1, 1}, 12, 3);
    CHECK(m.nodes.size() == 1);  // any split would leave a side below 3
}

TEST_CASE("constant features are never chosen as split axes") {
    Eigen::MatrixXd x(6, 2);
    x.col(0).setConstant(7.0);
    x.col(1) << 0, 1, 2, 10, 11, 12;
    const TreeModel m = fit_tree(x, {0, 0, 0, 1, 1, 1}, 12, 1);
    REQUIRE(m.nodes.size() == 3);
    CHECK(m.nodes[0].feature == 1);
    CHECK(m.nodes[0].threshold == doctest::Approx(6.0));  // midpoint of 2 and 10
}
