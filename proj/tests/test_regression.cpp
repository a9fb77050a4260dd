#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbsde/errors.hpp"
#include "fbsde/grid.hpp"
#include "fbsde/noise.hpp"
#include "fbsde/regression.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

using namespace fbsde;

namespace {

double eval1(const FittedRegression& fit, double x) {
    double out = 0.0;
    fit.predict(std::span<const double>(&x, 1), std::span<double>(&out, 1));
    return out;
}

} // namespace

TEST_CASE("polynomial basis counts monomials and reproduces raw products") {
    CHECK(PolynomialBasis(1, 0).size() == 1);
    CHECK(PolynomialBasis(1, 3).size() == 4);
    CHECK(PolynomialBasis(2, 2).size() == 6);  // 1, x, y, x2, xy, y2
    CHECK(PolynomialBasis(3, 3).size() == 20);

    PolynomialBasis b(2, 2);
    b.set_standardization({0.0, 0.0}, {1.0, 1.0});
    const double feat[2] = {2.0, 3.0};
    std::vector<double> out(b.size());
    b.evaluate(feat, out);
    // graded order: constant first, degree-1 block, then degree-2 block
    CHECK(out[0] == 1.0);
    double sum = 0.0;
    for (double v : out) sum += v;
    // 1 + 2 + 3 + 4 + 6 + 9
    CHECK(sum == doctest::Approx(25.0).epsilon(1e-14));
}

TEST_CASE("constant targets are reproduced exactly") {
    const int M = 200;
    Eigen::MatrixXd features(M, 1), targets(M, 1);
    for (int m = 0; m < M; ++m) {
        features(m, 0) = std::sin(0.1 * m);
        targets(m, 0) = 3.25;
    }
    RegressionConfig cfg;
    cfg.degree = 2;
    const FittedRegression fit = regress(features, targets, cfg);
    for (double x : {-2.0, -0.3, 0.0, 1.7}) CHECK(eval1(fit, x) == doctest::Approx(3.25).epsilon(1e-6));
}

TEST_CASE("conditional expectation of W_T given W_t is the identity") {
    const TimeGrid g(1.0, 2); // nodes at 0, 1/2, 1
    const int M = 100000;
    const BrownianBundle noise = make_noise(17, g, M, 1);
    Eigen::MatrixXd features(M, 1), targets(M, 1);
    for (int m = 0; m < M; ++m) {
        const double wt = noise.at(m, 0)[0];
        features(m, 0) = wt;
        targets(m, 0) = wt + noise.at(m, 1)[0];
    }
    RegressionConfig cfg;
    cfg.degree = 1;
    const FittedRegression fit = regress(features, targets, cfg);
    // raw-coefficient recovery through the fitted map
    const double a = eval1(fit, 0.0);
    const double b = (eval1(fit, 1.0) - eval1(fit, -1.0)) / 2.0;
    CHECK(std::fabs(a) <= 0.02);
    CHECK(std::fabs(b - 1.0) <= 0.02);
}

TEST_CASE("conditional second moment of W_1 given W_half is x^2 + 1/2") {
    const TimeGrid g(1.0, 2);
    const int M = 100000;
    const BrownianBundle noise = make_noise(23, g, M, 1);
    Eigen::MatrixXd features(M, 1), targets(M, 1);
    for (int m = 0; m < M; ++m) {
        const double wt = noise.at(m, 0)[0];
        const double wT = wt + noise.at(m, 1)[0];
        features(m, 0) = wt;
        targets(m, 0) = wT * wT;
    }
    RegressionConfig cfg;
    cfg.degree = 2;
    const FittedRegression fit = regress(features, targets, cfg);
    const double c0 = eval1(fit, 0.0);
    const double c1 = (eval1(fit, 1.0) - eval1(fit, -1.0)) / 2.0;
    const double c2 = (eval1(fit, 1.0) + eval1(fit, -1.0) - 2.0 * c0) / 2.0;
    CHECK(std::fabs(c0 - 0.5) <= 0.05);
    CHECK(std::fabs(c1) <= 0.05);
    CHECK(std::fabs(c2 - 1.0) <= 0.05);
}

TEST_CASE("regress requires 10x basis-size rows") {
    Eigen::MatrixXd features(20, 1), targets(20, 1);
    features.setRandom();
    targets.setRandom();
    RegressionConfig cfg;
    cfg.degree = 2; // basis size 3 -> needs 30 rows
    CHECK_THROWS_AS(regress(features, targets, cfg), std::invalid_argument);
    cfg.degree = 1; // basis size 2 -> 20 rows pass
    CHECK_NOTHROW(regress(features, targets, cfg));
}

TEST_CASE("rank-deficient normal equations without ridge raise a named error") {
    const int M = 80;
    Eigen::MatrixXd features(M, 2), targets(M, 1);
    for (int m = 0; m < M; ++m) {
        const double x = std::cos(0.37 * m);
        features(m, 0) = x;
        features(m, 1) = x; // duplicated column
        targets(m, 0) = x * x;
    }
    RegressionConfig cfg;
    cfg.degree = 1;
    cfg.ridge = 0.0;
    try {
        regress(features, targets, cfg);
        FAIL("expected singular_regression_error");
    } catch (const singular_regression_error& e) {
        CHECK(std::string(e.what()).find("ridge") != std::string::npos);
    }
    cfg.ridge = 1e-8;
    CHECK_NOTHROW(regress(features, targets, cfg));
}

TEST_CASE("predictions are clipped to the truncation bound") {
    const int M = 100;
    Eigen::MatrixXd features(M, 1), targets(M, 1);
    for (int m = 0; m < M; ++m) {
        features(m, 0) = m * 0.1;
        targets(m, 0) = m * 0.1; // identity
    }
    RegressionConfig cfg;
    cfg.degree = 1;
    cfg.truncation = 2.0;
    const FittedRegression fit = regress(features, targets, cfg);
    CHECK(eval1(fit, 100.0) == 2.0);
    CHECK(eval1(fit, -100.0) == -2.0);
    CHECK(eval1(fit, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("regression step factorizes once and is worker-count independent") {
    const int M = 500;
    Eigen::MatrixXd features(M, 2), t1(M, 1), t2(M, 2);
    for (int m = 0; m < M; ++m) {
        features(m, 0) = std::sin(0.05 * m);
        features(m, 1) = std::cos(0.11 * m);
        t1(m, 0) = features(m, 0) * features(m, 1);
        t2(m, 0) = features(m, 0);
        t2(m, 1) = 1.0 + features(m, 1);
    }
    const RegressionStep s1(features, 2, 1e-8, 1);
    const RegressionStep s4(features, 2, 1e-8, 4);
    const Eigen::MatrixXd c1 = s1.solve(t1);
    const Eigen::MatrixXd c4 = s4.solve(t1);
    CHECK(c1 == c4); // bitwise: same fills, serial dense reductions

    const Eigen::MatrixXd multi = s1.solve(t2);
    CHECK(multi.cols() == 2);
    const Eigen::MatrixXd pred = s1.predict(multi, std::numeric_limits<double>::infinity());
    CHECK(pred.rows() == M);
    // in-sample predictions of smooth targets should be close
    CHECK((pred.col(0) - t2.col(0)).cwiseAbs().maxCoeff() <= 0.2);

    // fitted() agrees with predict() row by row
    const FittedRegression fit = s1.fitted(multi, 5.0);
    double out[2];
    const double feat[2] = {features(7, 0), features(7, 1)};
    fit.predict(std::span<const double>(feat, 2), std::span<double>(out, 2));
    CHECK(out[0] == doctest::Approx(pred(7, 0)).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(pred(7, 1)).epsilon(1e-12));
}
