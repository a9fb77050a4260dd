#pragma once

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <vector>

namespace fbsde {

/// Cross-sectional least-squares settings for the backward solver.
struct RegressionConfig {
    enum class FeatureMap { CurrentState, JointState };

    int degree = 2;                  // polynomial total degree
    FeatureMap feature_map = FeatureMap::JointState;
    double ridge = 1e-8;             // lambda >= 0 on the path-normalized Gram
    // Estimates are clipped to [-truncation, truncation]. NaN means derive a
    // default: 10x the max absolute terminal/target value, floored at 1.
    double truncation = std::numeric_limits<double>::quiet_NaN();
};

/// Monomials of standardized features up to a total degree, in graded
/// lexicographic order. Standardization is an affine reparameterization, so
/// the spanned function space is the raw polynomial space of the same degree;
/// it only conditions the normal equations.
class PolynomialBasis {
public:
    PolynomialBasis() = default;
    PolynomialBasis(int num_features, int degree);

    int size() const { return static_cast<int>(expo_.size()); }
    int num_features() const { return q_; }
    int degree() const { return degree_; }

    void set_standardization(std::vector<double> mean, std::vector<double> scale);

    void evaluate(std::span<const double> features, std::span<double> out) const;

    const std::vector<std::vector<int>>& exponents() const { return expo_; }

private:
    int q_ = 0;
    int degree_ = 0;
    std::vector<std::vector<int>> expo_;
    std::vector<double> mean_, scale_;
};

/// A fitted conditional-expectation estimate: evaluable at any feature value,
/// with predictions clipped to the truncation bound.
struct FittedRegression {
    PolynomialBasis basis;
    Eigen::MatrixXd coef; // basis-size x target-dim
    double clip = std::numeric_limits<double>::infinity();

    void predict(std::span<const double> features, std::span<double> out) const;
};

/// One regression cross-section: standardizes features, materializes the
/// design matrix, factorizes (Gram/M + lambda I) once, then solves any number
/// of right-hand sides against it. All reductions run inside serial dense
/// kernels, so results are independent of the worker count used for the
/// row-parallel design fill.
class RegressionStep {
public:
    RegressionStep(const Eigen::MatrixXd& features, int degree, double ridge, int workers = 1);

    int basis_size() const { return basis_.size(); }
    const PolynomialBasis& basis() const { return basis_; }

    /// Ridge solution of (Gram/M + lambda I) coef = Phi^T targets / M.
    /// Throws singular_regression_error when lambda = 0 and the Gram is rank
    /// deficient.
    Eigen::MatrixXd solve(const Eigen::MatrixXd& targets) const;

    /// In-sample predictions Phi * coef, clipped to [-clip, clip].
    Eigen::MatrixXd predict(const Eigen::MatrixXd& coef, double clip) const;

    FittedRegression fitted(const Eigen::MatrixXd& coef, double clip) const;

private:
    PolynomialBasis basis_;
    Eigen::MatrixXd phi_; // paths x basis-size
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
    double ridge_ = 0.0;
    int paths_ = 0;
};

/// Ridge least-squares projection of targets onto the polynomial basis of the
/// features. features: paths x q, targets: paths x r. Requires at least
/// 10x basis-size paths.
FittedRegression regress(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                         const RegressionConfig& config, int workers = 1);

} // namespace fbsde
