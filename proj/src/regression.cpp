#include "fbsde/regression.hpp"

#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace fbsde {

namespace {

// Graded lexicographic multi-indices: total degree 0, then 1, ... up to degree.
void enumerate_exponents(int q, int degree, std::vector<std::vector<int>>& out) {
    std::vector<int> idx(q, 0);
    std::function<void(int, int)> fill_total = [&](int pos, int budget) {
        if (pos == q - 1) {
            idx[pos] = budget;
            out.push_back(idx);
            idx[pos] = 0;
            return;
        }
        for (int e = budget; e >= 0; --e) {
            idx[pos] = e;
            fill_total(pos + 1, budget - e);
        }
        idx[pos] = 0;
    };
    for (int total = 0; total <= degree; ++total) fill_total(0, total);
}

} // namespace

PolynomialBasis::PolynomialBasis(int num_features, int degree) : q_(num_features), degree_(degree) {
    if (num_features < 1) throw std::invalid_argument("PolynomialBasis: need at least one feature");
    if (degree < 0) throw std::invalid_argument("PolynomialBasis: degree must be >= 0");
    enumerate_exponents(q_, degree_, expo_);
    mean_.assign(q_, 0.0);
    scale_.assign(q_, 1.0);
}

void PolynomialBasis::set_standardization(std::vector<double> mean, std::vector<double> scale) {
    if (static_cast<int>(mean.size()) != q_ || static_cast<int>(scale.size()) != q_)
        throw std::invalid_argument("PolynomialBasis: standardization size mismatch");
    mean_ = std::move(mean);
    scale_ = std::move(scale);
}

void PolynomialBasis::evaluate(std::span<const double> features, std::span<double> out) const {
    // powers of each standardized feature up to the degree
    double pw[8][16]; // q <= 8, degree <= 15 is far beyond anything used here
    if (q_ > 8 || degree_ > 15) {
        std::vector<std::vector<double>> big(q_, std::vector<double>(degree_ + 1, 1.0));
        for (int j = 0; j < q_; ++j) {
            const double s = (features[j] - mean_[j]) / scale_[j];
            for (int e = 1; e <= degree_; ++e) big[j][e] = big[j][e - 1] * s;
        }
        for (std::size_t b = 0; b < expo_.size(); ++b) {
            double v = 1.0;
            for (int j = 0; j < q_; ++j) v *= big[j][expo_[b][j]];
            out[b] = v;
        }
        return;
    }
    for (int j = 0; j < q_; ++j) {
        const double s = (features[j] - mean_[j]) / scale_[j];
        pw[j][0] = 1.0;
        for (int e = 1; e <= degree_; ++e) pw[j][e] = pw[j][e - 1] * s;
    }
    for (std::size_t b = 0; b < expo_.size(); ++b) {
        double v = 1.0;
        const auto& ex = expo_[b];
        for (int j = 0; j < q_; ++j) v *= pw[j][ex[j]];
        out[b] = v;
    }
}

void FittedRegression::predict(std::span<const double> features, std::span<double> out) const {
    std::vector<double> b(basis.size());
    basis.evaluate(features, b);
    for (int r = 0; r < coef.cols(); ++r) {
        double v = 0.0;
        for (int i = 0; i < coef.rows(); ++i) v += b[i] * coef(i, r);
        out[r] = std::clamp(v, -clip, clip);
    }
}

RegressionStep::RegressionStep(const Eigen::MatrixXd& features, int degree, double ridge,
                               int workers)
    : ridge_(ridge), paths_(static_cast<int>(features.rows())) {
    const int q = static_cast<int>(features.cols());
    const int M = paths_;
    if (M < 1) throw std::invalid_argument("RegressionStep: empty path set");
    basis_ = PolynomialBasis(q, degree);

    // standardize: mean and sd per feature (sd 0 -> scale 1, feature is constant)
    std::vector<double> mean(q, 0.0), scale(q, 1.0);
    for (int j = 0; j < q; ++j) mean[j] = features.col(j).sum() / M;
    for (int j = 0; j < q; ++j) {
        const double v = (features.col(j).array() - mean[j]).square().sum() / M;
        scale[j] = v > 0.0 ? std::sqrt(v) : 1.0;
    }
    basis_.set_standardization(mean, scale);

    const int B = basis_.size();
    phi_.resize(M, B);
    parallel_chunks(M, workers, [&](int, std::int64_t begin, std::int64_t end) {
        std::vector<double> feat(q), row(B);
        for (std::int64_t m = begin; m < end; ++m) {
            for (int j = 0; j < q; ++j) feat[j] = features(m, j);
            basis_.evaluate(feat, row);
            for (int b = 0; b < B; ++b) phi_(m, b) = row[b];
        }
    });

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(B, B);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(phi_.transpose(), 1.0 / M);
    gram = gram.selfadjointView<Eigen::Lower>();
    if (ridge_ > 0.0) gram.diagonal().array() += ridge_;
    ldlt_.compute(gram);
    if (ridge_ == 0.0) {
        const auto& D = ldlt_.vectorD();
        const double dmax = D.maxCoeff();
        if (!(dmax > 0.0) || D.minCoeff() <= dmax * 1e-13)
            throw singular_regression_error(
                "regression normal equations are rank deficient; set ridge (lambda) > 0");
    }
}

Eigen::MatrixXd RegressionStep::solve(const Eigen::MatrixXd& targets) const {
    if (targets.rows() != paths_) throw std::invalid_argument("RegressionStep: target rows mismatch");
    const Eigen::MatrixXd rhs = phi_.transpose() * targets / paths_;
    return ldlt_.solve(rhs);
}

Eigen::MatrixXd RegressionStep::predict(const Eigen::MatrixXd& coef, double clip) const {
    Eigen::MatrixXd v = phi_ * coef;
    if (std::isfinite(clip)) v = v.cwiseMax(-clip).cwiseMin(clip);
    return v;
}

FittedRegression RegressionStep::fitted(const Eigen::MatrixXd& coef, double clip) const {
    FittedRegression f;
    f.basis = basis_;
    f.coef = coef;
    f.clip = clip;
    return f;
}

FittedRegression regress(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                         const RegressionConfig& config, int workers) {
    if (features.rows() != targets.rows())
        throw std::invalid_argument("regress: features and targets row mismatch");
    PolynomialBasis probe(static_cast<int>(features.cols()), config.degree);
    if (features.rows() < static_cast<Eigen::Index>(10) * probe.size())
        throw std::invalid_argument("regress: needs at least 10x basis-size paths");
    RegressionStep step(features, config.degree, config.ridge, workers);
    const Eigen::MatrixXd coef = step.solve(targets);
    double clip = config.truncation;
    if (std::isnan(clip)) clip = 10.0 * std::max(1.0, targets.cwiseAbs().maxCoeff());
    return step.fitted(coef, clip);
}

} // namespace fbsde
