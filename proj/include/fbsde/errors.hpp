#pragma once

#include <stdexcept>
#include <string>

namespace fbsde {

/// A simulated value left the representable range (NaN/inf); message names the node.
class numerical_blowup_error : public std::runtime_error {
public:
    explicit numerical_blowup_error(const std::string& what) : std::runtime_error(what) {}
};

/// Normal equations are rank deficient and no ridge was requested.
class singular_regression_error : public std::runtime_error {
public:
    explicit singular_regression_error(const std::string& what) : std::runtime_error(what) {}
};

/// (I - dt * f'_y) is not invertible at some node; a finer grid fixes it.
class step_size_error : public std::runtime_error {
public:
    explicit step_size_error(const std::string& what) : std::runtime_error(what) {}
};

/// A fine-grid reference run failed to converge to its successive-difference threshold.
class oracle_failure_error : public std::runtime_error {
public:
    explicit oracle_failure_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fbsde
