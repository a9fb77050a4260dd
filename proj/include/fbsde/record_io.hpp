#pragma once

#include "fbsde/benchmarks.hpp"
#include "fbsde/constants.hpp"
#include "fbsde/newton.hpp"

#include <cstdint>
#include <string>

namespace fbsde {

/// The run configuration as consumed from a config file, echoed verbatim
/// into record.json.
struct RunSettings {
    std::string benchmark;
    int N = 100;
    int M = 10000;
    int iters = 6;
    std::uint64_t seed = 1;
    double eps = 0.5;
    int degree = 2;
    double ridge = 1e-8;
    int workers = 1;
};

/// One number, 17 significant digits, locale-independent; non-finite values
/// spelled nan / inf / -inf.
std::string format_g17(double v);

/// record.csv: header `iter,err_X,err_Y,err_Z,combined,weighted_alpha,ratio,
/// residual,succ_diff`, one row per iterate, UTF-8, LF line endings.
void write_record_csv(const std::string& path, const ConvergenceRecord& rec);

/// compare.csv: header `iter,newton_err,picard_err,newton_ratio,picard_ratio`;
/// errors are the combined norms against the shared reference.
void write_compare_csv(const std::string& path, const ConvergenceRecord& newton_rec,
                       const ConvergenceRecord& picard_rec);

/// record.json: settings, the constants report, the floor/probe estimates,
/// oracle metadata, and the full iteration table. Non-finite values are
/// serialized as the strings "nan" / "inf" / "-inf".
void write_record_json(const std::string& path, const RunSettings& settings,
                       const ConvergenceRecord& rec, const ConstantsReport& constants,
                       const OracleStats& oracle, double probe);

} // namespace fbsde
