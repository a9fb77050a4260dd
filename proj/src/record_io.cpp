#include "fbsde/record_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fbsde {

namespace {

void require_stream(const std::ofstream& out, const std::string& path) {
    if (!out) throw std::runtime_error("cannot write " + path);
}

// Doubles go into JSON as numbers when finite and as the strings
// "nan"/"inf"/"-inf" otherwise (JSON has no non-finite literals and the
// library would emit null).
nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

} // namespace

std::string format_g17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_record_csv(const std::string& path, const ConvergenceRecord& rec) {
    std::ofstream out(path, std::ios::binary);
    require_stream(out, path);
    out << "iter,err_X,err_Y,err_Z,combined,weighted_alpha,ratio,residual,succ_diff\n";
    for (const IterationStats& st : rec.iterations) {
        out << st.iter << ',' << format_g17(st.err_X) << ',' << format_g17(st.err_Y) << ','
            << format_g17(st.err_Z) << ',' << format_g17(st.combined) << ','
            << format_g17(st.weighted_alpha) << ',' << format_g17(st.ratio) << ','
            << format_g17(st.residual) << ',' << format_g17(st.succ_diff) << '\n';
    }
}

void write_compare_csv(const std::string& path, const ConvergenceRecord& newton_rec,
                       const ConvergenceRecord& picard_rec) {
    std::ofstream out(path, std::ios::binary);
    require_stream(out, path);
    out << "iter,newton_err,picard_err,newton_ratio,picard_ratio\n";
    const std::size_t rows = std::max(newton_rec.iterations.size(), picard_rec.iterations.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t n = 0; n < rows; ++n) {
        const bool hn = n < newton_rec.iterations.size();
        const bool hp = n < picard_rec.iterations.size();
        out << n << ',' << format_g17(hn ? newton_rec.iterations[n].combined : nan) << ','
            << format_g17(hp ? picard_rec.iterations[n].combined : nan) << ','
            << format_g17(hn ? newton_rec.iterations[n].ratio : nan) << ','
            << format_g17(hp ? picard_rec.iterations[n].ratio : nan) << '\n';
    }
}

void write_record_json(const std::string& path, const RunSettings& settings,
                       const ConvergenceRecord& rec, const ConstantsReport& constants,
                       const OracleStats& oracle, double probe) {
    nlohmann::json j;
    j["settings"] = {
        {"benchmark", settings.benchmark}, {"N", settings.N},
        {"M", settings.M},                 {"iters", settings.iters},
        {"seed", settings.seed},           {"eps", num(settings.eps)},
        {"degree", settings.degree},       {"ridge", num(settings.ridge)},
        {"workers", settings.workers},
    };
    j["constants"] = {
        {"bound_drift", num(constants.bounds.drift)},
        {"bound_diffusion", num(constants.bounds.diffusion)},
        {"bound_driver", num(constants.bounds.driver)},
        {"bound_terminal", num(constants.bounds.terminal)},
        {"horizon", num(constants.horizon)},
        {"eps", num(constants.eps)},
        {"c_bsigma", num(constants.c_bsigma)},
        {"C0", num(constants.C0)},
        {"alpha", num(constants.alpha)},
        {"C1", num(constants.C1)},
        {"C3", num(constants.C3)},
        {"log_C1", num(constants.log_C1)},
        {"log_C3", num(constants.log_C3)},
    };
    j["floor"] = num(rec.floor);
    j["probe"] = num(probe);
    j["oracle"] = {
        {"fine_steps", oracle.fine_steps},
        {"fine_paths", oracle.fine_paths},
        {"iterations", oracle.iterations},
        {"final_succ_diff", num(oracle.final_succ_diff)},
        {"self_consistency", num(oracle.self_consistency)},
    };
    j["alpha"] = num(rec.alpha);
    j["paths"] = rec.paths;
    j["steps"] = rec.grid.steps;
    j["ratio_violations"] = rec.ratio_violations;
    nlohmann::json iters = nlohmann::json::array();
    for (const IterationStats& st : rec.iterations) {
        iters.push_back({
            {"iter", st.iter},
            {"err_X", num(st.err_X)},
            {"err_Y", num(st.err_Y)},
            {"err_Z", num(st.err_Z)},
            {"combined", num(st.combined)},
            {"weighted_alpha", num(st.weighted_alpha)},
            {"ratio", num(st.ratio)},
            {"residual", num(st.residual)},
            {"succ_diff", num(st.succ_diff)},
        });
    }
    j["iterations"] = std::move(iters);

    std::ofstream out(path, std::ios::binary);
    require_stream(out, path);
    out << j.dump(2) << '\n';
}

} // namespace fbsde
