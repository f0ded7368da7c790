#include "cwdsim/cli.hpp"
#include "cwdsim/dynamics.hpp"
#include "cwdsim/errors.hpp"
#include "cwdsim/kvtext.hpp"
#include "cwdsim/run.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace cwdsim;

namespace {

ScenarioConfig parse_config(const std::string& text) {
    return ScenarioConfig::from_text(KeyValueText::parse_string(text, "<python>"));
}

py::dict summary_dict(const SummaryRow& row) {
    py::dict d;
    d["policy"] = row.policy;
    d["case"] = row.mpr_case;
    d["seed"] = row.seed;
    for (const auto& [k, v] : row.values) d[py::str(k)] = v;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Microscopic highway simulator for charging-while-driving lanes";
    m.attr("__version__") = kToolVersion;

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line tool in process; returns (exit code, stdout, stderr).");

    m.def(
        "scenario_text",
        [](const std::string& policy, const std::string& mpr_case, std::uint64_t seed) {
            auto c = make_scenario(policy, parse_case(mpr_case), seed);
            c.finalize();
            return c.to_text();
        },
        py::arg("policy"), py::arg("case"), py::arg("seed") = 1, "Scenario file text for a policy, case and seed.");

    m.def(
        "run",
        [](const std::string& text) {
            const auto config = parse_config(text);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run_scenario(config);
            }
            return summary_dict(summarize(r));
        },
        py::arg("scenario_text"), "Runs a scenario in memory and returns its summary row.");

    m.def(
        "run_to_directory",
        [](const std::string& text, const std::filesystem::path& out) {
            const auto config = parse_config(text);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run_to_directory(config, out);
            }
            return summary_dict(summarize(r));
        },
        py::arg("scenario_text"), py::arg("out"), "Runs a scenario and writes its output directory.");

    m.def(
        "read_summary",
        [](const std::filesystem::path& path) {
            std::ifstream in(path);
            if (!in) throw DataError("cannot open " + path.string());
            py::list rows;
            for (const auto& row : read_summary(in, path.string())) rows.append(summary_dict(row));
            return rows;
        },
        py::arg("path"), "Rows of a sweep summary file as dictionaries.");

    m.def(
        "idm_acceleration",
        [](double speed, double gap, double dv, double accel, double decel, double headway, double standstill,
           double desired_speed) {
            IdmParams p;
            p.accel = accel;
            p.decel = decel;
            p.headway = headway;
            p.standstill = standstill;
            p.desired_speed = desired_speed;
            return idm_acceleration(speed, gap, dv, p);
        },
        py::arg("speed"), py::arg("gap"), py::arg("dv"), py::arg("accel"), py::arg("decel"), py::arg("headway"),
        py::arg("standstill"), py::arg("desired_speed"));

    // Translators are tried newest first, so the base class goes in first.
    auto& base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
}
