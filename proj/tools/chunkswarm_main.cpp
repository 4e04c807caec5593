#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chunkswarm/chunkswarm.hpp"

namespace fs = std::filesystem;

namespace {

nlohmann::json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw chunkswarm::SchemaError("cannot read \"" + path.string() + "\"");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw chunkswarm::SchemaError("\"" + path.string() +
                                      "\" is not valid JSON: " + e.what());
    }
}

// Write-then-rename so a crashed run never leaves a truncated artifact under
// the final name.
void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open \"" + tmp.string() + "\" for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write to \"" + tmp.string() + "\" failed");
    }
    fs::rename(tmp, path);
}

int cmd_simulate(const fs::path& config_path, const fs::path& out_dir) {
    const chunkswarm::SimConfig config =
        chunkswarm::sim_config_from_json(load_json_file(config_path));
    fs::create_directories(out_dir);

    const chunkswarm::SimResult result = chunkswarm::run(config);

    std::ostringstream timeseries;
    chunkswarm::write_timeseries_csv(timeseries, result.series, config.k);
    write_file_atomic(out_dir / "timeseries.csv", timeseries.str());

    std::ostringstream sojourn;
    chunkswarm::write_sojourn_csv(sojourn, result.sojourns);
    write_file_atomic(out_dir / "sojourn.csv", sojourn.str());

    write_file_atomic(out_dir / "summary.json",
                      chunkswarm::summary_json(config, result).dump(2) + "\n");
    return 0;
}

int cmd_verify(const fs::path& job_path, const std::optional<fs::path>& out_dir) {
    const chunkswarm::VerificationJob job = chunkswarm::verification_job_from_json(
        load_json_file(job_path), job_path.parent_path());
    const chunkswarm::VerificationReport report = chunkswarm::run_verification(job);

    const std::string text = chunkswarm::verification_report_to_json(report).dump(2) + "\n";
    std::cout << text;
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_file_atomic(*out_dir / "report.json", text);
    }
    return report.passed() ? 0 : 1;
}

int cmd_drift(const fs::path& state_path, const std::string& rule_text, double lambda,
              const std::string& spec_name) {
    const chunkswarm::SwarmState state =
        chunkswarm::state_from_json(load_json_file(state_path));
    nlohmann::json rule_json;
    try {
        rule_json = nlohmann::json::parse(rule_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw chunkswarm::SchemaError(std::string("--rule is not valid JSON: ") + e.what());
    }
    const chunkswarm::Rule rule = chunkswarm::rule_from_json(rule_json);
    const chunkswarm::LyapunovSpec spec =
        chunkswarm::lyapunov_spec_from_name(spec_name, state.chunk_count());
    if (!(lambda > 0)) throw chunkswarm::SchemaError("--lambda must be positive");

    // Exact arithmetic whenever the population allows it; the combined spec
    // is inherently floating-point (exponentials).
    nlohmann::json report;
    if (spec.kind != chunkswarm::LyapunovSpec::Kind::combined &&
        state.aggregates().total <= chunkswarm::exact_population_limit) {
        report = chunkswarm::drift_report_to_json(
            chunkswarm::drift<chunkswarm::Rational>(state, rule,
                                                    chunkswarm::Rational(lambda), spec));
    } else {
        report = chunkswarm::drift_report_to_json(
            chunkswarm::drift<double>(state, rule, lambda, spec));
    }
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chunk-sharing swarm: exact CTMC simulation and stability checks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string sim_out_dir;
    auto* simulate = app.add_subcommand(
        "simulate", "Run one simulation; write timeseries.csv, sojourn.csv, summary.json");
    simulate->add_option("--config", config_path, "Simulation config JSON file")->required();
    simulate->add_option("--out", sim_out_dir, "Output directory")->required();

    std::string job_path;
    std::string verify_out_dir;
    auto* verify = app.add_subcommand(
        "verify", "Check a stability inequality over a batch of states");
    verify->add_option("--job", job_path, "Verification job JSON file")->required();
    verify->add_option("--out", verify_out_dir,
                       "Directory to also write report.json into (optional)");

    std::string state_path;
    std::string rule_text = R"({"type": "common-chunk", "m": 3})";
    double lambda = 0;
    std::string spec_name = "l1";
    auto* drift = app.add_subcommand(
        "drift", "Print the exact Lyapunov drift of one state snapshot as JSON");
    drift->add_option("--state", state_path, "State snapshot JSON file")->required();
    drift->add_option("--rule", rule_text, "Rule JSON (default: common-chunk, m = 3)");
    drift->add_option("--lambda", lambda, "Arrival rate")->required();
    drift->add_option("--spec", spec_name, "Lyapunov spec: l1, combined, two-chunk");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(config_path, sim_out_dir);
        if (verify->parsed()) {
            std::optional<fs::path> out;
            if (!verify_out_dir.empty()) out = verify_out_dir;
            return cmd_verify(job_path, out);
        }
        return cmd_drift(state_path, rule_text, lambda, spec_name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
