// End-to-end tests of the chunkswarm binary: exit codes, file artifacts, and
// stdout contracts. CLI_BIN is injected by the build.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("chunkswarm-cli-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    const fs::path out_file = dir.path / "stdout.txt";
    const fs::path err_file = dir.path / "stderr.txt";
    const std::string command = std::string(CLI_BIN) + " " + args + " >" +
                                out_file.string() + " 2>" + err_file.string();
    const int status = std::system(command.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), slurp(out_file), slurp(err_file)};
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out);
    out << content;
}

const char* sim_config = R"({
    "k": 2,
    "lambda": 0.8,
    "rule": {"type": "common-chunk", "m": 3},
    "horizon": 20.0,
    "rng_seed": 42,
    "initial": {"kind": "empty"}
})";

}  // namespace

TEST_CASE("cli rejects missing and unknown invocations", "[cli]") {
    TempDir dir;
    CHECK(run_cli(dir, "").exit_code == 2);
    CHECK(run_cli(dir, "conquer").exit_code == 2);
    CHECK(run_cli(dir, "--help").exit_code == 0);
    CHECK(run_cli(dir, "simulate").exit_code == 2);  // --config/--out required
    CHECK(run_cli(dir, "drift --lambda 1").exit_code == 2);
}

TEST_CASE("simulate writes its three artifacts", "[cli]") {
    TempDir dir;
    write_file(dir.path / "config.json", sim_config);
    const fs::path out = dir.path / "run";
    CliResult r = run_cli(dir, "simulate --config " + (dir.path / "config.json").string() +
                                   " --out " + out.string());
    REQUIRE(r.exit_code == 0);

    const std::string series = slurp(out / "timeseries.csv");
    CHECK(series.rfind("t,S,S0,S1,S2,min_Si,L1\n", 0) == 0);
    CHECK(slurp(out / "sojourn.csv").rfind("arrival_t,departure_t,sojourn\n", 0) == 0);

    const json summary = json::parse(slurp(out / "summary.json"));
    CHECK(summary["config"]["k"] == 2);
    CHECK(summary["config"]["rng_seed"] == 42);
    CHECK(summary["events"].contains("arrivals"));
    CHECK(summary["max_S"].is_number_integer());

    // Same seed, same bytes.
    const fs::path again = dir.path / "run2";
    r = run_cli(dir, "simulate --config " + (dir.path / "config.json").string() +
                         " --out " + again.string());
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(again / "timeseries.csv") == series);
    CHECK(slurp(again / "sojourn.csv") == slurp(out / "sojourn.csv"));
}

TEST_CASE("simulate fails closed on config errors", "[cli]") {
    TempDir dir;
    const fs::path out = dir.path / "run";

    write_file(dir.path / "missing-k.json", R"({
        "lambda": 0.8, "rule": {"type": "rare-chunk"}, "horizon": 5.0,
        "rng_seed": 0, "initial": {"kind": "empty"}})");
    CliResult r = run_cli(dir, "simulate --config " +
                                   (dir.path / "missing-k.json").string() + " --out " +
                                   out.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("\"k\"") != std::string::npos);

    write_file(dir.path / "unknown.json", std::string(sim_config).insert(1, "\n\"speed\": 9,"));
    r = run_cli(dir, "simulate --config " + (dir.path / "unknown.json").string() +
                         " --out " + out.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("speed") != std::string::npos);

    r = run_cli(dir, "simulate --config " + (dir.path / "absent.json").string() +
                         " --out " + out.string());
    CHECK(r.exit_code == 2);
    CHECK(!fs::exists(out / "timeseries.csv"));
}

TEST_CASE("drift prints the exact report", "[cli]") {
    TempDir dir;

    // Lone seed at lambda = 1: the drift of L1 is exactly k * lambda = 2.
    write_file(dir.path / "seed.json", R"({"k": 2, "profiles": []})");
    CliResult r = run_cli(dir, "drift --state " + (dir.path / "seed.json").string() +
                                   " --lambda 1");
    REQUIRE(r.exit_code == 0);
    json report = json::parse(r.out);
    CHECK(report["value"] == 2.0);
    CHECK(report["margin"] == -2.0);
    CHECK(report["breakdown"]["arrival"] == 2.0);
    CHECK(report["breakdown"]["download"] == 0.0);

    // Two empty peers at lambda = 0.15: 0.3 - 8/9 = -53/90.
    write_file(dir.path / "two.json", R"({"k": 2, "profiles": [[0, 2]]})");
    r = run_cli(dir, "drift --state " + (dir.path / "two.json").string() +
                         " --lambda 0.15");
    REQUIRE(r.exit_code == 0);
    report = json::parse(r.out);
    CHECK(report["value"].get<double>() == -53.0 / 90.0);
    CHECK(report["breakdown"]["arrival"].get<double>() == 0.3);

    // Spec and rule options are honored.
    r = run_cli(dir, "drift --state " + (dir.path / "two.json").string() +
                         " --lambda 0.1 --rule '{\"type\": \"rare-chunk\"}'"
                         " --spec two-chunk");
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["value"].is_number());
}

TEST_CASE("drift fails closed on bad inputs", "[cli]") {
    TempDir dir;
    write_file(dir.path / "three.json", R"({"k": 3, "profiles": []})");
    write_file(dir.path / "seed.json", R"({"k": 2, "profiles": []})");

    // two-chunk spec needs k = 2.
    CliResult r = run_cli(dir, "drift --state " + (dir.path / "three.json").string() +
                                   " --lambda 1 --spec two-chunk");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("two-chunk") != std::string::npos);

    r = run_cli(dir, "drift --state " + (dir.path / "seed.json").string() +
                         " --lambda 1 --rule '{\"type\": \"slow\"}'");
    CHECK(r.exit_code == 2);

    r = run_cli(dir, "drift --state " + (dir.path / "seed.json").string() +
                         " --lambda 0");
    CHECK(r.exit_code == 2);

    r = run_cli(dir, "drift --state " + (dir.path / "seed.json").string() +
                         " --lambda 1 --spec entropy");
    CHECK(r.exit_code == 2);
}

TEST_CASE("verify exits 0 on a clean sweep and writes the report", "[cli]") {
    TempDir dir;
    write_file(dir.path / "job.json", R"({
        "target": "lemma1", "k": 2, "lambda": 0.1,
        "rule": {"type": "common-chunk", "m": 3},
        "states": {"source": "random", "count": 25, "s_min": 1, "s_max": 30,
                   "rng_seed": 5}})");
    const fs::path out = dir.path / "report";
    CliResult r = run_cli(dir, "verify --job " + (dir.path / "job.json").string() +
                                   " --out " + out.string());
    REQUIRE(r.exit_code == 0);

    const json report = json::parse(r.out);
    CHECK(report["passed"] == true);
    CHECK(report["checked"] == 25);
    CHECK(report["violations"].empty());
    CHECK(report["min_margin"].get<double>() >= 0);
    CHECK(json::parse(slurp(out / "report.json")) == report);
}

TEST_CASE("verify exits 1 when the inequality fails", "[cli]") {
    TempDir dir;
    write_file(dir.path / "job.json", R"({
        "target": "two-chunk-drift", "k": 2, "lambda": 0.1,
        "rule": {"type": "rare-chunk"},
        "states": {"source": "exhaustive", "s_min": 28, "s_max": 30}})");
    CliResult r = run_cli(dir, "verify --job " + (dir.path / "job.json").string());
    REQUIRE(r.exit_code == 1);

    const json report = json::parse(r.out);
    CHECK(report["passed"] == false);
    CHECK(!report["violations"].empty());
    CHECK(report["violations"][0]["state"]["k"] == 2);
}

TEST_CASE("verify resolves file sources relative to the job file", "[cli]") {
    TempDir dir;
    write_file(dir.path / "states.json",
               R"([{"k": 2, "profiles": [[0, 2]]}, {"k": 2, "profiles": [[1, 5]]}])");
    write_file(dir.path / "job.json", R"({
        "target": "lemma1", "k": 2, "lambda": 0.1,
        "rule": {"type": "common-chunk", "m": 3},
        "states": {"source": "file", "path": "states.json"}})");
    CliResult r = run_cli(dir, "verify --job " + (dir.path / "job.json").string());
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["checked"] == 2);
}

TEST_CASE("verify exits 2 on an invalid job", "[cli]") {
    TempDir dir;
    write_file(dir.path / "job.json", R"({
        "target": "lemma1", "k": 2, "lambda": 0.1,
        "rule": {"type": "rare-chunk"},
        "states": {"source": "random", "count": 5, "s_min": 1, "s_max": 10,
                   "rng_seed": 0}})");
    CliResult r = run_cli(dir, "verify --job " + (dir.path / "job.json").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("common-chunk") != std::string::npos);
}
