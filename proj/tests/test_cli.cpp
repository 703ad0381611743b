#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stq/cli.hpp"
#include "stq/errors.hpp"
#include "support.hpp"

using namespace stq;
using nlohmann::json;

namespace {

struct Invocation {
    int status;
    std::string out;
    std::string err;
};

Invocation run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int status = run_command(args, out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("grid parsing") {
    CHECK(parse_grid("0:1:0.25") == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(parse_grid("0:0.45:0.01").size() == 46);
    CHECK(parse_grid("2.5") == std::vector<double>{2.5});
    CHECK_THROWS_AS(parse_grid("1:0:0.1"), InputError);
    CHECK_THROWS_AS(parse_grid("0:1:0"), InputError);
    CHECK_THROWS_AS(parse_grid("a:b:c"), InputError);
}

TEST_CASE("topo build writes the graph and a manifest") {
    const auto dir = testing::scratch_dir("topo");
    const auto r = run({"--out", dir.string(), "topo", "build", "--chips", "1x1", "--qubits", "2x2", "--layers", "2"});
    REQUIRE(r.status == 0);
    const auto graph = json::parse(slurp(dir / "topology.json"));
    CHECK(graph.at("nodes").size() == 8);
    CHECK(graph.at("edges").size() == 12);
    const auto manifest = json::parse(slurp(dir / "topo-build.manifest.json"));
    CHECK(manifest.at("outputs") == json::array({"topology.json"}));
    CHECK(manifest.at("version") == tool_version);
    CHECK(r.out.find("topology.json") != std::string::npos);

    const auto again = testing::scratch_dir("topo2");
    REQUIRE(run({"--out", again.string(), "topo", "build", "--chips", "1x1", "--qubits", "2x2", "--layers", "2"}).status == 0);
    CHECK(slurp(dir / "topology.json") == slurp(again / "topology.json"));

    REQUIRE(run({"--out", dir.string(), "topo", "validate", "--graph", (dir / "topology.json").string()}).status == 0);
    const auto report = json::parse(slurp(dir / "validate.json"));
    CHECK(report.at("components") == 1);
    CHECK(report.at("violations").empty());
}

TEST_CASE("exit codes and diagnostics") {
    const auto dir = testing::scratch_dir("errors");
    const auto usage = run({"frobnicate"});
    CHECK(usage.status == 2);
    CHECK(json::parse(usage.err).at("exit_status") == 2);

    const auto missing = run({"--out", dir.string(), "--device", "/nonexistent.json", "zz-scan", "--pair", "Q3,Q7"});
    CHECK(missing.status == 2);

    const auto physics = run({"--out", dir.string(), "zz-zero", "--pair", "Q3,Q4", "--bracket", "0:0.05"});
    CHECK(physics.status == 3);
    const auto diag = json::parse(physics.err);
    CHECK(diag.at("error") == "no-sign-change");

    const auto selective = run({"--out", dir.string(), "topo", "build", "--layers", "3", "--selective",
                                "chip_0_0_L0_q0_0:chip_0_0_L2_q0_0"});
    CHECK(selective.status == 2);
}

TEST_CASE("interleaved CZ benchmarking runs on two qubits") {
    const auto dir = testing::scratch_dir("irb");
    const std::vector<std::string> base{"--out", dir.string(), "rb", "interleaved", "--target", "cz",
                                        "--sequences", "10", "--lengths", "1,2,4"};
    CHECK(run(base).status == 0);
    const auto doc = json::parse(std::ifstream(dir / "rb.json"));
    CHECK(doc.at("fidelity").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    auto one = base;
    one.insert(one.end(), {"--qubits", "1"});
    const auto mismatch = run(one);
    CHECK(mismatch.status == 2);
    CHECK(json::parse(mismatch.err).at("error") == "arity-mismatch");
}

TEST_CASE("zz-scan output is independent of the worker count") {
    const auto a = testing::scratch_dir("jobs1");
    const auto b = testing::scratch_dir("jobs2");
    REQUIRE(run({"--out", a.string(), "--jobs", "1", "zz-scan", "--pair", "Q2,Q3", "--flux", "0:0.3:0.05"}).status == 0);
    REQUIRE(run({"--out", b.string(), "--jobs", "2", "zz-scan", "--pair", "Q2,Q3", "--flux", "0:0.3:0.05"}).status == 0);
    const auto csv = slurp(a / "zz_scan.csv");
    CHECK(csv == slurp(b / "zz_scan.csv"));
    CHECK(csv.find("\r\n") != std::string::npos);
}

TEST_CASE("seeded commands repeat exactly") {
    const auto a = testing::scratch_dir("seed1");
    const auto b = testing::scratch_dir("seed2");
    const std::vector<std::string> tail{"rb", "isolated", "--depolarizing", "0.99", "--lengths", "1,4,16", "--sequences", "10", "--bootstrap", "20"};
    auto args_a = std::vector<std::string>{"--out", a.string(), "--seed", "7"};
    auto args_b = std::vector<std::string>{"--out", b.string(), "--seed", "7"};
    args_a.insert(args_a.end(), tail.begin(), tail.end());
    args_b.insert(args_b.end(), tail.begin(), tail.end());
    REQUIRE(run(args_a).status == 0);
    REQUIRE(run(args_b).status == 0);
    CHECK(slurp(a / "rb.json") == slurp(b / "rb.json"));
    const auto doc = json::parse(slurp(a / "rb.json"));
    CHECK(doc.dump().find("\"p\"") != std::string::npos);
}

}
