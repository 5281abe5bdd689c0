#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rcollatz/cli.hpp"
#include "rcollatz/manifest.hpp"

using namespace rcollatz;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rcollatz_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("parse_count and parse_range") {
    CHECK(cli::parse_count("1000") == 1000);
    CHECK(cli::parse_count("1e6") == 1'000'000);
    CHECK(cli::parse_count("2.5e3") == 2500);
    CHECK_THROWS_AS(cli::parse_count("-1"), cli::UsageError);
    CHECK_THROWS_AS(cli::parse_count("1.5"), cli::UsageError);
    CHECK_THROWS_AS(cli::parse_count("x"), cli::UsageError);
    CHECK(cli::parse_range("1..99999") == std::pair<std::uint64_t, std::uint64_t>{1, 99999});
    CHECK_THROWS_AS(cli::parse_range("5..3"), cli::UsageError);
    CHECK_THROWS_AS(cli::parse_range("5"), cli::UsageError);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(invoke({}).code == cli::kExitUsage);
    CHECK(invoke({"bogus"}).code == cli::kExitUsage);
    CHECK(invoke({"simulate", "--steps", "ten"}).code == cli::kExitUsage);
    CHECK(invoke({"simulate", "--x0", "4"}).code == cli::kExitUsage);
    const Run even_xi = invoke({"simulate", "--xi", R"({"atoms":[{"value":2,"prob":1}]})", "--steps", "10"});
    CHECK(even_xi.code == cli::kExitUsage);
    CHECK(even_xi.err.find("even") != std::string::npos);
    CHECK(invoke({"reach", "--m", "4"}).code == cli::kExitUsage);
    CHECK(invoke({"reach", "--m", "27", "--xi", "oneThree"}).code == cli::kExitUsage);
    CHECK(invoke({"classical"}).code == cli::kExitUsage);
    CHECK(invoke({"stationary", "--cutoff", "100"}).code == cli::kExitUsage);
    CHECK(invoke({"simulate", "--trajectory", "--steps", "10"}).code == cli::kExitUsage);
    CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("classical --x0 7 reaches 1 in 5 odd steps; x0 = 1 is the fixed point") {
    Run r = invoke({"classical", "--x0", "7"});
    REQUIRE(r.code == 0);
    CHECK(r.out == "x0,steps_to_1_or_cycle,b,n_0,peak_bits,status\n7,5,1,5,5,one\n");
    r = invoke({"classical", "--x0", "1"});
    CHECK(r.out == "x0,steps_to_1_or_cycle,b,n_0,peak_bits,status\n1,0,1,0,1,one\n");
    r = invoke({"classical", "--x0", "27", "--max-steps", "10"});
    CHECK(r.out.find("27,,,") != std::string::npos);
    CHECK(r.out.find("undecided") != std::string::npos);
}

TEST_CASE("classical range output has one row per odd x0") {
    const Run r = invoke({"classical", "--range", "1..99", "--jobs", "3"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int rows = -1;
    std::uint64_t expected = 1;
    while (std::getline(lines, line)) {
        if (rows >= 0) {
            CHECK(line.rfind(std::to_string(expected) + ",", 0) == 0);
            CHECK(line.substr(line.size() - 3) == "one");
            expected += 2;
        }
        ++rows;
    }
    CHECK(rows == 50);
}

TEST_CASE("reach --m 5") {
    const Run r = invoke({"reach", "--m", "5"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("prob") == "1/16");
    CHECK(j.at("length") == 2);
    CHECK(j.at("verified") == true);
}

TEST_CASE("reach over a range") {
    const Run r = invoke({"reach", "--range", "1..9", "--verify"});
    REQUIRE(r.code == 0);
    CHECK(r.out ==
          "m,path_len,prob_num,prob_den,ok\n"
          "1,0,1,1,true\n3,1,1,4,true\n5,2,1,16,true\n7,2,1,16,true\n9,3,1,64,true\n");
}

TEST_CASE("simulate is deterministic across job counts") {
    const std::vector<std::string> base = {"simulate", "--steps", "20000", "--replicas", "3", "--seed", "9"};
    auto with_jobs = [&](const char* j) {
        auto a = base;
        a.push_back("--jobs");
        a.push_back(j);
        return invoke(a);
    };
    const Run one = with_jobs("1");
    const Run three = with_jobs("3");
    REQUIRE(one.code == 0);
    CHECK(one.out == three.out);
    const auto report = nlohmann::json::parse(one.out);
    CHECK(report.at("total_steps") == 60000);
    CHECK(report.at("bounds").at("exact_violations") == 0);
    CHECK(report.at("terminals").at("completed") == 3);
    CHECK(report.at("m_distribution").at("p").size() == 3);
}

TEST_CASE("simulate pm1 reports absorption by horizon") {
    const Run r = invoke({"simulate", "--xi", "pm1", "--x0", "5", "--steps", "1000", "--replicas", "50"});
    REQUIRE(r.code == 0);
    const auto a = nlohmann::json::parse(r.out).at("absorption");
    CHECK(a.at("one_is_absorbing") == true);
    CHECK(a.at("departures_after_absorption") == 0);
    CHECK(a.at("by_horizon").back().at("horizon") == 1000);
}

TEST_CASE("stationary for pm1 is a point mass and exposes the self loop") {
    const Run r = invoke({"stationary", "--xi", "pm1", "--cutoff", "99"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("p_one_to_one") == "1/1");

    const Run u = invoke({"stationary", "--cutoff", "99"});
    CHECK(nlohmann::json::parse(u.out).at("p_one_to_one") == "1/2");
}

TEST_CASE("stationary non-convergence exits 3 and records the residual") {
    const fs::path dir = scratch("nonconv");
    const Run r = invoke({"stationary", "--cutoff", "999", "--tol", "1e-15", "--max-iter", "3", "--out-dir", dir.string()});
    CHECK(r.code == cli::kExitNonConvergence);
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m.at("status").at("converged") == false);
    CHECK(m.at("status").at("residual").get<double>() > 0);
    fs::remove_all(dir);
}

TEST_CASE("excursions with an unreachable threshold give an empty table") {
    const fs::path dir = scratch("exc");
    const Run r = invoke({"excursions", "--M", "1e9", "--steps", "10000", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(slurp(dir / "excursions.csv") == "replica,k,N_k,D_k,duration\n");
    const auto t = nlohmann::json::parse(slurp(dir / "tails.json"));
    CHECK(t.contains("notice"));
    CHECK(t.at("durations").at("value").is_null());
    fs::remove_all(dir);
}

TEST_CASE("reachable probe") {
    const Run r = invoke({"reachable", "--xi", "pm1", "--state-cap", "99"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("reached") == 1);
}

TEST_CASE("manifest digests and replay") {
    const fs::path dir = scratch("replay");
    const Run r = invoke({"simulate", "--steps", "5000", "--replicas", "2", "--trajectory", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m.at("command") == "simulate");
    CHECK(m.at("seeds").at("seed") == 42);
    for (const char* name : {"report.json", "occupation.csv", "trajectory.csv"}) {
        CHECK(m.at("outputs").at(name) == sha256_file(dir / name));
    }
    const Run again = invoke({"replay", "--manifest", (dir / "manifest.json").string(), "--out-dir",
                           (dir / "again").string()});
    CHECK(again.code == 0);
    CHECK(again.out.find("byte-identical") != std::string::npos);

    // a tampered output is caught
    std::ofstream(dir / "again" / "report.json") << "{}";
    auto tampered = m;
    tampered["outputs"]["report.json"] = sha256_hex("{}");
    std::ofstream(dir / "tampered.json") << tampered.dump();
    const Run bad = invoke({"replay", "--manifest", (dir / "tampered.json").string(), "--out-dir",
                         (dir / "again2").string()});
    CHECK(bad.code == cli::kExitVerification);
    fs::remove_all(dir);
}

TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
