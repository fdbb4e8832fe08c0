// Drives the installed command line binary end to end.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "ksbetas/bench_data.hpp"
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() / ("ksbetas_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }
    fs::path operator/(const std::string& name) const { return dir / name; }
};

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(KSBETAS_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("simulate writes N rows of D columns with labels") {
    Sandbox sb;
    REQUIRE(run("simulate --dataset simu --n 100 --seed 9 --out " + (sb / "s.csv").string(), sb / "log") == 0);
    const auto data = ksb::read_csv(sb / "s.csv");
    CHECK(data.size() == 100);
    CHECK(data.dim() == 3);
    CHECK(ksb::read_labels(sb / "s.labels.txt").size() == 100);

    REQUIRE(run("simulate --dataset isimus --n 40 --out " + (sb / "i.bin").string(), sb / "log") == 0);
    for (int i = 0; i < 6; ++i) {
        CHECK(ksb::read_binary(sb / ("i_" + std::to_string(i) + ".bin")).size() == 40);
    }
}

TEST_CASE("cluster reports metrics and writes labels") {
    Sandbox sb;
    REQUIRE(run("simulate --n 500 --seed 2 --out " + (sb / "s.csv").string(), sb / "log") == 0);
    REQUIRE(run("cluster --method k-sbetas --delta 0.15 --input " + (sb / "s.csv").string() + " --labels " +
                    (sb / "s.labels.txt").string() + " --out " + (sb / "pred.txt").string(),
                sb / "out.json") == 0);
    const auto doc = nlohmann::json::parse(slurp(sb / "out.json"));
    CHECK(doc["n"] == 500);
    CHECK(doc["metrics"]["nmi"].get<double>() > 0.5);
    CHECK(ksb::read_labels(sb / "pred.txt").size() == 500);
}

TEST_CASE("exit codes separate config, data and usage errors") {
    Sandbox sb;
    REQUIRE(run("simulate --n 50 --out " + (sb / "s.csv").string(), sb / "log") == 0);
    CHECK(run("cluster --method k-nope --input " + (sb / "s.csv").string(), sb / "log") == 1);
    CHECK(slurp(sb / "log").find("k-nope") != std::string::npos);
    CHECK(run("cluster --input " + (sb / "missing.csv").string(), sb / "log") == 2);
    std::ofstream(sb / "bad.csv") << "0.5,0.6\n";
    CHECK(run("cluster --input " + (sb / "bad.csv").string(), sb / "log") == 2);
    CHECK(run("frobnicate", sb / "log") == 1);
    CHECK(run("--version", sb / "log") == 0);

    std::ofstream(sb / "unknown.ini") << "[dataset]\n[method k-nope]\n";
    CHECK(run("bench --config " + (sb / "unknown.ini").string() + " --out " + (sb / "r").string(), sb / "log") ==
          1);
}

TEST_CASE("bench with zero runs writes an empty report") {
    Sandbox sb;
    std::ofstream(sb / "zero.ini") << "[bench]\nruns = 0\n[dataset]\nkind = simu\n[method k-sbetas]\n";
    REQUIRE(run("bench --config " + (sb / "zero.ini").string() + " --out " + (sb / "r").string(), sb / "log") == 0);
    const auto doc = nlohmann::json::parse(slurp(sb / "r" / "report.json"));
    CHECK(doc["datasets"].empty());
    CHECK(fs::exists(sb / "r" / "report.txt"));
}

TEST_CASE("bench reports are byte-identical apart from timings") {
    Sandbox sb;
    std::ofstream(sb / "b.ini") << "[bench]\nruns = 2\n[dataset]\nkind = simu\nn = 800\nseed = 3\n"
                                   "[method argmax]\n[method k-means]\n[method k-sbetas]\n";
    REQUIRE(run("bench --config " + (sb / "b.ini").string() + " --out " + (sb / "a").string(), sb / "log") == 0);
    REQUIRE(run("bench --threads 2 --config " + (sb / "b.ini").string() + " --out " + (sb / "b").string(),
                sb / "log") == 0);
    auto strip = [](nlohmann::json doc) {
        for (auto& d : doc["datasets"]) {
            for (auto& m : d["methods"]) {
                m["aggregate"].erase("seconds_mean");
                for (auto& r : m["runs"]) r.erase("seconds");
            }
        }
        return doc.dump(2);
    };
    CHECK(strip(nlohmann::json::parse(slurp(sb / "a" / "report.json"))) ==
          strip(nlohmann::json::parse(slurp(sb / "b" / "report.json"))));
}
