#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

const std::string kBin = FUSION_TWIN_BIN;
const std::string kDataDir = FUSION_TEST_DATA_DIR;

int run_cli(const std::string& args) {
    const std::string cmd = kBin + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    std::string path;
    explicit TempDir(const std::string& name) : path("/tmp/" + name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("gen-data is byte-identical for the same seed") {
    TempDir a("fusion_cli_gen_a");
    TempDir b("fusion_cli_gen_b");
    const std::string opts = "gen-data --kind coil --seed 5 --noise-sigma 0.05 --records 60 --out ";
    REQUIRE(run_cli(opts + a.path) == 0);
    REQUIRE(run_cli(opts + b.path) == 0);
    CHECK(slurp(a.path + "/coil_dataset.json") == slurp(b.path + "/coil_dataset.json"));
    CHECK(slurp(a.path + "/coil_truth.json") == slurp(b.path + "/coil_truth.json"));

    TempDir c("fusion_cli_gen_c");
    REQUIRE(run_cli("gen-data --kind coil --seed 6 --records 60 --out " + c.path) == 0);
    CHECK(slurp(a.path + "/coil_dataset.json") != slurp(c.path + "/coil_dataset.json"));
}

TEST_CASE("validate accepts the bundled corpus and rejects junk") {
    CHECK(run_cli("validate " + kDataDir + "/assets.json") == 0);
    CHECK(run_cli("validate " + kDataDir + "/weather.json") == 0);
    CHECK(run_cli("validate " + kDataDir + "/coil_clean/coil_dataset.json") == 0);

    TempDir t("fusion_cli_junk");
    {
        std::ofstream out(t.path + "/junk.json");
        out << "{\"schema\": \"fusion-twin/nope-v1\"}";
    }
    CHECK(run_cli("validate " + t.path + "/junk.json") == 1);
    {
        std::ofstream out(t.path + "/broken.json");
        out << "{ not json";
    }
    CHECK(run_cli("validate " + t.path + "/broken.json") == 1);
}

TEST_CASE("case2 runs end to end and writes the report bundle") {
    TempDir t("fusion_cli_case2");
    const int rc = run_cli("case2 --dataset " + kDataDir +
                           "/coil_clean/coil_dataset.json --iterations 2 --inner-iters 40 "
                           "--population 1 --top-k 1 --seed 42 --out " +
                           t.path);
    REQUIRE(rc == 0);
    CHECK(std::filesystem::exists(t.path + "/rep0.csv"));
    CHECK(std::filesystem::exists(t.path + "/rep0_summary.json"));
    CHECK(std::filesystem::exists(t.path + "/aggregate.csv"));
    CHECK(std::filesystem::exists(t.path + "/config_echo.json"));
    const json report = json::parse(slurp(t.path + "/report.json"));
    CHECK(report.contains("best_validation_mpe"));
    CHECK(report.contains("expert_baseline_mpe"));
    CHECK(report.contains("mpe_gap_factor"));
}

TEST_CASE("case1 runs end to end for scripted and evolutionary generators") {
    for (const std::string gen : {"scripted", "evo"}) {
        TempDir t("fusion_cli_case1_" + gen);
        const int rc = run_cli("case1 --library " + kDataDir + "/assets.json --weather " +
                               kDataDir + "/weather.json --site temperate-1 --generator " + gen +
                               " --iterations 2 --population 4 --top-k 2 --seed 42 --out " +
                               t.path);
        REQUIRE(rc == 0);
        CHECK(std::filesystem::exists(t.path + "/rep0.csv"));
        const json report = json::parse(slurp(t.path + "/report.json"));
        CHECK(report.at("final_mean_best").get<double>() >= 1.0);
    }
}

TEST_CASE("config mistakes exit with the config code") {
    CHECK(run_cli("case2 --dataset " + kDataDir +
                  "/coil_clean/coil_dataset.json --generator llm --out /tmp/fusion_cli_llm") == 2);
    CHECK(run_cli("case2 --dataset " + kDataDir +
                  "/coil_clean/coil_dataset.json --population 1 --top-k 5 "
                  "--out /tmp/fusion_cli_popk") == 2);
    // CLI11 itself rejects missing required options (non-zero, non-crashing).
    CHECK(run_cli("case1 --weather " + kDataDir + "/weather.json") != 0);
    CHECK(run_cli("validate " + kDataDir + "/does_not_exist.json") == 1);
}

TEST_CASE("calibrate fits the bundled clean dataset to a tiny MPE") {
    TempDir t("fusion_cli_cal");
    REQUIRE(run_cli("calibrate --dataset " + kDataDir +
                    "/coil_clean/coil_dataset.json --inner-iters 200 --out " + t.path) == 0);
    const json report = json::parse(slurp(t.path + "/fit_report.json"));
    CHECK(!report.at("failed").get<bool>());
    CHECK(report.at("validation_mpe").get<double>() < 0.01);
    const double ua = [&] {
        for (const auto& p : report.at("params")) {
            if (p.at("name") == "UA") return p.at("value").get<double>();
        }
        return 0.0;
    }();
    CHECK(ua == doctest::Approx(3000.0).epsilon(0.01));
}
