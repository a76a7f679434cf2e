#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "support.hpp"

using zsfuse::testing::TempDir;

namespace {

const std::filesystem::path kGolden = std::filesystem::path(ZSFUSE_FIXTURE_DIR) / "golden";

int cli(const std::string& args) {
    const std::string cmd = std::string("\"") + ZSFUSE_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("run writes the golden report") {
    TempDir dir;
    REQUIRE(cli("run -c " + q(kGolden / "config.json") + " -o " + q(dir / "r.json")) == 0);
    CHECK(slurp(dir / "r.json") == slurp(kGolden / "golden_report.json"));
}

TEST_CASE("score, fuse and eval compose to the same report as run") {
    TempDir dir;
    const auto cfg = q(kGolden / "config.json");
    REQUIRE(cli("score -c " + cfg + " -o " + q(dir / "scores")) == 0);
    REQUIRE(cli("fuse -c " + cfg + " -s " + q(dir / "scores") + " -o " + q(dir / "fusion")) == 0);
    REQUIRE(cli("eval -c " + cfg + " -p " + q(dir / "fusion") + " -o " + q(dir / "r.json")) == 0);
    CHECK(slurp(dir / "r.json") == slurp(kGolden / "golden_report.json"));

    REQUIRE(cli("report -i " + q(dir / "r.json") + " -f csv -o " + q(dir / "r.csv")) == 0);
    const auto csv = slurp(dir / "r.csv");
    CHECK(csv.rfind("method,top1,top3,top5,auroc,eligible,positives,negatives\n", 0) == 0);
    CHECK(csv.find("\nfused,") != std::string::npos);
}

TEST_CASE("split draws m closed classes") {
    TempDir dir;
    REQUIRE(cli("split --catalog " + q(kGolden / "bundle" / "catalog.json") + " --m 6 --seed 7 -o " +
                q(dir / "split.json")) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "split.json"));
    CHECK(j.at("closed").size() == 6);
    CHECK(j.at("open").size() == 4);
    CHECK(j.at("seed") == 7);
}

TEST_CASE("synth is deterministic for a seed") {
    TempDir dir;
    const std::string args = "synth --classes 4 --samples 3 --dim 8 --seed 5 -o ";
    REQUIRE(cli(args + q(dir / "a")) == 0);
    REQUIRE(cli(args + q(dir / "b")) == 0);
    for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
        CAPTURE(entry.path().filename());
        CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
    }
}

TEST_CASE("prompts generation fills the template") {
    TempDir dir;
    REQUIRE(cli("prompts --mode generation --class car --cc \"four wheels\" -o " + q(dir / "p.txt")) == 0);
    const auto text = slurp(dir / "p.txt");
    CHECK(text.find("generate an image of car that has four wheels. As realistic as possible. More fit for life.") !=
          std::string::npos);
}

TEST_CASE("exit codes") {
    TempDir dir;
    CHECK(cli("") == 1);
    CHECK(cli("frobnicate") == 1);
    CHECK(cli("run") == 1);
    CHECK(cli("run -c " + q(dir / "missing.json")) == 1);  // rejected by argument validation

    std::ofstream(dir / "bad.json") << R"({"bundle": "nowhere/bundle.json", "split": {"m": 2}})";
    CHECK(cli("run -c " + q(dir / "bad.json")) == 3);

    std::ofstream(dir / "usage.json") << R"({"bundle": "x", "colour": 1})";
    CHECK(cli("run -c " + q(dir / "usage.json")) == 1);

    std::ofstream(dir / "m.json") << R"({"bundle": ")" + (kGolden / "bundle" / "bundle.json").string() +
                                         R"(", "split": {"m": 10}})";
    CHECK(cli("run -c " + q(dir / "m.json")) == 1);  // m must be below the class count

    // Every fixture class is tagged closed, so a catalog-tagged split has no open set.
    std::ofstream(dir / "tags.json") << R"({"bundle": ")" + (kGolden / "bundle" / "bundle.json").string() +
                                            R"(", "split": {"mode": "catalog"}})";
    CHECK(cli("run -c " + q(dir / "tags.json") + " -o " + q(dir / "r.json")) == 2);
    CHECK_FALSE(std::filesystem::exists(dir / "r.json"));

    CHECK(cli("prompts --mode similarity --a car --b car") == 1);
}
