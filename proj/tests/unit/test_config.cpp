#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <sstream>

#include "adaptsim/cli.hpp"
#include "adaptsim/config.hpp"

using namespace adaptsim;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text, const std::vector<std::string>& overrides = {}) {
    std::istringstream in(text);
    return parse_config(in, "test.ini", overrides, ADAPTSIM_SOURCE_DIR "/configs");
}

std::string config_error(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        parse(text, overrides);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("adaptsim-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

} // namespace

TEST_CASE("defaults and the shipped presets") {
    const auto c = parse("");
    CHECK(c.engine.model.numMh == 3000);
    CHECK(c.engine.numLps == 1);
    CHECK(c.mode == RunMode::Sim);

    for (const char* name : {"paper-3000", "paper-12000", "testbed-paper"}) {
        CAPTURE(name);
        const auto p = load_config(fs::path(ADAPTSIM_SOURCE_DIR) / "configs" / (std::string(name) + ".ini"));
        CHECK(p.engine.numLps == 3);
        CHECK(p.engine.model.steps == 500);
        CHECK(p.engine.model.radius == 250);
        CHECK(p.engine.model.broadcastFraction == 0.2);
    }
    const auto t = load_config(ADAPTSIM_SOURCE_DIR "/configs/testbed-paper.ini");
    CHECK(t.profile.cpu_slowdown(LpId{2}) == 3.0);
    CHECK(t.engine.heuristics.mode == HeuristicMode::GaiaPlus);
    CHECK(load_config(ADAPTSIM_SOURCE_DIR "/configs/paper-12000.ini").engine.model.numMh == 12000);
}

TEST_CASE("keys land in the right fields") {
    const auto c = parse(R"(
[model]
num_mh = 500
steps = 10
radius = 100.5
[heuristics]
mode = gaia+
threshold = 0.7
cooldown = 3
[run]
num_lps = 2
global_seed = 99
barrier_timeout_s = 2.5
[cost]
migration_ns = 5
)");
    CHECK(c.engine.model.numMh == 500);
    CHECK(c.engine.model.radius == 100.5);
    CHECK(c.engine.heuristics.mode == HeuristicMode::GaiaPlus);
    CHECK(c.engine.heuristics.threshold == 0.7);
    CHECK(c.engine.heuristics.cooldown == 3);
    CHECK(c.engine.globalSeed == 99);
    CHECK(c.networkSeed == 99);
    CHECK(c.barrierTimeout == std::chrono::milliseconds(2500));
    CHECK(c.engine.cost.migration == 5);
}

TEST_CASE("overrides win over the file") {
    const auto c = parse("[model]\nnum_mh = 500\n", {"model.num_mh=700", "heuristics.mode=gaia", "run.num_lps=3"});
    CHECK(c.engine.model.numMh == 700);
    CHECK(c.engine.heuristics.mode == HeuristicMode::Gaia);
    CHECK(c.engine.numLps == 3);
    CHECK(config_error("", {"model.nope=1"}).find("unknown key 'model.nope'") != std::string::npos);
    CHECK(config_error("", {"num_mh=1"}).find("section.key=value") != std::string::npos);
}

TEST_CASE("errors name the problem") {
    CHECK(config_error("[model]\nnum_mhh = 3\n").find("unknown key 'model.num_mhh'") != std::string::npos);
    CHECK(config_error("[model]\nnum_mh = many\n").find("model.num_mh") != std::string::npos);
    CHECK(config_error("[model]\nnum_mh = 0\n").find("num_mh") != std::string::npos);
    CHECK(config_error("[run]\nnum_lps = 0\n").find("num_lps") != std::string::npos);
    CHECK(config_error("[heuristics]\nmode = fast\n").find("mode") != std::string::npos);
    CHECK(config_error("[model]\nseed = 1\n[run]\nglobal_seed = 2\n").find("disagree") != std::string::npos);
    CHECK(config_error("[run]\nmode = tcp\nnum_lps = 2\n[peers]\n0 = a:1\n").find("needs 2 [peers]") != std::string::npos);
    CHECK(config_error("[model]\nnum_mh = 1\n[model\n").find("test.ini:3") != std::string::npos);
    const auto missing = config_error("[net]\nprofile = nowhere.profile\n");
    CHECK(missing.find("nowhere.profile") != std::string::npos);
    CHECK(config_error("[run]\nnum_lps = 2\n[net]\nprofile = ../profiles/testbed-paper.profile\n").find("outside") !=
          std::string::npos);
}

TEST_CASE("model.seed is accepted as the global seed") {
    CHECK(parse("[model]\nseed = 17\n").engine.globalSeed == 17);
    CHECK(parse("[model]\nseed = 17\n[run]\nglobal_seed = 17\n").engine.globalSeed == 17);
}

TEST_CASE("tcp peers") {
    const auto c = parse("[run]\nmode = tcp\nnum_lps = 2\n[net]\nthis_lp = 1\n[peers]\n1 = h:2\n0 = h:1\n");
    CHECK(c.peers == std::vector<std::string>{"h:1", "h:2"});
    CHECK(c.thisLp == 1u);
    CHECK(config_error("[run]\nmode = tcp\nnum_lps = 2\n[peers]\n0 = h:1\n2 = h:2\n").find("numbered") != std::string::npos);
}

TEST_CASE("cmd_run exit codes and traces") {
    TempDir dir;
    const fs::path ini = dir.path / "one.ini";
    std::ofstream(ini) << "[model]\nnum_mh = 200\nsteps = 12\narena_w = 2000\narena_h = 2000\n[run]\nnum_lps = 1\ntrace_dir = "
                       << (dir.path / "out").string() << "\n";
    std::ostringstream out, err;
    CHECK(cmd_run(ini, {}, out, err) == kExitOk);
    CHECK(out.str().find("avg LCR 1.0000") != std::string::npos);
    CHECK(out.str().find("final LCR 1.0000") != std::string::npos);
    std::ifstream steps(dir.path / "out" / "steps.csv");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(steps, line)) ++lines;
    CHECK(lines == 13);
    CHECK(fs::exists(dir.path / "out" / "summary.csv"));

    std::ostringstream out2, err2;
    CHECK(cmd_run(ini, {"net.profile=missing.profile"}, out2, err2) == kExitConfig);
    CHECK(err2.str().find("missing.profile") != std::string::npos);

    std::ostringstream out3, err3;
    CHECK(cmd_run(dir.path / "absent.ini", {}, out3, err3) == kExitConfig);

    std::ostringstream out4, err4;
    CHECK(cmd_run(ini, {"run.mode=tcp"}, out4, err4) == kExitConfig);
}

TEST_CASE("cmd_launch refuses non-tcp configs and bad ids") {
    TempDir dir;
    const fs::path ini = dir.path / "t.ini";
    std::ofstream(ini) << "[run]\nmode = tcp\nnum_lps = 2\n[peers]\n0 = 127.0.0.1:1\n1 = 127.0.0.1:2\n";
    std::ostringstream out, err;
    CHECK(cmd_launch(ini, 5, {}, out, err) == kExitConfig);
    CHECK(cmd_launch(ini, std::nullopt, {}, out, err) == kExitConfig);
    CHECK(cmd_launch(ini, 0, {"run.mode=sim"}, out, err) == kExitConfig);
}
