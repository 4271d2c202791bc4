#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crackle/config.hpp"
#include "crackle/driver.hpp"
#include "crackle/error.hpp"
#include "crackle/formats.hpp"

using namespace crackle;
using namespace crackle::cli;

namespace {

const char* kSmallConfig = R"(
# tiny smoke configuration
tail.kind = pareto
tail.alpha = 3
tail.dim = 2
plan.k = 1
plan.p = 3
plan.n = 2000
plan.M = 1
trials = 25
master_seed = 7
threads = 1
mc.samples = 400000
mc.seed = 5
out = /tmp/crackle_test_out
region.A.rect = 0.2 1.0 0.3 1.3
region.A.delta_km = 1 3
region.A.shrink = 0.02
)";

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("config parses, serializes, and round-trips") {
    auto cfg = RunConfig::parse(kSmallConfig);
    CHECK(cfg.alpha == 3.0);
    CHECK(cfg.trials == 25);
    CHECK(cfg.regions.count("A") == 1);
    auto text = cfg.serialize();
    auto cfg2 = RunConfig::parse(text);
    CHECK(cfg2.serialize() == text);  // canonical form is a fixed point
    CHECK(cfg2.master_seed == cfg.master_seed);
    CHECK(cfg2.region("A")->describe() == cfg.region("A")->describe());
}

TEST_CASE("config rejects unknown keys and malformed input") {
    CHECK_THROWS_AS(RunConfig::parse("plan.n = 10\nbogus.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("plan.n 10\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("tail.kind = cauchy\nplan.n = 10\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("trials = 10\n"), ConfigError);  // missing plan.n
    CHECK_THROWS_AS(RunConfig::parse("plan.n = 10\nplan.n = 20\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("plan.n = ten\n"), ConfigError);
}

TEST_CASE("cloud CSV round trip is bitwise") {
    auto tail = model::TailModel::pareto(3.0, 2);
    auto cloud = model::sample_cloud(tail, 50.0, 424242);
    std::filesystem::create_directories("/tmp/crackle_test_out");
    std::string path = "/tmp/crackle_test_out/cloud_rt.csv";
    write_cloud_csv(path, cloud);
    auto back = read_cloud_csv(path);
    REQUIRE(back.size() == cloud.size());
    CHECK(back.coords == cloud.coords);  // 17 significant digits round-trip doubles
    std::string path2 = "/tmp/crackle_test_out/cloud_rt2.csv";
    write_cloud_csv(path2, back);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("malformed CSV rows cite the line number") {
    std::string path = "/tmp/crackle_test_out/bad.csv";
    std::filesystem::create_directories("/tmp/crackle_test_out");
    {
        std::ofstream out(path);
        out << "x0,x1\n1.0,2.0\noops,3.0\n";
    }
    try {
        read_cloud_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
}

TEST_CASE("sample command refuses past the budget") {
    auto cfg = RunConfig::parse(kSmallConfig);
    cfg.n_ladder = {1e9};
    cfg.sample_budget = 2e7;
    CHECK_THROWS_AS(run_sample(cfg), BudgetExceeded);
}

TEST_CASE("sample and diagram commands write the documented formats") {
    auto cfg = RunConfig::parse(kSmallConfig);
    cfg.out_dir = "/tmp/crackle_test_out/s1";
    auto cloud_path = run_sample(cfg);
    auto text = slurp(cloud_path);
    CHECK(text.rfind("x0,x1\n", 0) == 0);
    auto diagram_path = run_diagram(cfg);
    auto dt = slurp(diagram_path);
    CHECK(dt.rfind("trial,component_id,m,dim,birth,death,birth_scaled,death_scaled\n", 0) == 0);
    auto rows = read_diagram_csv(diagram_path);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].trial == rows[i - 1].trial)
            CHECK(rows[i].birth_scaled >= rows[i - 1].birth_scaled);
        else
            CHECK(rows[i].trial > rows[i - 1].trial);
    }
    // manifest lists the diagram with a matching digest
    auto manifest = slurp(cfg.out_dir + "/manifest.json");
    CHECK(manifest.find(hex64(fnv1a64_file(diagram_path))) != std::string::npos);
}

TEST_CASE("verify pipeline is deterministic") {
    auto cfg = RunConfig::parse(kSmallConfig);
    cfg.out_dir = "/tmp/crackle_test_out/v1";
    run_verify(cfg);
    auto first = slurp(cfg.out_dir + "/reports.jsonl");
    cfg.out_dir = "/tmp/crackle_test_out/v2";
    run_verify(cfg);
    auto second = slurp(cfg.out_dir + "/reports.jsonl");
    CHECK(first == second);
    CHECK(!first.empty());
    // and the threaded run agrees with the serial one
    cfg.threads = 4;
    cfg.out_dir = "/tmp/crackle_test_out/v3";
    run_verify(cfg);
    CHECK(slurp(cfg.out_dir + "/reports.jsonl") == first);
}

TEST_CASE("integrate writes the lambda table") {
    auto cfg = RunConfig::parse(kSmallConfig);
    cfg.out_dir = "/tmp/crackle_test_out/i1";
    cfg.mc_samples = 200000;
    auto path = run_integrate(cfg);
    auto text = slurp(path);
    CHECK(text.rfind("region,kind,lambda,stderr,samples,acceptance_rate\n", 0) == 0);
    CHECK(text.find("A,heavy,") != std::string::npos);
}

TEST_CASE("plot renders valid SVG, empty diagram included") {
    auto cfg = RunConfig::parse(kSmallConfig);
    cfg.p = 4;  // shade B_{1,3}
    cfg.out_dir = "/tmp/crackle_test_out/p1";
    std::filesystem::create_directories(cfg.out_dir);
    std::string empty_csv = cfg.out_dir + "/empty.csv";
    write_diagram_csv(empty_csv, {});
    auto svg_path = run_plot(cfg, empty_csv);
    auto svg = slurp(svg_path);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polygon") != std::string::npos);
    // a populated diagram renders points and is a pure function of the input
    std::vector<DiagramRow> rows;
    DiagramRow r;
    r.trial = 0;
    r.m = 3;
    r.birth = 0.5;
    r.death = 0.55;
    r.birth_scaled = 0.5;
    r.death_scaled = 0.55;
    rows.push_back(r);
    std::string csv2 = cfg.out_dir + "/one.csv";
    write_diagram_csv(csv2, rows);
    auto svg2a = slurp(run_plot(cfg, csv2));
    auto svg2b = slurp(run_plot(cfg, csv2));
    CHECK(svg2a == svg2b);
    CHECK(svg2a.find("circle") != std::string::npos);
    // confinement is asserted before rendering
    rows[0].death_scaled = 5.0;
    std::string csv3 = cfg.out_dir + "/bad.csv";
    write_diagram_csv(csv3, rows);
    CHECK_THROWS_AS(run_plot(cfg, csv3), Error);
}

TEST_SUITE_END();
