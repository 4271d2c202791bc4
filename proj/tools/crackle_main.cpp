#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "crackle/driver.hpp"
#include "crackle/error.hpp"

namespace {

// exit codes: 0 pass, 1 acceptance failure, 2 usage/config error, 3 runtime error
constexpr int kOk = 0, kAcceptanceFailure = 1, kUsageError = 2, kRuntimeError = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t trials = 0;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration file")->required();
    cmd->add_option("--out", args.out_dir, "output directory override");
    cmd->add_option("--seed", args.seed, "master seed override");
    cmd->add_option("--trials", args.trials, "trial count override");
    cmd->add_option("--threads", args.threads, "worker thread count override");
}

crackle::cli::RunConfig load_config(const CLI::App* cmd, const CommonArgs& args) {
    auto cfg = crackle::cli::RunConfig::parse_file(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (cmd->count("--seed")) cfg.master_seed = args.seed;
    if (args.trials) cfg.trials = args.trials;
    if (args.threads) cfg.threads = args.threads;
    cfg.raw_text = cfg.serialize();
    return cfg;
}

int do_report(const std::string& reports_path) {
    std::ifstream in(reports_path);
    if (!in) {
        std::cerr << "report: cannot open " << reports_path << "\n";
        return kRuntimeError;
    }
    std::string line;
    bool overall = true, saw_summary = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        if (j.contains("summary")) {
            overall = j["summary"]["pass"].get<bool>();
            saw_summary = true;
            std::cout << "overall: " << (overall ? "PASS" : "FAIL") << " ("
                      << j["summary"]["reports"].get<std::size_t>() << " reports)\n";
            continue;
        }
        std::cout << (j["pass"].get<bool>() ? "PASS " : (j["degenerate"].get<bool>()
                                                              ? "SKIP "
                                                              : "FAIL "))
                  << j["name"].get<std::string>() << "  observed=" << j["observed"].dump()
                  << " reference=" << j["reference"].dump();
        if (j.contains("p_value")) std::cout << " p=" << j["p_value"].dump();
        std::cout << "\n";
    }
    if (!saw_summary) {
        std::cerr << "report: no summary line found\n";
        return kRuntimeError;
    }
    return overall ? kOk : kAcceptanceFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"topological crackle simulation and verification"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string cloud_csv, diagram_csv, reports_path;

    auto* sample = app.add_subcommand("sample", "draw one Poisson cloud to CSV");
    add_common(sample, args);
    auto* diagram = app.add_subcommand("diagram", "compute crackle diagrams to CSV");
    add_common(diagram, args);
    diagram->add_option("--cloud", cloud_csv, "input cloud CSV (otherwise sampled per config)");
    auto* integrate = app.add_subcommand("integrate", "estimate limiting mean measures");
    add_common(integrate, args);
    auto* verify = app.add_subcommand("verify", "run the statistical battery");
    add_common(verify, args);
    auto* plot = app.add_subcommand("plot", "render a diagram CSV as SVG");
    add_common(plot, args);
    plot->add_option("--diagram", diagram_csv, "diagram CSV path")->required();
    auto* report = app.add_subcommand("report", "summarize a reports.jsonl file");
    report->add_option("--reports", reports_path, "reports.jsonl path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (report->parsed()) return do_report(reports_path);
        auto cfg = load_config(app.get_subcommands().front(), args);
        if (sample->parsed()) {
            std::cout << crackle::cli::run_sample(cfg) << "\n";
        } else if (diagram->parsed()) {
            std::cout << crackle::cli::run_diagram(cfg, cloud_csv) << "\n";
        } else if (integrate->parsed()) {
            std::cout << crackle::cli::run_integrate(cfg) << "\n";
        } else if (verify->parsed()) {
            bool pass = crackle::cli::run_verify(cfg);
            std::cout << cfg.out_dir << "/reports.jsonl\n";
            return pass ? kOk : kAcceptanceFailure;
        } else if (plot->parsed()) {
            std::cout << crackle::cli::run_plot(cfg, diagram_csv) << "\n";
        }
        return kOk;
    } catch (const crackle::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const crackle::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}
