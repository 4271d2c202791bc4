#include "crackle/driver.hpp"

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "crackle/error.hpp"
#include "crackle/formats.hpp"
#include "crackle/geom.hpp"

namespace crackle::cli {

namespace fs = std::filesystem;

std::uint64_t rung_seed(std::uint64_t master_seed, std::size_t rung) {
    std::uint64_t st = master_seed ^ (0xc2b2ae3d27d4eb4full * (rung + 1));
    return splitmix64(st);
}

namespace {

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

Manifest start_manifest(const RunConfig& cfg) {
    Manifest m;
    m.tool_version = kToolVersion;
    m.constants_version = limits::ConstantsTable::instance().version();
    m.config_hash = hex64(fnv1a64(cfg.raw_text));
    m.started = iso_now();
    return m;
}

void finish_manifest(Manifest& m, const std::string& out_dir) {
    m.finished = iso_now();
    m.write(out_dir + "/manifest.json");
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return cfg.out_dir + "/" + name;
}

double exp_tail_c(const RunConfig& cfg) {
    // c = lim a(R)/M; a(z) = z^{1-tau} diverges for tau < 1
    if (cfg.tau == 1.0) return 1.0 / cfg.M;
    return std::numeric_limits<double>::infinity();
}

}  // namespace

limits::LimitEstimate limit_measure(const RunConfig& cfg, const limits::RegionPtr& region,
                                    std::size_t samples, std::uint64_t seed) {
    if (cfg.tail_kind == model::TailKind::ParetoRV)
        return limits::mean_measure_heavy(region, cfg.k, cfg.p, cfg.alpha, cfg.dim, samples,
                                          seed);
    return limits::mean_measure_exp(region, cfg.k, cfg.p, exp_tail_c(cfg), cfg.dim, samples,
                                    seed);
}

std::string run_sample(const RunConfig& cfg) {
    if (cfg.n_ladder[0] > cfg.sample_budget)
        throw BudgetExceeded("sample: expected point count " + std::to_string(cfg.n_ladder[0]) +
                             " exceeds sample.budget = " + std::to_string(cfg.sample_budget));
    auto manifest = start_manifest(cfg);
    auto cloud = model::sample_cloud(cfg.tail(), cfg.n_ladder[0], cfg.master_seed);
    std::string path = out_path(cfg, "cloud.csv");
    write_cloud_csv(path, cloud);
    manifest.add_file(path);
    finish_manifest(manifest, cfg.out_dir);
    return path;
}

std::string run_diagram(const RunConfig& cfg, std::string cloud_csv) {
    auto manifest = start_manifest(cfg);
    auto plans = cfg.plans();
    const auto& plan = plans[0];
    ph::DiagramOptions dopts;
    dopts.m_cap = cfg.m_cap;
    std::vector<DiagramRow> rows;
    auto append = [&](const ph::CrackleDiagram& diag, int trial) {
        for (const auto& pr : diag.pairs) {
            DiagramRow r;
            r.trial = trial;
            r.component_id = pr.component_id;
            r.m = pr.component_size;
            r.dim = pr.dim;
            r.birth = pr.birth;
            r.death = pr.death;
            r.birth_scaled = pr.birth / plan.M;
            r.death_scaled = pr.death / plan.M;
            rows.push_back(r);
        }
    };
    if (!cloud_csv.empty()) {
        auto cloud = read_cloud_csv(cloud_csv);
        if (cloud.dim != plan.d) throw ConfigError("diagram: cloud dimension != plan dimension");
        append(ph::crackle_diagram(cloud, plan, dopts), 0);
    } else {
        model::RadialSampler sampler(plan.tail, std::max(0.0, plan.R - 2.0 * plan.M));
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            auto cloud = model::sample_cloud(plan.tail, sampler, plan.n,
                                             trial_seed(cfg.master_seed, t));
            append(ph::crackle_diagram(cloud, plan, dopts), static_cast<int>(t));
        }
    }
    std::string path = out_path(cfg, "diagram.csv");
    write_diagram_csv(path, rows);
    manifest.add_file(path);
    finish_manifest(manifest, cfg.out_dir);
    return path;
}

std::string run_integrate(const RunConfig& cfg) {
    auto manifest = start_manifest(cfg);
    std::vector<LambdaRow> rows;
    const std::string kind = cfg.tail_kind == model::TailKind::ParetoRV ? "heavy" : "exp";
    for (const auto& [name, region] : cfg.regions) {
        auto est = limit_measure(cfg, region, cfg.mc_samples, cfg.mc_seed);
        LambdaRow row;
        row.region = name;
        row.kind = kind;
        row.lambda = est.value;
        row.stderr_ = est.stderr_;
        row.samples = est.samples;
        row.acceptance_rate = est.acceptance_rate;
        rows.push_back(row);
    }
    std::string path = out_path(cfg, "lambda.csv");
    write_lambda_csv(path, rows);
    manifest.add_file(path);
    finish_manifest(manifest, cfg.out_dir);
    return path;
}

std::string report_to_json(const verify::TestReport& rep) {
    nlohmann::json j;
    j["name"] = rep.name;
    j["rule"] = rep.acceptance_rule;
    j["observed"] = rep.observed;
    j["reference"] = rep.reference;
    j["ref_stderr"] = rep.ref_stderr;
    if (rep.p_value) j["p_value"] = *rep.p_value;
    j["tolerance"] = rep.tolerance;
    j["pass"] = rep.pass;
    j["degenerate"] = rep.degenerate;
    nlohmann::json det;
    for (const auto& [key, val] : rep.details) det[key] = val;
    j["details"] = det;
    return j.dump();
}

bool run_verify(const RunConfig& cfg) {
    auto manifest = start_manifest(cfg);
    auto plans = cfg.plans();
    std::vector<verify::TestReport> reports;

    verify::BatchOptions bopts;
    bopts.threads = cfg.threads;
    bopts.diagram.m_cap = cfg.m_cap;
    bopts.census_sizes = {cfg.p};
    if (cfg.p - 1 >= cfg.k + 2) bopts.census_sizes.insert(bopts.census_sizes.begin(), cfg.p - 1);

    std::vector<verify::TrialBatch> ladder;
    for (std::size_t rung = 0; rung < plans.size(); ++rung)
        ladder.push_back(verify::run_trials(plans[rung], cfg.trials,
                                            rung_seed(cfg.master_seed, rung), bopts));

    // Poisson GOF + hit/miss on the configured test set, census oracle and
    // isolated diagram both reported
    if (cfg.regions.count(cfg.gof_region)) {
        auto region = cfg.region(cfg.gof_region);
        auto lam = limit_measure(cfg, region, cfg.mc_samples, cfg.mc_seed);
        for (std::size_t rung = 0; rung < ladder.size(); ++rung) {
            const std::string suffix =
                plans.size() > 1 ? "[n=" + std::to_string(plans[rung].n) + "]" : "";
            {
                auto counts =
                    ladder[rung].counts_in(region, cfg.p, ph::DiagramVariant::SubsetCensus);
                auto rep = verify::poisson_gof(counts, lam);
                rep.name = "poisson_gof.census" + suffix;
                if (lam.stderr_ > 0.05 * lam.value) {
                    rep.degenerate = true;
                    rep.acceptance_rule += "; degenerate: mc stderr/lambda >= 0.05";
                }
                reports.push_back(rep);
            }
            {
                auto counts = ladder[rung].counts_in(region, cfg.p, ph::DiagramVariant::Isolated);
                auto rep = verify::poisson_gof(counts, lam);
                rep.name = "poisson_gof.isolated" + suffix;
                reports.push_back(rep);
            }
            {
                auto counts =
                    ladder[rung].counts_in(region, cfg.p, ph::DiagramVariant::SubsetCensus);
                auto rep = verify::hit_miss_estimate(counts, lam);
                rep.name = "hit_miss.census" + suffix;
                reports.push_back(rep);
            }
        }
    }

    // moment scaling across the ladder
    if (plans.size() >= 2 && cfg.regions.count(cfg.gof_region)) {
        try {
            int m = (cfg.p - 1 >= cfg.k + 2) ? cfg.p - 1 : cfg.p;
            auto ms = verify::moment_scaling(ladder, cfg.region(cfg.gof_region), m,
                                             ph::DiagramVariant::SubsetCensus);
            verify::TestReport rep;
            rep.name = "moment_scaling";
            rep.acceptance_rule = "slope of log mean count vs log(n M^d f(R)) in [-1.15,-0.85]";
            rep.observed = ms.slope;
            rep.reference = -1.0;
            rep.ref_stderr = ms.slope_stderr;
            rep.tolerance = 0.15;
            rep.pass = ms.slope >= -1.15 && ms.slope <= -0.85;
            rep.details["slope_stderr"] = ms.slope_stderr;
            reports.push_back(rep);
        } catch (const Error& e) {
            verify::TestReport rep;
            rep.name = "moment_scaling";
            rep.acceptance_rule = e.what();
            rep.degenerate = true;
            reports.push_back(rep);
        }
    }

    // coverage of the deterministic region
    if (cfg.p >= cfg.k + 3) {
        limits::RegionPtr region = cfg.coverage_region.empty()
                                       ? limits::Region::b_km_region(cfg.k, cfg.p - 1)
                                       : cfg.region(cfg.coverage_region);
        auto cov = verify::coverage_fraction(ladder, region, cfg.coverage_eps, cfg.p - 1,
                                             ph::DiagramVariant::SubsetCensus);
        verify::TestReport rep;
        rep.name = "coverage";
        rep.acceptance_rule = "mean covered fraction non-decreasing; >= 0.95 at top rung";
        rep.observed = cov.mean_fraction.back();
        rep.reference = 0.95;
        rep.pass = cov.non_decreasing && cov.mean_fraction.back() >= 0.95;
        for (std::size_t i = 0; i < cov.mean_fraction.size(); ++i) {
            rep.details["fraction_rung" + std::to_string(i)] = cov.mean_fraction[i];
            rep.details["pooled_rung" + std::to_string(i)] = cov.pooled_fraction[i];
        }
        rep.details["cells"] = static_cast<double>(cov.cells);
        reports.push_back(rep);
    }

    // maximal lifespan law
    if (cfg.lifespan_t > 0.0) {
        auto jt = limits::Region::j_t(cfg.lifespan_t, cfg.k, cfg.p);
        auto lam_jt = limit_measure(cfg, jt, cfg.mc_samples, cfg.mc_seed + 1);
        auto rep = verify::lifespan_law(ladder.back(), cfg.lifespan_t, cfg.lifespan_delta,
                                        lam_jt, ph::DiagramVariant::SubsetCensus);
        reports.push_back(rep);
    }

    std::string path = out_path(cfg, "reports.jsonl");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write reports: " + path);
    bool overall = true;
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& rep : reports) {
        out << report_to_json(rep) << "\n";
        if (!rep.degenerate && !rep.pass) {
            overall = false;
            failed.push_back(rep.name);
        }
    }
    nlohmann::json summary;
    summary["summary"] = {{"pass", overall},
                          {"reports", reports.size()},
                          {"failed", failed}};
    out << summary.dump() << "\n";
    out.close();
    manifest.add_file(path);
    finish_manifest(manifest, cfg.out_dir);
    return overall;
}

std::string run_plot(const RunConfig& cfg, const std::string& diagram_csv) {
    auto manifest = start_manifest(cfg);
    auto rows = read_diagram_csv(diagram_csv);
    std::string svg = render_diagram_svg(rows, cfg.k, cfg.p);
    std::string path = out_path(cfg, "diagram.svg");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write svg: " + path);
    out << svg;
    out.close();
    manifest.add_file(path);
    finish_manifest(manifest, cfg.out_dir);
    return path;
}

}  // namespace crackle::cli
