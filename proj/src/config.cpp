#include "crackle/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "crackle/error.hpp"

namespace crackle::cli {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& v, const std::string& key) {
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: bad real for key '" + key + "': " + v);
    return x;
}

long long parse_int(const std::string& v, const std::string& key) {
    double x = parse_real(v, key);
    long long i = static_cast<long long>(x);
    if (static_cast<double>(i) != x)
        throw ConfigError("config: expected integer for key '" + key + "': " + v);
    return i;
}

std::vector<double> parse_reals(const std::string& v, const std::string& key) {
    std::istringstream ss(v);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(parse_real(tok, key));
    if (out.empty()) throw ConfigError("config: empty list for key '" + key + "'");
    return out;
}

std::string fmt_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key " + key);
        kv[key] = value;
    }
    std::set<std::string> used;
    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        used.insert(key);
        return it->second;
    };
    if (auto v = take("tail.kind")) {
        if (*v == "pareto") cfg.tail_kind = model::TailKind::ParetoRV;
        else if (*v == "vonmises") cfg.tail_kind = model::TailKind::VonMisesPower;
        else throw ConfigError("config: tail.kind must be pareto or vonmises");
    }
    if (auto v = take("tail.alpha")) cfg.alpha = parse_real(*v, "tail.alpha");
    if (auto v = take("tail.tau")) cfg.tau = parse_real(*v, "tail.tau");
    if (auto v = take("tail.dim")) cfg.dim = static_cast<int>(parse_int(*v, "tail.dim"));
    if (auto v = take("plan.k")) cfg.k = static_cast<int>(parse_int(*v, "plan.k"));
    if (auto v = take("plan.p")) cfg.p = static_cast<int>(parse_int(*v, "plan.p"));
    if (auto v = take("plan.n")) cfg.n_ladder = {parse_real(*v, "plan.n")};
    if (auto v = take("plan.ladder")) cfg.n_ladder = parse_reals(*v, "plan.ladder");
    if (auto v = take("plan.M")) cfg.M = parse_real(*v, "plan.M");
    if (auto v = take("plan.regime")) {
        if (*v == "critical") cfg.regime = model::Regime::Critical;
        else if (*v == "subcritical") cfg.regime = model::Regime::Subcritical;
        else throw ConfigError("config: plan.regime must be critical or subcritical");
    }
    if (auto v = take("plan.kappa")) cfg.kappa = parse_real(*v, "plan.kappa");
    if (auto v = take("trials")) cfg.trials = static_cast<std::size_t>(parse_int(*v, "trials"));
    if (auto v = take("master_seed"))
        cfg.master_seed = static_cast<std::uint64_t>(parse_int(*v, "master_seed"));
    if (auto v = take("threads")) cfg.threads = static_cast<int>(parse_int(*v, "threads"));
    if (auto v = take("out")) cfg.out_dir = *v;
    if (auto v = take("mc.samples"))
        cfg.mc_samples = static_cast<std::size_t>(parse_int(*v, "mc.samples"));
    if (auto v = take("mc.seed")) cfg.mc_seed = static_cast<std::uint64_t>(parse_int(*v, "mc.seed"));
    if (auto v = take("diagram.m_cap")) cfg.m_cap = static_cast<int>(parse_int(*v, "diagram.m_cap"));
    if (auto v = take("sample.budget")) cfg.sample_budget = parse_real(*v, "sample.budget");
    if (auto v = take("gof.region")) cfg.gof_region = *v;
    if (auto v = take("coverage.eps")) cfg.coverage_eps = parse_real(*v, "coverage.eps");
    if (auto v = take("coverage.region")) cfg.coverage_region = *v;
    if (auto v = take("lifespan.t")) cfg.lifespan_t = parse_real(*v, "lifespan.t");
    if (auto v = take("lifespan.delta")) cfg.lifespan_delta = parse_real(*v, "lifespan.delta");
    // named regions: region.<name>.<primitive>, intersected in fixed order
    std::set<std::string> region_names;
    for (const auto& [key, value] : kv) {
        if (key.rfind("region.", 0) != 0) continue;
        auto rest = key.substr(7);
        auto dot = rest.find('.');
        if (dot == std::string::npos)
            throw ConfigError("config: region keys look like region.<name>.<primitive>");
        region_names.insert(rest.substr(0, dot));
    }
    for (const auto& name : region_names) {
        std::vector<limits::RegionPtr> parts;
        const std::string base = "region." + name + ".";
        auto take = [&](const std::string& key) -> std::optional<std::string> {
            auto it = kv.find(key);
            if (it == kv.end()) return std::nullopt;
            used.insert(key);
            cfg.region_specs[name][key.substr(base.size())] = it->second;
            return it->second;
        };
        if (auto v = take(base + "rect")) {
            auto r = parse_reals(*v, base + "rect");
            if (r.size() != 4) throw ConfigError("config: " + base + "rect needs 4 numbers");
            parts.push_back(limits::Region::rect(r[0], r[1], r[2], r[3]));
        }
        if (auto v = take(base + "delta_km")) {
            auto r = parse_reals(*v, base + "delta_km");
            if (r.size() != 2) throw ConfigError("config: " + base + "delta_km needs k m");
            parts.push_back(limits::Region::delta_km(static_cast<int>(r[0]),
                                                     static_cast<int>(r[1])));
        }
        if (auto v = take(base + "b_km")) {
            auto r = parse_reals(*v, base + "b_km");
            if (r.size() != 2) throw ConfigError("config: " + base + "b_km needs k m");
            parts.push_back(limits::Region::b_km_region(static_cast<int>(r[0]),
                                                        static_cast<int>(r[1])));
        }
        if (auto v = take(base + "i_t")) {
            parts.push_back(limits::Region::i_t(parse_real(*v, base + "i_t")));
        }
        if (auto v = take(base + "j_t")) {
            auto r = parse_reals(*v, base + "j_t");
            if (r.size() != 3) throw ConfigError("config: " + base + "j_t needs t k p");
            parts.push_back(limits::Region::j_t(r[0], static_cast<int>(r[1]),
                                                static_cast<int>(r[2])));
        }
        if (parts.empty()) throw ConfigError("config: region '" + name + "' has no primitives");
        limits::RegionPtr region =
            parts.size() == 1 ? parts[0] : limits::Region::intersect(parts);
        if (auto v = take(base + "shrink"))
            region = region->shrink(parse_real(*v, base + "shrink"));
        cfg.regions[name] = region;
    }
    for (const auto& [key, value] : kv)
        if (!used.count(key)) throw ConfigError("config: unknown key '" + key + "'");
    if (cfg.n_ladder.empty()) throw ConfigError("config: plan.n or plan.ladder is required");
    cfg.raw_text = cfg.serialize();
    return cfg;
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    out << "tail.kind = "
        << (tail_kind == model::TailKind::ParetoRV ? "pareto" : "vonmises") << "\n";
    if (tail_kind == model::TailKind::ParetoRV)
        out << "tail.alpha = " << fmt_real(alpha) << "\n";
    else
        out << "tail.tau = " << fmt_real(tau) << "\n";
    out << "tail.dim = " << dim << "\n";
    out << "plan.k = " << k << "\n";
    out << "plan.p = " << p << "\n";
    if (n_ladder.size() == 1) {
        out << "plan.n = " << fmt_real(n_ladder[0]) << "\n";
    } else {
        out << "plan.ladder =";
        for (double n : n_ladder) out << " " << fmt_real(n);
        out << "\n";
    }
    out << "plan.M = " << fmt_real(M) << "\n";
    out << "plan.regime = "
        << (regime == model::Regime::Critical ? "critical" : "subcritical") << "\n";
    out << "plan.kappa = " << fmt_real(kappa) << "\n";
    out << "trials = " << trials << "\n";
    out << "master_seed = " << master_seed << "\n";
    out << "threads = " << threads << "\n";
    out << "out = " << out_dir << "\n";
    out << "mc.samples = " << mc_samples << "\n";
    out << "mc.seed = " << mc_seed << "\n";
    out << "diagram.m_cap = " << m_cap << "\n";
    out << "sample.budget = " << fmt_real(sample_budget) << "\n";
    out << "gof.region = " << gof_region << "\n";
    out << "coverage.eps = " << fmt_real(coverage_eps) << "\n";
    if (!coverage_region.empty()) out << "coverage.region = " << coverage_region << "\n";
    out << "lifespan.t = " << fmt_real(lifespan_t) << "\n";
    out << "lifespan.delta = " << fmt_real(lifespan_delta) << "\n";
    for (const auto& [name, spec] : region_specs)
        for (const auto& [prim, value] : spec)
            out << "region." << name << "." << prim << " = " << value << "\n";
    return out.str();
}

model::TailModel RunConfig::tail() const {
    return tail_kind == model::TailKind::ParetoRV ? model::TailModel::pareto(alpha, dim)
                                                  : model::TailModel::von_mises_power(tau, dim);
}

std::vector<model::ScalingPlan> RunConfig::plans() const {
    auto t = tail();
    std::vector<model::ScalingPlan> out;
    for (double n : n_ladder) out.push_back(model::make_plan(t, k, p, n, M, regime, kappa));
    return out;
}

limits::RegionPtr RunConfig::region(const std::string& name) const {
    auto it = regions.find(name);
    if (it == regions.end()) throw ConfigError("config: region '" + name + "' is not defined");
    return it->second;
}

}  // namespace crackle::cli
