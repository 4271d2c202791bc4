#include "crackle/formats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crackle/error.hpp"
#include "crackle/limits.hpp"

namespace crackle::cli {

std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for digest: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_cloud_csv(const std::string& path, const model::PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write cloud: " + path);
    for (int j = 0; j < cloud.dim; ++j) out << (j ? "," : "") << "x" << j;
    out << "\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double* x = cloud.point(i);
        for (int j = 0; j < cloud.dim; ++j) out << (j ? "," : "") << format_real(x[j]);
        out << "\n";
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double cell_to_real(const std::string& cell, const std::string& path, int lineno) {
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw ParseError(path + ":" + std::to_string(lineno) + ": malformed number '" + cell +
                         "'");
    return v;
}

}  // namespace

model::PointCloud read_cloud_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cloud: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: missing header");
    auto header = split_csv(line);
    model::PointCloud cloud;
    cloud.dim = static_cast<int>(header.size());
    for (int j = 0; j < cloud.dim; ++j)
        if (header[j] != "x" + std::to_string(j))
            throw ParseError(path + ":1: expected header x0..x" + std::to_string(cloud.dim - 1));
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (static_cast<int>(cells.size()) != cloud.dim)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(cloud.dim) + " columns");
        for (const auto& cell : cells) cloud.coords.push_back(cell_to_real(cell, path, lineno));
    }
    return cloud;
}

void write_diagram_csv(const std::string& path, const std::vector<DiagramRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write diagram: " + path);
    out << "trial,component_id,m,dim,birth,death,birth_scaled,death_scaled\n";
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const DiagramRow& a, const DiagramRow& b) {
        if (a.trial != b.trial) return a.trial < b.trial;
        return a.birth_scaled < b.birth_scaled;
    });
    for (const auto& r : sorted)
        out << r.trial << "," << r.component_id << "," << r.m << "," << r.dim << ","
            << format_real(r.birth) << "," << format_real(r.death) << ","
            << format_real(r.birth_scaled) << "," << format_real(r.death_scaled) << "\n";
}

std::vector<DiagramRow> read_diagram_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open diagram: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: missing header");
    if (line != "trial,component_id,m,dim,birth,death,birth_scaled,death_scaled")
        throw ParseError(path + ":1: unexpected header");
    std::vector<DiagramRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != 8)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 8 columns");
        DiagramRow r;
        r.trial = static_cast<int>(cell_to_real(cells[0], path, lineno));
        r.component_id = static_cast<int>(cell_to_real(cells[1], path, lineno));
        r.m = static_cast<int>(cell_to_real(cells[2], path, lineno));
        r.dim = static_cast<int>(cell_to_real(cells[3], path, lineno));
        r.birth = cell_to_real(cells[4], path, lineno);
        r.death = cell_to_real(cells[5], path, lineno);
        r.birth_scaled = cell_to_real(cells[6], path, lineno);
        r.death_scaled = cell_to_real(cells[7], path, lineno);
        rows.push_back(r);
    }
    return rows;
}

void write_lambda_csv(const std::string& path, const std::vector<LambdaRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write lambda table: " + path);
    out << "region,kind,lambda,stderr,samples,acceptance_rate\n";
    for (const auto& r : rows)
        out << r.region << "," << r.kind << "," << format_real(r.lambda) << ","
            << format_real(r.stderr_) << "," << r.samples << ","
            << format_real(r.acceptance_rate) << "\n";
}

std::string render_diagram_svg(const std::vector<DiagramRow>& rows, int k, int p) {
    const double pi_kp = limits::pi_km(k, p);
    const double pi_kp1 = (p - 1 >= k + 2) ? limits::pi_km(k, p - 1) : 0.0;
    const double b_kp1 = (p - 1 >= k + 2) ? limits::b_km(k, p - 1) : 0.0;
    // confinement check before rendering: scaled pairs from size-m subsets
    // stay inside Delta_{k,m} (checked for cached m)
    for (const auto& r : rows) {
        if (auto hit = limits::ConstantsTable::instance().lookup(k, r.m)) {
            if (r.death_scaled > hit->pi * r.birth_scaled + 1e-9)
                throw Error("render_diagram_svg: pair outside Delta_{k,m}");
        }
    }
    double span = 1.0;
    for (const auto& r : rows) span = std::max(span, r.death_scaled);
    if (p - 1 >= k + 2) span = std::max(span, pi_kp1 * b_kp1);
    span *= 1.08;
    const int W = 640, H = 640, margin = 48;
    auto X = [&](double x) { return margin + x / span * (W - 2 * margin); };
    auto Y = [&](double y) { return H - margin - y / span * (H - 2 * margin); };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (p - 1 >= k + 2) {
        // deterministic part B_{k,p-1}: triangle (0,0) (b,b) (b, pi b)
        svg << "<polygon points=\"" << X(0) << "," << Y(0) << " " << X(b_kp1) << "," << Y(b_kp1)
            << " " << X(b_kp1) << "," << Y(pi_kp1 * b_kp1)
            << "\" fill=\"#9ecae1\" fill-opacity=\"0.55\" stroke=\"none\"/>\n";
    }
    // Delta_{k,p} boundary and the diagonal
    svg << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(span / pi_kp)
        << "\" y2=\"" << Y(span) << "\" stroke=\"#636363\" stroke-dasharray=\"6 4\"/>\n";
    svg << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(span) << "\" y2=\""
        << Y(span) << "\" stroke=\"#bdbdbd\"/>\n";
    static const char* palette[] = {"#e6550d", "#31a354", "#756bb1", "#d6616b",
                                    "#843c39", "#ce6dbd", "#8c6d31", "#393b79"};
    for (const auto& r : rows) {
        const char* color = palette[static_cast<unsigned>(std::max(r.m - 3, 0)) % 8];
        svg << "<circle cx=\"" << X(r.birth_scaled) << "\" cy=\"" << Y(r.death_scaled)
            << "\" r=\"2.6\" fill=\"" << color << "\" fill-opacity=\"0.75\"/>\n";
    }
    svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
        << "\" font-size=\"13\" text-anchor=\"middle\">birth / M</text>\n";
    svg << "<text x=\"14\" y=\"" << H / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << H / 2
        << ")\">death / M</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void Manifest::add_file(const std::string& path) {
    files.emplace_back(path, hex64(fnv1a64_file(path)));
}

void Manifest::write(const std::string& path) const {
    nlohmann::json j;
    j["tool_version"] = tool_version;
    j["constants_version"] = constants_version;
    j["config_hash"] = config_hash;
    j["started"] = started;
    j["finished"] = finished;
    auto arr = nlohmann::json::array();
    for (const auto& [p, digest] : files) {
        nlohmann::json f;
        f["path"] = p;
        f["digest"] = digest;
        arr.push_back(f);
    }
    j["files"] = arr;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace crackle::cli
