#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crackle/driver.hpp"
#include "crackle/error.hpp"
#include "crackle/geom.hpp"
#include "crackle/limits.hpp"
#include "crackle/model.hpp"
#include "crackle/ph.hpp"
#include "crackle/verify.hpp"

namespace py = pybind11;
using namespace crackle;

namespace {

model::PointCloud cloud_from_list(const std::vector<std::vector<double>>& pts) {
    model::PointCloud cloud;
    if (pts.empty()) {
        cloud.dim = 2;
        return cloud;
    }
    cloud.dim = static_cast<int>(pts[0].size());
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != cloud.dim)
            throw std::invalid_argument("points must share one dimension");
        cloud.coords.insert(cloud.coords.end(), p.begin(), p.end());
    }
    return cloud;
}

std::vector<std::vector<double>> cloud_to_list(const model::PointCloud& cloud) {
    std::vector<std::vector<double>> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        out[i].assign(cloud.point(i), cloud.point(i) + cloud.dim);
    return out;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& pts, int& dim) {
    auto cloud = cloud_from_list(pts);
    dim = cloud.dim;
    return cloud.coords;
}

py::dict pair_to_dict(const ph::PersistencePair& pr) {
    py::dict d;
    d["birth"] = pr.birth;
    d["death"] = pr.death;
    d["dim"] = pr.dim;
    d["m"] = pr.component_size;
    return d;
}

// shared_ptr<const Region> is not a pybind holder type; expose a thin handle
struct PyRegion {
    limits::RegionPtr ptr;
};

}  // namespace

PYBIND11_MODULE(_crackle, m) {
    m.doc() = "topological crackle simulation: tail models, Cech persistence, "
              "limit-measure estimates, statistical verification";

    py::register_exception<crackle::Error>(m, "CrackleError");

    py::enum_<model::TailKind>(m, "TailKind")
        .value("ParetoRV", model::TailKind::ParetoRV)
        .value("VonMisesPower", model::TailKind::VonMisesPower);

    py::class_<model::TailModel>(m, "TailModel")
        .def_static("pareto", &model::TailModel::pareto, py::arg("alpha"), py::arg("dim"))
        .def_static("von_mises_power", &model::TailModel::von_mises_power, py::arg("tau"),
                    py::arg("dim"))
        .def_readonly("dim", &model::TailModel::dim)
        .def_readonly("alpha", &model::TailModel::alpha)
        .def_readonly("tau", &model::TailModel::tau)
        .def_readonly("norm_const", &model::TailModel::norm_const)
        .def("radial_density", &model::TailModel::radial_density, py::arg("rho"))
        .def("tail_mass", &model::TailModel::tail_mass, py::arg("r"));

    m.def("normalize", &model::normalize, py::arg("kind"), py::arg("param"), py::arg("dim"));
    m.def("solve_R_heavy", &model::solve_R_heavy, py::arg("tail"), py::arg("n"), py::arg("M"),
          py::arg("p"));
    m.def("solve_R_exp", &model::solve_R_exp, py::arg("tail"), py::arg("n"), py::arg("M"),
          py::arg("p"));

    py::enum_<model::Regime>(m, "Regime")
        .value("Critical", model::Regime::Critical)
        .value("Subcritical", model::Regime::Subcritical);

    py::class_<model::ScalingPlan>(m, "ScalingPlan")
        .def_readonly("d", &model::ScalingPlan::d)
        .def_readonly("k", &model::ScalingPlan::k)
        .def_readonly("p", &model::ScalingPlan::p)
        .def_readonly("n", &model::ScalingPlan::n)
        .def_readonly("M", &model::ScalingPlan::M)
        .def_readonly("R", &model::ScalingPlan::R)
        .def("scaling_residual", &model::ScalingPlan::scaling_residual);

    m.def("make_plan", &model::make_plan, py::arg("tail"), py::arg("k"), py::arg("p"),
          py::arg("n"), py::arg("M"), py::arg("regime") = model::Regime::Critical,
          py::arg("kappa") = 1.5);

    m.def(
        "sample_cloud",
        [](const model::TailModel& tail, double n, std::uint64_t seed, double rmin) {
            return cloud_to_list(model::sample_cloud(tail, n, seed, rmin));
        },
        py::arg("tail"), py::arg("n"), py::arg("seed"), py::arg("rmin") = 0.0);

    m.def(
        "meb_radius",
        [](const std::vector<std::vector<double>>& pts) {
            int dim = 0;
            auto flat = flatten(pts, dim);
            return geom::meb_radius(flat, dim);
        },
        py::arg("points"));

    m.def(
        "cech_filtration",
        [](const std::vector<std::vector<double>>& pts, int max_dim, double cap) {
            int dim = 0;
            auto flat = flatten(pts, dim);
            auto filt = geom::cech_filtration(flat, dim, max_dim, cap);
            std::vector<std::pair<std::vector<int>, double>> out;
            for (const auto& s : filt.simplices) out.emplace_back(s.vertices, s.value);
            return out;
        },
        py::arg("points"), py::arg("max_dim"), py::arg("value_cap") = geom::kNoCap);

    m.def(
        "components_at",
        [](const std::vector<std::vector<double>>& pts, double M) {
            auto cloud = cloud_from_list(pts);
            auto part = geom::components_at(cloud, M);
            return part.labels;
        },
        py::arg("points"), py::arg("M"));

    m.def(
        "persistence_pairs",
        [](const std::vector<std::vector<double>>& pts, int k) {
            int dim = 0;
            auto flat = flatten(pts, dim);
            auto filt = geom::cech_filtration(flat, dim, k + 1);
            py::list out;
            for (const auto& pr : ph::reduce(filt, k)) out.append(pair_to_dict(pr));
            return out;
        },
        py::arg("points"), py::arg("k") = 1);

    m.def(
        "naive_diagram_oracle",
        [](const std::vector<std::vector<double>>& pts, int k) {
            int dim = 0;
            auto flat = flatten(pts, dim);
            py::list out;
            for (const auto& pr : ph::naive_diagram_oracle(flat, dim, k))
                out.append(pair_to_dict(pr));
            return out;
        },
        py::arg("points"), py::arg("k") = 1);

    m.def(
        "crackle_diagram",
        [](const std::vector<std::vector<double>>& pts, const model::ScalingPlan& plan,
           const std::string& variant, int census_m) {
            auto cloud = cloud_from_list(pts);
            ph::CrackleDiagram diag;
            if (variant == "isolated") diag = ph::crackle_diagram(cloud, plan);
            else if (variant == "connected") diag = ph::crackle_diagram_tilde(cloud, plan);
            else if (variant == "census")
                diag = ph::subset_census_diagram(cloud, plan, census_m);
            else throw std::invalid_argument("variant: isolated | connected | census");
            py::list out;
            for (const auto& pr : diag.pairs) out.append(pair_to_dict(pr));
            return out;
        },
        py::arg("points"), py::arg("plan"), py::arg("variant") = "isolated",
        py::arg("census_m") = 3);

    m.def(
        "restrict_far",
        [](const std::vector<std::vector<double>>& pts, double R) {
            return cloud_to_list(geom::restrict_far(cloud_from_list(pts), R));
        },
        py::arg("points"), py::arg("R"));

    m.def(
        "lifespan_max",
        [](const std::vector<std::pair<double, double>>& scaled_pairs, double t) {
            ph::CrackleDiagram diag;
            diag.M = 1.0;
            for (auto [b, d] : scaled_pairs) {
                ph::PersistencePair pr;
                pr.birth = b;
                pr.death = d;
                diag.pairs.push_back(pr);
            }
            return ph::lifespan_max(diag, t);
        },
        py::arg("scaled_pairs"), py::arg("t"));

    m.def("pi_km", [](int k, int mm) { return limits::pi_km(k, mm); }, py::arg("k"),
          py::arg("m"));
    m.def("b_km", [](int k, int mm) { return limits::b_km(k, mm); }, py::arg("k"), py::arg("m"));

    py::class_<PyRegion>(m, "Region")
        .def_static("delta", [] { return PyRegion{limits::Region::delta()}; })
        .def_static("delta_km",
                    [](int k, int mm) { return PyRegion{limits::Region::delta_km(k, mm)}; })
        .def_static("b_km",
                    [](int k, int mm) { return PyRegion{limits::Region::b_km_region(k, mm)}; })
        .def_static("rect",
                    [](double x0, double x1, double y0, double y1) {
                        return PyRegion{limits::Region::rect(x0, x1, y0, y1)};
                    })
        .def_static("i_t", [](double t) { return PyRegion{limits::Region::i_t(t)}; })
        .def_static("j_t",
                    [](double t, int k, int p) { return PyRegion{limits::Region::j_t(t, k, p)}; })
        .def_static("intersect",
                    [](const std::vector<PyRegion>& parts) {
                        std::vector<limits::RegionPtr> ptrs;
                        for (const auto& p : parts) ptrs.push_back(p.ptr);
                        return PyRegion{limits::Region::intersect(std::move(ptrs))};
                    })
        .def("contains",
             [](const PyRegion& r, double x, double y, double tol) {
                 return r.ptr->contains(x, y, tol);
             },
             py::arg("x"), py::arg("y"), py::arg("tol") = 1e-9)
        .def("shrink", [](const PyRegion& r, double eps) { return PyRegion{r.ptr->shrink(eps)}; })
        .def("grid_centers",
             [](const PyRegion& r, double eps) { return r.ptr->grid_centers(eps); })
        .def("describe", [](const PyRegion& r) { return r.ptr->describe(); });

    py::class_<limits::LimitEstimate>(m, "LimitEstimate")
        .def_readonly("value", &limits::LimitEstimate::value)
        .def_readonly("stderr", &limits::LimitEstimate::stderr_)
        .def_readonly("samples", &limits::LimitEstimate::samples)
        .def_readonly("acceptance_rate", &limits::LimitEstimate::acceptance_rate)
        .def_readonly("coefficient", &limits::LimitEstimate::coefficient);

    m.def(
        "mean_measure_heavy",
        [](const PyRegion& region, int k, int p, double alpha, int d, std::size_t samples,
           std::uint64_t seed) {
            return limits::mean_measure_heavy(region.ptr, k, p, alpha, d, samples, seed);
        },
        py::arg("region"), py::arg("k"), py::arg("p"), py::arg("alpha"), py::arg("d"),
        py::arg("samples"), py::arg("seed"));
    m.def(
        "mean_measure_exp",
        [](const PyRegion& region, int k, int p, double c, int d, std::size_t samples,
           std::uint64_t seed) {
            return limits::mean_measure_exp(region.ptr, k, p, c, d, samples, seed);
        },
        py::arg("region"), py::arg("k"), py::arg("p"), py::arg("c"), py::arg("d"),
        py::arg("samples"), py::arg("seed"));
    m.def(
        "ball_union_mass",
        [](const std::vector<std::vector<double>>& centers, double r,
           const model::TailModel& tail, std::size_t samples, std::uint64_t seed) {
            auto cloud = cloud_from_list(centers);
            return limits::ball_union_mass(cloud.coords, cloud.dim, r, tail, samples, seed);
        },
        py::arg("centers"), py::arg("r"), py::arg("tail"), py::arg("samples"), py::arg("seed"));

    m.attr("__version__") = cli::kToolVersion;
}
