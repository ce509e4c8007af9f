#include "fpreg/analytic.hpp"
#include "fpreg/config.hpp"
#include "fpreg/density.hpp"
#include "fpreg/particles.hpp"
#include "fpreg/pipeline.hpp"
#include "fpreg/point_cloud.hpp"

#include <map>
#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace fpreg;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

std::vector<Vec2> to_points(const Points& m) {
  std::vector<Vec2> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
  return out;
}

Points from_points(const std::vector<Vec2>& p) {
  Points m(static_cast<Eigen::Index>(p.size()), 2);
  for (std::size_t i = 0; i < p.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = p[i].transpose();
  return m;
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_fpreg, m) {
  m.doc() = "Point-set registration by Fokker-Planck transport";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<TriangleMesh, std::shared_ptr<TriangleMesh>>(m, "TriangleMesh")
      .def_property_readonly("num_vertices", &TriangleMesh::num_vertices)
      .def_property_readonly("num_triangles", &TriangleMesh::num_triangles)
      .def_property_readonly("max_diameter", &TriangleMesh::max_diameter)
      .def_property_readonly("vertices", [](const TriangleMesh& t) { return from_points(t.vertices()); })
      .def("area", &TriangleMesh::area)
      .def("locate", [](const TriangleMesh& t, const Vec2& x) { return locate_point(t, x).triangle; })
      .def("boundary_distance", [](const TriangleMesh& t, const Vec2& x) { return boundary_distance(t, x); });

  m.def(
      "generate_mesh",
      [](std::pair<double, double> x, std::pair<double, double> y, const Vec2& hole_center, double hole_radius,
         double h) {
        RectWithHole d;
        d.x = {x.first, x.second};
        d.y = {y.first, y.second};
        d.hole_center = hole_center;
        d.hole_radius = hole_radius;
        return std::make_shared<TriangleMesh>(generate_rect_with_hole(d, h));
      },
      py::arg("x"), py::arg("y"), py::arg("hole_center") = Vec2(0, 0), py::arg("hole_radius") = 0.5, py::arg("h"));

  m.def(
      "fp_gaussian_1d",
      [](double mu, double gamma2, double sigma2, double t) {
        const auto g = fp_gaussian_1d({mu, gamma2, sigma2}, t);
        return std::make_pair(g.mean, g.var);
      },
      py::arg("mu"), py::arg("gamma2"), py::arg("sigma2"), py::arg("t"),
      "Mean and variance of the 1D Ornstein-Uhlenbeck Fokker-Planck solution at time t.");

  m.def(
      "arc_cloud",
      [](double theta0, double dtheta, std::size_t n, double noise, std::uint64_t seed) {
        return from_points(generate_arc_cloud({theta0, dtheta, n, noise}, seed));
      },
      py::arg("theta0"), py::arg("dtheta"), py::arg("n") = 141, py::arg("noise") = 0.1, py::arg("seed") = 0);

  m.def("hausdorff", [](const Points& a, const Points& b) { return hausdorff(to_points(a), to_points(b)); });

  py::class_<Gmm>(m, "Gmm")
      .def(py::init([](std::vector<double> w, const Points& means, std::vector<Mat2> covs) {
             return Gmm(std::move(w), to_points(means), std::move(covs));
           }),
           py::arg("weights"), py::arg("means"), py::arg("covs"))
      .def_property_readonly("k", &Gmm::k)
      .def_property_readonly("weights", &Gmm::weights)
      .def_property_readonly("means", [](const Gmm& g) { return from_points(g.means()); })
      .def_property_readonly("covs", &Gmm::covs)
      .def("logpdf", [](const Gmm& g, const Vec2& x) { return gmm_logpdf(g, x); })
      .def("pdf", [](const Gmm& g, const Vec2& x) { return gmm_pdf(g, x); })
      .def("grad_potential", [](const Gmm& g, const Vec2& x) { return gmm_grad_potential(g, x); })
      .def("sample", [](const Gmm& g, std::size_t n, std::uint64_t seed) { return from_points(sample(g, n, seed)); });

  m.def(
      "fit_gmm",
      [](const Points& pts, int k_min, int k_max, std::uint64_t seed, double cov_reg) {
        EmOptions o;
        o.cov_reg = cov_reg;
        auto [g, r] = select_by_aic(to_points(pts), k_min, k_max, seed, o);
        py::dict report;
        report["aic"] = r.aic;
        report["loglik"] = r.loglik;
        report["iterations"] = r.iterations;
        report["converged"] = r.converged;
        report["aic_by_k"] = r.aic_by_k;
        return std::make_pair(g, report);
      },
      py::arg("points"), py::arg("k_min") = 1, py::arg("k_max") = 8, py::arg("seed") = 0, py::arg("cov_reg") = 1e-2,
      "AIC-selected mixture fit; returns (Gmm, report).");

  m.def(
      "load_config", [](const std::filesystem::path& p) { return json_to_py(config_to_json(load_config(p))); },
      "Parsed and validated run configuration, as a dict with defaults filled in.");

  m.def(
      "run",
      [](const std::string& command, const std::filesystem::path& config, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed) {
        RunConfig cfg = load_config(config);
        if (seed) cfg.seed = *seed;
        const std::map<std::string, void (*)(const RunConfig&, const std::filesystem::path&)> commands = {
            {"meshgen", cmd_meshgen}, {"fitgmm", cmd_fitgmm}, {"gencloud", cmd_gencloud},
            {"solve", cmd_solve},     {"trace", cmd_trace},   {"report", cmd_report}};
        const auto it = commands.find(command);
        if (it == commands.end()) throw InvalidArgument("unknown command '" + command + "'");
        py::gil_scoped_release release;
        it->second(cfg, out);
      },
      py::arg("command"), py::arg("config"), py::arg("out"), py::arg("seed") = py::none(),
      "Runs one pipeline command, as the fpreg executable does.");
}
