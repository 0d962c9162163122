#include "kfp/io.hpp"
#include "kfp/kernel.hpp"
#include "kfp/lab.hpp"
#include "kfp/norms.hpp"
#include "kfp/rearrangement.hpp"
#include "kfp/taylor.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace kfp;

namespace {

Geometry geometry_from_json_str(const std::string& text) {
  return Geometry(io::operator_from_json(nlohmann::json::parse(text)));
}

AnalyticField field_from_json_str(const Geometry& g, const std::string& text) {
  return io::function_from_json(g, nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "intrinsic geometry, kernels and quasi-norms of homogeneous kinetic "
            "Fokker-Planck operators";

  py::register_exception<StructureError>(m, "StructureError");
  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<KernelError>(m, "KernelError");

  py::class_<GroupPoint>(m, "GroupPoint")
      .def(py::init<double, Eigen::VectorXd>(), py::arg("t"), py::arg("x"))
      .def_readwrite("t", &GroupPoint::t)
      .def_readwrite("x", &GroupPoint::x)
      .def("__repr__", [](const GroupPoint& z) {
        std::ostringstream os;
        os << "GroupPoint(t=" << z.t << ", x=[";
        for (int i = 0; i < z.x.size(); ++i) os << (i ? ", " : "") << z.x[i];
        os << "])";
        return os.str();
      });

  py::class_<Geometry>(m, "Geometry")
      .def_static("from_operator_json", &geometry_from_json_str, py::arg("text"),
                  "build from the operator file format (json text)")
      .def_static("from_operator_file",
                  [](const std::string& path) { return Geometry(io::load_operator(path)); })
      .def_property_readonly("N", &Geometry::N)
      .def_property_readonly("r", &Geometry::r)
      .def_property_readonly("hom_dim", &Geometry::hom_dim)
      .def_property_readonly("nilpotency_degree", &Geometry::nilpotency_degree)
      .def_property_readonly("B", &Geometry::B)
      .def("check_hormander",
           [](const Geometry& g) {
             const auto cert = g.check_hormander(true);
             return py::make_tuple(cert.hormander, cert.rank, cert.min_eig_c1);
           },
           "returns (satisfied, kalman_rank, min_eig_C1)")
      .def("compose", &Geometry::compose)
      .def("invert", &Geometry::invert)
      .def("dilate", &Geometry::dilate)
      .def("hom_norm", &Geometry::hom_norm)
      .def("flow_y", &Geometry::flow_y)
      .def("flow_x", &Geometry::flow_x)
      .def("matrix_exp", &Geometry::matrix_exp)
      .def("commutator_field", &Geometry::commutator_field)
      .def("solve_layer_preimage", &Geometry::solve_layer_preimage, py::arg("n"),
           py::arg("target"), py::arg("tol") = 1e-10);

  py::class_<AnalyticField>(m, "AnalyticField")
      .def_static("from_json", &field_from_json_str, py::arg("geometry"), py::arg("text"))
      .def("__call__",
           [](const AnalyticField& u, const Eigen::VectorXd& z) { return u.eval_flat(z); })
      .def("dilated", &AnalyticField::dilated)
      .def("translated", &AnalyticField::translated)
      .def_property_readonly("supports_derivatives", &AnalyticField::supports_derivatives);

  py::class_<CovariancePolynomial>(m, "CovariancePolynomial")
      .def(py::init<const Geometry&>(), py::keep_alive<1, 2>())
      .def("eval", &CovariancePolynomial::eval)
      .def("eval_derivative", &CovariancePolynomial::eval_derivative);

  py::class_<KernelValue>(m, "KernelValue")
      .def_readonly("gamma", &KernelValue::gamma)
      .def_readonly("grad_d", &KernelValue::grad_d)
      .def_readonly("y_gamma", &KernelValue::y_gamma);

  m.def("gamma_eval", &gamma_eval, py::arg("covariance"), py::arg("z"));

  m.def(
      "norms",
      [](const Geometry& g, const AnalyticField& u, double p, int max_order, int npts) {
        NormOptions opts;
        if (npts > 0) opts.default_npts = npts;
        DField du(g, u, opts);
        std::vector<int> orders;
        for (int k = 1; k <= max_order; ++k) orders.push_back(k);
        const NormReport rep = norm_report(du, p, orders);
        py::dict out;
        out["lp"] = rep.lp;
        out["slobodeckij_y"] = rep.slobodeckij_y;
        py::dict semi, full, triple;
        for (const auto& [n, v] : rep.seminorms) semi[py::int_(n)] = v;
        for (const auto& [n, v] : rep.sobolev) full[py::int_(n)] = v;
        for (const auto& [n, v] : rep.triple) triple[py::int_(n)] = v;
        out["seminorm"] = semi;
        out["sobolev"] = full;
        out["triple"] = triple;
        return out;
      },
      py::arg("geometry"), py::arg("field"), py::arg("p") = 2.0, py::arg("max_order") = 2,
      py::arg("npts") = 0, "lp, Slobodeckij and intrinsic Sobolev quasi-norms");

  m.def(
      "taylor_remainder_slope",
      [](const Geometry& g, const AnalyticField& u, int n, double p) {
        GroupPoint zeta0(0.3, Eigen::VectorXd::Zero(g.N()));
        for (int c = 0; c < g.N(); ++c) zeta0.x[c] = 0.4 / (1.0 + c);
        std::vector<double> sigmas;
        for (int j = 0; j < 7; ++j) sigmas.push_back(0.2 * std::pow(1.35, j));
        NormOptions opts;
        opts.default_npts = 24;
        const ExponentFit fit = taylor_remainder_rate(u, g, n, p, zeta0, sigmas, opts);
        return py::make_tuple(fit.slope, fit.r2);
      },
      py::arg("geometry"), py::arg("field"), py::arg("n") = 1, py::arg("p") = 2.0);

  m.def(
      "lorentz_norm",
      [](const Geometry& g, const AnalyticField& u, double p, double q, int npts) {
        GridSpec spec(u.support(), std::vector<int>(static_cast<std::size_t>(g.N() + 1), npts));
        GridFunction gf =
            sample_fn([&](const Eigen::VectorXd& z) { return u.eval_flat(z); }, spec, 0);
        return lorentz_norm(Rearrangement::from_grid(gf), p, q);
      },
      py::arg("geometry"), py::arg("field"), py::arg("p"), py::arg("q"), py::arg("npts") = 33);

  m.def(
      "tartar_levels",
      [](const Geometry& g, const AnalyticField& u, int npts) {
        GridSpec spec(u.support(), std::vector<int>(static_cast<std::size_t>(g.N() + 1), npts));
        GridFunction gf =
            sample_fn([&](const Eigen::VectorXd& z) { return u.eval_flat(z); }, spec, 0);
        const TartarSequence ts = tartar_sequence(Rearrangement::from_grid(gf));
        return py::make_tuple(ts.ks, ts.a, ts.gaps);
      },
      py::arg("geometry"), py::arg("field"), py::arg("npts") = 33);

  m.def(
      "run_experiments",
      [](const std::string& config_json, const std::string& out_dir) {
        const auto results = run_config(nlohmann::json::parse(config_json));
        bool pass = true;
        py::list out;
        for (const auto& r : results) {
          py::dict d;
          d["name"] = r.name;
          d["pass"] = r.pass;
          d["verdict"] = r.verdict;
          if (r.has_fit) d["slope"] = r.slope;
          py::dict stats;
          for (const auto& [k, v] : r.stats) stats[py::str(k)] = v;
          d["stats"] = stats;
          out.append(d);
          pass = pass && r.pass;
        }
        if (!out_dir.empty()) emit_report(results, out_dir);
        return py::make_tuple(pass, out);
      },
      py::arg("config_json"), py::arg("out_dir") = std::string(),
      "run a lab config; returns (all_pass, results)");

  m.def("critical_exponent", &critical_exponent, py::arg("p"), py::arg("hom_dim"),
        py::arg("k") = 1);
  m.def("list_experiments", &list_experiments);
}
