// kfplab: intrinsic geometry, kernels, quasi-norms and embedding experiments
// for homogeneous kinetic Fokker-Planck operators.

#include "kfp/io.hpp"
#include "kfp/kernel.hpp"
#include "kfp/lab.hpp"
#include "kfp/norms.hpp"
#include "kfp/rearrangement.hpp"
#include "kfp/taylor.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace kfp;

Geometry load_geometry(const std::string& path) { return Geometry(io::load_operator(path)); }

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int cmd_structure_check(const std::string& file) {
  Geometry g = load_geometry(file);
  const auto cert = g.check_hormander(true);
  std::cout << "operator file:      " << file << "\n";
  std::cout << "space dimension N:  " << g.N() << "\n";
  std::cout << "layers r:           " << g.r() << "\n";
  std::cout << "homogeneous dim:    " << g.hom_dim() << "\n";
  std::cout << "nilpotency degree:  " << g.nilpotency_degree() << "\n";
  std::cout << "Kalman rank:        " << cert.rank << " / " << g.N() << "\n";
  std::cout << "Hormander:          " << (cert.hormander ? "satisfied" : "VIOLATED") << "\n";
  std::cout << "min eig C_1:        " << io::format_double(cert.min_eig_c1) << "\n";
  return cert.hormander ? 0 : 1;
}

int cmd_kernel_eval(const std::string& file, double t, const std::string& xs) {
  Geometry g = load_geometry(file);
  const std::vector<double> xv = parse_grid(xs);
  if (static_cast<int>(xv.size()) != g.N())
    throw ValidationError("kernel eval: expected " + std::to_string(g.N()) + " space coordinates");
  CovariancePolynomial cp(g);
  GroupPoint z(t, Eigen::Map<const Eigen::VectorXd>(xv.data(), g.N()));
  const KernelValue kv = gamma_eval(cp, z);
  std::cout << "gamma:    " << io::format_double(kv.gamma) << "\n";
  std::cout << "grad_d:  ";
  for (int i = 0; i < kv.grad_d.size(); ++i) std::cout << " " << io::format_double(kv.grad_d[i]);
  std::cout << "\n";
  std::cout << "y_gamma:  " << io::format_double(kv.y_gamma) << "\n";
  std::cout << "hom_norm: " << io::format_double(g.hom_norm(z)) << "\n";
  return 0;
}

int cmd_kernel_bounds(const std::string& file, int samples, const std::string& csv) {
  Geometry g = load_geometry(file);
  CovariancePolynomial cp(g);
  KernelSampleSpec spec;
  spec.nt = std::max(9, samples);
  spec.nx = std::max(9, samples / 2 + 1);
  const auto rep = kernel_bound_check(cp, spec);
  std::cout << "samples:                  " << rep.samples << "\n";
  std::cout << "sup |z|^{d-2} Gamma:      " << io::format_double(rep.sup_gamma_ratio) << "\n";
  std::cout << "sup |z|^{d}   |Y Gamma|:  " << io::format_double(rep.sup_ygamma_ratio) << "\n";

  if (!csv.empty()) {
    // one row per sampled direction, rescaled to the unit homogeneous sphere
    std::vector<std::string> cols = {"t"};
    for (int c = 0; c < g.N(); ++c) cols.push_back("x" + std::to_string(c + 1));
    cols.insert(cols.end(), {"gamma", "y_gamma", "hom_norm", "bound_ratio_gamma", "bound_ratio_y"});
    std::vector<std::vector<double>> rows;
    const int nt = 9, nx = 7;
    for (int it = 0; it < nt; ++it) {
      const double t = spec.t_min * std::pow(spec.t_max / spec.t_min, it / (nt - 1.0));
      std::int64_t total = 1;
      for (int c = 0; c < g.N(); ++c) total *= nx;
      for (std::int64_t flat = 0; flat < total; ++flat) {
        std::int64_t rest = flat;
        GroupPoint z(t, Eigen::VectorXd(g.N()));
        for (int c = g.N() - 1; c >= 0; --c) {
          z.x[c] = -spec.x_half_width +
                   2.0 * spec.x_half_width * static_cast<double>(rest % nx) / (nx - 1);
          rest /= nx;
        }
        const double nrm0 = g.hom_norm(z);
        if (nrm0 == 0.0) continue;
        const GroupPoint zn = g.dilate(1.0 / nrm0, z);
        const KernelValue kv = gamma_eval(cp, zn);
        const double nrm = g.hom_norm(zn);
        std::vector<double> row = {zn.t};
        for (int c = 0; c < g.N(); ++c) row.push_back(zn.x[c]);
        row.push_back(kv.gamma);
        row.push_back(kv.y_gamma);
        row.push_back(nrm);
        row.push_back(std::pow(nrm, g.hom_dim() - 2) * kv.gamma);
        row.push_back(std::pow(nrm, g.hom_dim()) * std::abs(kv.y_gamma));
        rows.push_back(std::move(row));
      }
    }
    io::write_csv(csv, cols, rows);
    std::cout << "csv:                      " << csv << "\n";
  }
  return 0;
}

int cmd_norm_compute(const std::string& op_file, const std::string& fn_file, int n, double p,
                     const std::string& variant, int npts, const std::string& csv) {
  Geometry g = load_geometry(op_file);
  AnalyticField u = io::load_function_spec(g, fn_file);
  NormOptions opts;
  if (npts > 0) opts.default_npts = npts;
  DField du(g, std::move(u), opts);

  std::vector<int> orders;
  for (int k = 1; k <= n; ++k) orders.push_back(k);
  const NormReport rep = norm_report(du, p, orders);

  std::cout << "p:              " << io::format_double(p) << "\n";
  std::cout << "lp:             " << io::format_double(rep.lp) << "\n";
  std::cout << "slobodeckij_y:  " << io::format_double(rep.slobodeckij_y) << "\n";
  for (int k : orders) {
    std::cout << "seminorm[" << k << "]:    " << io::format_double(rep.seminorms.at(k)) << "\n";
    if (variant == "full" || variant == "both")
      std::cout << "sobolev[" << k << "]:     " << io::format_double(rep.sobolev.at(k)) << "\n";
    if (variant == "triple" || variant == "both")
      std::cout << "triple[" << k << "]:      " << io::format_double(rep.triple.at(k)) << "\n";
  }
  if (!csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (int k : orders)
      rows.push_back({static_cast<double>(k), rep.seminorms.at(k), rep.sobolev.at(k),
                      rep.triple.at(k)});
    io::write_csv(csv, {"n", "seminorm", "sobolev_full", "sobolev_triple"}, rows);
    std::cout << "csv:            " << csv << "\n";
  }
  return 0;
}

void print_fit(const ExponentFit& fit, const std::string& csv) {
  for (std::size_t i = 0; i < fit.scale.size(); ++i)
    std::cout << "  " << io::format_double(fit.scale[i]) << " -> "
              << io::format_double(fit.value[i]) << "\n";
  std::cout << "slope:     " << io::format_double(fit.slope) << "\n";
  std::cout << "intercept: " << io::format_double(fit.intercept) << "\n";
  std::cout << "r2:        " << io::format_double(fit.r2) << "\n";
  if (!csv.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < fit.scale.size(); ++i) rows.push_back({fit.scale[i], fit.value[i]});
    io::write_csv(csv, {"scale", "value"}, rows);
    std::cout << "csv:       " << csv << "\n";
  }
}

int cmd_taylor_fit(const std::string& op_file, const std::string& fn_file, int n, double p,
                   const std::string& sigma_csv, const std::string& csv) {
  Geometry g = load_geometry(op_file);
  AnalyticField u = io::load_function_spec(g, fn_file);
  GroupPoint zeta0(0.3, Eigen::VectorXd::Zero(g.N()));
  for (int c = 0; c < g.N(); ++c) zeta0.x[c] = 0.4 / (1.0 + c);
  std::vector<double> sigmas = sigma_csv.empty() ? std::vector<double>{} : parse_grid(sigma_csv);
  if (sigmas.empty())
    for (int j = 0; j < 7; ++j) sigmas.push_back(0.2 * std::pow(1.35, j));
  NormOptions opts;
  opts.default_npts = 24;
  const ExponentFit fit = taylor_remainder_rate(u, g, n, p, zeta0, sigmas, opts);
  std::cout << "remainder rate, order " << n << " (target slope " << n + 1 << ")\n";
  print_fit(fit, csv);
  return 0;
}

int cmd_mollify_rate(const std::string& op_file, const std::string& fn_file, int n, int m, double p,
                     const std::string& eps_csv, bool inverse, const std::string& csv) {
  Geometry g = load_geometry(op_file);
  AnalyticField u = io::load_function_spec(g, fn_file);
  const BumpKernel bump = BumpKernel::standard(g);
  std::vector<double> eps = eps_csv.empty() ? std::vector<double>{} : parse_grid(eps_csv);
  if (eps.empty())
    for (int j = 0; j < 8; ++j) eps.push_back(0.05 * std::pow(0.8 / 0.05, j / 7.0));
  MollifyOptions opts;
  opts.inner_npts = 10;
  opts.norm.default_npts = 18;
  if (inverse) {
    const ExponentFit fit = mollify_inverse_rate(u, g, n, m, p, eps, bump, opts);
    std::cout << "mollifier W^{m,p} growth, n=" << n << " m=" << m << " (floor slope " << n - m
              << ")\n";
    print_fit(fit, csv);
  } else {
    const ExponentFit fit = mollify_rate(u, g, n, p, eps, bump, opts);
    std::cout << "mollifier approximation rate, n=" << n << " (target slope " << n << ")\n";
    print_fit(fit, csv);
  }
  return 0;
}

int cmd_lorentz(const std::string& op_file, const std::string& fn_file, double p, double q,
                int npts) {
  Geometry g = load_geometry(op_file);
  AnalyticField u = io::load_function_spec(g, fn_file);
  GridSpec spec(u.support(), std::vector<int>(static_cast<std::size_t>(g.N() + 1), npts));
  GridFunction gf = sample_fn([&](const Eigen::VectorXd& z) { return u.eval_flat(z); }, spec, 0);
  const Rearrangement r = Rearrangement::from_grid(gf);
  std::cout << "||u||_{L^{" << p << "," << q << "}} = " << io::format_double(lorentz_norm(r, p, q))
            << "\n";
  std::cout << "||u||_" << p << "           = " << io::format_double(r.lp(p)) << "\n";
  return 0;
}

int cmd_tartar(const std::string& op_file, const std::string& fn_file, double pstar, int npts,
               const std::string& csv) {
  Geometry g = load_geometry(op_file);
  AnalyticField u = io::load_function_spec(g, fn_file);
  GridSpec spec(u.support(), std::vector<int>(static_cast<std::size_t>(g.N() + 1), npts));
  GridFunction gf = sample_fn([&](const Eigen::VectorXd& z) { return u.eval_flat(z); }, spec, 0);
  const Rearrangement r = Rearrangement::from_grid(gf);
  const TartarSequence ts = tartar_sequence(r);
  std::vector<std::vector<double>> rows;
  std::cout << "k, a_k, gap, e^{k/p*} gap\n";
  for (std::size_t i = 0; i + 1 < ts.a.size(); ++i) {
    const double weighted = std::exp(ts.ks[i] / pstar) * ts.gaps[i];
    rows.push_back({static_cast<double>(ts.ks[i]), ts.a[i], ts.gaps[i], weighted});
    std::cout << ts.ks[i] << ", " << io::format_double(ts.a[i]) << ", "
              << io::format_double(ts.gaps[i]) << ", " << io::format_double(weighted) << "\n";
  }
  if (!csv.empty()) {
    io::write_csv(csv, {"k", "a_k", "gap", "weighted_gap"}, rows);
    std::cout << "csv: " << csv << "\n";
  }
  return 0;
}

int cmd_lab_run(const std::string& config_path, const std::string& out_dir) {
  const nlohmann::json cfg = io::load_json(config_path);
  const auto results = run_config(cfg);
  const std::string dir = !out_dir.empty()             ? out_dir
                          : cfg.contains("output_dir") ? cfg.at("output_dir").get<std::string>()
                                                       : std::string("kfplab_out");
  const bool pass = emit_report(results, dir);
  for (const auto& r : results)
    std::cout << (r.pass ? "[pass] " : "[FAIL] ") << r.name << ": " << r.verdict << "\n";
  std::cout << (pass ? "all experiments passed" : "some experiments FAILED") << "\n";
  return pass ? 0 : 1;
}

int cmd_lab_report(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path summary = fs::path(dir) / "summary.json";
  if (!fs::exists(summary)) {
    std::cerr << "no summary.json under " << dir << "\n";
    return 2;
  }
  const nlohmann::json j = io::load_json(summary.string());
  bool all = true;
  for (const auto& r : j.at("results")) {
    const bool pass = r.value("pass", false);
    all = all && pass;
    std::cout << (pass ? "[pass] " : "[FAIL] ") << r.value("name", "?") << ": "
              << r.value("verdict", "") << "\n";
  }
  std::cout << (all ? "all experiments passed" : "some experiments FAILED") << "\n";
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intrinsic geometry and embedding experiments for kinetic Fokker-Planck operators"};
  app.require_subcommand(1);

  auto* structure = app.add_subcommand("structure", "operator structure utilities");
  structure->require_subcommand(1);
  auto* sc = structure->add_subcommand("check", "validate an operator file");
  std::string sc_file;
  sc->add_option("file", sc_file, "operator description file")->required();

  auto* kernel = app.add_subcommand("kernel", "fundamental solution utilities");
  kernel->require_subcommand(1);
  auto* ke = kernel->add_subcommand("eval", "evaluate Gamma and its derivatives");
  std::string ke_file, ke_x = "0";
  double ke_t = 1.0;
  ke->add_option("file", ke_file, "operator description file")->required();
  ke->add_option("--t", ke_t, "time coordinate");
  ke->add_option("--x", ke_x, "comma-separated space coordinates");
  auto* kb = kernel->add_subcommand("bounds", "homogeneous bound suprema");
  std::string kb_file, kb_csv;
  int kb_samples = 33;
  kb->add_option("file", kb_file, "operator description file")->required();
  kb->add_option("--samples", kb_samples, "lattice resolution");
  kb->add_option("--csv", kb_csv, "write sample rows to a csv file");

  auto* norm = app.add_subcommand("norm", "intrinsic quasi-norms");
  norm->require_subcommand(1);
  auto* nc = norm->add_subcommand("compute", "norm report for a test function");
  std::string nc_op, nc_fn, nc_variant = "both", nc_csv;
  int nc_n = 2, nc_npts = 0;
  double nc_p = 2.0;
  nc->add_option("operator", nc_op, "operator description file")->required();
  nc->add_option("function", nc_fn, "function spec file")->required();
  nc->add_option("--n", nc_n, "maximal order");
  nc->add_option("--p", nc_p, "integrability exponent");
  nc->add_option("--variant", nc_variant, "full | triple | both");
  nc->add_option("--npts", nc_npts, "quadrature points per axis");
  nc->add_option("--csv", nc_csv, "write the report rows to a csv file");

  auto* taylor = app.add_subcommand("taylor", "intrinsic Taylor experiments");
  taylor->require_subcommand(1);
  auto* tf = taylor->add_subcommand("fit", "remainder decay against the base scale");
  std::string tf_op, tf_fn, tf_sigma, tf_csv;
  int tf_n = 1;
  double tf_p = 2.0;
  tf->add_option("operator", tf_op)->required();
  tf->add_option("function", tf_fn)->required();
  tf->add_option("--n", tf_n, "Taylor order");
  tf->add_option("--p", tf_p, "integrability exponent");
  tf->add_option("--sigma-grid", tf_sigma, "comma-separated base scales");
  tf->add_option("--csv", tf_csv, "write (scale, value) rows");

  auto* mollify = app.add_subcommand("mollify", "group mollifier experiments");
  mollify->require_subcommand(1);
  auto* mr = mollify->add_subcommand("rate", "approximation or growth rate");
  std::string mr_op, mr_fn, mr_eps, mr_csv;
  int mr_n = 1, mr_m = 2;
  double mr_p = 2.0;
  bool mr_inverse = false;
  mr->add_option("operator", mr_op)->required();
  mr->add_option("function", mr_fn)->required();
  mr->add_option("--n", mr_n, "mollifier order");
  mr->add_option("--m", mr_m, "target Sobolev order for --inverse");
  mr->add_option("--p", mr_p, "integrability exponent");
  mr->add_option("--eps-grid", mr_eps, "comma-separated eps values");
  mr->add_flag("--inverse", mr_inverse, "measure the W^{m,p} growth instead");
  mr->add_option("--csv", mr_csv, "write (scale, value) rows");

  auto* lorentz = app.add_subcommand("lorentz", "Lorentz quasi-norm of a test function");
  std::string lz_op, lz_fn;
  double lz_p = 2.0, lz_q = 2.0;
  int lz_npts = 33;
  lorentz->add_option("operator", lz_op)->required();
  lorentz->add_option("function", lz_fn)->required();
  lorentz->add_option("--p", lz_p)->required();
  lorentz->add_option("--q", lz_q)->required();
  lorentz->add_option("--npts", lz_npts, "sampling resolution");

  auto* tartar = app.add_subcommand("tartar", "level sequence and gaps");
  std::string tt_op, tt_fn, tt_csv;
  double tt_pstar = 3.0;
  int tt_npts = 33;
  tartar->add_option("operator", tt_op)->required();
  tartar->add_option("function", tt_fn)->required();
  tartar->add_option("--pstar", tt_pstar, "critical exponent for the weighted gaps");
  tartar->add_option("--npts", tt_npts, "sampling resolution");
  tartar->add_option("--csv", tt_csv, "write (k, a_k, gap, weighted gap) rows");

  auto* lab = app.add_subcommand("lab", "experiment harness");
  lab->require_subcommand(1);
  auto* lr = lab->add_subcommand("run", "run the experiments of a config file");
  std::string lr_config, lr_out;
  lr->add_option("config", lr_config, "experiment config (json)")->required();
  lr->add_option("--out", lr_out, "output directory (overrides the config)");
  auto* ll = lab->add_subcommand("list-experiments", "list experiment names");
  auto* lp = lab->add_subcommand("report", "re-read a report directory");
  std::string lp_dir;
  lp->add_option("dir", lp_dir, "report directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc->parsed()) return cmd_structure_check(sc_file);
    if (ke->parsed()) return cmd_kernel_eval(ke_file, ke_t, ke_x);
    if (kb->parsed()) return cmd_kernel_bounds(kb_file, kb_samples, kb_csv);
    if (nc->parsed()) return cmd_norm_compute(nc_op, nc_fn, nc_n, nc_p, nc_variant, nc_npts, nc_csv);
    if (tf->parsed()) return cmd_taylor_fit(tf_op, tf_fn, tf_n, tf_p, tf_sigma, tf_csv);
    if (mr->parsed())
      return cmd_mollify_rate(mr_op, mr_fn, mr_n, mr_m, mr_p, mr_eps, mr_inverse, mr_csv);
    if (lorentz->parsed()) return cmd_lorentz(lz_op, lz_fn, lz_p, lz_q, lz_npts);
    if (tartar->parsed()) return cmd_tartar(tt_op, tt_fn, tt_pstar, tt_npts, tt_csv);
    if (lr->parsed()) return cmd_lab_run(lr_config, lr_out);
    if (ll->parsed()) {
      for (const auto& name : kfp::list_experiments()) std::cout << name << "\n";
      return 0;
    }
    if (lp->parsed()) return cmd_lab_report(lp_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
