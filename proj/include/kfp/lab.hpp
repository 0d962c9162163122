#pragma once

#include "kfp/fields.hpp"
#include "kfp/geometry.hpp"
#include "kfp/io.hpp"
#include "kfp/kernel.hpp"
#include "kfp/norms.hpp"
#include "kfp/rearrangement.hpp"
#include "kfp/taylor.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kfp {

/// One experiment outcome: a table, optional fit, named statistics and a
/// verdict derived from the table and the configured tolerances only.
struct SweepResult {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, double> stats;
  bool has_fit = false;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool pass = false;
  std::string verdict;
};

/// Critical exponents; computed, never hard-coded.
double critical_exponent(double p, int hom_dim, int k = 1);   // 1/p* = 1/p - k/d
double crude_exponent_theta(double p, double q, int hom_dim); // theta = d(1/p - 1/q)
double crude_range_r(double p, int hom_dim);                  // r = p(d+p)/d

/// Test family for the embedding sweeps: the base function plus dilates,
/// left-translates and a modulated variant.
struct FamilyMember {
  std::string tag;
  AnalyticField field;
};
std::vector<FamilyMember> embedding_family(const Geometry& g, const AnalyticField& base,
                                           const std::vector<double>& lambdas,
                                           const std::vector<Eigen::VectorXd>& shifts,
                                           bool include_modulated);

struct LabContext {
  Geometry geometry;
  AnalyticField base_function;
  NormOptions norm;
  MollifyOptions mollify;
  unsigned seed = 1234;
};

SweepResult run_scaling_suite(const LabContext& ctx, const std::vector<int>& ns,
                              const std::vector<double>& ps, const std::vector<double>& lambdas,
                              double tol = 0.01);

enum class EmbeddingRegime { Subcritical, Supercritical, Critical };

SweepResult run_embedding_sweep(const LabContext& ctx, EmbeddingRegime regime, double p,
                                std::optional<double> q = std::nullopt,
                                double dilate_tol = 0.01, double stability_factor = 2.0);

SweepResult run_higher_order_sweep(const LabContext& ctx, double p, double slope_tol = 0.1);

SweepResult run_trudinger_check(const LabContext& ctx, double p, const std::vector<double>& lambdas,
                                const std::vector<double>& deltas);

SweepResult run_crude_embedding(const LabContext& ctx, double p, double q,
                                double dilate_tol = 0.01);

/// Optimal-eps interpolation bound with a single fitted constant, checked for
/// stability under grid refinement.
SweepResult run_interpolation_check(const LabContext& ctx, int n, int m, double p,
                                    double stability_factor = 2.0);

SweepResult run_taylor_rate(const LabContext& ctx, int n, double p, double slope_tol = 0.3);
SweepResult run_mollify_rate(const LabContext& ctx, int n, double p, double slope_tol = 0.3);
SweepResult run_mollify_inverse(const LabContext& ctx, int n, int m, double p,
                                double slope_margin = 0.3);

/// Tartar level machinery: the fitted constant of the truncation inequality
/// across the k-window.
SweepResult run_tartar_emb5(const LabContext& ctx, double p);

/// Lorentz characterization on synthetic tails (one summable, one divergent).
SweepResult run_lorentz_lemma(const LabContext& ctx, double p, double q);

SweepResult run_kfunctional(const LabContext& ctx, double p);

/// Experiment registry for the CLI.
std::vector<std::string> list_experiments();

/// Runs the experiments named in a config file; returns the results in the
/// configured order.
std::vector<SweepResult> run_config(const nlohmann::json& config);

/// Writes one CSV per result plus summary.json; returns false if any verdict
/// failed. Throws on unwritable paths.
bool emit_report(const std::vector<SweepResult>& results, const std::string& out_dir);

}  // namespace kfp
