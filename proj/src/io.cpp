#include "kfp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kfp::io {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << "\n";
}

BlockStructure operator_from_json(const json& j) {
  BlockStructure bs;
  if (!j.contains("layer_dims")) throw ValidationError("operator file: missing layer_dims");
  bs.layer_dims = j.at("layer_dims").get<std::vector<int>>();
  const auto blocks = j.value("blocks", json::array());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b + 1 >= bs.layer_dims.size())
      throw ValidationError("operator file: more blocks than layer transitions");
    const int rows = bs.layer_dims[b + 1];
    const int cols = bs.layer_dims[b];
    const auto data = blocks[b].get<std::vector<double>>();
    if (static_cast<int>(data.size()) != rows * cols) {
      std::ostringstream os;
      os << "operator file: block " << b + 1 << " needs " << rows * cols << " entries, got "
         << data.size();
      throw ValidationError(os.str());
    }
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
    bs.blocks.push_back(std::move(m));
  }
  return bs;
}

json operator_to_json(const BlockStructure& bs) {
  json j;
  j["layer_dims"] = bs.layer_dims;
  json blocks = json::array();
  for (const auto& m : bs.blocks) {
    std::vector<double> data;
    for (int i = 0; i < m.rows(); ++i)
      for (int c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
    blocks.push_back(data);
  }
  j["blocks"] = blocks;
  return j;
}

BlockStructure load_operator(const std::string& path) { return operator_from_json(load_json(path)); }

namespace {

Eigen::VectorXd vec_from_json(const json& j, int expect) {
  const auto v = j.get<std::vector<double>>();
  if (expect >= 0 && static_cast<int>(v.size()) != expect)
    throw ValidationError("function spec: vector of wrong length");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Box box_from_json(const json& j, int nv) {
  if (j.contains("box")) {
    return Box(vec_from_json(j.at("box").at("lo"), nv), vec_from_json(j.at("box").at("hi"), nv));
  }
  return Box(Eigen::VectorXd::Constant(nv, -6.0), Eigen::VectorXd::Constant(nv, 6.0));
}

}  // namespace

AnalyticField function_from_json(const Geometry& g, const json& j) {
  const int nv = g.N() + 1;
  const std::string family = j.value("family", "gaussian");
  const double amplitude = j.value("amplitude", 1.0);
  const Box box = box_from_json(j, nv);

  AnalyticField u;
  if (family == "gaussian") {
    const Eigen::VectorXd center =
        j.contains("center") ? vec_from_json(j.at("center"), nv) : Eigen::VectorXd::Zero(nv);
    const Eigen::VectorXd decay = j.contains("decay") ? vec_from_json(j.at("decay"), nv)
                                                      : Eigen::VectorXd::Constant(nv, 0.5);
    u = AnalyticField::gaussian(center, decay, amplitude, box);
  } else if (family == "polynomial") {
    if (!j.contains("terms")) throw ValidationError("function spec: polynomial needs terms");
    u = AnalyticField::zero(g.N(), box);
    for (const auto& term : j.at("terms")) {
      Eigen::VectorXi beta = Eigen::VectorXi::Zero(g.N());
      if (term.contains("beta")) {
        const auto bv = term.at("beta").get<std::vector<int>>();
        if (static_cast<int>(bv.size()) != g.N())
          throw ValidationError("function spec: beta length mismatch");
        for (int c = 0; c < g.N(); ++c) beta[c] = bv[static_cast<std::size_t>(c)];
      }
      u = u + AnalyticField::monomial(g.N(), term.value("kt", 0), beta,
                                      term.value("coef", 1.0) * amplitude, box);
    }
  } else if (family == "modulated") {
    const Eigen::VectorXd center =
        j.contains("center") ? vec_from_json(j.at("center"), nv) : Eigen::VectorXd::Zero(nv);
    const Eigen::VectorXd decay = j.contains("decay") ? vec_from_json(j.at("decay"), nv)
                                                      : Eigen::VectorXd::Constant(nv, 0.5);
    const Eigen::VectorXd freq = j.contains("freq") ? vec_from_json(j.at("freq"), nv)
                                                    : Eigen::VectorXd::Constant(nv, 1.0);
    u = AnalyticField::modulated_gaussian(center, decay, freq, j.value("phase", 0.0), amplitude, box);
  } else if (family == "bump") {
    const Eigen::VectorXd center =
        j.contains("center") ? vec_from_json(j.at("center"), nv) : Eigen::VectorXd::Zero(nv);
    const Eigen::VectorXd widths = j.contains("widths") ? vec_from_json(j.at("widths"), nv)
                                                        : Eigen::VectorXd::Constant(nv, 4.0);
    u = AnalyticField::bump_product(center, widths, amplitude);
  } else if (family == "hom_norm_power") {
    const Eigen::VectorXd widths = j.contains("widths") ? vec_from_json(j.at("widths"), nv)
                                                        : Eigen::VectorXd::Constant(nv, 4.0);
    GroupPoint z0(0.0, Eigen::VectorXd::Zero(g.N()));
    if (j.contains("center")) {
      const Eigen::VectorXd c = vec_from_json(j.at("center"), nv);
      z0 = GroupPoint::from_flat(c);
    }
    u = AnalyticField::hom_norm_power(g, z0, j.value("gamma", 1.0), widths, amplitude);
  } else {
    throw ValidationError("function spec: unknown family '" + family + "'");
  }

  if (j.contains("dilate")) u = u.dilated(g, j.at("dilate").get<double>());
  if (j.contains("translate")) {
    const Eigen::VectorXd zeta = vec_from_json(j.at("translate"), nv);
    u = u.translated(g, GroupPoint::from_flat(zeta));
  }
  return u;
}

AnalyticField load_function_spec(const Geometry& g, const std::string& path) {
  return function_from_json(g, load_json(path));
}

void dump_grid(const GridFunction& u, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << "kfpgrid 1\n";
  out << "dims " << u.spec.dims() << "\n";
  out << "npts";
  for (int n : u.spec.npts) out << " " << n;
  out << "\nlo";
  for (int a = 0; a < u.spec.dims(); ++a) out << " " << format_double(u.spec.box.lo[a]);
  out << "\nhi";
  for (int a = 0; a < u.spec.dims(); ++a) out << " " << format_double(u.spec.box.hi[a]);
  out << "\nmargin " << u.margin << "\n";
  out << "data\n";
  out.write(reinterpret_cast<const char*>(u.values.data()),
            static_cast<std::streamsize>(u.values.size() * sizeof(double)));
}

GridFunction load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "kfpgrid" || version != 1) throw ValidationError("load_grid: bad header");
  int dims = 0;
  in >> word >> dims;
  if (word != "dims" || dims < 1) throw ValidationError("load_grid: bad dims");
  std::vector<int> npts(static_cast<std::size_t>(dims));
  in >> word;
  for (auto& n : npts) in >> n;
  Eigen::VectorXd lo(dims), hi(dims);
  in >> word;
  for (int a = 0; a < dims; ++a) in >> lo[a];
  in >> word;
  for (int a = 0; a < dims; ++a) in >> hi[a];
  int margin = 0;
  in >> word >> margin;
  in >> word;  // "data"
  in.get();    // newline
  GridFunction u;
  u.spec = GridSpec(Box(lo, hi), npts);
  u.margin = margin;
  u.values.assign(static_cast<std::size_t>(u.spec.total()), 0.0);
  in.read(reinterpret_cast<char*>(u.values.data()),
          static_cast<std::streamsize>(u.values.size() * sizeof(double)));
  if (!in) throw ValidationError("load_grid: truncated data");
  return u;
}

void export_slice_csv(const GridFunction& u, int axis_a, int axis_b,
                      const std::vector<int>& fixed_idx, const std::string& path) {
  const GridSpec& s = u.spec;
  if (static_cast<int>(fixed_idx.size()) != s.dims())
    throw ValidationError("export_slice_csv: fixed index length mismatch");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "axis" << axis_a << ",axis" << axis_b << ",value\n";
  std::vector<int> idx = fixed_idx;
  for (int ia = 0; ia < s.npts[static_cast<std::size_t>(axis_a)]; ++ia) {
    for (int ib = 0; ib < s.npts[static_cast<std::size_t>(axis_b)]; ++ib) {
      idx[static_cast<std::size_t>(axis_a)] = ia;
      idx[static_cast<std::size_t>(axis_b)] = ib;
      out << format_double(s.coord(axis_a, ia)) << "," << format_double(s.coord(axis_b, ib)) << ","
          << format_double(u.values[static_cast<std::size_t>(s.flatten(idx))]) << "\n";
    }
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << columns[c] << (c + 1 < columns.size() ? "," : "");
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << format_double(row[c]) << (c + 1 < row.size() ? "," : "");
    out << "\n";
  }
}

}  // namespace kfp::io
