#pragma once

// Experiment plumbing shared by the command-line tool and the tests: model
// registry, boundary specifications, JSON configs, emulator files, study
// datasets, figure grids and engine-versus-oracle comparisons.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "kbe/analysis.hpp"
#include "kbe/arabidopsis.hpp"
#include "kbe/engine.hpp"
#include "kbe/io.hpp"
#include "kbe/oracle.hpp"
#include "kbe/three_d.hpp"

namespace kbe::experiment {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Model {
  std::string name;
  int dim = 0;
  /// Output of interest at a (transformed) input point.
  std::function<double(const Eigen::VectorXd&)> eval;
  Eigen::VectorXd lo, hi;  ///< design box
  std::vector<std::string> labels;
  std::function<Boundary(const std::string&)> builtin;
  std::vector<std::string> input_names;
  std::string output_name;
};

inline Model model(const std::string& name) {
  Model m;
  m.name = name;
  if (name == "three_d") {
    m.dim = 3;
    m.eval = [](const Eigen::VectorXd& x) { return three_d::eval(x); };
    m.lo = three_d::domain_lo();
    m.hi = three_d::domain_hi();
    m.labels = {"K", "L", "M"};
    m.builtin = [](const std::string& l) { return three_d::boundary(l); };
    m.input_names = {"x0", "x1", "x2"};
    m.output_name = "f";
  } else if (name == "arabidopsis") {
    m.dim = arabidopsis::kInputs;
    m.eval = [](const Eigen::VectorXd& u) { return arabidopsis::et_transformed(u); };
    m.lo = Eigen::VectorXd::Constant(m.dim, -1.0);
    m.hi = Eigen::VectorXd::Constant(m.dim, 1.0);
    m.labels = {"K", "L"};
    m.builtin = [](const std::string& l) { return arabidopsis::boundary(l); };
    for (const auto& in : arabidopsis::inputs()) m.input_names.emplace_back(in.name);
    m.output_name = "ET";
  } else if (name == "additive") {
    // Cheap 5-input function used for cost and oracle studies.
    m.dim = 5;
    m.eval = [](const Eigen::VectorXd& x) {
      check_dim(x, 5);
      return std::sin(x[0]) + std::cos(x[1]) + 0.5 * std::sin(x[2] * x[3]) + 0.2 * x[4] * x[4];
    };
    m.lo = Eigen::VectorXd::Constant(5, -2.0);
    m.hi = Eigen::VectorXd::Constant(5, 2.0);
    m.builtin = [](const std::string& l) -> Boundary {
      throw Error(ErrorCode::InvalidArgument, "the additive model has no builtin boundary '" + l + "'");
    };
    m.input_names = {"x0", "x1", "x2", "x3", "x4"};
    m.output_name = "f";
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown model '" + name + "' (expected three_d, arabidopsis or additive)");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Boundary specifications

struct BoundarySpec {
  std::string label;
  IndexSet normals;
  std::vector<double> alpha;
  /// "<model>.<label>", "<model>.exact" (run the full model on the plane) or
  /// "training-table:<path>".
  std::string solver;
};

inline json to_json(const BoundarySpec& s) {
  return json{{"label", s.label}, {"normal_indices", s.normals}, {"alpha", s.alpha}, {"solver", s.solver}};
}

inline BoundarySpec spec_from_json(const json& j) {
  BoundarySpec s;
  if (j.is_string()) {
    s.label = j.get<std::string>();
    return s;
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "boundary entry must be a label or an object");
  s.label = j.value("label", std::string{});
  if (j.contains("normal_indices")) s.normals = j.at("normal_indices").get<IndexSet>();
  if (j.contains("alpha")) s.alpha = j.at("alpha").get<std::vector<double>>();
  s.solver = j.value("solver", std::string{});
  return s;
}

/// Spec of a model's builtin boundary.
inline BoundarySpec builtin_spec(const Model& m, const std::string& label) {
  const Boundary b = m.builtin(label);
  BoundarySpec s;
  s.label = label;
  s.normals = b.normals();
  const Eigen::VectorXd a = b.alpha();
  s.alpha.assign(a.data(), a.data() + a.size());
  s.solver = m.name + "." + label;
  return s;
}

/// Boundary values looked up from a CSV of on-plane points (p input columns
/// followed by a value column).
inline Solver table_solver(const fs::path& path, int p) {
  const io::Table t = io::read_csv(path);
  if (t.data.cols() != p + 1)
    throw Error(ErrorCode::InvalidArgument, "training table '" + path.string() + "' needs " + std::to_string(p + 1) +
                                                " columns");
  auto data = std::make_shared<Eigen::MatrixXd>(t.data);
  return [data, p, path](const Eigen::VectorXd& x) {
    for (Eigen::Index r = 0; r < data->rows(); ++r) {
      if ((data->row(r).head(p).transpose() - x).cwiseAbs().maxCoeff() <= 1e-9) return (*data)(r, p);
    }
    throw Error(ErrorCode::SolverFailure, "point not found in training table '" + path.string() + "'");
  };
}

/// Fills in a label-only spec from the builtins and resolves relative table
/// paths against base_dir.
inline BoundarySpec complete_spec(const Model& m, BoundarySpec s, const fs::path& base_dir) {
  if (s.normals.empty() && s.alpha.empty() && s.solver.empty()) return builtin_spec(m, s.label);
  if (s.solver.empty()) s.solver = m.name + "." + s.label;
  const std::string prefix = "training-table:";
  if (s.solver.rfind(prefix, 0) == 0) {
    fs::path p = s.solver.substr(prefix.size());
    if (p.is_relative()) p = fs::absolute(base_dir / p);
    s.solver = prefix + p.string();
  }
  return s;
}

inline Boundary make_boundary(const Model& m, const BoundarySpec& s) {
  if (s.normals.size() != s.alpha.size())
    throw Error(ErrorCode::DimensionMismatch, "boundary '" + s.label + "': normal_indices and alpha differ in length");
  Eigen::VectorXd alpha = Eigen::Map<const Eigen::VectorXd>(s.alpha.data(), static_cast<Eigen::Index>(s.alpha.size()));
  const std::string prefix = "training-table:";
  Solver solver;
  if (s.solver.rfind(prefix, 0) == 0) {
    solver = table_solver(s.solver.substr(prefix.size()), m.dim);
  } else if (s.solver == m.name + ".exact") {
    solver = m.eval;
  } else {
    const auto dot = s.solver.find('.');
    if (dot == std::string::npos || s.solver.substr(0, dot) != m.name)
      throw Error(ErrorCode::InvalidArgument, "unknown solver '" + s.solver + "' for model " + m.name);
    const Boundary ref = m.builtin(s.solver.substr(dot + 1));
    Boundary mine(m.dim, s.label, s.normals, alpha);
    if (mine.normals() != ref.normals() || (mine.alpha() - ref.alpha()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error(ErrorCode::InvalidArgument, "solver '" + s.solver + "' does not describe the plane of '" + s.label + "'");
    solver = ref.solver();
  }
  return Boundary(m.dim, s.label, s.normals, alpha, solver);
}

inline BoundarySet make_set(const Model& m, const std::vector<BoundarySpec>& specs) {
  std::vector<Boundary> bs;
  for (const auto& s : specs) bs.push_back(make_boundary(m, s));
  return validate_set(std::move(bs), m.dim);
}

inline std::vector<BoundarySpec> builtin_specs(const Model& m, const std::vector<std::string>& labels) {
  std::vector<BoundarySpec> out;
  for (const auto& l : labels) out.push_back(builtin_spec(m, l));
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

struct Config {
  std::string model = "three_d";
  std::vector<double> theta;  ///< one entry means a common lengthscale
  std::optional<double> beta, sigma2;
  int scoping_n = 0;          ///< > 0: estimate beta/sigma2 from this many runs
  std::uint64_t scoping_seed = 7;
  std::vector<BoundarySpec> boundaries;
  int design_n = 20;
  std::uint64_t design_seed = 1;
  int restarts = 50;
  int n_test = 100;
  std::uint64_t test_seed = 2;
  std::vector<double> theta_sweep;
  std::vector<int> train_sweep;
  std::vector<std::vector<std::string>> kb_sweep;
  int grid = 20;
  fs::path out_dir = "out";
  fs::path base_dir = ".";
};

inline Config default_config(const std::string& model_name) {
  Config c;
  c.model = model_name;
  if (model_name == "three_d") {
    const EmulatorPrior p = three_d::prior();
    c.theta.assign(p.kernel.theta().data(), p.kernel.theta().data() + 3);
    c.beta = p.beta;
    c.sigma2 = p.sigma2;
    c.boundaries = builtin_specs(model(model_name), {"K", "L", "M"});
    c.design_n = 10;
    c.n_test = 100;
    c.theta_sweep = {};
    c.train_sweep = {0, 10};
    c.kb_sweep = {{}, {"K"}, {"K", "L", "M"}};
  } else if (model_name == "arabidopsis") {
    c.theta = {3.0};
    c.scoping_n = 100;
    c.sigma2 = 344.23 / 500.0;
    c.boundaries = builtin_specs(model(model_name), {"K", "L"});
    c.design_n = 1000;
    c.n_test = 500;
    c.theta_sweep = {3.0};
    c.train_sweep = {0, 200, 500, 1000};
    c.kb_sweep = {{}, {"K"}, {"K", "L"}};
  } else if (model_name == "additive") {
    c.theta = {1.5};
    c.beta = 0.0;
    c.sigma2 = 1.0;
    c.design_n = 30;
    c.n_test = 100;
    c.train_sweep = {0, 30};
    c.kb_sweep = {{}};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown model '" + model_name + "'");
  }
  return c;
}

/// Reads a JSON config. A bare model name ("three_d", "arabidopsis", "additive") that is
/// not an existing file selects that model's defaults.
inline Config load_config(const std::string& where) {
  const fs::path path(where);
  if (!fs::exists(path) && (where == "three_d" || where == "arabidopsis" || where == "additive"))
    return default_config(where);
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "config '" + where + "': " + e.what());
  }
  try {
    Config c = default_config(j.value("model", std::string("three_d")));
    c.base_dir = fs::absolute(path).parent_path();
    const Model m = model(c.model);
    if (j.contains("kernel")) {
      const json& k = j.at("kernel");
      if (k.contains("family")) correlation_family_from_string(k.at("family").get<std::string>());
      if (k.contains("theta")) {
        if (k.at("theta").is_number()) c.theta = {k.at("theta").get<double>()};
        else c.theta = k.at("theta").get<std::vector<double>>();
      }
    }
    if (j.contains("prior")) {
      const json& p = j.at("prior");
      if (p.is_string()) {
        const std::string s = p.get<std::string>();
        if (s.rfind("scoping:", 0) != 0) throw Error(ErrorCode::InvalidArgument, "prior must be an object or scoping:<n>");
        c.scoping_n = std::stoi(s.substr(8));
        c.beta.reset();
        c.sigma2.reset();
      } else {
        c.scoping_n = 0;
        c.beta = p.at("beta").get<double>();
        c.sigma2 = p.at("sigma2").get<double>();
        if (p.contains("scoping_n")) c.scoping_n = p.at("scoping_n").get<int>();
      }
      if (j.at("prior").is_object() && p.contains("scoping_seed")) c.scoping_seed = p.at("scoping_seed").get<std::uint64_t>();
    }
    if (j.contains("boundaries")) {
      c.boundaries.clear();
      for (const auto& b : j.at("boundaries")) c.boundaries.push_back(complete_spec(m, spec_from_json(b), c.base_dir));
    }
    if (j.contains("design")) {
      const json& d = j.at("design");
      c.design_n = d.value("n", c.design_n);
      c.design_seed = d.value("seed", c.design_seed);
      c.restarts = d.value("restarts", c.restarts);
    }
    if (j.contains("diagnostics")) {
      const json& d = j.at("diagnostics");
      c.n_test = d.value("n_test", c.n_test);
      c.test_seed = d.value("seed", c.test_seed);
    }
    if (j.contains("theta_sweep")) c.theta_sweep = j.at("theta_sweep").get<std::vector<double>>();
    if (j.contains("train_sweep")) c.train_sweep = j.at("train_sweep").get<std::vector<int>>();
    if (j.contains("kb_sweep")) c.kb_sweep = j.at("kb_sweep").get<std::vector<std::vector<std::string>>>();
    c.grid = j.value("grid", c.grid);
    if (j.contains("output_dir")) {
      c.out_dir = j.at("output_dir").get<std::string>();
      if (c.out_dir.is_relative()) c.out_dir = c.base_dir / c.out_dir;
    }
    for (double t : c.theta_sweep) {
      if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "theta_sweep values must be positive");
    }
    for (const auto& kb : c.kb_sweep) {
      for (const auto& l : kb) m.builtin(l);
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "config '" + where + "': " + e.what());
  }
}

inline CorrelationKernel make_kernel(const Config& c, int p) {
  if (c.theta.size() == 1) return CorrelationKernel::gaussian(p, c.theta[0]);
  if (static_cast<int>(c.theta.size()) != p)
    throw Error(ErrorCode::DimensionMismatch, "theta has " + std::to_string(c.theta.size()) + " entries, expected 1 or " +
                                                  std::to_string(p));
  return CorrelationKernel::gaussian(Eigen::Map<const Eigen::VectorXd>(c.theta.data(), p));
}

/// Points uniform in the model's box.
inline Eigen::MatrixXd uniform_points(const Model& m, int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, m.dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m.dim; ++j) X(i, j) = rng.uniform(m.lo[j], m.hi[j]);
  }
  return X;
}

/// Maximin LHC scaled from [-1, 1]^p to the model's box.
inline Eigen::MatrixXd design_points(const Model& m, int n, std::uint64_t seed, int restarts) {
  Design d = maximin_lhc(n, m.dim, seed, restarts);
  for (int j = 0; j < m.dim; ++j) {
    d.X.col(j) = (m.lo[j] + (d.X.col(j).array() + 1.0) * 0.5 * (m.hi[j] - m.lo[j])).matrix();
  }
  return d.X;
}

inline Eigen::VectorXd evaluate(const Model& m, const Eigen::MatrixXd& X) {
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y[i] = m.eval(X.row(i).transpose());
  return y;
}

struct PriorMoments {
  double beta;
  double sigma2;
};

/// Sample mean and (n - 1) variance of n uniform scoping runs.
inline PriorMoments scoping_moments(const Model& m, int n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 scoping runs");
  const Eigen::VectorXd y = evaluate(m, uniform_points(m, n, seed));
  const double mean = pairwise_sum(y) / n;
  const double var = pairwise_sum((y.array() - mean).square().matrix().eval()) / (n - 1);
  return {mean, var};
}

inline EmulatorPrior make_prior(const Config& c, const Model& m) {
  double beta = c.beta.value_or(0.0), sigma2 = c.sigma2.value_or(1.0);
  if (c.scoping_n > 0) {
    const PriorMoments pm = scoping_moments(m, c.scoping_n, c.scoping_seed);
    if (!c.beta) beta = pm.beta;
    if (!c.sigma2) sigma2 = pm.sigma2;
  }
  return EmulatorPrior(beta, sigma2, make_kernel(c, m.dim));
}

// ---------------------------------------------------------------------------
// Emulator files

struct EmulatorFile {
  std::string model;
  EmulatorPrior prior;
  std::vector<BoundarySpec> boundaries;
  Eigen::MatrixXd X;
  Eigen::VectorXd D;
};

inline constexpr int kEmulatorFormatVersion = 1;

inline json to_json(const EmulatorFile& f) {
  json j;
  j["format"] = "kbe-emulator";
  j["version"] = kEmulatorFormatVersion;
  j["model"] = f.model;
  j["prior"] = {{"beta", f.prior.beta}, {"sigma2", f.prior.sigma2}};
  const Eigen::VectorXd& th = f.prior.kernel.theta();
  j["kernel"] = {{"family", to_string(f.prior.kernel.family())},
                 {"theta", std::vector<double>(th.data(), th.data() + th.size())}};
  j["boundaries"] = json::array();
  for (const auto& b : f.boundaries) j["boundaries"].push_back(to_json(b));
  j["design"] = json::array();
  for (Eigen::Index i = 0; i < f.X.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(f.X.cols()));
    for (Eigen::Index c = 0; c < f.X.cols(); ++c) row[static_cast<std::size_t>(c)] = f.X(i, c);
    j["design"].push_back(row);
  }
  j["outputs"] = std::vector<double>(f.D.data(), f.D.data() + f.D.size());
  return j;
}

inline EmulatorFile emulator_file_from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != "kbe-emulator")
      throw Error(ErrorCode::InvalidArgument, "not an emulator file");
    if (j.at("version").get<int>() != kEmulatorFormatVersion)
      throw Error(ErrorCode::Unsupported, "unsupported emulator file version");
    const auto th = j.at("kernel").at("theta").get<std::vector<double>>();
    CorrelationKernel k(correlation_family_from_string(j.at("kernel").at("family").get<std::string>()),
                        Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size())));
    EmulatorFile f{j.at("model").get<std::string>(),
                   EmulatorPrior(j.at("prior").at("beta").get<double>(), j.at("prior").at("sigma2").get<double>(), k),
                   {},
                   {},
                   {}};
    for (const auto& b : j.at("boundaries")) f.boundaries.push_back(spec_from_json(b));
    const auto rows = j.at("design").get<std::vector<std::vector<double>>>();
    const auto out = j.at("outputs").get<std::vector<double>>();
    if (rows.size() != out.size()) throw Error(ErrorCode::InvalidArgument, "design and outputs differ in length");
    f.X.resize(static_cast<Eigen::Index>(rows.size()), k.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i].size()) != k.dim())
        throw Error(ErrorCode::DimensionMismatch, "design row of wrong width");
      for (int c = 0; c < k.dim(); ++c) f.X(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    }
    f.D = Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("emulator file: ") + e.what());
  }
}

inline void save_emulator(const fs::path& path, const EmulatorFile& f) { io::write_text(path, to_json(f).dump(1) + "\n"); }

inline EmulatorFile load_emulator_file(const fs::path& path) {
  try {
    return emulator_file_from_json(json::parse(io::read_text(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, "emulator file '" + path.string() + "': " + e.what());
  }
}

/// Rebuilds the boundary adjustment and refactorizes Var_K(D).
inline Emulator build(const EmulatorFile& f) {
  const Model m = model(f.model);
  return update_by_training(adjust_set(f.prior, make_set(m, f.boundaries)), f.X, f.D);
}

// ---------------------------------------------------------------------------
// Tables

inline io::Table design_table(const Model& m, const Eigen::MatrixXd& X) {
  return io::Table{m.input_names, X};
}

/// Model outputs for each design row. The Arabidopsis model gives t followed
/// by all 18 states at t = 2; the others give their single output.
inline io::Table run_model_table(const Model& m, const Eigen::MatrixXd& X) {
  if (X.cols() != m.dim) throw Error(ErrorCode::DimensionMismatch, "design has the wrong number of columns");
  io::Table t;
  if (m.name != "arabidopsis") {
    t.header = {m.output_name};
    t.data = evaluate(m, X);
    return t;
  }
  t.header = {"t"};
  for (const char* s : arabidopsis::state_names()) t.header.emplace_back(s);
  t.data.resize(X.rows(), 1 + arabidopsis::kStates);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto s = arabidopsis::integrate(arabidopsis::inverse_transform(X.row(i).transpose()), 2.0);
    t.data(i, 0) = 2.0;
    for (int k = 0; k < arabidopsis::kStates; ++k) t.data(i, 1 + k) = s[static_cast<std::size_t>(k)];
  }
  return t;
}

/// The output-of-interest column of a run-model table (or its only column).
inline Eigen::VectorXd output_column(const Model& m, const io::Table& t) {
  if (t.data.cols() == 1) return t.data.col(0);
  return t.data.col(t.column(m.output_name));
}

inline io::Table prediction_table(const Prediction& p) {
  io::Table t;
  t.header = {"mean", "var"};
  t.data.resize(p.mean.size(), 2);
  t.data.col(0) = p.mean;
  t.data.col(1) = p.var;
  return t;
}

inline std::vector<std::string> report_header() {
  return {"theta", "n_TP", "n_KB", "sum_var", "maspe", "rmse", "three_sigma_fraction", "flagged"};
}

inline Eigen::RowVectorXd report_row(double theta, int n_tp, int n_kb, const DiagnosticsReport& r) {
  Eigen::RowVectorXd row(8);
  row << theta, n_tp, n_kb, r.sum_of_variances, r.maspe, r.rmse, r.three_sigma_fraction, r.flagged ? 1.0 : 0.0;
  return row;
}

// ---------------------------------------------------------------------------
// Study datasets: a training pool, a seeded order for taking subsets, and a
// separate diagnostic set.

struct Study {
  Model model;
  Eigen::MatrixXd pool_X;
  Eigen::VectorXd pool_y;
  std::vector<int> order;
  Eigen::MatrixXd test_X;
  Eigen::VectorXd test_y;
  double beta = 0.0;
  double sigma2 = 1.0;
};

inline Study make_study(const Config& c) {
  const Model m = model(c.model);
  Study s{m, {}, {}, {}, {}, {}, 0.0, 1.0};
  const EmulatorPrior p = make_prior(c, m);
  s.beta = p.beta;
  s.sigma2 = p.sigma2;
  int pool = c.design_n;
  for (int n : c.train_sweep) pool = std::max(pool, n);
  if (pool >= 2) {
    s.pool_X = design_points(m, pool, c.design_seed, c.restarts);
    s.pool_y = evaluate(m, s.pool_X);
  } else {
    s.pool_X.resize(0, m.dim);
    s.pool_y.resize(0);
  }
  s.order = Rng(c.design_seed ^ 0x9e3779b97f4a7c15ULL).permutation(static_cast<int>(s.pool_X.rows()));
  s.test_X = design_points(m, c.n_test, c.test_seed, c.restarts);
  s.test_y = evaluate(m, s.test_X);
  return s;
}

inline Emulator study_emulator(const Study& s, double theta, int n_tp, const std::vector<std::string>& labels) {
  if (n_tp > s.pool_X.rows()) throw Error(ErrorCode::InvalidArgument, "not enough training points in the pool");
  const EmulatorPrior prior(s.beta, s.sigma2, CorrelationKernel::gaussian(s.model.dim, theta));
  Eigen::MatrixXd X(n_tp, s.model.dim);
  Eigen::VectorXd D(n_tp);
  for (int i = 0; i < n_tp; ++i) {
    X.row(i) = s.pool_X.row(s.order[static_cast<std::size_t>(i)]);
    D[i] = s.pool_y[s.order[static_cast<std::size_t>(i)]];
  }
  return update_by_training(adjust_set(prior, make_set(s.model, builtin_specs(s.model, labels))), X, D);
}

inline DiagnosticsReport study_cell(const Study& s, double theta, int n_tp, const std::vector<std::string>& labels) {
  return diagnostics(study_emulator(s, theta, n_tp, labels), s.test_X, s.test_y);
}

/// Sum-of-variances / MASPE / RMSE table over the config's sweeps.
inline io::Table study_table(const Study& s, const Config& c) {
  std::vector<double> thetas = c.theta_sweep;
  if (thetas.empty()) thetas = {c.theta.size() == 1 ? c.theta[0] : c.theta.front()};
  std::vector<int> tps = c.train_sweep.empty() ? std::vector<int>{c.design_n} : c.train_sweep;
  std::vector<std::vector<std::string>> kbs = c.kb_sweep;
  if (kbs.empty()) {
    kbs.emplace_back();
    for (const auto& b : c.boundaries) kbs.back().push_back(b.label);
  }
  io::Table t{report_header(), Eigen::MatrixXd(0, 8)};
  std::vector<Eigen::RowVectorXd> rows;
  for (double th : thetas) {
    for (int tp : tps) {
      for (const auto& kb : kbs) rows.push_back(report_row(th, tp, static_cast<int>(kb.size()), study_cell(s, th, tp, kb)));
    }
  }
  t.data.resize(static_cast<Eigen::Index>(rows.size()), 8);
  for (std::size_t i = 0; i < rows.size(); ++i) t.data.row(static_cast<Eigen::Index>(i)) = rows[i];
  return t;
}

// ---------------------------------------------------------------------------
// Figure grids for the 3D model

struct Plane {
  std::string name;
  int fixed;     ///< fixed coordinate
  double value;  ///< its value
};

/// Planes x1 = 0, x1 = -pi/8 and x0 = -pi (0-based coordinates).
inline std::vector<Plane> figure_planes() {
  return {{"x1=0", 1, 0.0}, {"x1=-pi/8", 1, -three_d::pi / 8}, {"x0=-pi", 0, -three_d::pi}};
}

/// Grid of f, mean, variance and standardized error over each plane. The two
/// free coordinates run over the model box in `grid` steps each, the smaller
/// index first.
inline io::Table plane_grid(const Emulator& em, int grid) {
  if (grid < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 points per side");
  const Model m = model("three_d");
  std::vector<Eigen::RowVectorXd> rows;
  int plane_id = 0;
  for (const Plane& pl : figure_planes()) {
    std::vector<int> free;
    for (int j = 0; j < 3; ++j) {
      if (j != pl.fixed) free.push_back(j);
    }
    Eigen::MatrixXd X(grid * grid, 3);
    for (int a = 0; a < grid; ++a) {
      for (int b = 0; b < grid; ++b) {
        Eigen::Vector3d x;
        x[pl.fixed] = pl.value;
        x[free[0]] = m.lo[free[0]] + (m.hi[free[0]] - m.lo[free[0]]) * a / (grid - 1);
        x[free[1]] = m.lo[free[1]] + (m.hi[free[1]] - m.lo[free[1]]) * b / (grid - 1);
        X.row(a * grid + b) = x.transpose();
      }
    }
    const Prediction p = em.predict(X);
    const Eigen::VectorXd f = evaluate(m, X);
    const StandardizedErrors se = standardized_errors(p.mean, p.var, f, em.base().prior().sigma2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      Eigen::RowVectorXd r(8);
      r << plane_id, X(i, 0), X(i, 1), X(i, 2), f[i], p.mean[i], p.var[i], se.s[i];
      rows.push_back(r);
    }
    ++plane_id;
  }
  io::Table t{{"plane", "x0", "x1", "x2", "f", "mean", "var", "s"}, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), 8)};
  for (std::size_t i = 0; i < rows.size(); ++i) t.data.row(static_cast<Eigen::Index>(i)) = rows[i];
  return t;
}

/// Boundary-only 3D emulator for the figure grids.
inline Emulator three_d_emulator(const std::vector<std::string>& labels) {
  return Emulator(adjust_set(three_d::prior(), three_d::boundaries(labels)));
}

/// Arabidopsis diagnostic panels: truth against mean and standard deviation
/// for KB in {none, K, K+L} and TP in {0, n}.
inline io::Table arabidopsis_panels(const Study& s, double theta, int n_tp) {
  const std::vector<std::vector<std::string>> kbs{{}, {"K"}, {"K", "L"}};
  std::vector<Eigen::RowVectorXd> rows;
  for (std::size_t k = 0; k < kbs.size(); ++k) {
    for (int tp : {0, n_tp}) {
      const Prediction p = study_emulator(s, theta, tp, kbs[k]).predict(s.test_X);
      for (Eigen::Index i = 0; i < s.test_X.rows(); ++i) {
        Eigen::RowVectorXd r(6);
        r << static_cast<double>(kbs[k].size()), tp, static_cast<double>(i), s.test_y[i], p.mean[i],
            std::sqrt(std::max(p.var[i], 0.0));
        rows.push_back(r);
      }
    }
  }
  io::Table t{{"n_KB", "n_TP", "point", "truth", "mean", "sd"}, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), 6)};
  for (std::size_t i = 0; i < rows.size(); ++i) t.data.row(static_cast<Eigen::Index>(i)) = rows[i];
  return t;
}

// ---------------------------------------------------------------------------
// Engine against the augmented-design oracle

struct OracleCase {
  std::string name;
  std::string kind;  ///< "orthogonal", "parallel" or "mixed"
  std::vector<BoundarySpec> boundaries;
};

/// Axis-aligned plane valued by the model itself.
inline BoundarySpec exact_plane(const std::string& model_name, const std::string& label, IndexSet normals,
                                std::vector<double> alpha) {
  return BoundarySpec{label, std::move(normals), std::move(alpha), model_name + ".exact"};
}

/// Orthogonal families of size 1..4 and equal-J parallel chains of size 2..4
/// on the additive model, chosen so that no sequential projection collapses
/// distinct points onto one.
inline std::vector<OracleCase> cost_cases() {
  std::vector<OracleCase> out;
  std::vector<BoundarySpec> orth, para;
  for (int j = 0; j < 4; ++j) orth.push_back(exact_plane("additive", "P" + std::to_string(j), {j}, {0.1 * (j + 1)}));
  const double loc[] = {0.0, -0.5, 0.5, 1.5};
  for (int i = 0; i < 4; ++i) para.push_back(exact_plane("additive", "Q" + std::to_string(i), {4}, {loc[i]}));
  for (std::size_t h = 1; h <= 4; ++h)
    out.push_back({"orthogonal-h" + std::to_string(h), "orthogonal", {orth.begin(), orth.begin() + static_cast<long>(h)}});
  for (std::size_t h = 2; h <= 4; ++h)
    out.push_back({"parallel-h" + std::to_string(h), "parallel", {para.begin(), para.begin() + static_cast<long>(h)}});
  return out;
}

struct OracleComparison {
  std::string name;
  std::string kind;
  int h = 0;
  int n = 0;
  int n_B = 0;
  std::size_t oracle_size = 0;
  long expected_size = -1;  ///< from the counting formula; -1 when none applies
  double oracle_seconds = 0.0;
  double oracle_factor_seconds = 0.0;
  double engine_seconds = 0.0;
  double max_mean_diff = 0.0;
  double max_var_diff = 0.0;
  double max_mean_rel = 0.0;  ///< |e - o| / max(|o|, sigma)
  double max_var_rel = 0.0;   ///< |e - o| / max(|o|, sigma2)
  Eigen::MatrixXd points;
  Prediction engine;
  NaiveResult oracle;
};

inline long expected_oracle_size(const std::string& kind, int h, int n, int n_B) {
  if (kind == "orthogonal") return (1L << h) * n + ((1L << h) - 1) * n_B;
  if (kind == "parallel") return static_cast<long>(h + 1) * n + static_cast<long>(h) * n_B;
  return -1;
}

inline OracleComparison compare_with_oracle(const EmulatorPrior& prior, const Model& m, const OracleCase& oc,
                                            const Eigen::MatrixXd& X, const Eigen::VectorXd& D,
                                            const Eigen::MatrixXd& targets) {
  using clock = std::chrono::steady_clock;
  OracleComparison r;
  r.name = oc.name;
  r.kind = oc.kind;
  r.h = static_cast<int>(oc.boundaries.size());
  r.n = static_cast<int>(X.rows());
  r.n_B = static_cast<int>(targets.rows());
  r.points = targets;
  const BoundarySet bset = make_set(m, oc.boundaries);
  const auto t0 = clock::now();
  const Emulator em = update_by_training(adjust_set(prior, bset), X, D);
  r.engine = em.predict(targets);
  r.engine_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  const AugmentedDesign aug = build_augmented(X, D, bset, targets);
  r.oracle = naive_update(prior, aug, targets);
  r.oracle_size = r.oracle.factor_size;
  r.oracle_seconds = r.oracle.total_seconds;
  r.oracle_factor_seconds = r.oracle.factor_seconds;
  r.expected_size = expected_oracle_size(oc.kind, r.h, r.n, r.n_B);
  const double sd = std::sqrt(prior.sigma2);
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    const double dm = std::abs(r.engine.mean[i] - r.oracle.mean[i]);
    const double dv = std::abs(r.engine.var[i] - r.oracle.var[i]);
    r.max_mean_diff = std::max(r.max_mean_diff, dm);
    r.max_var_diff = std::max(r.max_var_diff, dv);
    r.max_mean_rel = std::max(r.max_mean_rel, dm / std::max(std::abs(r.oracle.mean[i]), sd));
    r.max_var_rel = std::max(r.max_var_rel, dv / std::max(std::abs(r.oracle.var[i]), prior.sigma2));
  }
  return r;
}

/// Engine against oracle for every cost case: n uniform training runs and
/// n_B uniform targets on the additive model.
inline std::vector<OracleComparison> cost_study(int n, int n_B, std::uint64_t seed) {
  const Model m = model("additive");
  const EmulatorPrior prior(0.0, 1.0, CorrelationKernel::gaussian(m.dim, 1.5));
  const Eigen::MatrixXd X = uniform_points(m, n, seed);
  const Eigen::VectorXd D = evaluate(m, X);
  const Eigen::MatrixXd targets = uniform_points(m, n_B, seed + 1);
  std::vector<OracleComparison> out;
  for (const auto& oc : cost_cases()) out.push_back(compare_with_oracle(prior, m, oc, X, D, targets));
  return out;
}

inline io::Table comparison_points_table(const OracleComparison& r) {
  io::Table t;
  t.header = {"point"};
  for (Eigen::Index j = 0; j < r.points.cols(); ++j) t.header.push_back("x" + std::to_string(j));
  for (const char* h : {"engine_mean", "oracle_mean", "engine_var", "oracle_var", "abs_diff_mean", "abs_diff_var"})
    t.header.emplace_back(h);
  const Eigen::Index p = r.points.cols();
  t.data.resize(r.points.rows(), 1 + p + 6);
  for (Eigen::Index i = 0; i < r.points.rows(); ++i) {
    t.data(i, 0) = static_cast<double>(i);
    t.data.block(i, 1, 1, p) = r.points.row(i);
    t.data(i, 1 + p) = r.engine.mean[i];
    t.data(i, 2 + p) = r.oracle.mean[i];
    t.data(i, 3 + p) = r.engine.var[i];
    t.data(i, 4 + p) = r.oracle.var[i];
    t.data(i, 5 + p) = std::abs(r.engine.mean[i] - r.oracle.mean[i]);
    t.data(i, 6 + p) = std::abs(r.engine.var[i] - r.oracle.var[i]);
  }
  return t;
}

}  // namespace kbe::experiment
