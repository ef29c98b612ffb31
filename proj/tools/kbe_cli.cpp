// kbe: command-line driver for known-boundary emulation experiments.
//
// Exit codes: 0 success, 2 invalid input or boundary set, 3 numerical
// failure, 4 I/O failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kbe/experiment.hpp"

namespace fs = std::filesystem;
using namespace kbe;
using namespace kbe::experiment;

namespace {

enum Exit { kOk = 0, kInvalid = 2, kNumerical = 3, kIo = 4 };

struct Common {
  std::string config = "three_d";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> theta;
  std::optional<std::string> boundaries;
  std::optional<int> train_n;
};

std::vector<std::string> split_labels(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty() || s == "none") return out;
  for (auto& part : io::split(s)) {
    const std::string t = io::trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

Config resolve(const Common& c) {
  Config cfg = load_config(c.config);
  if (c.seed) cfg.design_seed = *c.seed;
  if (c.theta) cfg.theta = {*c.theta};
  if (c.train_n) cfg.design_n = *c.train_n;
  if (c.boundaries) cfg.boundaries = builtin_specs(model(cfg.model), split_labels(*c.boundaries));
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

void emit(const io::Table& t, const std::string& out) {
  if (out.empty() || out == "-") {
    io::write_csv(std::cout, t);
  } else {
    io::write_csv(fs::path(out), t);
  }
}

void add_common(CLI::App* sub, Common& c, bool out_is_dir = false) {
  sub->add_option("--config", c.config, "JSON config file, or a model name (three_d, arabidopsis, additive) for its defaults");
  sub->add_option("--seed", c.seed, "design / sampling seed");
  sub->add_option("--out", c.out, out_is_dir ? "output directory" : "output file (default: stdout)");
  sub->add_option("--theta", c.theta, "common correlation length, overriding the config");
  sub->add_option("--boundaries", c.boundaries, "comma-separated builtin boundary labels, or 'none'");
  sub->add_option("--train-n", c.train_n, "number of design / training points");
}

int cmd_validate(const Common& c) {
  const Config cfg = resolve(c);
  const Model m = model(cfg.model);
  std::vector<Boundary> bs;
  for (const auto& s : cfg.boundaries) bs.push_back(make_boundary(m, s));
  std::cout << "model " << m.name << ", " << bs.size() << " boundaries\n";
  bool ok = true;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    for (std::size_t j = i + 1; j < bs.size(); ++j) {
      const PairClass pc = classify_pair(bs[i], bs[j]);
      std::cout << bs[i].label() << " " << bs[j].label() << " " << to_string(pc.kind);
      if (pc.kind == PairClass::Kind::ParallelNested)
        std::cout << " parent=" << (pc.parent == 0 ? bs[i].label() : bs[j].label());
      std::cout << "\n";
      ok = ok && pc.valid();
    }
  }
  try {
    const BoundarySet set = validate_set(bs, m.dim);
    std::cout << "chain";
    for (const auto& b : set.chain()) std::cout << " " << b.label();
    std::cout << "\nvalid\n";
  } catch (const Error& e) {
    std::cout << "invalid: " << e.what() << "\n";
    return kInvalid;
  }
  return ok ? kOk : kInvalid;
}

int cmd_design(const Common& c) {
  const Config cfg = resolve(c);
  const Model m = model(cfg.model);
  emit(design_table(m, design_points(m, cfg.design_n, cfg.design_seed, cfg.restarts)), c.out);
  return kOk;
}

int cmd_run_model(const Common& c, const std::string& input) {
  const Config cfg = resolve(c);
  const Model m = model(cfg.model);
  const io::Table d = io::read_csv(fs::path(input));
  emit(run_model_table(m, d.data), c.out);
  return kOk;
}

int cmd_fit(const Common& c, const std::string& design, const std::string& outputs) {
  const Config cfg = resolve(c);
  const Model m = model(cfg.model);
  const io::Table d = io::read_csv(fs::path(design));
  const io::Table o = io::read_csv(fs::path(outputs));
  if (d.data.rows() != o.data.rows()) throw Error(ErrorCode::DimensionMismatch, "design and outputs differ in length");
  EmulatorFile f{m.name, make_prior(cfg, m), cfg.boundaries, d.data, output_column(m, o)};
  const Emulator em = build(f);  // fails early on singular designs
  if (!em.dropped().empty()) f.X = em.design(), f.D = em.outputs();
  if (c.out.empty() || c.out == "-") {
    std::cout << to_json(f).dump(1) << "\n";
  } else {
    save_emulator(fs::path(c.out), f);
  }
  return kOk;
}

int cmd_predict(const std::string& emulator, const std::string& points, const std::string& out, bool want_cov) {
  const Emulator em = build(load_emulator_file(fs::path(emulator)));
  const io::Table pts = io::read_csv(fs::path(points));
  const Prediction p = em.predict(pts.data, want_cov);
  emit(prediction_table(p), out);
  return kOk;
}

int cmd_diagnose(const Common& c, const std::string& emulator, const std::string& test_points,
                 const std::string& test_outputs) {
  if (!emulator.empty()) {
    if (test_points.empty() || test_outputs.empty())
      throw Error(ErrorCode::InvalidArgument, "diagnose with --emulator needs --test-points and --test-outputs");
    const EmulatorFile f = load_emulator_file(fs::path(emulator));
    const Model m = model(f.model);
    const Emulator em = build(f);
    const io::Table x = io::read_csv(fs::path(test_points));
    const io::Table y = io::read_csv(fs::path(test_outputs));
    const DiagnosticsReport r = diagnostics(em, x.data, output_column(m, y));
    io::Table t{report_header(), report_row(f.prior.kernel.theta()[0], em.n(), static_cast<int>(f.boundaries.size()), r)};
    emit(t, c.out);
    return r.flagged ? kNumerical : kOk;
  }
  Config cfg = resolve(c);
  if (c.theta) cfg.theta_sweep = {*c.theta};
  if (c.train_n) cfg.train_sweep = {*c.train_n};
  if (c.boundaries) cfg.kb_sweep = {split_labels(*c.boundaries)};
  const Study s = make_study(cfg);
  emit(study_table(s, cfg), c.out);
  return kOk;
}

int cmd_compare_oracle(const Common& c, int n_points) {
  Config cfg = resolve(c);
  const Model m = model(cfg.model);
  if (m.name == "arabidopsis") throw Error(ErrorCode::Unsupported, "compare-oracle needs a cheap model (three_d or additive)");
  const fs::path dir = c.out.empty() ? fs::path("compare-oracle") : fs::path(c.out);

  std::vector<OracleComparison> results;
  if (!cfg.boundaries.empty()) {
    const EmulatorPrior prior = make_prior(cfg, m);
    const Eigen::MatrixXd X = design_points(m, cfg.design_n, cfg.design_seed, cfg.restarts);
    const Eigen::VectorXd D = evaluate(m, X);
    const Eigen::MatrixXd targets = uniform_points(m, n_points, cfg.design_seed + 1000);
    results.push_back(compare_with_oracle(prior, m, {"config", "mixed", cfg.boundaries}, X, D, targets));
  }
  for (auto& r : cost_study(c.train_n.value_or(30), n_points, cfg.design_seed)) results.push_back(std::move(r));

  const auto rows = static_cast<Eigen::Index>(results.size());
  io::Table summary{{"case", "h", "n", "n_B", "oracle_size", "expected_size", "max_abs_mean_diff", "max_abs_var_diff",
                     "max_rel_mean_diff", "max_rel_var_diff"},
                    Eigen::MatrixXd(rows, 10)};
  io::Table timing{{"case", "h", "oracle_size", "oracle_factor_seconds", "oracle_seconds", "engine_seconds"},
                   Eigen::MatrixXd(rows, 6)};
  std::ostringstream names;
  names << "case,name,kind\n";
  for (Eigen::Index i = 0; i < rows; ++i) {
    const OracleComparison& r = results[static_cast<std::size_t>(i)];
    summary.data.row(i) << static_cast<double>(i), r.h, r.n, r.n_B, static_cast<double>(r.oracle_size),
        static_cast<double>(r.expected_size), r.max_mean_diff, r.max_var_diff, r.max_mean_rel, r.max_var_rel;
    timing.data.row(i) << static_cast<double>(i), r.h, static_cast<double>(r.oracle_size), r.oracle_factor_seconds,
        r.oracle_seconds, r.engine_seconds;
    names << i << "," << r.name << "," << r.kind << "\n";
    io::write_csv(dir / ("points_" + r.name + ".csv"), comparison_points_table(r));
  }
  io::write_csv(dir / "summary.csv", summary);
  io::write_csv(dir / "timing.csv", timing);
  io::write_text(dir / "cases.csv", names.str());
  io::write_csv(std::cout, summary);
  return kOk;
}

int cmd_reproduce(const Common& c, const std::string& figure) {
  Config cfg = resolve(c);
  const fs::path dir = c.out.empty() ? fs::path("reproduce") : fs::path(c.out);
  if (figure == "fig1" || figure == "fig2") {
    const std::vector<std::string> labels = figure == "fig1" ? std::vector<std::string>{"K"}
                                                             : std::vector<std::string>{"K", "L", "M"};
    io::write_csv(dir / (figure + ".csv"), plane_grid(three_d_emulator(labels), cfg.grid));
  } else if (figure == "fig3") {
    if (cfg.model != "arabidopsis") cfg = load_config("arabidopsis"), cfg.out_dir = dir;
    if (c.seed) cfg.design_seed = *c.seed;
    if (c.train_n) cfg.design_n = *c.train_n;
    const int n_tp = c.train_n ? *c.train_n : 500;
    cfg.train_sweep = {n_tp};
    const Study s = make_study(cfg);
    io::write_csv(dir / "fig3.csv", arabidopsis_panels(s, c.theta.value_or(3.0), n_tp));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown figure '" + figure + "' (fig1, fig2, fig3)");
  }
  std::cout << "wrote " << (dir / (figure + ".csv")).string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Known-boundary Bayes linear emulation"};
  app.require_subcommand(1);
  Common c;
  std::string input, design, outputs, emulator, points, test_points, test_outputs, figure;
  bool want_cov = false;
  int n_points = 100;

  auto* validate = app.add_subcommand("validate", "classify and validate the configured boundary set");
  add_common(validate, c);
  auto* design_cmd = app.add_subcommand("design", "maximin Latin hypercube design");
  add_common(design_cmd, c);
  auto* run = app.add_subcommand("run-model", "evaluate the model at design points");
  add_common(run, c);
  run->add_option("--input", input, "design CSV")->required();
  auto* fit = app.add_subcommand("fit", "fit an emulator and write it as JSON");
  add_common(fit, c);
  fit->add_option("--design", design, "design CSV")->required();
  fit->add_option("--outputs", outputs, "outputs CSV")->required();
  auto* predict = app.add_subcommand("predict", "predict with a fitted emulator");
  predict->add_option("--emulator", emulator, "emulator JSON")->required();
  predict->add_option("--points", points, "points CSV")->required();
  predict->add_option("--out", c.out, "output CSV (default: stdout)");
  predict->add_flag("--cov", want_cov, "also compute the joint covariance (not written)");
  auto* diagnose = app.add_subcommand("diagnose", "diagnostics of an emulator file, or the config's study table");
  add_common(diagnose, c);
  diagnose->add_option("--emulator", emulator, "emulator JSON");
  diagnose->add_option("--test-points", test_points, "test inputs CSV");
  diagnose->add_option("--test-outputs", test_outputs, "test outputs CSV");
  auto* compare = app.add_subcommand("compare-oracle", "engine against the augmented-design oracle");
  add_common(compare, c, true);
  compare->add_option("--points", n_points, "number of test points");
  auto* reproduce = app.add_subcommand("reproduce", "figure grids as CSV");
  add_common(reproduce, c, true);
  reproduce->add_option("--figure", figure, "fig1, fig2 or fig3")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*validate) return cmd_validate(c);
    if (*design_cmd) return cmd_design(c);
    if (*run) return cmd_run_model(c, input);
    if (*fit) return cmd_fit(c, design, outputs);
    if (*predict) return cmd_predict(emulator, points, c.out, want_cov);
    if (*diagnose) return cmd_diagnose(c, emulator, test_points, test_outputs);
    if (*compare) return cmd_compare_oracle(c, n_points);
    if (*reproduce) return cmd_reproduce(c, figure);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::Io) return kIo;
    return e.numerical() ? kNumerical : kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kInvalid;
}
