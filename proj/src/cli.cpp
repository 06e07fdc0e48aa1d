#include "rntr/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef RNTR_HAVE_OPENMP
#include <omp.h>
#endif

namespace rntr::cli {

using nlohmann::json;

// ------------------------------------------------------------------ text IO

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string read_text(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
  if (!out) throw UsageError("error writing '" + path + "'");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string time_field(double t, bool deterministic) { return deterministic ? "NA" : format_double(t); }

}  // namespace

std::vector<std::string> default_header(Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index k = 1; k <= d; ++k) h.push_back("x" + std::to_string(k));
  return h;
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open data file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw UsageError("data file '" + path + "' is empty");
  const size_t cols = split(trim(line), ',').size();
  std::vector<double> vals;
  size_t rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != cols) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      const std::string t = trim(f);
      char* end = nullptr;
      const double v = std::strtod(t.c_str(), &end);
      if (t.empty() || end != t.c_str() + t.size()) {
        throw UsageError(path + ":" + std::to_string(lineno) + ": not a number: '" + t + "'");
      }
      vals.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw UsageError("data file '" + path + "' has no observations");
  Matrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vals[i * cols + j];
  }
  return x;
}

void write_csv_matrix(const std::string& path, const Matrix& data, const std::vector<std::string>& header) {
  std::string out;
  for (size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
  out += "\n";
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) out += (j ? "," : "") + format_double(data(i, j));
    out += "\n";
  }
  write_text(path, out);
}

// ---------------------------------------------------------- normalization

Normalization Normalization::fit(const Matrix& x) {
  if (x.rows() < 2) throw UsageError("normalization needs at least two observations");
  Normalization n;
  n.means = x.colwise().mean().transpose();
  const Matrix c = x.rowwise() - n.means.transpose();
  n.sds = (c.array().square().colwise().sum() / static_cast<double>(x.rows() - 1)).sqrt().transpose();
  for (Eigen::Index j = 0; j < n.sds.size(); ++j) {
    if (!(n.sds(j) > 0.0)) throw UsageError("column " + std::to_string(j + 1) + " is constant; cannot normalize");
  }
  return n;
}

Matrix Normalization::apply(const Matrix& x) const {
  if (x.cols() != means.size()) throw UsageError("data dimension does not match the stored normalization");
  return (x.rowwise() - means.transpose()).array().rowwise() / sds.transpose().array();
}

// ------------------------------------------------------------------- models

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix json_mat(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw UsageError("empty matrix in model file");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw UsageError("ragged matrix in model file");
    for (size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

}  // namespace

json model_to_json(const GmmParams& params, const std::optional<Normalization>& norm, const ModelMeta& meta) {
  const ThetaPoint theta = forward_transform(params);
  json j;
  j["weights"] = vec_json(params.weights);
  j["means"] = json::array();
  for (const auto& mu : params.means) j["means"].push_back(vec_json(mu));
  j["covariances"] = json::array();
  for (const auto& c : params.covariances) j["covariances"].push_back(mat_json(c.matrix()));
  j["eta"] = vec_json(theta.eta());
  j["s_blocks"] = json::array();
  for (const auto& s : theta.s_blocks()) j["s_blocks"].push_back(mat_json(s.matrix()));
  if (norm) {
    j["normalization"] = {{"means", vec_json(norm->means)}, {"sds", vec_json(norm->sds)}};
  } else {
    j["normalization"] = nullptr;
  }
  j["meta"] = {{"solver", meta.solver},
               {"iterations", meta.iterations},
               {"time_s", std::isnan(meta.time_s) ? json(nullptr) : json(meta.time_s)},
               {"termination", meta.termination}};
  return j;
}

ModelFile model_from_json(const json& j) {
  try {
    ModelFile mf;
    mf.params.weights = json_vec(j.at("weights"));
    for (const auto& mu : j.at("means")) mf.params.means.push_back(json_vec(mu));
    for (const auto& c : j.at("covariances")) mf.params.covariances.emplace_back(json_mat(c));
    mf.params.validate();
    if (j.contains("normalization") && !j["normalization"].is_null()) {
      Normalization n{json_vec(j["normalization"].at("means")), json_vec(j["normalization"].at("sds"))};
      if (n.means.size() != mf.params.dim() || n.sds.size() != mf.params.dim()) {
        throw UsageError("normalization length does not match the model dimension");
      }
      mf.normalization = n;
    }
    if (j.contains("meta")) {
      const auto& m = j["meta"];
      mf.meta.solver = m.value("solver", "");
      mf.meta.iterations = m.value("iterations", 0);
      mf.meta.termination = m.value("termination", "");
      mf.meta.time_s = m.contains("time_s") && m["time_s"].is_number() ? m["time_s"].get<double>()
                                                                          : std::nan("");
    }
    return mf;
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed model: ") + e.what());
  } catch (const Error& e) {
    throw UsageError(std::string("invalid model: ") + e.what());
  }
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// -------------------------------------------------------------------- suite

BenchmarkSuite parse_suite(const std::string& text, const std::string& name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw UsageError(name + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed suite JSON");
  }
  BenchmarkSuite suite;
  std::string where = "suite";
  try {
    if (!j.is_object()) throw UsageError(name + ": suite must be a JSON object");
    suite.seed = j.value("seed", suite.seed);
    const auto& cells = j.at("cells");
    if (!cells.is_array() || cells.empty()) throw UsageError(name + ": 'cells' must be a nonempty array");
    for (size_t i = 0; i < cells.size(); ++i) {
      where = "cells[" + std::to_string(i) + "]";
      const auto& c = cells[i];
      BenchmarkCell cell;
      cell.d = c.at("d").get<int>();
      cell.K = c.at("K").get<int>();
      cell.m = c.at("m").get<int>();
      cell.c = c.at("c").get<double>();
      cell.e = c.at("e").get<double>();
      cell.runs = c.value("runs", 1);
      if (c.contains("solvers")) {
        cell.solvers.clear();
        for (const auto& s : c["solvers"]) cell.solvers.push_back(parse_solver(s.get<std::string>()));
      }
      SimSpec{cell.d, cell.K, cell.m, cell.c, cell.e, std::nullopt, 0}.validate();
      if (cell.runs < 1) throw UsageError(name + ": " + where + ": runs must be positive");
      suite.cells.push_back(cell);
    }
    where = "settings";
    if (j.contains("settings")) {
      const auto& s = j["settings"];
      if (s.contains("rntr")) {
        const auto& r = s["rntr"];
        suite.settings.tr.max_iters = r.value("max_iters", suite.settings.tr.max_iters);
        suite.settings.tr.grad_tol = r.value("grad_tol", suite.settings.tr.grad_tol);
        suite.settings.tr.all_diff_tol = r.value("all_diff_tol", suite.settings.tr.all_diff_tol);
        suite.settings.tr.tcg.precondition = r.value("precondition", suite.settings.tr.tcg.precondition);
      }
      if (s.contains("em")) {
        const auto& e = s["em"];
        suite.settings.em.max_iters = e.value("max_iters", suite.settings.em.max_iters);
        suite.settings.em.all_diff_tol = e.value("all_diff_tol", suite.settings.em.all_diff_tol);
        suite.settings.em.map_mode = e.value("map_mode", suite.settings.em.map_mode);
      }
      if (s.contains("penalty")) {
        const auto& p = s["penalty"];
        auto opt = [&](const char* k, std::optional<double>& dst) {
          if (p.contains(k)) dst = p[k].get<double>();
        };
        opt("gamma", suite.settings.penalty.gamma);
        opt("beta", suite.settings.penalty.beta);
        opt("kappa", suite.settings.penalty.kappa);
        opt("nu", suite.settings.penalty.nu);
        opt("zeta", suite.settings.penalty.zeta);
      }
      suite.settings.tr.validate();
    }
  } catch (const json::exception& e) {
    throw UsageError(name + ": " + where + ": " + e.what());
  } catch (const Error& e) {
    throw UsageError(name + ": " + where + ": " + e.what());
  }
  return suite;
}

// ------------------------------------------------------------------- tables

std::string summary_csv(const BenchmarkResult& res, bool deterministic) {
  std::ostringstream o;
  o << "cell,d,K,m,c,e,solver,runs_ok,runs_failed,iterations,mean_time_s,mean_all,mse_weights,mse_means,mse_cov,"
       "ari,errors\n";
  for (const auto& s : res.summary) {
    o << s.cell << ',' << s.spec.d << ',' << s.spec.K << ',' << s.spec.m << ',' << format_double(s.spec.c) << ','
      << format_double(s.spec.e) << ',' << to_string(s.solver) << ',' << s.runs_ok << ',' << s.runs_failed << ','
      << format_double(s.mean_iterations) << ',' << time_field(s.mean_time_s, deterministic) << ','
      << format_double(s.mean_all) << ',' << format_double(s.mse.weights) << ',' << format_double(s.mse.means)
      << ',' << format_double(s.mse.covariances) << ',' << format_double(s.mean_ari) << ','
      << csv_escape(s.errors) << '\n';
  }
  return o.str();
}

std::string raw_csv(const BenchmarkResult& res, bool deterministic) {
  std::ostringstream o;
  o << "cell,run,solver,data_seed,ok,iterations,accepted_iterations,termination,init_time_s,time_s,all,"
       "all_penalized,grad_norm,mse_weights,mse_means,mse_cov,wmse_weights,wmse_means,wmse_cov,geodesic,ari,error\n";
  for (const auto& r : res.runs) {
    o << r.cell << ',' << r.run << ',' << to_string(r.solver) << ',' << r.data_seed << ',' << (r.ok ? 1 : 0) << ','
      << r.iterations << ',' << r.accepted_iterations << ',' << r.termination << ','
      << time_field(r.init_time_s, deterministic) << ',' << time_field(r.time_s, deterministic) << ','
      << format_double(r.all) << ',' << format_double(r.all_penalized) << ',' << format_double(r.grad_norm) << ','
      << format_double(r.mse.weights) << ',' << format_double(r.mse.means) << ','
      << format_double(r.mse.covariances) << ',' << format_double(r.wmse.weights) << ','
      << format_double(r.wmse.means) << ',' << format_double(r.wmse.covariances) << ','
      << format_double(r.geodesic) << ',' << format_double(r.ari) << ',' << csv_escape(r.error) << '\n';
  }
  return o.str();
}

std::string timings_csv(const BenchmarkResult& res) {
  std::ostringstream o;
  o << "cell,run,solver,init_time_s,time_s\n";
  for (const auto& r : res.runs) {
    o << r.cell << ',' << r.run << ',' << to_string(r.solver) << ',' << format_double(r.init_time_s) << ','
      << format_double(r.time_s) << '\n';
  }
  return o.str();
}

std::string trace_csv(const std::vector<IterRecord>& trace) {
  std::ostringstream o;
  o << "iter,objective,grad_norm,delta,rho,step_norm,accepted,tcg_iterations,tcg_stop,model_decrease,"
       "actual_decrease,min_alpha,max_s_over_psi\n";
  for (const auto& r : trace) {
    o << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.grad_norm) << ','
      << format_double(r.delta) << ',' << format_double(r.rho) << ',' << format_double(r.step_norm) << ','
      << (r.accepted ? 1 : 0) << ',' << r.tcg_iterations << ',' << to_string(r.tcg_stop) << ','
      << format_double(r.model_decrease) << ',' << format_double(r.actual_decrease) << ','
      << format_double(r.min_alpha) << ',' << format_double(r.max_s_over_psi) << '\n';
  }
  return o.str();
}

std::string density_table_csv(const DensityResult& res, bool deterministic) {
  std::ostringstream o;
  o << "K,solver,runs_ok,runs_failed,mean_rmise,se_rmise,mean_iterations,mean_time_s,mean_all,errors\n";
  for (const auto& r : res.rows) {
    o << r.K << ',' << to_string(r.solver) << ',' << r.runs_ok << ',' << r.runs_failed << ','
      << format_double(r.mean_rmise) << ',' << format_double(r.se_rmise) << ',' << format_double(r.mean_iterations)
      << ',' << time_field(r.mean_time_s, deterministic) << ',' << format_double(r.mean_all) << ','
      << csv_escape(r.errors) << '\n';
  }
  return o.str();
}

std::string density_grid_csv(const DensityResult& res) {
  const Matrix nodes = res.grid.nodes();
  std::ostringstream o;
  o << "x,y,truth";
  for (const auto& r : res.rows) o << ",error_" << to_string(r.solver) << "_K" << r.K;
  o << '\n';
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    o << format_double(nodes(i, 0)) << ',' << format_double(nodes(i, 1)) << ',' << format_double(res.grid.values(i));
    for (const auto& r : res.rows) {
      o << ',' << (r.pointwise_error.size() == nodes.rows() ? format_double(r.pointwise_error(i)) : "NA");
    }
    o << '\n';
  }
  return o.str();
}

// --------------------------------------------------------------- commands

namespace {

struct SolverFlags {
  int max_iters = 1500;
  double grad_tol = 1e-6;
  double all_diff_tol = 1e-10;
  bool no_precondition = false;
  bool no_map = false;
  std::optional<double> gamma, beta, kappa, nu, zeta;
  bool full_lambda = false;

  void add_to(CLI::App* app) {
    app->add_option("--max-iters", max_iters, "Maximum outer iterations")->check(CLI::NonNegativeNumber);
    app->add_option("--grad-tol", grad_tol, "Gradient-norm tolerance (R-NTR)")->check(CLI::NonNegativeNumber);
    app->add_option("--all-diff-tol", all_diff_tol, "Average log-likelihood change tolerance");
    app->add_flag("--no-precondition", no_precondition, "Disable the LBFGS preconditioner");
    app->add_flag("--no-map", no_map, "EM without penalty (plain M-step with covariance floor)");
    app->add_option("--penalty-gamma", gamma, "Wishart gamma");
    app->add_option("--penalty-beta", beta, "Wishart beta");
    app->add_option("--penalty-kappa", kappa, "Location prior kappa");
    app->add_option("--penalty-nu", nu, "Wishart nu");
    app->add_option("--penalty-zeta", zeta, "Weight penalty zeta");
    app->add_flag("--full-lambda", full_lambda, "Use the full sample covariance in the prior scatter");
  }

  SolverSettings settings() const {
    SolverSettings s;
    s.tr.max_iters = max_iters;
    s.tr.grad_tol = grad_tol;
    s.tr.all_diff_tol = all_diff_tol;
    s.tr.tcg.precondition = !no_precondition;
    s.em.max_iters = max_iters;
    s.em.all_diff_tol = all_diff_tol;
    s.em.map_mode = !no_map;
    s.penalty = {gamma, beta, kappa, nu, zeta, full_lambda};
    return s;
  }
};

void set_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("GMM_THREADS")) threads = std::atoi(env);
  }
#ifdef RNTR_HAVE_OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string init_hash(const GmmParams& init) { return hex64(fnv1a(model_to_json(init, std::nullopt, {}).dump())); }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian mixture fitting by Riemannian Newton trust-region and EM"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (falls back to GMM_THREADS)");

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a synthetic mixture");
  SimSpec sim;
  std::string gen_data = "data.csv", gen_truth = "truth.json";
  gen->add_option("--dim", sim.d, "Dimension")->required();
  gen->add_option("--components", sim.K, "Number of components")->required();
  gen->add_option("--samples", sim.m, "Number of observations")->required();
  gen->add_option("--separation", sim.c, "Separation c");
  gen->add_option("--eccentricity", sim.e, "Eccentricity e >= 1");
  gen->add_option("--seed", sim.seed, "Random seed");
  gen->add_option("--out-data", gen_data, "Output data CSV");
  gen->add_option("--out-truth", gen_truth, "Output truth model JSON");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a mixture to a data CSV");
  std::string fit_data, fit_solver = "rntr", fit_init, fit_model = "model.json", fit_trace, fit_summary;
  int fit_k = 0;
  std::uint64_t fit_seed = 42;
  bool fit_normalize = false, fit_det = false;
  SolverFlags fit_flags;
  fit->add_option("--data", fit_data, "Input data CSV")->required();
  fit->add_option("--solver", fit_solver, "em or rntr")->check(CLI::IsMember({"em", "rntr"}));
  fit->add_option("--components", fit_k, "Number of components")->required()->check(CLI::PositiveNumber);
  fit->add_option("--seed", fit_seed, "k-means++ seed");
  fit->add_option("--init", fit_init, "Initial model JSON instead of k-means++");
  fit->add_flag("--normalize", fit_normalize, "Z-score each column before fitting");
  fit->add_option("--out-model", fit_model, "Output model JSON");
  fit->add_option("--out-trace", fit_trace, "Output per-iteration trace CSV");
  fit->add_option("--out-summary", fit_summary, "Output summary JSON (default: stdout)");
  fit->add_flag("--deterministic", fit_det, "Omit wall-clock times from outputs");
  fit_flags.add_to(fit);

  // score
  auto* score = app.add_subcommand("score", "Average log-likelihood of a model on data");
  std::string score_model, score_data, score_out;
  score->add_option("--model", score_model, "Model JSON")->required();
  score->add_option("--data", score_data, "Data CSV")->required();
  score->add_option("--out", score_out, "Output JSON (default: stdout)");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run a benchmark suite");
  std::string bench_suite, bench_out = "results.csv", bench_raw = "raw.csv", bench_timings;
  std::optional<std::uint64_t> bench_seed;
  bool bench_det = false;
  bench->add_option("--suite", bench_suite, "Suite JSON")->required();
  bench->add_option("--out", bench_out, "Summary CSV");
  bench->add_option("--raw", bench_raw, "Per-run CSV");
  bench->add_option("--timings", bench_timings, "Per-run timing CSV");
  bench->add_option("--seed", bench_seed, "Override the suite master seed");
  bench->add_flag("--deterministic", bench_det, "Write NA in time columns (timings go to --timings)");

  // density
  auto* dens = app.add_subcommand("density", "Beta-Gamma density approximation study");
  DensityStudy study;
  std::vector<std::string> dens_solvers{"em", "rntr"};
  std::string dens_out = "density.csv", dens_grid;
  bool dens_det = false;
  SolverFlags dens_flags;
  dens->add_option("--components", study.components, "Component counts, e.g. 2,5")->delimiter(',');
  dens->add_option("--runs", study.runs, "Runs per K")->check(CLI::NonNegativeNumber);
  dens->add_option("--samples", study.m, "Observations per run");
  dens->add_option("--x-lo", study.grid.x_lo);
  dens->add_option("--x-hi", study.grid.x_hi);
  dens->add_option("--y-lo", study.grid.y_lo);
  dens->add_option("--y-hi", study.grid.y_hi);
  dens->add_option("--nx", study.grid.nx, "Grid nodes along x");
  dens->add_option("--ny", study.grid.ny, "Grid nodes along y");
  dens->add_option("--copula", study.truth.copula_rho, "Gaussian copula correlation");
  dens->add_option("--seed", study.seed, "Master seed");
  dens->add_option("--solvers", dens_solvers, "Solvers, e.g. em,rntr")->delimiter(',');
  dens->add_option("--out", dens_out, "Table CSV");
  dens->add_option("--grid-out", dens_grid, "Pointwise error grid CSV");
  dens->add_flag("--deterministic", dens_det, "Write NA in time columns");
  dens_flags.add_to(dens);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  set_threads(threads);

  try {
    if (*gen) {
      try {
        sim.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const SimData s = generate_mixture(sim);
      write_csv_matrix(gen_data, s.data.points(), default_header(sim.d));
      write_text(gen_truth, model_to_json(s.truth, std::nullopt, {"truth", 0, 0.0, ""}).dump(2) + "\n");
      return kExitOk;
    }

    if (*fit) {
      Matrix x = read_csv_matrix(fit_data);
      std::optional<Normalization> norm;
      if (fit_normalize) {
        norm = Normalization::fit(x);
        x = norm->apply(x);
      }
      std::optional<Dataset> data;
      std::optional<PenaltyConfig> penalty;
      std::optional<GmmParams> init;
      const SolverSettings settings = fit_flags.settings();
      try {
        data.emplace(std::move(x));
        penalty.emplace(build_penalty_config(*data, settings.penalty));
        if (!fit_init.empty()) {
          init = model_from_json(json::parse(read_text(fit_init, "init model"))).params;
          if (init->num_components() != fit_k) throw UsageError("init model has a different component count");
        } else {
          init = kmeanspp_init(*data, fit_k, {fit_seed, 1});
        }
      } catch (const Error& e) {
        throw UsageError(e.what());
      } catch (const json::exception& e) {
        throw UsageError("malformed init model '" + fit_init + "': " + e.what());
      }

      FitReport rep = fit_with(parse_solver(fit_solver), *data, *init, settings, *penalty);
      const double time_s = fit_det ? std::nan("") : rep.wall_time_s;
      write_text(fit_model,
                 model_to_json(rep.params, norm, {rep.solver, rep.iterations, time_s, to_string(rep.termination)})
                         .dump(2) +
                     "\n");
      if (!fit_trace.empty()) write_text(fit_trace, trace_csv(rep.trace));
      json summary = {{"solver", rep.solver},
                      {"components", fit_k},
                      {"samples", data->size()},
                      {"dim", data->dim()},
                      {"iterations", rep.iterations},
                      {"accepted_iterations", rep.accepted_iterations},
                      {"time_s", fit_det ? json(nullptr) : json(rep.wall_time_s)},
                      {"termination", to_string(rep.termination)},
                      {"all", average_log_likelihood(rep.params, *data)},
                      {"all_penalized", rep.penalized_all(*data)},
                      {"grad_norm", rep.final_grad_norm},
                      {"init_hash", init_hash(*init)}};
      if (fit_summary.empty()) {
        out << summary.dump(2) << "\n";
      } else {
        write_text(fit_summary, summary.dump(2) + "\n");
      }
      return kExitOk;
    }

    if (*score) {
      ModelFile mf;
      try {
        mf = model_from_json(json::parse(read_text(score_model, "model")));
      } catch (const json::parse_error& e) {
        throw UsageError("malformed model '" + score_model + "': " + e.what());
      }
      Matrix x = read_csv_matrix(score_data);
      if (mf.normalization) x = mf.normalization->apply(x);
      if (x.cols() != mf.params.dim()) throw UsageError("data dimension does not match the model");
      const Dataset data(std::move(x));
      const json res = {{"all", average_log_likelihood(mf.params, data)},
                        {"log_likelihood", log_likelihood(mf.params, data)},
                        {"samples", data.size()}};
      if (score_out.empty()) {
        out << res.dump(2) << "\n";
      } else {
        write_text(score_out, res.dump(2) + "\n");
      }
      return kExitOk;
    }

    if (*bench) {
      BenchmarkSuite suite = parse_suite(read_text(bench_suite, "suite"), bench_suite);
      if (bench_seed) suite.seed = *bench_seed;
      const BenchmarkResult res = run_benchmark(suite);
      write_text(bench_out, summary_csv(res, bench_det));
      write_text(bench_raw, raw_csv(res, bench_det));
      if (!bench_timings.empty()) write_text(bench_timings, timings_csv(res));
      return kExitOk;
    }

    if (*dens) {
      study.solvers.clear();
      try {
        for (const auto& s : dens_solvers) study.solvers.push_back(parse_solver(s));
        study.grid.validate();
        for (int k : study.components) {
          if (k < 1) throw UsageError("component counts must be positive");
        }
        if (!(std::abs(study.truth.copula_rho) < 1.0)) throw UsageError("copula correlation must lie in (-1, 1)");
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      study.settings = dens_flags.settings();
      const DensityResult res = run_density_study(study);
      write_text(dens_out, density_table_csv(res, dens_det));
      if (!dens_grid.empty()) write_text(dens_grid, density_grid_csv(res));
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}

}  // namespace rntr::cli
