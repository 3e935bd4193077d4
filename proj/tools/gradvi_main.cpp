// Command-line front end. Talks to the library only through the C API.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradvi/gradvi.h"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;

// Bad flags or inputs the user can fix.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Library failures caused by the inputs are usage errors; anything else is
// reported as an I/O-class failure of the run.
void check(gradvi_status s, const std::string& what) {
  if (s == GRADVI_OK) return;
  const std::string msg = what + ": " + gradvi_last_error();
  if (s == GRADVI_ERR_DOMAIN || s == GRADVI_ERR_NULL) throw UsageError(msg);
  throw IoError(msg);
}

struct DatasetDeleter {
  void operator()(gradvi_dataset* d) const { gradvi_dataset_free(d); }
};
struct FitDeleter {
  void operator()(gradvi_fit* f) const { gradvi_fit_free(f); }
};
struct SimDeleter {
  void operator()(gradvi_simulation* s) const { gradvi_simulation_free(s); }
};
using Dataset = std::unique_ptr<gradvi_dataset, DatasetDeleter>;
using Fit = std::unique_ptr<gradvi_fit, FitDeleter>;
using Simulation = std::unique_ptr<gradvi_simulation, SimDeleter>;

void log(const std::string& msg) { std::cerr << "gradvi: " << msg << '\n'; }

// ------------------------------------------------------------------ files

struct Table {
  std::vector<double> values;
  size_t rows = 0;
  size_t cols = 0;
};

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Table t;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    size_t cols = 0;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw IoError(path.string() + ":" + std::to_string(lineno) + ": not a number");
      t.values.push_back(v);
      ++cols;
      p = end;
      while (*p == ' ' || *p == '\r') ++p;
      if (*p == ',') {
        ++p;
        continue;
      }
      if (*p == '\0') break;
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": unexpected character");
    }
    if (t.rows == 0) t.cols = cols;
    if (cols != t.cols)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(t.cols) + " columns, found " + std::to_string(cols));
    ++t.rows;
  }
  if (t.rows == 0) throw IoError(path.string() + " is empty");
  return t;
}

std::vector<double> read_vector(const fs::path& path) {
  Table t = read_csv(path);
  if (t.cols != 1) throw IoError(path.string() + " must have a single column");
  return std::move(t.values);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw IoError("cannot write " + path.string());
}

void write_csv(const fs::path& path, const double* data, size_t rows, size_t cols) {
  std::string text;
  text.reserve(rows * cols * 24);
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) {
      if (j) text += ',';
      text += format_double(data[i * cols + j]);
    }
    text += '\n';
  }
  write_text(path, text);
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void emit(const Json& doc, const std::string& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out.empty())
    std::cout << text;
  else
    write_text(out, text);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// ------------------------------------------------------------------ helpers

gradvi_method parse_method(const std::string& s) {
  return s == "direct" ? GRADVI_METHOD_DIRECT : GRADVI_METHOD_COMPOUND;
}

gradvi_prior_family parse_prior(const std::string& s) {
  return s == "point-normal" ? GRADVI_PRIOR_POINT_NORMAL : GRADVI_PRIOR_ASH;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double out = 0.0;
  check(gradvi_rmse(a.data(), b.data(), a.size(), &out), "rmse");
  return out;
}

std::vector<double> fit_coef(const gradvi_fit* f) {
  std::vector<double> c(gradvi_fit_p(f));
  check(gradvi_fit_coef(f, c.data(), c.size()), "coefficients");
  return c;
}

std::vector<double> fit_predict(const gradvi_fit* f, const gradvi_dataset* d) {
  std::vector<double> out(gradvi_dataset_n(d));
  check(gradvi_fit_predict(f, d, out.data(), out.size()), "predict");
  return out;
}

Json fit_document(const gradvi_fit* f, bool timings) {
  Json doc;
  doc["method"] = gradvi_fit_method(f);
  const size_t K = gradvi_fit_prior_size(f);
  std::vector<double> w(K), grid(K);
  check(gradvi_fit_prior(f, w.data(), grid.data(), K), "prior");
  doc["prior"] = {{"family", gradvi_fit_prior_family(f)}, {"grid", grid}, {"weights", w}};
  doc["sigma2"] = gradvi_fit_sigma2(f);
  doc["elbo"] = gradvi_fit_elbo(f);
  doc["elbo_init"] = gradvi_fit_elbo_init(f);
  doc["n_iters"] = gradvi_fit_iterations(f);
  doc["n_evals"] = gradvi_fit_evaluations(f);
  doc["warmup_iters"] = gradvi_fit_warmup_iterations(f);
  doc["grad_inf_norm"] = gradvi_fit_grad_norm(f);
  doc["status"] = gradvi_fit_status(f);
  doc["intercept"] = gradvi_fit_intercept(f);
  std::vector<double> trace(gradvi_fit_elbo_trace_size(f));
  check(gradvi_fit_elbo_trace(f, trace.data(), trace.size()), "elbo trace");
  doc["elbo_trace"] = trace;
  if (timings) {
    double mv = 0, inv = 0, total = 0;
    gradvi_fit_timings(f, &mv, &inv, &total);
    doc["timings"] = {{"matvec_seconds", mv}, {"inversion_seconds", inv}, {"total_seconds", total}};
  }
  return doc;
}

Json metrics_json(double rmse_method, double rmse_ref, double elbo_method, double elbo_ref) {
  Json m;
  m["rmse"] = rmse_method;
  m["rmse_ref"] = rmse_ref;
  if (rmse_ref > 0.0)
    m["delta_rmse_pct"] = 100.0 * (rmse_method - rmse_ref) / rmse_ref;
  else if (rmse_method == 0.0)
    m["delta_rmse_pct"] = 0.0;
  m["delta_elbo"] = elbo_method - elbo_ref;
  return m;
}

struct FitFlags {
  std::string method = "compound";
  std::string prior = "ash";
  int k_mix = 20;
  int max_iter = 2000;
  double grad_tol = 1e-5;

  void add(CLI::App* cmd) {
    cmd->add_option("--method", method, "direct or compound")
        ->check(CLI::IsMember({"direct", "compound"}))
        ->capture_default_str();
    cmd->add_option("--prior", prior, "ash or point-normal")
        ->check(CLI::IsMember({"ash", "point-normal"}))
        ->capture_default_str();
    cmd->add_option("--k-mix", k_mix, "ash grid size")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "solver iteration cap")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--grad-tol", grad_tol, "gradient infinity-norm tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  gradvi_fit_options options() const {
    gradvi_fit_options o;
    gradvi_fit_options_default(&o);
    o.method = parse_method(method);
    o.prior = parse_prior(prior);
    o.k_mix = k_mix;
    o.max_iters = max_iter;
    o.grad_tol = grad_tol;
    return o;
  }
};

Fit run_fit(const gradvi_dataset* d, const gradvi_fit_options& o, const std::vector<double>* init) {
  gradvi_fit* raw = nullptr;
  check(gradvi_fit_run(d, &o, init ? init->data() : nullptr, init ? init->size() : 0, &raw), "fit");
  return Fit(raw);
}

// Concurrency for independent fits: GRADVI_THREADS=1 serializes, 0 or unset
// lets them run side by side.
bool parallel_allowed() {
  const char* env = std::getenv("GRADVI_THREADS");
  if (!env || !*env) return true;
  return std::atoi(env) != 1;
}

// ------------------------------------------------------------------ simulate

struct SimulateLinreg {
  int n = 500, p = 10000, s = 10, min_block = 2000;
  double pve = 0.6;
  std::string design = "iid", out;
  uint64_t seed = 1;

  void add(CLI::App* app) {
    auto* cmd = app->add_subcommand("linreg", "sparse linear regression data");
    cmd->add_option("--n", n, "samples")->check(CLI::Range(2, 1 << 28))->capture_default_str();
    cmd->add_option("--p", p, "predictors")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--s", s, "causal predictors")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--pve", pve, "proportion of variance explained, in (0, 1)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--design", design, "iid or block")
        ->check(CLI::IsMember({"iid", "block"}))
        ->capture_default_str();
    cmd->add_option("--min-block-size", min_block, "block design: smallest block")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", seed, "random seed")->capture_default_str();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    if (!(pve > 0.0 && pve < 1.0)) throw UsageError("--pve must lie strictly between 0 and 1");
    gradvi_linreg_spec spec;
    gradvi_linreg_spec_default(&spec);
    spec.n = n;
    spec.p = p;
    spec.s = s;
    spec.pve = pve;
    spec.design = design == "block" ? GRADVI_DESIGN_BLOCK : GRADVI_DESIGN_IID;
    spec.seed = seed;
    spec.min_block_size = min_block;
    gradvi_simulation* raw = nullptr;
    check(gradvi_simulate_linreg(&spec, &raw), "simulate linreg");
    const Simulation sim(raw);

    ensure_dir(out);
    const size_t rows = gradvi_simulation_n(sim.get()), cols = gradvi_simulation_p(sim.get());
    write_csv(fs::path(out) / "X.csv", gradvi_simulation_X(sim.get()), rows, cols);
    write_csv(fs::path(out) / "y.csv", gradvi_simulation_y(sim.get()), rows, 1);
    const double* b = gradvi_simulation_truth(sim.get());
    const int* causal = gradvi_simulation_support(sim.get());
    const int* blocks = gradvi_simulation_block_sizes(sim.get());
    Json truth;
    truth["kind"] = "linreg";
    truth["spec"] = {{"n", n},      {"p", p},           {"s", s},
                     {"pve", pve},  {"design", design}, {"seed", seed},
                     {"min_block_size", min_block}};
    truth["sigma2"] = gradvi_simulation_sigma2(sim.get());
    truth["b_true"] = std::vector<double>(b, b + cols);
    truth["causal"] = std::vector<int>(causal, causal + gradvi_simulation_support_size(sim.get()));
    truth["block_sizes"] = std::vector<int>(blocks, blocks + gradvi_simulation_block_count(sim.get()));
    write_text(fs::path(out) / "truth.json", truth.dump(2) + "\n");
    log("wrote " + std::to_string(rows) + " x " + std::to_string(cols) + " design to " + out);
  }
};

struct SimulateTrend {
  int n = 4096, changepoints = 10;
  double sigma = 0.2;
  uint64_t seed = 1;
  std::string out;

  void add(CLI::App* app) {
    auto* cmd = app->add_subcommand("trendfilter", "piecewise-constant trend data");
    cmd->add_option("--n", n, "samples")->check(CLI::Range(2, 1 << 28))->capture_default_str();
    cmd->add_option("--changepoints", changepoints, "number of changepoints")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--sigma", sigma, "noise standard deviation")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--seed", seed, "random seed")->capture_default_str();
    cmd->add_option("--out", out, "output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    gradvi_simulation* raw = nullptr;
    check(gradvi_simulate_trendfilter(n, changepoints, sigma, seed, &raw), "simulate trendfilter");
    const Simulation sim(raw);
    ensure_dir(out);
    const size_t rows = gradvi_simulation_n(sim.get());
    write_csv(fs::path(out) / "y.csv", gradvi_simulation_y(sim.get()), rows, 1);
    const double* mu = gradvi_simulation_truth(sim.get());
    const int* cps = gradvi_simulation_support(sim.get());
    Json truth;
    truth["kind"] = "trendfilter";
    truth["spec"] = {{"n", n}, {"changepoints", changepoints}, {"sigma", sigma}, {"seed", seed}};
    truth["sigma2"] = gradvi_simulation_sigma2(sim.get());
    truth["mu_true"] = std::vector<double>(mu, mu + rows);
    truth["changepoints"] = std::vector<int>(cps, cps + gradvi_simulation_support_size(sim.get()));
    write_text(fs::path(out) / "truth.json", truth.dump(2) + "\n");
    log("wrote " + std::to_string(rows) + " observations to " + out);
  }
};

// ------------------------------------------------------------------ fit

struct LinregInputs {
  Table X;
  std::vector<double> y;
  Json truth;  // null when absent
};

LinregInputs load_linreg(const std::string& data, const std::string& x, const std::string& y,
                         const std::string& truth) {
  LinregInputs in;
  fs::path xp = x, yp = y, tp = truth;
  if (!data.empty()) {
    xp = fs::path(data) / "X.csv";
    yp = fs::path(data) / "y.csv";
    if (tp.empty() && fs::exists(fs::path(data) / "truth.json")) tp = fs::path(data) / "truth.json";
  }
  if (xp.empty() || yp.empty()) throw UsageError("give --data DIR or both --x and --y");
  in.X = read_csv(xp);
  in.y = read_vector(yp);
  if (in.y.size() != in.X.rows)
    throw UsageError("y has " + std::to_string(in.y.size()) + " rows but X has " +
                     std::to_string(in.X.rows));
  if (!tp.empty()) in.truth = read_json(tp);
  return in;
}

Dataset make_dense(const LinregInputs& in, bool standardize) {
  gradvi_dataset* raw = nullptr;
  check(gradvi_dataset_dense(in.X.values.data(), in.X.rows, in.X.cols, in.y.data(), standardize, &raw),
        "dataset");
  return Dataset(raw);
}

std::vector<double> truth_vector(const Json& truth, const char* key, size_t expect) {
  if (!truth.contains(key)) throw IoError(std::string("truth.json lacks '") + key + "'");
  auto v = truth.at(key).get<std::vector<double>>();
  if (v.size() != expect)
    throw UsageError(std::string("truth '") + key + "' has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(expect));
  return v;
}

// X b for a row-major table.
std::vector<double> multiply(const Table& X, const std::vector<double>& b) {
  std::vector<double> out(X.rows, 0.0);
  for (size_t i = 0; i < X.rows; ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < X.cols; ++j) acc += X.values[i * X.cols + j] * b[j];
    out[i] = acc;
  }
  return out;
}

struct FitCommand {
  std::string data, x, y, truth, init = "null", out;
  bool standardize = false, timings = false;
  FitFlags flags;

  void add(CLI::App* app) {
    auto* cmd = app->add_subcommand("fit", "fit sparse linear regression");
    cmd->add_option("--data", data, "directory with X.csv, y.csv and optional truth.json");
    cmd->add_option("--x", x, "design matrix CSV");
    cmd->add_option("--y", y, "response CSV");
    cmd->add_option("--truth", truth, "truth.json for accuracy metrics");
    flags.add(cmd);
    cmd->add_option("--init", init, "null or a CSV of p starting coefficients")->capture_default_str();
    cmd->add_flag("--standardize", standardize, "centre and scale predictors, fit an intercept");
    cmd->add_flag("--timings", timings, "include wall-clock timings (not reproducible)");
    cmd->add_option("--out", out, "write the result document here instead of stdout");
    cmd->callback([this] { run(); });
  }

  void run() {
    const LinregInputs in = load_linreg(data, x, y, truth);
    std::vector<double> warm;
    if (init != "null") {
      warm = read_vector(init);
      if (warm.size() != in.X.cols)
        throw UsageError("--init has " + std::to_string(warm.size()) + " values, expected p = " +
                         std::to_string(in.X.cols));
    }
    const Dataset d = make_dense(in, standardize);
    const Fit f = run_fit(d.get(), flags.options(), init == "null" ? nullptr : &warm);
    log("fit finished: " + std::string(gradvi_fit_status(f.get())) + " after " +
        std::to_string(gradvi_fit_iterations(f.get())) + " iterations");

    Json doc = fit_document(f.get(), timings);
    const std::vector<double> coef = fit_coef(f.get());
    doc["coefficients"] = coef;
    if (!in.truth.is_null()) {
      // Reference: the all-zero estimate, so delta_rmse_pct is the improvement over no fit.
      const auto b_true = truth_vector(in.truth, "b_true", in.X.cols);
      const std::vector<double> zeros(in.X.cols, 0.0);
      Json metrics;
      metrics["reference"] = "null";
      metrics["coef"] = metrics_json(rmse(coef, b_true), rmse(zeros, b_true), 0.0, 0.0);
      metrics["coef"].erase("delta_elbo");
      const auto signal = multiply(in.X, b_true);
      const auto pred = fit_predict(f.get(), d.get());
      metrics["signal"] = metrics_json(rmse(pred, signal), rmse(std::vector<double>(in.X.rows, 0.0), signal),
                                       0.0, 0.0);
      metrics["signal"].erase("delta_elbo");
      doc["metrics"] = metrics;
    }
    emit(doc, out);
  }
};

// ------------------------------------------------------------------ trendfilter

struct TrendCommand {
  std::string data, y, truth, out;
  int order = 0;
  bool scaled = false, timings = false;
  FitFlags flags;

  void add(CLI::App* app) {
    auto* cmd = app->add_subcommand("trendfilter", "empirical Bayes trend filtering");
    cmd->add_option("--data", data, "directory with y.csv and optional truth.json");
    cmd->add_option("--y", y, "response CSV");
    cmd->add_option("--truth", truth, "truth.json with mu_true");
    cmd->add_option("--order", order, "0, 1 or 2")->check(CLI::IsMember({0, 1, 2}))->capture_default_str();
    cmd->add_flag("--scaled", scaled, "give every column of H the same norm");
    flags.add(cmd);
    cmd->add_flag("--timings", timings, "include wall-clock timings (not reproducible)");
    cmd->add_option("--out", out, "output directory for trend.csv and result.json")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    fs::path yp = y, tp = truth;
    if (!data.empty()) {
      yp = fs::path(data) / "y.csv";
      if (tp.empty() && fs::exists(fs::path(data) / "truth.json")) tp = fs::path(data) / "truth.json";
    }
    if (yp.empty()) throw UsageError("give --data DIR or --y FILE");
    const std::vector<double> yv = read_vector(yp);
    gradvi_dataset* raw = nullptr;
    check(gradvi_dataset_trendfilter(yv.data(), yv.size(), order, scaled, &raw), "dataset");
    const Dataset d(raw);
    const Fit f = run_fit(d.get(), flags.options(), nullptr);
    log("trend fit finished: " + std::string(gradvi_fit_status(f.get())) + " after " +
        std::to_string(gradvi_fit_iterations(f.get())) + " iterations");

    const std::vector<double> trend = fit_predict(f.get(), d.get());
    Json doc = fit_document(f.get(), timings);
    doc["order"] = order;
    doc["scaled"] = scaled;
    doc["n"] = yv.size();
    doc["trend_path"] = "trend.csv";
    if (!tp.empty()) {
      const Json t = read_json(tp);
      const auto mu = truth_vector(t, "mu_true", yv.size());
      const double fit_rmse = rmse(trend, mu), data_rmse = rmse(yv, mu);
      const double mse_fit = fit_rmse * fit_rmse, mse_data = data_rmse * data_rmse;
      Json m;
      m["mse_fit"] = mse_fit;
      m["mse_data"] = mse_data;
      m["improved"] = mse_fit < mse_data;
      if (mse_data > 0.0) m["mse_reduction_pct"] = 100.0 * (mse_data - mse_fit) / mse_data;
      doc["metrics"] = m;
    }
    ensure_dir(out);
    write_csv(fs::path(out) / "trend.csv", trend.data(), trend.size(), 1);
    write_text(fs::path(out) / "result.json", doc.dump(2) + "\n");
  }
};

// ------------------------------------------------------------------ compare

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t m = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < m; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= m;
  my /= m;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < m; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

struct CompareCommand {
  std::string data, out;
  bool cavi_check = false, timing_sweep = false;
  int sweep_min = 10, sweep_max = 14, sweep_iters = 20;
  uint64_t seed = 1;
  FitFlags flags;

  void add(CLI::App* app) {
    auto* cmd = app->add_subcommand("compare", "direct vs compound fits, CAVI check, timing sweep");
    cmd->add_option("--data", data, "regression simulation directory");
    flags.add(cmd);
    cmd->add_flag("--cavi-check", cavi_check, "coordinate ascent at the fitted prior and sigma2");
    cmd->add_flag("--timing-sweep", timing_sweep, "per-iteration time of trend-filter fits (not reproducible)");
    cmd->add_option("--sweep-min-log2", sweep_min, "smallest n = 2^k in the sweep")
        ->check(CLI::Range(3, 24))
        ->capture_default_str();
    cmd->add_option("--sweep-max-log2", sweep_max, "largest n = 2^k in the sweep")
        ->check(CLI::Range(3, 24))
        ->capture_default_str();
    cmd->add_option("--sweep-iters", sweep_iters, "solver iterations per sweep fit")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", seed, "seed for the sweep simulations")->capture_default_str();
    cmd->add_option("--out", out, "write the comparison document here instead of stdout");
    cmd->callback([this] { run(); });
  }

  void run() {
    if (data.empty() && !timing_sweep) throw UsageError("give --data DIR or --timing-sweep");
    if (sweep_min > sweep_max) throw UsageError("--sweep-min-log2 exceeds --sweep-max-log2");
    Json doc;
    if (!data.empty()) doc["regression"] = compare_methods();
    if (timing_sweep) doc["timing_sweep"] = sweep();
    emit(doc, out);
  }

  Json compare_methods() {
    const LinregInputs in = load_linreg(data, "", "", "");
    const Dataset d = make_dense(in, false);
    gradvi_fit_options oc = flags.options(), od = oc;
    oc.method = GRADVI_METHOD_COMPOUND;
    od.method = GRADVI_METHOD_DIRECT;
    Fit fc, fd;
    if (parallel_allowed()) {
      auto task = std::async(std::launch::async, [&] { return run_fit(d.get(), od, nullptr); });
      fc = run_fit(d.get(), oc, nullptr);
      fd = task.get();
    } else {
      fc = run_fit(d.get(), oc, nullptr);
      fd = run_fit(d.get(), od, nullptr);
    }
    Json r;
    Json compound = fit_document(fc.get(), false), direct = fit_document(fd.get(), false);
    compound.erase("elbo_trace");
    direct.erase("elbo_trace");
    r["compound"] = compound;
    r["direct"] = direct;
    const double ec = gradvi_fit_elbo(fc.get()), ed = gradvi_fit_elbo(fd.get());
    r["delta_elbo"] = ed - ec;
    r["relative_delta_elbo"] = std::abs(ed - ec) / std::max(std::abs(ec), 1e-300);
    if (!in.truth.is_null()) {
      const auto b_true = truth_vector(in.truth, "b_true", in.X.cols);
      const auto signal = multiply(in.X, b_true);
      const double rc = rmse(fit_predict(fc.get(), d.get()), signal);
      const double rd = rmse(fit_predict(fd.get(), d.get()), signal);
      // Direct against compound as the reference.
      r["metrics"] = metrics_json(rd, rc, ed, ec);
      r["metrics"]["reference"] = "compound";
    }
    if (cavi_check) {
      int sweeps = 0;
      double gnorm = 0.0;
      check(gradvi_cavi_check(d.get(), fc.get(), 1e-10, 100000, nullptr, 0, &sweeps, &gnorm), "cavi");
      r["cavi"] = {{"tol", 1e-10},
                   {"sweeps", sweeps},
                   {"grad_inf_norm", gnorm},
                   {"stationary", gnorm <= 1e-6},
                   {"gradvi_iters", gradvi_fit_iterations(fc.get())}};
    }
    return r;
  }

  Json sweep() {
    std::vector<double> ns, per_iter;
    Json rows = Json::array();
    for (int k = sweep_min; k <= sweep_max; ++k) {
      const int n = 1 << k;
      gradvi_simulation* rs = nullptr;
      check(gradvi_simulate_trendfilter(n, 10, 0.2, seed, &rs), "simulate trendfilter");
      const Simulation sim(rs);
      gradvi_dataset* rd = nullptr;
      check(gradvi_dataset_trendfilter(gradvi_simulation_y(sim.get()), static_cast<size_t>(n), 0, 1, &rd),
            "dataset");
      const Dataset d(rd);
      gradvi_fit_options o = flags.options();
      o.method = GRADVI_METHOD_COMPOUND;
      o.max_iters = sweep_iters;
      o.grad_tol = 1e-300;
      o.rel_obj_tol = 0.0;
      const Fit f = run_fit(d.get(), o, nullptr);
      double mv = 0, inv = 0, total = 0;
      gradvi_fit_timings(f.get(), &mv, &inv, &total);
      const int evals = std::max(1, gradvi_fit_evaluations(f.get()));
      const int iters = std::max(1, gradvi_fit_iterations(f.get()));
      ns.push_back(n);
      per_iter.push_back(total / iters);
      rows.push_back({{"n", n},
                      {"log2_n", k},
                      {"iterations", iters},
                      {"evaluations", evals},
                      {"seconds_per_iteration", total / iters},
                      {"matvec_seconds", mv},
                      {"total_seconds", total}});
      log("sweep n = " + std::to_string(n) + ": " + format_double(total / iters) + " s/iteration");
    }
    Json s;
    s["rows"] = rows;
    if (ns.size() >= 2) s["loglog_slope"] = loglog_slope(ns, per_iter);
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational empirical Bayes sparse regression by quasi-Newton optimization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gradvi_version());

  SimulateLinreg sim_linreg;
  SimulateTrend sim_trend;
  auto* simulate = app.add_subcommand("simulate", "generate a seeded data set");
  simulate->require_subcommand(1);
  sim_linreg.add(simulate);
  sim_trend.add(simulate);

  FitCommand fit;
  fit.add(&app);
  TrendCommand trend;
  trend.add(&app);
  CompareCommand compare;
  compare.add(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const UsageError& e) {
    log(e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    log(e.what());
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    log(std::string("malformed JSON input: ") + e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    log(e.what());
    return kExitIo;
  }
  return kExitOk;
}
