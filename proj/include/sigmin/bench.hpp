#ifndef SIGMIN_BENCH_HPP
#define SIGMIN_BENCH_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sigmin/curve.hpp"
#include "sigmin/generators.hpp"
#include "sigmin/io.hpp"
#include "sigmin/minimize.hpp"
#include "sigmin/rbf_approx.hpp"
#include "sigmin/rng.hpp"
#include "sigmin/svd.hpp"
#include "sigmin/svd_denoise.hpp"

namespace sigmin {

enum class BenchProblem { ApproxGrid, ApproxCurve, Denoise };

// Flat key=value benchmark configuration. Desk-scale defaults; paper-scale
// instances stay reachable by raising side/n_centres/k/nsv.
struct BenchConfig {
  BenchProblem problem = BenchProblem::ApproxGrid;
  std::size_t side = 64;
  std::size_t n_centres = 128;
  std::size_t k = 32;
  double lambda = 1e-12;
  CurveKind curve = CurveKind::Circle;
  std::size_t m = 256;
  std::string image;  // PGM path; empty means use the generator
  GridKind generator = GridKind::Peaks;
  double alpha = 0.1;
  std::size_t nsv = 64;
  double noise_variance = 0.05;
  std::vector<std::string> methods = {"praxis", "lbfgs"};
  std::size_t budget = 2000;
  double time_limit = 0.0;
  double x_tol = 1e-8;
  double f_tol = 1e-10;
  std::vector<int> threads = {1};
  std::string out = "out";
  std::uint64_t seed = 1;
  bool mask_times = false;  // zero out wall-clock columns for replay checks

  void check() const {
    if (side < 2) throw std::invalid_argument("config: side must be at least 2");
    if (n_centres == 0) throw std::invalid_argument("config: n_centres must be positive");
    if (k == 0) throw std::invalid_argument("config: k must be positive");
    if (lambda <= 0.0) throw std::invalid_argument("config: lambda must be positive");
    if (m < 8) throw std::invalid_argument("config: m must be at least 8");
    if (alpha < 0.0) throw std::invalid_argument("config: alpha must be >= 0");
    if (nsv == 0) throw std::invalid_argument("config: nsv must be positive");
    if (noise_variance < 0.0)
      throw std::invalid_argument("config: noise_variance must be >= 0");
    if (methods.empty()) throw std::invalid_argument("config: need at least one method");
    if (budget == 0) throw std::invalid_argument("config: budget must be positive");
    if (threads.empty()) throw std::invalid_argument("config: thread list is empty");
    for (std::size_t i = 0; i < threads.size(); ++i) {
      if (threads[i] < 1) throw std::invalid_argument("config: thread counts must be >= 1");
      if (i > 0 && threads[i] < threads[i - 1])
        throw std::invalid_argument("config: thread counts must be sorted ascending");
    }
    if (out.empty()) throw std::invalid_argument("config: output directory is empty");
  }
};

inline const char* bench_config_schema() {
  return
      "Config file: flat key = value lines; '#' starts a comment; [section]\n"
      "headers are allowed and ignored. Keys:\n"
      "  problem        approx_grid | approx_curve | denoise\n"
      "  side           grid / image side length (default 64)\n"
      "  n_centres      number of radial basis centres (default 128)\n"
      "  k              neighbours kept per Gram row (default 32)\n"
      "  lambda         least-squares regularisation (default 1e-12)\n"
      "  curve          circle | heart (approx_curve instances)\n"
      "  m              samples along the curve (default 256)\n"
      "  image          input PGM path; empty uses the generator\n"
      "  generator      peaks | sinemix | random\n"
      "  alpha          shrinkage penalty weight (default 0.1)\n"
      "  nsv            retained singular values (default 64)\n"
      "  noise_variance speckle variance applied to generated denoise and\n"
      "                 demo inputs (default 0.05)\n"
      "  methods        comma list of direct_l,praxis,lbfgs,isres,cobyla\n"
      "  budget         objective evaluation budget per method\n"
      "  time_limit     per-method wall clock limit in seconds; 0 disables\n"
      "  x_tol, f_tol   optimiser stopping tolerances\n"
      "  threads        comma list of thread counts, sorted ascending\n"
      "  out            output directory\n"
      "  seed           RNG seed for instances and stochastic methods\n"
      "  mask_times     true writes zeros into time columns so reruns are\n"
      "                 byte-identical\n";
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw io_error("config: " + key + ": expected a boolean, got '" + v + "'");
}

inline double parse_real(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw io_error("config: " + key + ": expected a number, got '" + v + "'");
  }
}

inline std::uint64_t parse_count(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    long long n = std::stoll(v, &used);
    if (used != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(n);
  } catch (const std::exception&) {
    throw io_error("config: " + key + ": expected a non-negative integer, got '" + v + "'");
  }
}

}  // namespace detail

inline std::vector<int> parse_thread_list(const std::string& text) {
  std::vector<int> out;
  for (const std::string& tok : detail::split_list(text))
    out.push_back(static_cast<int>(detail::parse_count(tok, "threads")));
  return out;
}

inline Method method_from_name(const std::string& name) {
  if (name == "direct_l") return Method::direct_l;
  if (name == "praxis") return Method::praxis;
  if (name == "lbfgs") return Method::lbfgs;
  if (name == "isres") return Method::isres;
  if (name == "cobyla") return Method::cobyla;
  throw std::invalid_argument("config: unknown method '" + name + "'");
}

inline void apply_config_key(BenchConfig& cfg, const std::string& key,
                             const std::string& value) {
  using detail::parse_bool;
  using detail::parse_count;
  using detail::parse_real;
  if (key == "problem") {
    if (value == "approx_grid") cfg.problem = BenchProblem::ApproxGrid;
    else if (value == "approx_curve") cfg.problem = BenchProblem::ApproxCurve;
    else if (value == "denoise") cfg.problem = BenchProblem::Denoise;
    else throw io_error("config: unknown problem '" + value + "'");
  } else if (key == "side") {
    cfg.side = parse_count(value, key);
  } else if (key == "n_centres") {
    cfg.n_centres = parse_count(value, key);
  } else if (key == "k") {
    cfg.k = parse_count(value, key);
  } else if (key == "lambda") {
    cfg.lambda = parse_real(value, key);
  } else if (key == "curve") {
    if (value == "circle") cfg.curve = CurveKind::Circle;
    else if (value == "heart") cfg.curve = CurveKind::Heart;
    else throw io_error("config: unknown curve '" + value + "'");
  } else if (key == "m") {
    cfg.m = parse_count(value, key);
  } else if (key == "image") {
    cfg.image = value;
  } else if (key == "generator") {
    if (value == "peaks") cfg.generator = GridKind::Peaks;
    else if (value == "sinemix") cfg.generator = GridKind::SineMix;
    else if (value == "random") cfg.generator = GridKind::Random;
    else throw io_error("config: unknown generator '" + value + "'");
  } else if (key == "alpha") {
    cfg.alpha = parse_real(value, key);
  } else if (key == "nsv") {
    cfg.nsv = parse_count(value, key);
  } else if (key == "noise_variance") {
    cfg.noise_variance = parse_real(value, key);
  } else if (key == "methods") {
    cfg.methods = detail::split_list(value);
    for (const std::string& name : cfg.methods) method_from_name(name);
  } else if (key == "budget") {
    cfg.budget = parse_count(value, key);
  } else if (key == "time_limit") {
    cfg.time_limit = parse_real(value, key);
  } else if (key == "x_tol") {
    cfg.x_tol = parse_real(value, key);
  } else if (key == "f_tol") {
    cfg.f_tol = parse_real(value, key);
  } else if (key == "threads") {
    cfg.threads = parse_thread_list(value);
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "seed") {
    cfg.seed = parse_count(value, key);
  } else if (key == "mask_times") {
    cfg.mask_times = parse_bool(value, key);
  } else {
    throw io_error("config: unknown key '" + key + "'");
  }
}

inline void load_bench_config(std::istream& in, BenchConfig& cfg) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw io_error("config: line " + std::to_string(lineno) + ": expected key = value");
    apply_config_key(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
}

inline void load_bench_config(const std::string& path, BenchConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  load_bench_config(in, cfg);
}

// The dispatch layer raises for these combinations; the harness skips them
// up front and surfaces the reason in the report instead.
inline bool method_supports(Method m, const ObjectiveProblem& problem) {
  if (!problem.constrained()) return true;
  return m == Method::isres || m == Method::cobyla;
}

struct ApproxInstance {
  std::shared_ptr<RbfProblem> rbf;
  std::shared_ptr<Curve> curve;  // null for grid instances
  ObjectiveProblem problem;
};

// Fresh problem instance per call so evaluation counters start at zero.
inline ApproxInstance build_approx_instance(const BenchConfig& cfg) {
  ApproxInstance inst;
  if (cfg.problem == BenchProblem::ApproxCurve) {
    CurvePoints control = sample_curve(cfg.curve, std::min<std::size_t>(cfg.m, 64), cfg.seed);
    inst.curve = std::make_shared<Curve>(fit_interpolating_curve(control));
    CurvePoints dense = sample_curve(cfg.curve, cfg.m, cfg.seed);
    Signal sig;
    sig.xs = dense.xs;
    sig.ys = dense.ys;
    sig.values.reserve(cfg.m);
    Rng rng(cfg.seed + 1);
    for (std::size_t i = 0; i < cfg.m; ++i) {
      double v = 0.0;
      switch (cfg.generator) {
        case GridKind::Peaks: v = peaks_value(dense.xs[i], dense.ys[i]); break;
        case GridKind::SineMix:
          v = std::sin(12.0 * dense.xs[i]) * std::sin(12.0 * dense.ys[i]);
          break;
        case GridKind::Random: v = rng.uniform(-1.0, 1.0); break;
      }
      sig.values.push_back(v);
    }
    inst.rbf = std::make_shared<RbfProblem>(std::move(sig), cfg.n_centres, Domain{}, cfg.k,
                                            cfg.lambda);
  } else {
    inst.rbf = std::make_shared<RbfProblem>(make_grid_signal(cfg.side, cfg.generator, cfg.seed),
                                            cfg.n_centres, Domain{}, cfg.k, cfg.lambda);
  }

  std::shared_ptr<RbfProblem> rbf = inst.rbf;
  inst.problem.dim = rbf->dim();
  inst.problem.objective = [rbf](const std::vector<double>& mu) {
    return approx_objective(mu, *rbf);
  };
  inst.problem.lower = rbf->lower_bounds();
  inst.problem.upper = rbf->upper_bounds();
  if (inst.curve) {
    std::shared_ptr<Curve> curve = inst.curve;
    inst.problem.equality_constraints = [curve](const std::vector<double>& mu) {
      return curve_distance_constraint(*curve, mu);
    };
    inst.problem.start.resize(2 * cfg.n_centres);
    double period = curve->period();
    for (std::size_t j = 0; j < cfg.n_centres; ++j) {
      auto [x, y] = curve->eval(period * static_cast<double>(j) /
                               static_cast<double>(cfg.n_centres));
      inst.problem.start[2 * j] = x;
      inst.problem.start[2 * j + 1] = y;
    }
  } else {
    Rng rng(cfg.seed);
    inst.problem.start.resize(2 * cfg.n_centres);
    for (std::size_t j = 0; j < cfg.n_centres; ++j) {
      inst.problem.start[2 * j] = rng.uniform(rbf->bounds.xlo, rbf->bounds.xhi);
      inst.problem.start[2 * j + 1] = rng.uniform(rbf->bounds.ylo, rbf->bounds.yhi);
    }
  }
  return inst;
}

struct DenoiseInstance {
  std::shared_ptr<DenoiseProblem> denoise;
  ObjectiveProblem problem;
};

inline DenseMatrix load_or_make_image(const BenchConfig& cfg) {
  if (!cfg.image.empty()) return load_pgm(cfg.image);
  return make_test_image(cfg.side, cfg.generator, cfg.seed);
}

// Generator-built denoise inputs are speckled at noise_variance so the
// retained spectrum stays clear of the threshold margin (smooth synthetic
// images are numerically low-rank). Loaded images are taken as given.
inline DenseMatrix denoise_input_image(const BenchConfig& cfg) {
  if (!cfg.image.empty()) return load_pgm(cfg.image);
  DenseMatrix img = make_test_image(cfg.side, cfg.generator, cfg.seed);
  if (cfg.noise_variance > 0.0) {
    Rng rng(cfg.seed);
    img = apply_speckle(img, cfg.noise_variance, rng);
  }
  return img;
}

inline DenoiseInstance build_denoise_instance(const BenchConfig& cfg,
                                              const DenseMatrix* ready_image = nullptr) {
  DenseMatrix img = ready_image ? *ready_image : denoise_input_image(cfg);
  SvdFactors factors = svd_cross(img, cfg.nsv, 1e-6, 1);
  DenoiseInstance inst;
  inst.denoise = std::make_shared<DenoiseProblem>(std::move(img), std::move(factors), cfg.alpha);
  std::shared_ptr<DenoiseProblem> dp = inst.denoise;
  inst.problem.dim = dp->rank();
  inst.problem.objective = [dp](const std::vector<double>& mu) {
    return denoise_objective(mu, *dp);
  };
  inst.problem.gradient = [dp](const std::vector<double>& mu) {
    return denoise_gradient(mu, *dp);
  };
  auto box = threshold_bounds(*dp);
  inst.problem.lower = std::move(box.first);
  inst.problem.upper = std::move(box.second);
  inst.problem.start.assign(dp->rank(), 0.0);
  return inst;
}

inline OptimiserSpec spec_from_config(const BenchConfig& cfg, Method m) {
  OptimiserSpec spec;
  spec.method = m;
  spec.budget = cfg.budget;
  spec.time_limit = cfg.time_limit;
  spec.seed = cfg.seed;
  spec.x_tol = cfg.x_tol;
  spec.f_tol = cfg.f_tol;
  return spec;
}

struct MethodRow {
  std::string method;
  bool ran = false;
  std::string skip_reason;
  RunReport report;
};

inline std::string output_path(const BenchConfig& cfg, const std::string& name) {
  if (cfg.out == ".") return name;
  return cfg.out + "/" + name;
}

inline void ensure_out_dir(const BenchConfig& cfg) {
  if (cfg.out == ".") return;
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
}

inline std::ofstream open_output(const BenchConfig& cfg, const std::string& name) {
  ensure_out_dir(cfg);
  std::string path = output_path(cfg, name);
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  return out;
}

inline void write_report_csv(const BenchConfig& cfg, const std::string& name,
                             const std::vector<MethodRow>& rows) {
  std::ofstream out = open_output(cfg, name);
  out << "method,functional_value,functional_count,time_s,converged\n";
  for (const MethodRow& row : rows) {
    if (!row.ran) {
      out << row.method << ",,,,\"" << row.skip_reason << "\"\n";
      continue;
    }
    double secs = cfg.mask_times ? 0.0 : row.report.elapsed_seconds;
    out << row.method << ',' << format_double(row.report.best_f) << ','
        << row.report.functional_count << ',' << format_double(secs) << ','
        << (row.report.converged ? "true" : "false") << '\n';
  }
  if (!out) throw io_error(output_path(cfg, name) + ": write failed");
}

inline void write_trace_csv(const BenchConfig& cfg, const MethodRow& row) {
  std::ofstream out = open_output(cfg, "trace_" + row.method + ".csv");
  out << "evaluation_index,best_f\n";
  for (const auto& [index, best] : row.report.trace)
    out << index << ',' << format_double(best) << '\n';
  if (!out) throw io_error(output_path(cfg, "trace_" + row.method + ".csv") + ": write failed");
}

inline std::vector<MethodRow> run_configured_methods(
    const BenchConfig& cfg, const std::function<ObjectiveProblem()>& fresh_problem) {
  std::vector<MethodRow> rows;
  for (const std::string& name : cfg.methods) {
    MethodRow row;
    row.method = name;
    Method m = method_from_name(name);
    ObjectiveProblem problem = fresh_problem();
    if (!method_supports(m, problem)) {
      row.skip_reason = "unsupported: nonlinear constraints";
    } else {
      row.report = minimize(spec_from_config(cfg, m), problem);
      row.ran = true;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const MethodRow* best_completed_row(const std::vector<MethodRow>& rows) {
  const MethodRow* best = nullptr;
  for (const MethodRow& row : rows)
    if (row.ran && (!best || row.report.best_f < best->report.best_f)) best = &row;
  return best;
}

// Optimiser comparison on an approximation instance: report, traces, final
// reconstruction, and centre positions.
inline int cmd_approx(const BenchConfig& cfg) {
  if (cfg.problem == BenchProblem::Denoise)
    throw std::invalid_argument("approx: config selects the denoise problem");
  std::vector<MethodRow> rows = run_configured_methods(
      cfg, [&cfg]() { return build_approx_instance(cfg).problem; });
  write_report_csv(cfg, "approx_report.csv", rows);
  for (const MethodRow& row : rows)
    if (row.ran) write_trace_csv(cfg, row);

  const MethodRow* best = best_completed_row(rows);
  std::vector<double> mu;
  if (best)
    mu = best->report.best_x;
  ApproxInstance inst = build_approx_instance(cfg);
  if (mu.empty()) mu = inst.problem.start_point();
  SparseMatrixCSR phi = assemble_gram(inst.rbf->signal.xs, inst.rbf->signal.ys, mu,
                                      inst.rbf->k, 1);
  CoefficientSolve sol = solve_coefficients(phi, inst.rbf->signal.values, inst.rbf->lambda,
                                            1e-8, 10 * inst.rbf->signal.size(), 1);
  save_signal_csv(output_path(cfg, "reconstruction.csv"),
                  reconstruct(mu, sol.beta, *inst.rbf));
  CurvePoints centres;
  for (std::size_t j = 0; j + 1 < mu.size(); j += 2) {
    centres.xs.push_back(mu[j]);
    centres.ys.push_back(mu[j + 1]);
  }
  save_curve_csv(output_path(cfg, "centres.csv"), centres);
  return 0;
}

// Optimiser comparison on the denoising instance plus the gap to the
// closed-form threshold.
inline int cmd_denoise(const BenchConfig& cfg) {
  if (cfg.problem != BenchProblem::Denoise)
    throw std::invalid_argument("denoise: config selects an approximation problem");
  DenseMatrix image = denoise_input_image(cfg);
  std::vector<MethodRow> rows = run_configured_methods(
      cfg, [&cfg, &image]() { return build_denoise_instance(cfg, &image).problem; });
  write_report_csv(cfg, "denoise_report.csv", rows);
  for (const MethodRow& row : rows)
    if (row.ran) write_trace_csv(cfg, row);

  DenoiseInstance inst = build_denoise_instance(cfg, &image);
  std::vector<double> star = denoise_closed_form(*inst.denoise);
  {
    std::ofstream out = open_output(cfg, "closed_form_gap.csv");
    out << "method,gap\n";
    for (const MethodRow& row : rows) {
      if (!row.ran) continue;
      double gap = 0.0;
      for (std::size_t i = 0; i < star.size(); ++i)
        gap = std::max(gap, std::abs(row.report.best_x[i] - star[i]));
      out << row.method << ',' << format_double(gap) << '\n';
    }
    if (!out) throw io_error(output_path(cfg, "closed_form_gap.csv") + ": write failed");
  }

  const MethodRow* best = best_completed_row(rows);
  std::vector<double> mu = best ? best->report.best_x : star;
  save_pgm(output_path(cfg, "denoised.pgm"), denoised_image(mu, *inst.denoise));
  return 0;
}

namespace detail {

struct NamedOp {
  std::string name;
  std::function<void(int)> body;  // argument is the effective thread count
};

inline double time_op_ms(const std::function<void(int)>& body, int threads, bool masked) {
  body(threads);
  if (masked) return 0.0;
  std::array<double, 5> reps{};
  for (double& r : reps) {
    auto t0 = std::chrono::steady_clock::now();
    body(threads);
    r = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
  }
  std::sort(reps.begin(), reps.end());
  return reps[2];
}

// Operation set matching the approximation pipeline stages.
inline std::vector<NamedOp> approx_scaling_ops(const ApproxInstance& inst) {
  std::shared_ptr<RbfProblem> rbf = inst.rbf;
  std::vector<double> mu = inst.problem.start_point();
  auto phi = std::make_shared<SparseMatrixCSR>(
      assemble_gram(rbf->signal.xs, rbf->signal.ys, mu, rbf->k, 1));
  auto phi_t = std::make_shared<SparseMatrixCSR>(sparse_transpose(*phi, 1));
  auto gram = std::make_shared<SparseMatrixCSR>(sparse_matmat(*phi_t, *phi, 1));
  auto normal = std::make_shared<SparseMatrixCSR>(matrix_shift(*gram, rbf->lambda));
  auto rhs = std::make_shared<std::vector<double>>(sparse_matvec(*phi_t, rbf->signal.values, 1));
  auto centres_x = std::make_shared<std::vector<double>>(rbf->n_centres);
  auto centres_y = std::make_shared<std::vector<double>>(rbf->n_centres);
  for (std::size_t j = 0; j < rbf->n_centres; ++j) {
    (*centres_x)[j] = mu[2 * j];
    (*centres_y)[j] = mu[2 * j + 1];
  }
  auto tree = std::make_shared<KdTree>(*centres_x, *centres_y);

  std::vector<NamedOp> ops;
  ops.push_back({"knn_search", [rbf, tree](int p) {
                   tree->knn_batch(rbf->signal.xs, rbf->signal.ys, rbf->k, p);
                 }});
  ops.push_back({"matrix_def", [rbf, mu](int p) {
                   assemble_gram(rbf->signal.xs, rbf->signal.ys, mu, rbf->k, p);
                 }});
  ops.push_back({"mat_transpose", [phi](int p) { sparse_transpose(*phi, p); }});
  ops.push_back({"mat_mat_mult", [phi, phi_t](int p) { sparse_matmat(*phi_t, *phi, p); }});
  ops.push_back({"mat_vec_mult", [rbf, phi_t](int p) {
                   sparse_matvec(*phi_t, rbf->signal.values, p);
                 }});
  ops.push_back({"matrix_shift", [gram, rbf](int) { matrix_shift(*gram, rbf->lambda); }});
  ops.push_back({"solve_system", [normal, rhs](int p) {
                   JacobiPreconditioner precond(*normal);
                   bicgstab_solve(*normal, *rhs, &precond, 1e-8, 10 * normal->rows, p);
                 }});
  ops.push_back({"vec_vec_add", [rbf](int p) {
                   vec_add(rbf->signal.values, rbf->signal.values, p);
                 }});
  ops.push_back({"vec_norm", [rbf](int p) { norm2(rbf->signal.values, p); }});
  ops.push_back({"total", [rbf, mu](int p) {
                   RbfProblem scoped(rbf->signal, rbf->n_centres, rbf->bounds, rbf->k,
                                     rbf->lambda);
                   scoped.threads = p;
                   approx_objective(mu, scoped);
                 }});
  return ops;
}

// Operation set matching the denoising pipeline stages.
inline std::vector<NamedOp> denoise_scaling_ops(const BenchConfig& cfg,
                                                const std::shared_ptr<DenoiseProblem>& dp) {
  auto image = std::make_shared<DenseMatrix>(dp->f);
  auto mu = std::make_shared<std::vector<double>>(denoise_closed_form(*dp));
  std::size_t r = dp->rank();
  auto shat = std::make_shared<SparseMatrixCSR>();
  shat->rows = shat->cols = r;
  shat->row_ptr.resize(r + 1);
  shat->col_idx.resize(r);
  shat->values.resize(r);
  for (std::size_t i = 0; i < r; ++i) {
    shat->row_ptr[i] = i;
    shat->col_idx[i] = i;
    shat->values[i] = dp->svd.s[i] - (*mu)[i];
  }
  shat->row_ptr[r] = r;
  auto vt = std::make_shared<DenseMatrix>(dense_transpose(dp->svd.v, 1));
  auto sv = std::make_shared<DenseMatrix>(sparse_dense_matmat(*shat, *vt, 1));
  auto recon = std::make_shared<DenseMatrix>(dense_matmat(dp->svd.u, *sv, 1));
  std::size_t nsv = cfg.nsv;

  std::vector<NamedOp> ops;
  ops.push_back({"svd", [image, nsv](int p) { svd_cross(*image, nsv, 1e-6, p); }});
  ops.push_back({"mat_shift", [image](int) { matrix_shift(*image, 0.5); }});
  ops.push_back({"mat_transpose", [dp](int p) { dense_transpose(dp->svd.v, p); }});
  ops.push_back({"mat_mat_mult_sparse", [shat, vt](int p) {
                   sparse_dense_matmat(*shat, *vt, p);
                 }});
  ops.push_back({"mat_mat_mult_dense", [dp, sv](int p) { dense_matmat(dp->svd.u, *sv, p); }});
  ops.push_back({"mat_add", [image, recon](int p) { dense_sub(*image, *recon, p); }});
  ops.push_back({"mat_norm", [image](int p) { frobenius_norm(*image, p); }});
  ops.push_back({"vec_norm", [dp](int p) { norm2(dp->svd.s, p); }});
  ops.push_back({"total", [dp, mu](int) { denoise_objective(*mu, *dp); }});
  return ops;
}

}  // namespace detail

// Scaling sweep: per-operation wall time and parallel efficiency over the
// configured thread counts.
inline int cmd_scale(const BenchConfig& cfg) {
  std::vector<detail::NamedOp> ops;
  std::shared_ptr<DenoiseProblem> hold_denoise;
  ApproxInstance hold_approx;
  if (cfg.problem == BenchProblem::Denoise) {
    DenoiseInstance inst = build_denoise_instance(cfg);
    hold_denoise = inst.denoise;
    ops = detail::denoise_scaling_ops(cfg, hold_denoise);
  } else {
    hold_approx = build_approx_instance(cfg);
    ops = detail::approx_scaling_ops(hold_approx);
  }

  unsigned host = std::thread::hardware_concurrency();
  if (host == 0) host = 1;
  std::vector<std::string> notes;
  std::vector<int> effective(cfg.threads.size());
  for (std::size_t i = 0; i < cfg.threads.size(); ++i) {
    effective[i] = cfg.threads[i];
    if (static_cast<unsigned>(cfg.threads[i]) > host) {
      effective[i] = static_cast<int>(host);
      std::string note = "requested " + std::to_string(cfg.threads[i]) +
                         " threads capped to " + std::to_string(effective[i]) +
                         " (host limit)";
      std::cerr << "scale: warning: " << note << "\n";
      notes.push_back(note);
    }
  }

  std::ofstream out = open_output(cfg, "scaling.csv");
  for (const std::string& note : notes) out << "# note: " << note << "\n";
  out << "operation,threads,milliseconds,efficiency\n";
  for (const detail::NamedOp& op : ops) {
    double t1 = detail::time_op_ms(op.body, 1, cfg.mask_times);
    for (std::size_t i = 0; i < cfg.threads.size(); ++i) {
      int requested = cfg.threads[i];
      double tp = requested == 1 ? t1 : detail::time_op_ms(op.body, effective[i], cfg.mask_times);
      double eff;
      if (cfg.mask_times)
        eff = 1.0;
      else if (requested == 1)
        eff = 1.0;
      else
        eff = t1 / (static_cast<double>(requested) * tp);
      out << op.name << ',' << requested << ',' << format_double(tp) << ','
          << format_double(eff) << '\n';
    }
  }
  if (!out) throw io_error(output_path(cfg, "scaling.csv") + ": write failed");
  return 0;
}

struct SvdCompareRow {
  std::string method;
  std::string matrix;
  int threads = 0;
  double time_ms = 0.0;
  bool converged = false;
  double max_resid = 0.0;
};

namespace detail {

template <typename Mat>
inline double svd_max_residual(const Mat& a, const SvdFactors& f) {
  double worst = 0.0;
  std::vector<double> vcol(f.v.rows), ucol(f.u.rows);
  for (std::size_t j = 0; j < f.s.size(); ++j) {
    for (std::size_t i = 0; i < f.v.rows; ++i) vcol[i] = f.v.at(i, j);
    std::vector<double> av;
    if constexpr (std::is_same_v<Mat, SparseMatrixCSR>)
      av = sparse_matvec(a, vcol, 1);
    else
      av = dense_matvec(a, vcol, 1);
    for (std::size_t i = 0; i < f.u.rows; ++i) av[i] -= f.s[j] * f.u.at(i, j);
    worst = std::max(worst, norm2(av, 1));
  }
  return worst / f.s[0];
}

template <typename Mat>
inline void svd_compare_into(const Mat& a, const std::string& label, const BenchConfig& cfg,
                             std::vector<SvdCompareRow>& rows) {
  for (int requested : cfg.threads) {
    for (const char* method : {"cross", "lanczos"}) {
      SvdCompareRow row;
      row.method = method;
      row.matrix = label;
      row.threads = requested;
      auto run = [&]() {
        return method == std::string("cross") ? svd_cross(a, cfg.nsv, 1e-6, requested)
                                              : svd_lanczos(a, cfg.nsv, 1e-6, requested);
      };
      try {
        auto t0 = std::chrono::steady_clock::now();
        SvdFactors f = run();
        row.time_ms = cfg.mask_times
                          ? 0.0
                          : std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        row.converged = true;
        row.max_resid = svd_max_residual(a, f);
      } catch (const svd_error&) {
        row.converged = false;
      }
      rows.push_back(std::move(row));
    }
  }
}

}  // namespace detail

template <typename DenseLike, typename SparseLike>
inline std::vector<SvdCompareRow> svd_compare_rows(const DenseLike& dense,
                                                   const SparseLike& sparse,
                                                   const BenchConfig& cfg) {
  std::vector<SvdCompareRow> rows;
  detail::svd_compare_into(dense, "dense", cfg, rows);
  detail::svd_compare_into(sparse, "sparse", cfg, rows);
  return rows;
}

// Truncated-SVD method comparison on a dense image and a sparse grid
// Laplacian. Non-converged rows keep their slot with an `nc` residual.
inline int cmd_svdcmp(const BenchConfig& cfg) {
  DenseMatrix dense = load_or_make_image(cfg);
  std::size_t lap_side = std::max<std::size_t>(2, cfg.side / 2);
  SparseMatrixCSR sparse = make_grid_laplacian(lap_side);
  std::size_t max_rank = std::min(std::min(dense.rows, dense.cols), sparse.rows);
  if (cfg.nsv > max_rank)
    throw std::invalid_argument("svdcmp: nsv exceeds the smallest instance dimension");
  std::vector<SvdCompareRow> rows = svd_compare_rows(dense, sparse, cfg);

  std::ofstream out = open_output(cfg, "svd_compare.csv");
  out << "# tolerance = 1e-6\n";
  out << "# non-converged rows carry nc in max_resid\n";
  out << "method,matrix,threads,time_ms,max_resid\n";
  for (const SvdCompareRow& row : rows) {
    out << row.method << ',' << row.matrix << ',' << row.threads << ','
        << format_double(row.time_ms) << ',';
    if (row.converged)
      out << format_double(row.max_resid);
    else
      out << "nc";
    out << '\n';
  }
  if (!out) throw io_error(output_path(cfg, "svd_compare.csv") + ": write failed");
  return 0;
}

// Demo artifacts: PGM triplet for denoising, CSV triplet for approximation.
inline int cmd_demo(const BenchConfig& cfg) {
  ensure_out_dir(cfg);
  if (cfg.problem == BenchProblem::Denoise) {
    DenseMatrix input = load_or_make_image(cfg);
    Rng rng(cfg.seed);
    DenseMatrix noised = apply_speckle(input, cfg.noise_variance, rng);
    BenchConfig local = cfg;
    local.image.clear();
    DenoiseInstance inst = build_denoise_instance(local, &noised);
    std::vector<double> star = denoise_closed_form(*inst.denoise);
    DenseMatrix output = denoised_image(star, *inst.denoise);
    save_pgm(output_path(cfg, "input.pgm"), input);
    save_pgm(output_path(cfg, "noised.pgm"), noised);
    save_pgm(output_path(cfg, "denoised.pgm"), output);
    return 0;
  }

  ApproxInstance inst = build_approx_instance(cfg);
  save_signal_csv(output_path(cfg, "signal.csv"), inst.rbf->signal);
  std::vector<double> mu = inst.problem.start_point();
  bool refined = false;
  for (const std::string& name : cfg.methods) {
    Method m = method_from_name(name);
    if (!method_supports(m, inst.problem)) continue;
    ApproxInstance fresh = build_approx_instance(cfg);
    RunReport rep = minimize(spec_from_config(cfg, m), fresh.problem);
    mu = rep.best_x;
    refined = true;
    break;
  }
  if (!refined)
    std::cerr << "demo: no configured method supports this instance; "
                 "writing the unrefined start layout\n";
  CurvePoints centres;
  for (std::size_t j = 0; j + 1 < mu.size(); j += 2) {
    centres.xs.push_back(mu[j]);
    centres.ys.push_back(mu[j + 1]);
  }
  save_curve_csv(output_path(cfg, "centres.csv"), centres);
  SparseMatrixCSR phi = assemble_gram(inst.rbf->signal.xs, inst.rbf->signal.ys, mu,
                                      inst.rbf->k, 1);
  CoefficientSolve sol = solve_coefficients(phi, inst.rbf->signal.values, inst.rbf->lambda,
                                            1e-8, 10 * inst.rbf->signal.size(), 1);
  save_signal_csv(output_path(cfg, "reconstruction.csv"),
                  reconstruct(mu, sol.beta, *inst.rbf));
  return 0;
}

}  // namespace sigmin

#endif
