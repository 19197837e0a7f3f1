// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "polycg/dfn.hpp"
#include "polycg/error.hpp"
#include "polycg/lowrank.hpp"
#include "polycg/matrix_market.hpp"
#include "polycg/parallel.hpp"
#include "polycg/pcg.hpp"
#include "polycg/version.hpp"

namespace polycg::cli
{

namespace
{

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(const std::string &s)
{
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
  {
    return {};
  }
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &text, char sep)
{
  std::vector<std::string> parts;
  if (trim(text).empty())
  {
    return parts;
  }
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep))
  {
    parts.push_back(trim(item));
  }
  if (text.back() == sep)
  {
    parts.emplace_back();
  }
  return parts;
}

double parse_real(const std::string &s)
{
  std::size_t used = 0;
  double v = 0.0;
  try
  {
    v = std::stod(s, &used);
  }
  catch (const std::exception &)
  {
    throw InputError("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v))
  {
    throw InputError("not a number: '" + s + "'");
  }
  return v;
}

std::size_t parse_count(const std::string &s)
{
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
  {
    throw InputError("not a non-negative integer: '" + s + "'");
  }
  try
  {
    return static_cast<std::size_t>(std::stoull(s));
  }
  catch (const std::exception &)
  {
    throw InputError("integer out of range: '" + s + "'");
  }
}

bool is_newton_degree(std::size_t m)
{
  return ((m + 1) & m) == 0;
}

std::size_t log2_exact(std::size_t m1)
{
  std::size_t k = 0;
  while ((std::size_t{1} << k) < m1)
  {
    ++k;
  }
  return k;
}

template <typename T>
json optional_json(const std::optional<T> &v)
{
  return v ? json(*v) : json(nullptr);
}

std::ofstream open_report_file(const std::string &path)
{
  const auto p = resolve_output(path);
  if (p.has_parent_path())
  {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream f(p);
  if (!f)
  {
    throw InputError("cannot write " + p.string());
  }
  f.precision(12);
  return f;
}

void emit_report(const RunConfig &cfg, const json &report, std::ostream &out)
{
  if (cfg.output.empty())
  {
    out << report.dump(2) << '\n';
    return;
  }
  auto f = open_report_file(cfg.output);
  f << report.dump(2) << '\n';
}

json report_header(const RunConfig &cfg)
{
  json j;
  j["version"] = std::string(kVersionString);
  j["command"] = cfg.command;
  j["config"] = to_json(cfg);
  return j;
}

json coeffs_json(const PolyCoeffs &c)
{
  json j;
  if (const auto *n = std::get_if<NewtonCoeffs>(&c))
  {
    j["variant"] = "newton";
    j["nlev"] = n->nlev;
    j["theta_bar"] = n->theta_bar;
  }
  else
  {
    const auto &ch = std::get<ChebCoeffs>(c);
    j["variant"] = "chebyshev";
    j["theta_bar"] = ch.theta_bar;
  }
  j["degree"] = poly_degree(c);
  return j;
}

//
// Loaded problem. Owns everything the operators point into, so it is never
// moved after construction.
//
struct Problem
{
  std::string kind;
  CsrMatrix matrix;
  std::unique_ptr<DfnBlockSystem> dfn;
  std::unique_ptr<BlockCholesky> chol;
  std::unique_ptr<SchurOperator> schur;
  std::unique_ptr<MatrixOperator> matrix_op;
  const LinearOperator *base = nullptr;
  std::unique_ptr<ScaledOperator> scaled;
  std::vector<double> rhs;
  std::vector<double> solve_rhs;
  double setup_seconds = 0.0;

  const LinearOperator &op() const { return scaled ? *scaled : *base; }

  json describe() const
  {
    json j;
    j["kind"] = kind;
    j["n"] = base->dim();
    j["jacobi_scaled"] = static_cast<bool>(scaled);
    if (dfn)
    {
      j["nh"] = dfn->nh();
      j["nu"] = dfn->nu();
      j["nfractures"] = dfn->nfractures();
      j["alpha"] = dfn->alpha;
      j["factor_nnz"] = chol->factor_nnz();
    }
    else
    {
      j["nnz"] = matrix.nnz();
    }
    return j;
  }
};

std::unique_ptr<Problem> load_problem(const RunConfig &cfg)
{
  const auto t0 = Clock::now();
  auto p = std::make_unique<Problem>();
  if (!cfg.dfn.empty())
  {
    p->kind = "dfn";
    p->dfn = std::make_unique<DfnBlockSystem>(load_dfn(cfg.dfn));
    p->chol = std::make_unique<BlockCholesky>(p->dfn->a);
    p->schur = std::make_unique<SchurOperator>(*p->dfn, *p->chol);
    p->rhs = p->schur->rhs();
  }
  else
  {
    if (cfg.diag_test > 0)
    {
      p->kind = "diag-test";
      std::vector<double> d(cfg.diag_test);
      for (std::size_t i = 0; i < d.size(); ++i)
      {
        d[i] = static_cast<double>(i + 1);
      }
      p->matrix = CsrMatrix::diagonal(d);
    }
    else
    {
      p->kind = "matrix";
      p->matrix = read_matrix_market(cfg.matrix);
      if (p->matrix.nrows() != p->matrix.ncols())
      {
        throw DimensionError(cfg.matrix + ": matrix is not square");
      }
    }
    const std::size_t n = p->matrix.nrows();
    if (cfg.rhs.empty())
    {
      p->rhs = random_vector(n, cfg.rng_seed);
    }
    else
    {
      p->rhs = read_vector(cfg.rhs);
      if (p->rhs.size() != n)
      {
        throw DimensionError(cfg.rhs + ": right-hand side has " + std::to_string(p->rhs.size()) +
                             " entries, expected " + std::to_string(n));
      }
    }
  }

  if (p->schur)
  {
    p->base = p->schur.get();
  }
  else
  {
    p->matrix_op = std::make_unique<MatrixOperator>(p->matrix);
    p->base = p->matrix_op.get();
  }

  const bool jacobi = cfg.seed_prec == "jacobi" || (cfg.seed_prec == "auto" && p->dfn);
  if (jacobi)
  {
    const auto d = p->schur ? p->schur->diagonal() : p->matrix.diagonal();
    p->scaled = std::make_unique<ScaledOperator>(*p->base, d);
    p->solve_rhs = p->scaled->scale_rhs(p->rhs);
  }
  else
  {
    p->solve_rhs = p->rhs;
  }
  p->setup_seconds = seconds_since(t0);
  return p;
}

struct BoundsInfo
{
  SpectralBounds bounds;
  bool estimated = false;
  std::size_t iters_min = 0;
  std::size_t iters_max = 0;
  std::size_t applications = 0;
  double seconds = 0.0;

  json describe() const
  {
    json j;
    j["alpha"] = bounds.alpha;
    j["beta"] = bounds.beta;
    j["xi"] = bounds.xi;
    j["estimated"] = estimated;
    j["eig_iters_min"] = iters_min;
    j["eig_iters_max"] = iters_max;
    j["eig_applications"] = applications;
    return j;
  }
};

BoundsInfo find_bounds(const Problem &p, const RunConfig &cfg, double xi)
{
  BoundsInfo info;
  if (cfg.bounds)
  {
    info.bounds = {cfg.bounds->first, cfg.bounds->second, xi};
    return info;
  }
  const auto t0 = Clock::now();
  EigenOptions opts;
  opts.tol = cfg.tol_eig;
  opts.seed = cfg.rng_seed;
  const auto est = estimate_extremes_detailed(p.op(), opts);
  info.bounds = with_safety_margin(est.bounds, cfg.tol_eig);
  info.bounds.xi = xi;
  info.estimated = true;
  info.iters_min = est.iters_min;
  info.iters_max = est.iters_max;
  info.applications = est.operator_applications;
  info.seconds = seconds_since(t0);
  return info;
}

struct LowRank
{
  std::unique_ptr<SpectralCorrection> corr;
  std::vector<double> values;
  double seconds = 0.0;
};

LowRank make_lowrank(const Problem &p, const RunConfig &cfg)
{
  LowRank lr;
  if (cfg.lowrank == 0)
  {
    return lr;
  }
  const auto t0 = Clock::now();
  EigenOptions opts;
  opts.tol = cfg.tol_eig;
  opts.seed = cfg.rng_seed;
  auto pairs = leftmost_eigenpairs(p.op(), cfg.lowrank, opts);
  lr.values = pairs.values;
  lr.corr = std::make_unique<SpectralCorrection>(build_correction(p.op(), std::move(pairs.vectors)));
  lr.seconds = seconds_since(t0);
  return lr;
}

struct PcgRun
{
  SolveReport report;
  std::vector<double> x;  // in the original (unscaled) variables
};

PcgRun run_pcg(const Problem &p, const RunConfig &cfg, const PolyCoeffs &coeffs,
               const SpectralCorrection *corr)
{
  CounterSet counters;
  const CountedOperator a(p.op(), counters);
  const PolyPreconditioner poly(coeffs, a);
  std::unique_ptr<CorrectedPreconditioner> corrected;
  const LinearOperator *prec = &poly;
  if (corr)
  {
    corrected = std::make_unique<CorrectedPreconditioner>(poly, *corr, &counters);
    prec = corrected.get();
  }
  SolveConfig scfg;
  scfg.tol = cfg.tol;
  scfg.max_iters = cfg.max_iters;
  auto res = pcg_solve(a, *prec, p.solve_rhs, scfg, counters);
  PcgRun run;
  run.report = std::move(res.report);
  run.x = p.scaled ? p.scaled->unscale_solution(res.x) : std::move(res.x);
  return run;
}

double true_relres(const Problem &p, std::span<const double> x)
{
  const auto ax = (*p.base)(x);
  double rn = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i)
  {
    rn += (p.rhs[i] - ax[i]) * (p.rhs[i] - ax[i]);
  }
  const double bn = norm2(p.rhs);
  return bn > 0.0 ? std::sqrt(rn) / bn : std::sqrt(rn);
}

json result_json(const SolveReport &r)
{
  json j;
  j["status"] = to_string(r.status);
  j["iters"] = r.iters;
  j["mvp"] = r.mvp;
  j["ddot"] = r.ddot;
  j["proj_dot"] = r.proj_dot;
  j["final_relres"] = r.final_relres;
  return j;
}

std::size_t default_degree(const RunConfig &cfg)
{
  if (cfg.degree)
  {
    return *cfg.degree;
  }
  return cfg.nlev ? (std::size_t{1} << *cfg.nlev) - 1 : 0;
}

int cmd_solve(const RunConfig &cfg, std::ostream &out)
{
  const auto prob = load_problem(cfg);
  const auto bi = find_bounds(*prob, cfg, cfg.xi);
  const auto coeffs = make_coeffs(cfg.variant, cfg.nlev, cfg.degree, bi.bounds);
  const auto lr = make_lowrank(*prob, cfg);
  const auto run = run_pcg(*prob, cfg, coeffs, lr.corr.get());

  auto report = report_header(cfg);
  report["problem"] = prob->describe();
  report["bounds"] = bi.describe();
  auto pj = coeffs_json(coeffs);
  pj["seed"] = prob->scaled ? "jacobi" : "none";
  pj["lowrank"] = cfg.lowrank;
  pj["lowrank_values"] = lr.values;
  report["preconditioner"] = pj;
  report["result"] = result_json(run.report);
  report["result"]["true_relres"] = true_relres(*prob, run.x);

  bool ok = run.report.converged();
  if (prob->dfn)
  {
    const auto hp = recover_heads(*prob->dfn, *prob->chol, run.x);
    const auto res = block_residual(*prob->dfn, hp.h, hp.p, run.x);
    const double limit = 100.0 * cfg.tol;
    json d;
    d["head"] = res.head;
    d["adjoint"] = res.adjoint;
    d["flux"] = res.flux;
    d["total"] = res.total;
    d["limit"] = limit;
    d["passed"] = res.total <= limit;
    report["dfn_residual"] = d;
    ok = ok && res.total <= limit;
  }

  json t;
  t["setup_seconds"] = prob->setup_seconds;
  t["eig_seconds"] = bi.seconds;
  t["lowrank_seconds"] = lr.seconds;
  t["solve_seconds"] = run.report.solve_seconds;
  report["timings"] = t;

  if (!cfg.history.empty())
  {
    auto f = open_report_file(cfg.history);
    f << "iteration,relres\n";
    for (std::size_t k = 0; k < run.report.history.size(); ++k)
    {
      f << k << ',' << run.report.history[k] << '\n';
    }
  }
  emit_report(cfg, report, out);
  return ok ? kExitOk : kExitNotConverged;
}

SpectrumReport summarize(std::vector<double> lambda, std::vector<double> mapped)
{
  SpectrumReport s;
  s.lambda = std::move(lambda);
  s.mapped = std::move(mapped);
  s.sorted = s.mapped;
  std::sort(s.sorted.begin(), s.sorted.end());
  const double top = s.sorted.back();
  for (const double v : s.sorted)
  {
    s.normalized.push_back(v / top);
  }
  s.kappa = top / s.sorted.front();
  s.kappa10 = top / s.sorted[std::min<std::size_t>(9, s.sorted.size() - 1)];
  return s;
}

int cmd_spectrum(const RunConfig &cfg, std::ostream &out)
{
  std::vector<double> lambda;
  if (cfg.diag_test > 0)
  {
    for (std::size_t i = 1; i <= cfg.diag_test; ++i)
    {
      lambda.push_back(static_cast<double>(i));
    }
  }
  else
  {
    lambda = read_vector(cfg.eigenvalues);
  }

  auto report = report_header(cfg);
  report["count"] = lambda.size();
  SpectrumReport s;
  if (!lambda.empty())
  {
    SpectralBounds b;
    if (cfg.bounds)
    {
      b.alpha = cfg.bounds->first;
      b.beta = cfg.bounds->second;
    }
    else
    {
      const auto [lo, hi] = std::minmax_element(lambda.begin(), lambda.end());
      b.alpha = *lo;
      b.beta = *hi;
    }
    b.xi = cfg.xi;
    const auto coeffs = make_coeffs(cfg.variant, cfg.nlev, cfg.degree, b);
    report["preconditioner"] = coeffs_json(coeffs);
    if (cfg.level > 0)
    {
      const auto *n = std::get_if<NewtonCoeffs>(&coeffs);
      if (!n || cfg.level > n->nlev)
      {
        throw InputError("--level needs a Newton preconditioner with at least that many levels");
      }
      std::vector<double> mapped;
      for (const double l : lambda)
      {
        mapped.push_back(newton_stage_value(*n, l, cfg.level));
      }
      s = summarize(lambda, std::move(mapped));
    }
    else
    {
      s = preconditioned_spectrum_report(coeffs, lambda);
    }
    report["kappa"] = s.kappa;
    report["kappa10"] = s.kappa10;
    const std::size_t shown = std::min<std::size_t>(10, s.normalized.size());
    report["normalized_smallest"] =
      std::vector<double>(s.normalized.begin(), s.normalized.begin() + static_cast<long>(shown));
    for (const std::size_t i : {1, 2, 5, 10})
    {
      if (i <= s.normalized.size())
      {
        report["lambda_" + std::to_string(i)] = s.normalized[i - 1];
      }
    }
  }
  else
  {
    report["kappa"] = nullptr;
    report["kappa10"] = nullptr;
  }

  if (!cfg.csv.empty())
  {
    auto f = open_report_file(cfg.csv);
    f << "lambda_original,lambda_mapped\n";
    for (std::size_t i = 0; i < s.lambda.size(); ++i)
    {
      f << s.lambda[i] << ',' << s.mapped[i] << '\n';
    }
  }
  emit_report(cfg, report, out);
  return kExitOk;
}

int cmd_sweep(const RunConfig &cfg, std::ostream &out)
{
  const auto xis = cfg.xis.value_or(std::vector<double>{cfg.xi});
  const auto degrees = cfg.degrees.value_or(std::vector<std::size_t>{default_degree(cfg)});

  auto report = report_header(cfg);
  json rows = json::array();
  if (!xis.empty() && !degrees.empty())
  {
    const auto prob = load_problem(cfg);
    const auto bi = find_bounds(*prob, cfg, 0.0);
    const auto lr = make_lowrank(*prob, cfg);
    report["problem"] = prob->describe();
    report["bounds"] = bi.describe();
    for (const double xi : xis)
    {
      for (const std::size_t m : degrees)
      {
        json row;
        row["xi"] = xi;
        row["degree"] = m;
        try
        {
          auto b = bi.bounds;
          b.xi = xi;
          const auto coeffs = make_coeffs(cfg.variant, std::nullopt, m, b);
          const auto run = run_pcg(*prob, cfg, coeffs, lr.corr.get());
          row["variant"] = coeffs_json(coeffs)["variant"];
          row.update(result_json(run.report));
          row["solve_seconds"] = run.report.solve_seconds;
        }
        catch (const Error &e)
        {
          row["status"] = "error";
          row["message"] = e.what();
          row["iters"] = 0;
          row["mvp"] = 0;
          row["ddot"] = 0;
          row["solve_seconds"] = 0.0;
        }
        rows.push_back(row);
      }
    }
  }
  report["rows"] = rows;

  if (!cfg.csv.empty())
  {
    auto f = open_report_file(cfg.csv);
    f << "xi,degree,iters,mvp,ddot,solve_seconds,status\n";
    for (const auto &r : rows)
    {
      f << r["xi"].get<double>() << ',' << r["degree"].get<std::size_t>() << ','
        << r["iters"].get<std::size_t>() << ',' << r["mvp"].get<std::size_t>() << ','
        << r["ddot"].get<std::size_t>() << ',' << r["solve_seconds"].get<double>() << ','
        << r["status"].get<std::string>() << '\n';
    }
  }
  emit_report(cfg, report, out);
  return kExitOk;
}

int cmd_scale_bench(const RunConfig &cfg, std::ostream &out)
{
  const auto prob = load_problem(cfg);
  const auto bi = find_bounds(*prob, cfg, cfg.xi);
  const auto coeffs = make_coeffs(cfg.variant, cfg.nlev, cfg.degree, bi.bounds);
  const auto lr = make_lowrank(*prob, cfg);

  struct Point
  {
    int threads;
    std::size_t iters;
    double seconds;
    bool converged;
  };
  std::vector<Point> points;
  bool constant = true;
  for (const int t : cfg.thread_list)
  {
    set_num_threads(t);
    Point pt{t, 0, std::numeric_limits<double>::infinity(), true};
    for (std::size_t r = 0; r < cfg.repeat; ++r)
    {
      const auto run = run_pcg(*prob, cfg, coeffs, lr.corr.get());
      if (r > 0 && run.report.iters != pt.iters)
      {
        constant = false;
      }
      pt.iters = run.report.iters;
      pt.seconds = std::min(pt.seconds, run.report.solve_seconds);
      pt.converged = pt.converged && run.report.converged();
    }
    if (!points.empty() && pt.iters != points.front().iters)
    {
      constant = false;
    }
    points.push_back(pt);
  }
  set_num_threads(cfg.threads);

  const auto ref = *std::min_element(points.begin(), points.end(),
                                     [](const Point &a, const Point &b) { return a.threads < b.threads; });
  auto report = report_header(cfg);
  report["problem"] = prob->describe();
  report["bounds"] = bi.describe();
  report["preconditioner"] = coeffs_json(coeffs);
  report["reference_threads"] = ref.threads;
  report["iters_constant"] = constant;
  json rows = json::array();
  bool all_converged = true;
  std::ostringstream csv;
  csv.precision(12);
  csv << "threads,iters,solve_seconds,speedup,efficiency_percent\n";
  for (const auto &pt : points)
  {
    const double speedup = ref.seconds / pt.seconds;
    const double eff = 100.0 * (static_cast<double>(ref.threads) / pt.threads) * speedup;
    json row;
    row["threads"] = pt.threads;
    row["iters"] = pt.iters;
    row["solve_seconds"] = pt.seconds;
    row["speedup"] = speedup;
    row["efficiency_percent"] = eff;
    rows.push_back(row);
    all_converged = all_converged && pt.converged;
    csv << pt.threads << ',' << pt.iters << ',' << pt.seconds << ',' << speedup << ',' << eff << '\n';
  }
  report["rows"] = rows;
  if (!cfg.csv.empty())
  {
    auto f = open_report_file(cfg.csv);
    f << csv.str();
  }
  emit_report(cfg, report, out);
  return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_generate(const RunConfig &cfg, std::ostream &out)
{
  SyntheticParams params;
  params.nf = cfg.nf;
  params.avg_block = cfg.avg_block;
  params.trace_density = cfg.trace_density;
  params.alpha = cfg.alpha;
  params.seed = cfg.rng_seed;
  const auto sys = generate_synthetic(params);
  const auto dir = resolve_output(cfg.out_dir);
  save_dfn(sys, dir);

  auto report = report_header(cfg);
  json s;
  s["directory"] = dir.string();
  s["nfractures"] = sys.nfractures();
  s["nh"] = sys.nh();
  s["nu"] = sys.nu();
  s["alpha"] = sys.alpha;
  s["nnz_a"] = sys.a.nnz();
  s["nnz_b"] = sys.b.nnz();
  s["nnz_c"] = sys.c.nnz();
  s["nnz_gu"] = sys.gu.nnz();
  report["system"] = s;
  emit_report(cfg, report, out);
  return kExitOk;
}

}  // namespace

std::size_t parse_diag_test(const std::string &text)
{
  std::string s = trim(text);
  if (s.rfind("n=", 0) == 0)
  {
    s = s.substr(2);
  }
  const auto n = parse_count(s);
  if (n == 0)
  {
    throw InputError("--diag-test needs n >= 1");
  }
  return n;
}

std::pair<double, double> parse_bounds(const std::string &text)
{
  const auto parts = split(text, ',');
  if (parts.size() != 2)
  {
    throw InputError("--bounds expects 'alpha,beta', got '" + text + "'");
  }
  return {parse_real(parts[0]), parse_real(parts[1])};
}

std::vector<double> parse_real_list(const std::string &text)
{
  std::vector<double> v;
  for (const auto &p : split(text, ','))
  {
    v.push_back(parse_real(p));
  }
  return v;
}

std::vector<std::size_t> parse_count_list(const std::string &text)
{
  std::vector<std::size_t> v;
  for (const auto &p : split(text, ','))
  {
    v.push_back(parse_count(p));
  }
  return v;
}

PolyCoeffs make_coeffs(const std::string &variant, std::optional<std::size_t> nlev,
                       std::optional<std::size_t> degree, const SpectralBounds &bounds)
{
  if (nlev && degree && (*nlev >= 64 || (std::size_t{1} << *nlev) - 1 != *degree))
  {
    throw InputError("--nlev " + std::to_string(*nlev) + " and --degree " +
                     std::to_string(*degree) + " disagree");
  }
  if (nlev && *nlev > kMaxNewtonLevels)
  {
    throw InputError("--nlev is at most " + std::to_string(kMaxNewtonLevels));
  }
  const std::size_t m = degree ? *degree : (nlev ? (std::size_t{1} << *nlev) - 1 : 0);
  bool newton = false;
  if (variant == "newton")
  {
    if (!is_newton_degree(m))
    {
      throw InputError("the Newton variant needs a degree of the form 2^k - 1, got " +
                       std::to_string(m));
    }
    newton = true;
  }
  else if (variant == "chebyshev")
  {
    newton = false;
  }
  else if (variant == "auto")
  {
    newton = nlev.has_value() || is_newton_degree(m);
  }
  else
  {
    throw InputError("unknown variant '" + variant + "'");
  }
  if (newton)
  {
    return build_newton(bounds, log2_exact(m + 1));
  }
  return build_chebyshev(bounds, m);
}

std::filesystem::path resolve_output(const std::string &path)
{
  std::filesystem::path p(path);
  const char *dir = std::getenv("POLYCG_OUTPUT_DIR");
  if (p.is_relative() && dir && *dir)
  {
    return std::filesystem::path(dir) / p;
  }
  return p;
}

void validate(const RunConfig &cfg)
{
  static const std::vector<std::string> commands{"solve", "spectrum", "sweep", "generate",
                                                 "scale-bench"};
  if (std::find(commands.begin(), commands.end(), cfg.command) == commands.end())
  {
    throw InputError("unknown command '" + cfg.command + "'");
  }
  const bool needs_problem =
    cfg.command == "solve" || cfg.command == "sweep" || cfg.command == "scale-bench";
  if (needs_problem)
  {
    const int sources = (cfg.diag_test > 0) + !cfg.matrix.empty() + !cfg.dfn.empty();
    if (sources != 1)
    {
      throw InputError("give exactly one of --diag-test, --matrix, --dfn");
    }
    if (!cfg.dfn.empty() && !cfg.rhs.empty())
    {
      throw InputError("--rhs does not apply to --dfn (the system carries its own q)");
    }
  }
  if (cfg.command == "spectrum" && (cfg.diag_test > 0) + !cfg.eigenvalues.empty() != 1)
  {
    throw InputError("give exactly one of --diag-test, --eigenvalues");
  }
  if (cfg.command == "generate" && cfg.out_dir.empty())
  {
    throw InputError("generate needs --out-dir");
  }
  if (cfg.variant != "newton" && cfg.variant != "chebyshev" && cfg.variant != "auto")
  {
    throw InputError("--variant must be newton, chebyshev or auto");
  }
  if (cfg.seed_prec != "jacobi" && cfg.seed_prec != "none" && cfg.seed_prec != "auto")
  {
    throw InputError("--seed-prec must be jacobi, none or auto");
  }
  if (!(cfg.tol > 0.0 && cfg.tol < 1.0))
  {
    throw InputError("--tol must lie in (0, 1)");
  }
  if (!(cfg.tol_eig > 0.0 && cfg.tol_eig < 1.0))
  {
    throw InputError("--tol-eig must lie in (0, 1)");
  }
  if (cfg.max_iters == 0)
  {
    throw InputError("--max-iters must be positive");
  }
  if (!(cfg.xi >= 0.0) || !std::isfinite(cfg.xi))
  {
    throw InputError("--xi must be a finite non-negative number");
  }
  if (cfg.xis)
  {
    for (const double x : *cfg.xis)
    {
      if (!(x >= 0.0))
      {
        throw InputError("--xis entries must be non-negative");
      }
    }
  }
  if (cfg.bounds && !(cfg.bounds->first > 0.0 && cfg.bounds->first <= cfg.bounds->second))
  {
    throw InputError("--bounds needs 0 < alpha <= beta");
  }
  if (cfg.threads < 0)
  {
    throw InputError("--threads must be non-negative");
  }
  if (cfg.lowrank > kMaxCorrectionRank)
  {
    throw InputError("--lowrank is at most " + std::to_string(kMaxCorrectionRank));
  }
  if (cfg.thread_list.empty() ||
      std::any_of(cfg.thread_list.begin(), cfg.thread_list.end(), [](int t) { return t < 1; }))
  {
    throw InputError("--thread-list needs positive thread counts");
  }
  if (cfg.repeat == 0)
  {
    throw InputError("--repeat must be positive");
  }
}

json to_json(const RunConfig &c)
{
  json j;
  j["command"] = c.command;
  j["diag_test"] = c.diag_test;
  j["matrix"] = c.matrix;
  j["dfn"] = c.dfn;
  j["rhs"] = c.rhs;
  j["eigenvalues"] = c.eigenvalues;
  j["variant"] = c.variant;
  j["nlev"] = optional_json(c.nlev);
  j["degree"] = optional_json(c.degree);
  j["xi"] = c.xi;
  j["seed_prec"] = c.seed_prec;
  j["lowrank"] = c.lowrank;
  j["bounds"] = c.bounds ? json::array({c.bounds->first, c.bounds->second}) : json(nullptr);
  j["tol_eig"] = c.tol_eig;
  j["level"] = c.level;
  j["tol"] = c.tol;
  j["max_iters"] = c.max_iters;
  j["threads"] = c.threads;
  j["rng_seed"] = c.rng_seed;
  j["output"] = c.output;
  j["csv"] = c.csv;
  j["history"] = c.history;
  j["xis"] = optional_json(c.xis);
  j["degrees"] = optional_json(c.degrees);
  j["nf"] = c.nf;
  j["avg_block"] = c.avg_block;
  j["trace_density"] = c.trace_density;
  j["alpha"] = c.alpha;
  j["out_dir"] = c.out_dir;
  j["thread_list"] = c.thread_list;
  j["repeat"] = c.repeat;
  return j;
}

int run(const RunConfig &cfg, std::ostream &out, std::ostream &err)
{
  struct ThreadReset
  {
    ~ThreadReset() { set_num_threads(0); }
  } reset;
  try
  {
    validate(cfg);
    set_num_threads(cfg.threads);
    if (cfg.command == "solve")
    {
      return cmd_solve(cfg, out);
    }
    if (cfg.command == "spectrum")
    {
      return cmd_spectrum(cfg, out);
    }
    if (cfg.command == "sweep")
    {
      return cmd_sweep(cfg, out);
    }
    if (cfg.command == "generate")
    {
      return cmd_generate(cfg, out);
    }
    return cmd_scale_bench(cfg, out);
  }
  catch (const InadmissibleAlphaError &e)
  {
    err << "error: " << e.what() << '\n';
    return kExitInadmissible;
  }
  catch (const ConvergenceError &e)
  {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }
  catch (const Error &e)
  {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  catch (const std::filesystem::filesystem_error &e)
  {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  catch (const std::exception &e)
  {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

namespace
{

// Raw text of options that are parsed after CLI11 is done.
struct RawOptions
{
  std::string diag_test;
  std::string bounds;
  std::string xis;
  std::string degrees;
  std::string thread_list;
  std::size_t nlev = 0;
  std::size_t degree = 0;
};

struct Registered
{
  CLI::App *app = nullptr;
  CLI::Option *diag_test = nullptr;
  CLI::Option *bounds = nullptr;
  CLI::Option *nlev = nullptr;
  CLI::Option *degree = nullptr;
  CLI::Option *xis = nullptr;
  CLI::Option *degrees = nullptr;
  CLI::Option *thread_list = nullptr;
};

void add_source(Registered &r, RunConfig &cfg, RawOptions &raw)
{
  r.diag_test = r.app->add_option("--diag-test", raw.diag_test,
                                  "built-in diagonal test matrix A = diag(1..N), as n=N");
  r.app->add_option("--matrix", cfg.matrix, "SPD matrix in MatrixMarket format");
  r.app->add_option("--dfn", cfg.dfn, "directory holding a DFN block system");
  r.app->add_option("--rhs", cfg.rhs, "right-hand side vector file (default: random)");
}

void add_prec(Registered &r, RunConfig &cfg, RawOptions &raw)
{
  auto *app = r.app;
  app->add_option("--variant", cfg.variant, "newton, chebyshev or auto")
    ->check(CLI::IsMember({"newton", "chebyshev", "auto"}));
  r.nlev = app->add_option("--nlev", raw.nlev, "Newton levels (degree 2^nlev - 1)");
  r.degree = app->add_option("--degree", raw.degree, "polynomial degree");
  app->add_option("--xi", cfg.xi, "de-clustering shift of the spectral centre");
  app->add_option("--seed-prec", cfg.seed_prec, "jacobi, none or auto (jacobi for --dfn)")
    ->check(CLI::IsMember({"jacobi", "none", "auto"}));
  app->add_option("--lowrank", cfg.lowrank, "number of leftmost eigenvectors to deflate");
  r.bounds = app->add_option("--bounds", raw.bounds, "spectral bounds 'alpha,beta' (skips estimation)");
  app->add_option("--tol-eig", cfg.tol_eig, "eigenvalue estimation tolerance");
}

void add_solver(Registered &r, RunConfig &cfg)
{
  r.app->add_option("--tol", cfg.tol, "relative residual tolerance");
  r.app->add_option("--max-iters", cfg.max_iters, "PCG iteration limit");
}

void add_run(Registered &r, RunConfig &cfg)
{
  r.app->add_option("--threads", cfg.threads, "worker threads (0: default)")
    ->envname("POLYCG_NUM_THREADS");
  r.app->add_option("--rng-seed", cfg.rng_seed, "seed for random vectors and generation");
  r.app->add_option("--output", cfg.output, "JSON report file (default: stdout)");
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
  RunConfig cfg;
  RawOptions raw;
  CLI::App app{"polycg: polynomial preconditioned conjugate gradients", "polycg"};
  app.set_version_flag("--version", std::string(kVersionString));
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 2 bad input, 3 not converged, 4 inadmissible alpha.\n"
             "Environment: POLYCG_NUM_THREADS, POLYCG_OUTPUT_DIR (base for relative output paths).");

  std::vector<Registered> subs;
  auto make = [&](const char *name, const char *help)
  {
    Registered r;
    r.app = app.add_subcommand(name, help);
    return r;
  };

  auto solve = make("solve", "solve one system and report iterations and counts");
  add_source(solve, cfg, raw);
  add_prec(solve, cfg, raw);
  add_solver(solve, cfg);
  add_run(solve, cfg);
  solve.app->add_option("--history", cfg.history, "residual history CSV");

  auto spectrum = make("spectrum", "map eigenvalues through the preconditioner");
  spectrum.diag_test = spectrum.app->add_option("--diag-test", raw.diag_test,
                                                "eigenvalues 1..N, as n=N");
  spectrum.app->add_option("--eigenvalues", cfg.eigenvalues, "file with one eigenvalue per line");
  add_prec(spectrum, cfg, raw);
  add_run(spectrum, cfg);
  spectrum.app->add_option("--level", cfg.level, "map through this Newton level only");
  spectrum.app->add_option("--csv", cfg.csv, "CSV of original and mapped eigenvalues");

  auto sweep = make("sweep", "iterate over a grid of xi values and degrees");
  add_source(sweep, cfg, raw);
  add_prec(sweep, cfg, raw);
  add_solver(sweep, cfg);
  add_run(sweep, cfg);
  sweep.xis = sweep.app->add_option("--xis", raw.xis, "comma separated xi values");
  sweep.degrees = sweep.app->add_option("--degrees", raw.degrees, "comma separated degrees");
  sweep.app->add_option("--csv", cfg.csv, "CSV of the grid");

  auto generate = make("generate", "write a synthetic DFN block system");
  generate.app->add_option("--nf", cfg.nf, "number of fractures");
  generate.app->add_option("--avg-block", cfg.avg_block, "average nodes per fracture");
  generate.app->add_option("--trace-density", cfg.trace_density, "extra traces per fracture");
  generate.app->add_option("--alpha", cfg.alpha, "control weight alpha");
  generate.app->add_option("--out-dir", cfg.out_dir, "target directory")->required();
  generate.app->add_option("--rng-seed", cfg.rng_seed, "generator seed");
  generate.app->add_option("--output", cfg.output, "JSON report file (default: stdout)");

  auto bench = make("scale-bench", "time the same solve at several thread counts");
  add_source(bench, cfg, raw);
  add_prec(bench, cfg, raw);
  add_solver(bench, cfg);
  add_run(bench, cfg);
  bench.thread_list = bench.app->add_option("--thread-list", raw.thread_list,
                                            "comma separated thread counts (default 1,2,4,8)");
  bench.app->add_option("--repeat", cfg.repeat, "timed runs per thread count (best is kept)");
  bench.app->add_option("--csv", cfg.csv, "CSV of the efficiency table");

  subs = {solve, spectrum, sweep, generate, bench};

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try
  {
    app.parse(reversed);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try
  {
    for (const auto &s : subs)
    {
      if (!s.app->parsed())
      {
        continue;
      }
      cfg.command = s.app->get_name();
      if (s.diag_test && s.diag_test->count() > 0)
      {
        cfg.diag_test = parse_diag_test(raw.diag_test);
      }
      if (s.bounds && s.bounds->count() > 0)
      {
        cfg.bounds = parse_bounds(raw.bounds);
      }
      if (s.nlev && s.nlev->count() > 0)
      {
        cfg.nlev = raw.nlev;
      }
      if (s.degree && s.degree->count() > 0)
      {
        cfg.degree = raw.degree;
      }
      if (s.xis && s.xis->count() > 0)
      {
        cfg.xis = parse_real_list(raw.xis);
      }
      if (s.degrees && s.degrees->count() > 0)
      {
        cfg.degrees = parse_count_list(raw.degrees);
      }
      if (s.thread_list && s.thread_list->count() > 0)
      {
        cfg.thread_list.clear();
        for (const auto t : parse_count_list(raw.thread_list))
        {
          cfg.thread_list.push_back(static_cast<int>(std::min<std::size_t>(t, 4096)));
        }
      }
    }
  }
  catch (const Error &e)
  {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return run(cfg, out, err);
}

}  // namespace polycg::cli
