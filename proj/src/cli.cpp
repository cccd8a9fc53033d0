#include "vecot/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "vecot/io.hpp"

namespace vecot::io {

namespace {

struct Globals {
  std::string input, output;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool quiet = false;
};

class Session {
 public:
  Session(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  /// Gap tolerance: built-in default, then VECOT_TOL, then the problem
  /// file, then --tol.
  double tolerance(const ProblemFile* p = nullptr) const {
    double t = tol::gap;
    if (const char* env = std::getenv("VECOT_TOL")) {
      char* end = nullptr;
      double v = std::strtod(env, &end);
      if (end == env || *end != '\0' || !(v >= 0)) throw SchemaError("VECOT_TOL", "expected a nonnegative number");
      t = v;
    }
    if (p) {
      auto it = p->tol.find("gap");
      if (it != p->tol.end()) t = it->second;
    }
    if (g_.tol) t = *g_.tol;
    return t;
  }

  void start() { t0_ = std::chrono::steady_clock::now(); }

  /// Write the result and pick the exit code. Optimal results whose gap
  /// exceeds the tolerance are reported as a numerical breakdown.
  int finish(Json result, double tol, bool infeasible, const std::string& summary) {
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
    result["diagnostics"]["wallMillis"] = ms;
    result["diagnostics"]["tol"] = tol;
    int code = infeasible ? kInfeasible : kOk;
    if (result.contains("gap") && result.contains("value") && result["value"].is_number()) {
      double gap = result["gap"].get<double>(), v = std::abs(result["value"].get<double>());
      if (!(gap <= tol * (1.0 + v))) {
        result["status"] = "breakdown";
        code = kBreakdown;
      }
    }
    std::string text = canonical(result);
    if (g_.output.empty()) {
      out_ << text;
    } else {
      write_text(g_.output, text);
    }
    if (!g_.quiet) err_ << summary << (code == kBreakdown ? " [gap above tolerance]" : "") << '\n';
    return code;
  }

  const Globals& globals() const { return g_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

 private:
  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string duality_summary(const Json& r) {
  std::string s = r.value("status", std::string("?"));
  if (r.contains("value") && r.contains("dualValue"))
    s += ": primal " + fmt(r["value"].get<double>()) + ", dual " + fmt(r["dualValue"].get<double>()) + ", gap " +
         fmt(r["gap"].get<double>());
  if (r.contains("certificate") && r["certificate"].contains("violation"))
    s += ", certificate violation " + fmt(r["certificate"]["violation"].get<double>());
  return s;
}

/// A file is either a full problem file of the given kind or a bare
/// payload. Tolerance overrides of a full file are kept in `tol`.
Json payload_from(const std::string& path, const std::string& kind, std::map<std::string, double>* tol = nullptr) {
  Json j = read_json(path);
  if (j.is_object() && j.contains("kind")) {
    ProblemFile p = problem_from_json(j);
    if (p.kind != kind) throw SchemaError("kind", "expected \"" + kind + "\", file has \"" + p.kind + "\"");
    if (tol) *tol = p.tol;
    return p.payload;
  }
  return j;
}

ProblemFile assemble(const std::string& kind, const Json& payload, const std::map<std::string, double>& tol = {}) {
  Json doc = {{"kind", kind}, {"payload", payload}};
  if (!tol.empty()) doc["tol"] = tol;
  return problem_from_json(doc);
}

/// "25,100,400" -> {25, 100, 400}.
std::vector<Index> index_list(const std::string& text, const std::string& key) {
  std::vector<Index> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = std::min(text.find(',', pos), text.size());
    std::string part = text.substr(pos, end - pos);
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(part, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) throw SchemaError(key, "bad integer \"" + part + "\"");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

std::string need_input(const Globals& g) {
  if (g.input.empty()) throw SchemaError("--input", "an input file is required");
  return g.input;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_solve_ot(Session& s, const std::string& variant) {
  ProblemFile p = load(need_input(s.globals()));
  std::string kind = variant.empty() ? p.kind : (variant == "plain" ? "scalar_ot" : variant);
  if (p.kind != kind) throw SchemaError("kind", "variant " + variant + " needs kind \"" + kind + "\", file has \"" + p.kind + "\"");
  const double tol = s.tolerance(&p);
  Reader r = p.payload_reader();
  s.start();
  Json res;
  bool infeasible = false;
  if (kind == "multi") {
    MultiInput in = read_multi(r);
    MultiOtResult m = solve_multimarginal(in.marginals, in.cost);
    res = result_json(m);
    infeasible = !m.feasible();
  } else if (kind == "glue") {
    GlueInput in = read_glue(r);
    GlueResult g = glue_feasible(in.mu, in.nu, in.lambda);
    res = result_json(g);
    infeasible = !g.feasible;
  } else if (kind == "local" || kind == "strassen") {
    ScalarOtInput in = read_scalar_ot(r, kind);
    FeasibilityResult f = kind == "local" ? local_constraint_feasible(in.mu, in.nu, in.cost, in.bound)
                                          : strassen_feasible(in.mu, in.nu, in.gamma);
    res = result_json(f);
    infeasible = !f.feasible;
  } else if (kind == "scalar_ot" || kind == "partial" || kind == "capacity" || kind == "invariant") {
    ScalarOtInput in = read_scalar_ot(r, kind);
    OtResult o;
    if (kind == "scalar_ot") o = solve_ot(in.mu, in.nu, in.cost);
    else if (kind == "partial") o = solve_partial(in.mu, in.nu, in.cost, in.mass);
    else if (kind == "capacity") o = in.capacity_min ? solve_capacity_min(in.mu, in.nu, in.cost, in.capacity)
                                                     : solve_capacity(in.mu, in.nu, in.cost, in.capacity);
    else o = solve_invariant(in.mu, in.map, in.cost);
    res = result_json(o);
    infeasible = o.status == LpStatus::Infeasible;
  } else {
    throw SchemaError("kind", "solve-ot does not handle \"" + kind + "\"");
  }
  res["kind"] = kind;
  return s.finish(res, tol, infeasible, "solve-ot " + kind + " " + duality_summary(res));
}

int cmd_solve_vot(Session& s) {
  std::map<std::string, double> overrides;
  ProblemFile p = assemble("vector_ot", payload_from(need_input(s.globals()), "vector_ot", &overrides), overrides);
  const double tol = s.tolerance(&p);
  VectorOtProblem in = read_vector_ot(p.payload_reader());
  s.start();
  VectorOtResult r = solve_vector_ot(in);
  Json res = result_json(r);
  return s.finish(res, tol, !r.feasible(), "solve-vot " + duality_summary(res));
}

struct DominateArgs {
  std::string mu, nu;
  std::optional<Index> n;
  bool strong = false, blackwell = false;
  int samples = 64;
};

int cmd_dominate(Session& s, const DominateArgs& a) {
  std::map<std::string, double> overrides;
  Json payload;
  if (!s.globals().input.empty()) {
    payload = payload_from(s.globals().input, "dominance", &overrides);
  } else {
    if (a.mu.empty() || a.nu.empty()) throw SchemaError("--mu/--nu", "give --mu and --nu, or --input");
    payload = {{"mu", read_json(a.mu)}, {"nu", read_json(a.nu)}};
  }
  if (a.n) payload["n"] = *a.n;
  if (a.strong) payload["strong"] = true;
  if (a.blackwell) payload["samples"] = a.samples;
  ProblemFile p = assemble("dominance", payload, overrides);
  DominanceInput in = read_dominance(p.payload_reader());
  const double tol = s.tolerance(&p);
  s.start();
  DominanceResult d = dominates(in.mu, in.nu);
  Json res = result_json(d);
  std::string summary = std::string("dominate: ") + (d.dominates ? "mu dominates nu" : "no kernel, Farkas certificate");
  if (in.n) {
    PartitionResult pr = dominates_n(in.mu, in.nu, *in.n);
    res["partition"] = result_json(pr);
    res["partition"]["n"] = *in.n;
    summary += std::string(", n=") + std::to_string(*in.n) + (pr.holds ? " holds" : " fails");
  }
  if (in.strong) {
    StrongDominanceResult sr = strong_dominates(in.mu, in.nu);
    res["strong"] = result_json(sr);
    summary += std::string(", strong ") + (sr.strong ? "yes" : "no");
  }
  if (in.samples) {
    std::uint64_t seed = s.globals().seed.value_or(7);
    BlackwellReport br = blackwell_check(in.mu, in.nu, *in.samples, seed);
    res["blackwell"] = result_json(br);
    res["blackwell"]["seed"] = seed;
    summary += std::string(", Blackwell report ") + (br.passes() ? "consistent" : "INCONSISTENT");
  }
  return s.finish(res, tol, !d.dominates, summary);
}

struct RefineArgs {
  std::string density, targets, cost, grids = "25,100,400";
  Index y0 = 0;
  double split = 0.5;
};

int cmd_refine(Session& s, const RefineArgs& a) {
  if (a.density.empty()) throw SchemaError("--density", "a density such as \"1,2x\" is required");
  if (a.targets.empty()) throw SchemaError("--targets", "a target file is required");
  std::vector<Expr> dens = parse_expr_list(a.density);
  Json tj = read_json(a.targets);
  VectorMeasure nu = read_vector_measure(Reader(tj, "targets"));
  if (nu.dim() != static_cast<Index>(dens.size()))
    throw SchemaError("--density", "has " + std::to_string(dens.size()) + " components, targets have " +
                                       std::to_string(nu.dim()));
  std::vector<Expr> cost = a.cost.empty() ? std::vector<Expr>(static_cast<std::size_t>(nu.size()), Expr("0"))
                                          : parse_expr_list(a.cost);
  if (static_cast<Index>(cost.size()) != nu.size())
    throw SchemaError("--cost", "needs one expression per target atom");
  std::vector<Index> grids = index_list(a.grids, "--grids");
  for (Index n : grids)
    if (n < 1) throw SchemaError("--grids", "grid sizes must be positive");
  if (a.y0 < 0 || a.y0 >= nu.size()) throw SchemaError("--y0", "out of range");
  s.start();
  auto density = [&](double x) {
    Eigen::RowVectorXd e(static_cast<Index>(dens.size()));
    for (std::size_t k = 0; k < dens.size(); ++k) e(static_cast<Index>(k)) = dens[k](x);
    return e;
  };
  auto c = [&](double x, Index y) { return cost[static_cast<std::size_t>(y)](x); };
  RefinementReport rep = dual_refinement_study(density, nu.values(), c, grids, a.y0, a.split);
  Json res = result_json(rep);
  std::string summary = "refine:";
  for (const auto& r : rep.rows) summary += " N=" + std::to_string(r.n) + " q=" + fmt(r.q);
  summary += rep.increasing ? " (increasing)" : rep.stable ? " (stable)" : "";
  return s.finish(res, s.tolerance(), false, summary);
}

int cmd_chain(Session& s, std::optional<Index> n, bool free_medium) {
  std::map<std::string, double> overrides;
  Json payload = payload_from(need_input(s.globals()), "chain", &overrides);
  if (n) payload["n"] = *n;
  if (free_medium) payload["freeMedium"] = true;
  ProblemFile p = assemble("chain", payload, overrides);
  ChainInput in = read_chain(p.payload_reader());
  const double tol = s.tolerance(&p);
  s.start();
  if (in.free_medium) {
    double v = chain_free_medium(in.problem.mu, in.problem.nu, in.problem.c, in.problem.n);
    OtResult r = solve_ot(in.problem.mu, in.problem.nu, reduced_cost(in.problem.c, in.problem.n));
    Json res = {{"status", "optimal"}, {"freeMedium", true}, {"value", v}, {"dualValue", r.dual_value},
                {"gap", std::abs(v - r.dual_value)}, {"reducedCostPlan", to_json(r.plan.matrix)}};
    return s.finish(res, tol, false, "chain (free medium) " + duality_summary(res));
  }
  ChainResult r = chain_ot(in.problem);
  Json res = result_json(r);
  return s.finish(res, tol, !r.feasible(), "chain " + duality_summary(res));
}

int cmd_game(Session& s, const std::string& restrict_path) {
  std::map<std::string, double> overrides;
  Json payload = payload_from(need_input(s.globals()), "game", &overrides);
  if (payload.is_array()) payload = Json{{"F", payload}};
  if (!restrict_path.empty()) payload["lambda"] = read_json(restrict_path);
  ProblemFile p = assemble("game", payload, overrides);
  GameInput in = read_game(p.payload_reader());
  const double tol = s.tolerance(&p);
  s.start();
  Json res;
  if (in.lambda) {
    RestrictedGameResult r = game_value_restricted(in.f, *in.lambda);
    res = result_json(static_cast<const GameResult&>(r));
    res["maxmin"] = r.maxmin;
    res["minmax"] = r.minmax;
  } else {
    res = result_json(game_value(in.f));
  }
  return s.finish(res, tol, false, "game: value " + fmt(res["value"].get<double>()) + ", saddle gap " +
                                       fmt(res["gap"].get<double>()));
}

int cmd_moment(Session& s, const std::string& mpath, const std::string& tpath) {
  std::map<std::string, double> overrides;
  Json payload;
  if (!s.globals().input.empty()) {
    payload = payload_from(s.globals().input, "moment", &overrides);
  } else {
    if (mpath.empty() || tpath.empty()) throw SchemaError("--M/--m", "give --M and --m, or --input");
    payload = {{"M", read_json(mpath)}, {"m", read_json(tpath)}};
  }
  ProblemFile p = assemble("moment", payload, overrides);
  MomentInput in = read_moment(p.payload_reader());
  s.start();
  MomentResult r = moment_feasible(in.M, in.m);
  return s.finish(result_json(r), s.tolerance(&p), !r.feasible,
                  r.feasible ? "moment: feasible, residual " + fmt(r.residual)
                             : "moment: infeasible, alpha^T m = " + fmt(r.violation));
}

int cmd_trig(Session& s, const std::string& cpath, std::optional<Index> grid) {
  std::map<std::string, double> overrides;
  std::string path = !cpath.empty() ? cpath : need_input(s.globals());
  Json payload = payload_from(path, "trig", &overrides);
  if (payload.is_array()) payload = Json{{"coeffs", payload}};
  if (grid) payload["grid"] = *grid;
  ProblemFile p = assemble("trig", payload, overrides);
  TrigInput in = read_trig(p.payload_reader());
  s.start();
  TrigResult r = trig_moment(in.coeffs, in.grid);
  std::string summary = "trig: min eigenvalue " + fmt(r.min_eig) + ", LP " + (r.lp_feasible ? "feasible" : "infeasible") +
                        (r.agree() ? "" : " (disagrees with the eigenvalue test)");
  return s.finish(result_json(r), s.tolerance(&p), !r.lp_feasible, summary);
}

int cmd_conj(Session& s, const std::vector<std::string>& infconv) {
  std::map<std::string, double> overrides;
  Json payload = payload_from(need_input(s.globals()), "conjugate", &overrides);
  if (!payload.contains("f")) payload = Json{{"f", payload}};
  for (const auto& path : infconv) payload["infconv"].push_back(payload_from(path, "conjugate"));
  ProblemFile p = assemble("conjugate", payload, overrides);
  ConjugateInput in = read_conjugate(p.payload_reader());
  s.start();
  Json res = {{"status", "ok"}};
  GridFunction f = in.f;
  if (!in.infconv.empty()) {
    std::vector<GridFunction> all{in.f};
    all.insert(all.end(), in.infconv.begin(), in.infconv.end());
    f = inf_convolution(all);
    res["infconv"] = result_json(f);
  }
  GridFunction c = in.dual ? conjugate(f, *in.dual) : conjugate(f);
  res["conjugate"] = result_json(c);
  return s.finish(res, s.tolerance(&p), false,
                  "conj: " + std::to_string(c.size()) + " dual points, error bound " + fmt(c.error_bound));
}

int cmd_gen(Session& s, const std::string& kind, const std::string& size, bool infeasible, bool digest) {
  std::uint64_t seed = s.globals().seed.value_or(1);
  ProblemFile p = gen(kind, parse_size(size), seed, !infeasible);
  std::string text = canonical(to_json(p));
  if (s.globals().output.empty()) {
    s.out() << text;
  } else {
    write_text(s.globals().output, text);
  }
  if (digest) s.err() << "fnv1a64 " << hex64(fnv1a64(text)) << '\n';
  return kOk;
}

int cmd_verify(Session& s, const std::vector<std::string>& only) {
  VerifyOptions opt;
  opt.only = only;
  opt.jobs = s.globals().jobs;
  opt.tol = s.globals().tol;
  VerifyReport rep = verify(opt);
  std::string text = format_report(rep);
  if (!s.globals().output.empty()) write_text(s.globals().output, text);
  if (!s.globals().quiet || !rep.ok()) s.out() << text;
  return rep.ok() ? kOk : kVerifyFailed;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vector-valued optimal transport and duality toolkit", "vecot"};
  app.require_subcommand(1);
  Globals g;
  auto globals = [&](CLI::App* a) {
    a->add_option("--input,-i", g.input, "Problem file");
    a->add_option("--output,-o", g.output, "Result file (default: stdout)");
    a->add_option("--tol", g.tol, "Gap tolerance (default 1e-7, or VECOT_TOL)");
    a->add_option("--seed", g.seed, "Random seed");
    a->add_option("--jobs,-j", g.jobs, "Worker threads for verify")->check(CLI::Range(1, 256));
    a->add_flag("--quiet,-q", g.quiet, "No summary line");
  };

  std::string variant;
  auto* solve_ot_cmd = app.add_subcommand("solve-ot", "Scalar transport and its variants");
  solve_ot_cmd->add_option("--variant", variant, "Problem variant")
      ->check(CLI::IsMember({"plain", "partial", "capacity", "invariant", "multi", "glue", "local", "strassen"}));
  globals(solve_ot_cmd);

  auto* solve_vot_cmd = app.add_subcommand("solve-vot", "Vector-valued transport");
  globals(solve_vot_cmd);

  DominateArgs dom;
  auto* dominate_cmd = app.add_subcommand("dominate", "Blackwell dominance of vector measures");
  dominate_cmd->add_option("--mu", dom.mu, "Vector measure file");
  dominate_cmd->add_option("--nu", dom.nu, "Vector measure file");
  dominate_cmd->add_option("--n", dom.n, "Also check the n-partition preorder");
  dominate_cmd->add_flag("--strong", dom.strong, "Also check strong domination");
  dominate_cmd->add_flag("--blackwell", dom.blackwell, "Also run the Blackwell consistency report");
  dominate_cmd->add_option("--samples", dom.samples, "Sampled convex functions")->check(CLI::Range(0, 1000000));
  globals(dominate_cmd);

  RefineArgs ref;
  auto* refine_cmd = app.add_subcommand("refine", "Dual optimizer under grid refinement");
  refine_cmd->add_option("--density", ref.density, "Density components in x, e.g. \"1,2x\"");
  refine_cmd->add_option("--targets", ref.targets, "Target vector measure file");
  refine_cmd->add_option("--grids", ref.grids, "Grid sizes, e.g. 25,100,400");
  refine_cmd->add_option("--cost", ref.cost, "Cost per target atom, e.g. \"0,sqrt(pos(x-0.5))\"");
  refine_cmd->add_option("--y0", ref.y0, "Reference target atom");
  refine_cmd->add_option("--split", ref.split, "Split point for the reported left mass");
  globals(refine_cmd);

  std::optional<Index> chain_n;
  bool free_medium = false;
  auto* chain_cmd = app.add_subcommand("chain", "Transport through a chain of intermediate measures");
  chain_cmd->add_option("--n", chain_n, "Number of intermediate measures");
  chain_cmd->add_flag("--free-medium", free_medium, "Minimize over the medium");
  globals(chain_cmd);

  std::string restrict_path;
  auto* game_cmd = app.add_subcommand("game", "Zero-sum matrix game value");
  game_cmd->add_option("--restrict", restrict_path, "Column measure lambda");
  globals(game_cmd);

  std::string mpath, tpath;
  auto* moment_cmd = app.add_subcommand("moment", "Finite moment problem");
  moment_cmd->add_option("--M", mpath, "Moment matrix file");
  moment_cmd->add_option("--m", tpath, "Target moment file");
  globals(moment_cmd);

  std::string cpath;
  std::optional<Index> grid;
  auto* trig_cmd = app.add_subcommand("trig", "Trigonometric moment problem");
  trig_cmd->add_option("--coeffs", cpath, "Coefficient file");
  trig_cmd->add_option("--grid", grid, "Atoms on the circle");
  globals(trig_cmd);

  std::vector<std::string> infconv;
  auto* conj_cmd = app.add_subcommand("conj", "Discrete convex conjugate and infimal convolution");
  conj_cmd->add_option("--infconv", infconv, "Further functions to inf-convolve");
  globals(conj_cmd);

  std::string gen_kind, gen_size;
  bool gen_infeasible = false, gen_digest = false;
  auto* gen_cmd = app.add_subcommand("gen", "Seeded random problem file");
  gen_cmd->add_option("--kind", gen_kind, "Problem kind")->required();
  gen_cmd->add_option("--size", gen_size, "Sizes, e.g. X=4,Y=3,d=2");
  gen_cmd->add_flag("--free", gen_infeasible, "Skip forward construction (may be infeasible)");
  gen_cmd->add_flag("--digest", gen_digest, "Print the FNV-1a digest of the file");
  globals(gen_cmd);

  std::vector<std::string> only;
  auto* verify_cmd = app.add_subcommand("verify", "Run the golden suite");
  verify_cmd->add_option("--only", only, "Groups to run")->check(CLI::IsMember(golden_groups()));
  globals(verify_cmd);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kSchema;
  }

  Session s(g, out, err);
  try {
    if (*solve_ot_cmd) return cmd_solve_ot(s, variant);
    if (*solve_vot_cmd) return cmd_solve_vot(s);
    if (*dominate_cmd) return cmd_dominate(s, dom);
    if (*refine_cmd) return cmd_refine(s, ref);
    if (*chain_cmd) return cmd_chain(s, chain_n, free_medium);
    if (*game_cmd) return cmd_game(s, restrict_path);
    if (*moment_cmd) return cmd_moment(s, mpath, tpath);
    if (*trig_cmd) return cmd_trig(s, cpath, grid);
    if (*conj_cmd) return cmd_conj(s, infconv);
    if (*gen_cmd) return cmd_gen(s, gen_kind, gen_size, gen_infeasible, gen_digest);
    if (*verify_cmd) return cmd_verify(s, only);
  } catch (const std::exception& e) {
    int code = exit_code_for(e);
    err << "vecot: " << (code == kSchema ? "error" : "numerical breakdown") << ": " << e.what() << '\n';
    return code;
  }
  return kSchema;
}

}  // namespace vecot::io
