#include <atomic>
#include <cstdio>
#include <thread>

#include "vecot/io.hpp"
#include "vecot/random.hpp"

namespace vecot::io {

namespace {

GoldenItem item(const std::string& group, const std::string& name, double measured, double expected, double tol,
                std::string detail = {}) {
  return {group, name, measured, expected, tol, false, std::move(detail)};
}

// Two-atom measure written by components: ((a, 1-a), (b, 1-b)).
VectorMeasure two_atom(double a, double b) {
  return VectorMeasure::from_components({Vec((Vec(2) << a, 1 - a).finished()), Vec((Vec(2) << b, 1 - b).finished())});
}

std::vector<GoldenItem> dominance_items() {
  const std::string g = "dominance";
  VectorMeasure mu = two_atom(1, 0.5);
  int mismatches = 0, boundary = 0;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      // b in [a/2, (a+1)/2] with a = i/20, b = j/20, decided in integers
      bool expect = 2 * j >= i && 2 * j <= i + 20;
      if (2 * j == i || 2 * j == i + 20) ++boundary;
      double a = i / 20.0, b = j / 20.0;
      if (dominates(mu, two_atom(a, b)).dominates != expect) ++mismatches;
    }
  return {item(g, "21x21 region b in [a/2,(a+1)/2]: mismatches", mismatches, 0, 0,
               std::to_string(boundary) + " boundary points")};
}

std::pair<double, double> b_range(const VectorMeasure& mu, double a) {
  auto ok = [&](double b) { return dominates(mu, two_atom(a, b)).dominates; };
  double lo = 0, hi = a;
  if (ok(0)) hi = 0;
  for (int it = 0; it < 40 && hi > 0; ++it) {
    double m = 0.5 * (lo + hi);
    (ok(m) ? hi : lo) = m;
  }
  double bmin = hi;
  lo = a, hi = 1;
  if (ok(1)) lo = 1;
  for (int it = 0; it < 40 && lo < 1; ++it) {
    double m = 0.5 * (lo + hi);
    (ok(m) ? lo : hi) = m;
  }
  return {bmin, lo};
}

std::vector<GoldenItem> semidiscrete_items() {
  const std::string g = "semidiscrete";
  const Index n = 100;
  Mat eta(n, 2);
  for (Index i = 0; i < n; ++i) eta.row(i) << 1.0, 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  VectorMeasure mu = VectorMeasure::from_density(FiniteSpace::midpoint_grid(n), eta, Vec::Constant(n, 1.0 / n));
  std::vector<GoldenItem> out;
  for (double a : {0.3, 0.7}) {
    auto [lo, hi] = b_range(mu, a);
    char buf[64];
    std::snprintf(buf, sizeof buf, "a=%.1f N=100", a);
    out.push_back(item(g, std::string("lower boundary a^2, ") + buf, lo, a * a, 2.0 / n));
    out.push_back(item(g, std::string("upper boundary 2a-a^2, ") + buf, hi, 2 * a - a * a, 2.0 / n));
  }
  return out;
}

std::vector<GoldenItem> refine_items() {
  const std::string g = "refine";
  Mat nu(2, 2);
  nu << 0.5, 0.25, 0.5, 0.75;
  auto density = [](double x) { return Eigen::RowVectorXd((Eigen::RowVectorXd(2) << 1.0, 2.0 * x).finished()); };
  auto sq = [](double x, Index y) { return y == 0 ? 0.0 : std::sqrt(std::max(0.0, x - 0.5)); };
  auto lip = [](double x, Index y) { return y == 0 ? 0.0 : std::max(0.0, x - 0.5); };
  RefinementReport a = dual_refinement_study(density, nu, sq, {10, 40, 80});
  RefinementReport b = dual_refinement_study(density, nu, lip, {40, 80});
  double qa = b.rows[0].q, qb = b.rows[1].q;
  return {item(g, "sqrt cost: q increases over N=10,40,80", a.increasing ? 1 : 0, 1, 0),
          item(g, "sqrt cost: plan mass on {x<=1/2}x{y0} at N=80", a.rows.back().left_mass, 0.5, 1.0 / 80),
          item(g, "lipschitz cost: relative change of q, N=40 to 80", std::abs(qb - qa) / std::max(qa, qb), 0, 0.1)};
}

std::vector<GoldenItem> strong_items() {
  const std::string g = "strong";
  VectorMeasure mu = VectorMeasure::from_components(
      FiniteSpace({"a", "b", "c", "d"}), {(Vec(4) << 2, 0, 2, 0).finished(), (Vec(4) << 1, 2, 0, 1).finished()});
  StrongDominanceResult r = strong_dominates(mu, mu);
  std::pair<std::vector<Index>, std::vector<Index>> pair{{0, 3}, {1, 2}};
  bool listed = std::find(r.failing.begin(), r.failing.end(), pair) != r.failing.end();
  return {item(g, "four-point measure dominates itself", r.dominates ? 1 : 0, 1, 0),
          item(g, "strong domination fails", r.strong ? 1 : 0, 0, 0),
          item(g, "A={a,d}, B={b,c} among failing pairs", listed ? 1 : 0, 1, 0,
               std::to_string(r.failing.size()) + " failing pairs")};
}

std::vector<GoldenItem> moment_items() {
  const std::string g = "moment";
  const Index n = 512;
  Vec x = Vec::LinSpaced(n, -2, 2);
  const double h = 4.0 / (n - 1);
  Mat m(3, n);
  m.row(0).setOnes();
  m.row(1) = x.transpose();
  m.row(2) = x.array().square().matrix().transpose();
  std::vector<GoldenItem> out;
  for (double mean : {-0.8, 0.0, 0.55}) {
    auto feasible = [&](double second) { return moment_feasible(m, (Vec(3) << 1, mean, second).finished()).feasible; };
    double lo = mean * mean - 0.05, hi = mean * mean + 0.05;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "m2=%.2f: flip inside [m2^2, m2^2+h^2/4]", mean);
    out.push_back(item(g, buf, hi, mean * mean + h * h / 8, h * h / 8 + 1e-9));
  }
  return out;
}

std::vector<GoldenItem> chain_items() {
  const std::string g = "chain";
  double worst = 0, scale = 0;
  for (double p : {1.0, 2.0, 3.0}) {
    Mat c(32, 32);
    for (Index i = 0; i < 32; ++i)
      for (Index j = 0; j < 32; ++j) c(i, j) = std::pow(std::abs(static_cast<double>(i - j)), p);
    scale = std::max(scale, c.maxCoeff());
    for (Index n = 1; n <= 4; ++n) {
      Mat r = reduced_cost(c, n);
      for (Index i = 0; i < 32; ++i)
        for (Index j = 0; j < 32; ++j)
          if (std::abs(i - j) % (n + 1) == 0)
            worst = std::max(worst, std::abs(r(i, j) - std::pow(static_cast<double>(n + 1), 1 - p) * c(i, j)));
    }
  }
  SplitMix64 rng(64);
  double theorem = 0, medium = 0;
  for (int t = 0; t < 10; ++t) {
    const Index m = 3 + static_cast<Index>(rng.below(4)), n = 1 + static_cast<Index>(rng.below(3));
    Mat c(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) c(i, j) = rng.uniform();
    auto prob = [&] {
      Vec w(m);
      for (Index i = 0; i < m; ++i) w(i) = rng.uniform(0.05, 1);
      return ScalarMeasure(Vec(w / w.sum()));
    };
    ChainProblem p{c, prob(), prob(), prob(), n};
    ChainResult r = chain_ot(p);
    theorem = std::max(theorem, std::abs(r.value - r.theorem_value));
    medium = std::max(medium, std::abs(chain_free_medium(p.mu, p.nu, c, n) - solve_ot(p.mu, p.nu, reduced_cost(c, n)).value));
  }
  return {item(g, "c_{0,n} = (n+1)^(1-p) c where n+1 divides |x-y|, 32-point grid", worst, 0, 1e-12 * scale),
          item(g, "fine multiplier reproduces chain value, 10 instances", theorem, 0, 1e-6),
          item(g, "free medium equals reduced-cost transport, 10 instances", medium, 0, 1e-7)};
}

std::vector<GoldenItem> blackwell_items() {
  const std::string g = "blackwell";
  std::vector<GoldenItem> out;
  VectorMeasure mu = two_atom(1, 0.5);
  for (auto [a, b] : {std::pair{0.6, 0.5}, std::pair{0.2, 0.9}}) {
    BlackwellReport r = blackwell_check(mu, two_atom(a, b), 64, 7);
    char buf[96];
    std::snprintf(buf, sizeof buf, "((1,0),(1/2,1/2)) vs ((%.1f,%.1f),(%.1f,%.1f)): report passes", a, 1 - a, b, 1 - b);
    out.push_back(item(g, buf, r.passes() ? 1 : 0, 1, 0, r.plan_feasible ? "dominates" : "certificate"));
  }
  return out;
}

using Runner = std::vector<GoldenItem> (*)();

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> r{
      {"dominance", dominance_items}, {"semidiscrete", semidiscrete_items}, {"refine", refine_items},
      {"strong", strong_items},       {"moment", moment_items},             {"chain", chain_items},
      {"blackwell", blackwell_items}};
  return r;
}

}  // namespace

const std::vector<std::string>& golden_groups() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, f] : runners()) n.push_back(k);
    return n;
  }();
  return names;
}

VerifyReport verify(const VerifyOptions& opt) {
  std::vector<std::size_t> chosen;
  for (const auto& name : opt.only) {
    const auto& g = golden_groups();
    auto it = std::find(g.begin(), g.end(), name);
    if (it == g.end()) throw PreconditionError("verify: unknown group \"" + name + "\"");
  }
  for (std::size_t i = 0; i < runners().size(); ++i)
    if (opt.only.empty() || std::find(opt.only.begin(), opt.only.end(), runners()[i].first) != opt.only.end())
      chosen.push_back(i);

  std::vector<std::vector<GoldenItem>> results(chosen.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < chosen.size();) {
      const auto& [name, run] = runners()[chosen[k]];
      try {
        results[k] = run();
      } catch (const std::exception& e) {
        results[k] = {item(name, "group raised an exception", 1, 0, 0, e.what())};
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(chosen.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  VerifyReport rep;
  for (auto& group : results)
    for (auto& it : group) {
      if (opt.tol) it.tolerance = *opt.tol;
      it.pass = std::abs(it.measured - it.expected) <= it.tolerance;
      rep.items.push_back(std::move(it));
    }
  return rep;
}

std::string format_report(const VerifyReport& r) {
  std::string out;
  int failed = 0;
  for (const auto& i : r.items) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  measured=%.12g expected=%.12g tol=%.3g", i.measured, i.expected, i.tolerance);
    out += (i.pass ? "PASS " : "FAIL ") + i.group + ": " + i.name + buf;
    if (!i.detail.empty()) out += " (" + i.detail + ")";
    out += '\n';
    failed += !i.pass;
  }
  out += std::to_string(r.items.size() - static_cast<std::size_t>(failed)) + "/" + std::to_string(r.items.size()) +
         " golden items passed\n";
  return out;
}

}  // namespace vecot::io
