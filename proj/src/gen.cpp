#include <numbers>

#include "vecot/io.hpp"
#include "vecot/random.hpp"

namespace vecot::io {

namespace {

Index size_of(const GenSize& s, const std::string& key, Index fallback) {
  auto it = s.find(key);
  Index v = it == s.end() ? fallback : it->second;
  if (v < 1 || v > 10000) throw PreconditionError("gen: size " + key + " must lie in [1, 10000]");
  return v;
}

// Draws are rounded to multiples of 2^-10 so files stay short and exact.
double draw(SplitMix64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::floor(rng.uniform() * 1024.0) / 1024.0;
}

Mat draw_matrix(SplitMix64& rng, Index r, Index c, double lo, double hi) {
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = draw(rng, lo, hi);
  return m;
}

Vec draw_probability(SplitMix64& rng, Index n) {
  Vec w(n);
  double total = 0;
  for (Index i = 0; i < n; ++i) {
    w(i) = draw(rng, 1.0 / 16, 1.0);
    total += w(i);
  }
  for (Index i = 0; i < n; ++i) w(i) /= total;
  return w;
}

Mat draw_kernel(SplitMix64& rng, Index r, Index c) {
  Mat k(r, c);
  for (Index i = 0; i < r; ++i) k.row(i) = draw_probability(rng, c).transpose();
  return k;
}

// nu(y) = sum_x P(x,y) mu(x), accumulated in a fixed order.
Mat forward_targets(const Mat& mu, const Mat& p) {
  Mat nu = Mat::Zero(p.cols(), mu.cols());
  for (Index y = 0; y < p.cols(); ++y)
    for (Index k = 0; k < mu.cols(); ++k) {
      double s = 0;
      for (Index x = 0; x < mu.rows(); ++x) s += p(x, y) * mu(x, k);
      nu(y, k) = s;
    }
  return nu;
}

/// Random target with the same componentwise totals as mu.
Mat free_targets(SplitMix64& rng, const Mat& mu, Index ny) {
  Mat nu = draw_matrix(rng, ny, mu.cols(), 1.0 / 16, 1.0);
  for (Index k = 0; k < mu.cols(); ++k) nu.col(k) *= mu.col(k).sum() / nu.col(k).sum();
  return nu;
}

}  // namespace

GenSize parse_size(const std::string& text) {
  GenSize out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string part = text.substr(pos, end - pos);
    auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0) throw PreconditionError("gen: size entries look like X=4, got \"" + part + "\"");
    try {
      std::size_t used = 0;
      long v = std::stol(part.substr(eq + 1), &used);
      if (used != part.size() - eq - 1) throw std::invalid_argument(part);
      out[part.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      throw PreconditionError("gen: bad size value in \"" + part + "\"");
    }
    pos = end + 1;
  }
  return out;
}

ProblemFile gen(const std::string& kind, const GenSize& size, std::uint64_t seed, bool feasible) {
  SplitMix64 rng(seed);
  Json payload;
  if (kind == "scalar_ot") {
    Index nx = size_of(size, "X", 4), ny = size_of(size, "Y", nx);
    payload["mu"] = to_json(draw_probability(rng, nx));
    payload["nu"] = to_json(draw_probability(rng, ny));
    payload["cost"] = to_json(draw_matrix(rng, nx, ny, 0, 1));
  } else if (kind == "dominance" || kind == "vector_ot") {
    Index nx = size_of(size, "X", 4), ny = size_of(size, "Y", 3), d = size_of(size, "d", 2);
    Mat mu = draw_matrix(rng, nx, d, 1.0 / 16, 1.0);
    Mat nu = feasible ? forward_targets(mu, draw_kernel(rng, nx, ny)) : free_targets(rng, mu, ny);
    payload["mu"] = {{"values", to_json(mu)}};
    payload["nu"] = {{"values", to_json(nu)}};
    if (kind == "vector_ot") payload["cost"] = to_json(draw_matrix(rng, nx, ny, 0, 1));
  } else if (kind == "chain") {
    Index m = size_of(size, "X", 4), n = size_of(size, "n", 2);
    payload["cost"] = to_json(draw_matrix(rng, m, m, 0, 1));
    payload["mu"] = to_json(draw_probability(rng, m));
    payload["nu"] = to_json(draw_probability(rng, m));
    payload["lambda"] = to_json(draw_probability(rng, m));
    payload["n"] = n;
  } else if (kind == "game") {
    Index r = size_of(size, "X", 5), c = size_of(size, "Y", r);
    payload["F"] = to_json(draw_matrix(rng, r, c, -1, 1));
  } else if (kind == "moment") {
    Index n = size_of(size, "X", 16), k = size_of(size, "k", 3);
    Mat m(k, n);
    for (Index j = 0; j < n; ++j) {
      double x = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);
      double p = 1;
      for (Index i = 0; i < k; ++i, p *= x) m(i, j) = p;
    }
    Vec target(k);
    if (feasible) {
      Vec w = draw_probability(rng, n);
      for (Index i = 0; i < k; ++i) {
        double s = 0;
        for (Index j = 0; j < n; ++j) s += m(i, j) * w(j);
        target(i) = s;
      }
    } else {
      for (Index i = 0; i < k; ++i) target(i) = draw(rng, -1, 1);
    }
    payload["M"] = to_json(m);
    payload["m"] = to_json(target);
  } else if (kind == "trig") {
    Index n = size_of(size, "n", 3), g = size_of(size, "grid", 8 * (n + 1));
    Cvec c = Cvec::Zero(n + 1);
    if (feasible) {
      for (int a = 0; a < 4; ++a) {
        Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(g)));
        double w = draw(rng, 1.0 / 16, 1.0);
        for (Index k = 0; k <= n; ++k)
          c(k) += w * std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(k * j % g) / static_cast<double>(g));
      }
    } else {
      c(0) = 1;
      for (Index k = 1; k <= n; ++k) c(k) = {draw(rng, -1, 1), draw(rng, -1, 1)};
    }
    payload["coeffs"] = to_json(c);
    payload["grid"] = g;
  } else if (kind == "conjugate") {
    Index n = size_of(size, "X", 65);
    if (n < 2) throw PreconditionError("gen: conjugate needs X >= 2");
    Vec grid = uniform_grid(-1, 1, n);
    Mat pieces = draw_matrix(rng, 3, 2, -1, 1);
    double q = draw(rng, 0, 2);
    Vec v(n);
    for (Index i = 0; i < n; ++i) {
      double best = -kInf;
      for (Index k = 0; k < 3; ++k) best = std::max(best, pieces(k, 0) * grid(i) + pieces(k, 1));
      v(i) = best + 0.5 * q * grid(i) * grid(i);
    }
    payload["f"] = {{"grid", to_json(grid)}, {"values", to_json(v)}};
  } else {
    throw PreconditionError("gen: unsupported kind \"" + kind + "\"");
  }
  Json doc = {{"kind", kind}, {"payload", payload}, {"seed", seed}};
  // Round-trip through the canonical text so the returned problem is exactly
  // what a saved file would load as.
  return problem_from_json(parse_text(canonical(doc)));
}

}  // namespace vecot::io
