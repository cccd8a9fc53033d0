#include "vecot/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace vecot::io {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalBreakdown*>(&e)) return kBreakdown;
  if (dynamic_cast<const Error*>(&e)) return kSchema;  // parse, schema, dimension, precondition, guard
  return kBreakdown;
}

// ---------------------------------------------------------------------------
// Text

namespace {

void write_number(std::string& out, double v) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void write_canonical(std::string& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {  // object_t is a std::map, so keys come sorted
        if (!first) out += ',';
        first = false;
        out += Json(k).dump();
        out += ':';
        write_canonical(out, v);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        write_canonical(out, j[i]);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      write_number(out, j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

}  // namespace

std::string canonical(const Json& j) {
  std::string out;
  write_canonical(out, j);
  out += '\n';
  return out;
}

Json parse_text(std::string_view text) {
  auto fail = [&](std::size_t stop, const std::string& what) {
    Index line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(stop, text.size()); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what, line, col);
  };
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    std::string what = e.what();
    auto p = what.find("parse error");
    fail(e.byte > 0 ? e.byte - 1 : 0, p == std::string::npos ? what : what.substr(p));
  } catch (const Json::out_of_range& e) {
    // number overflow carries no position; the message quotes the token
    std::string what = e.what();
    auto q = what.find('\'');
    auto token = q == std::string::npos ? std::string() : what.substr(q + 1, what.rfind('\'') - q - 1);
    auto at = token.empty() ? std::string_view::npos : text.find(token);
    fail(at == std::string_view::npos ? 0 : at, "number out of range " + token);
  }
  return {};
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line, e.column);
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 15];
  return s;
}

// ---------------------------------------------------------------------------
// Reader

Reader Reader::at(const std::string& key) const {
  if (!j_->is_object()) fail("expected an object");
  auto it = j_->find(key);
  std::string p = path_.empty() ? key : path_ + "." + key;
  if (it == j_->end()) throw SchemaError(p, "missing required key");
  return Reader(*it, p);
}

Reader Reader::at(std::size_t i) const {
  if (!j_->is_array()) fail("expected an array");
  std::string p = path_ + "[" + std::to_string(i) + "]";
  if (i >= j_->size()) throw SchemaError(p, "index out of range");
  return Reader((*j_)[i], p);
}

std::optional<Reader> Reader::find(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return at(key);
}

std::size_t Reader::size() const {
  if (!j_->is_array()) fail("expected an array");
  return j_->size();
}

double Reader::number() const {
  if (!j_->is_number()) fail("expected a number");
  double v = j_->get<double>();
  if (!std::isfinite(v)) fail("non-finite number");
  return v;
}

Index Reader::integer() const {
  if (j_->is_number_integer()) return j_->get<Index>();
  double v = number();
  if (v != std::floor(v) || std::abs(v) > 9e15) fail("expected an integer");
  return static_cast<Index>(v);
}

bool Reader::boolean() const {
  if (!j_->is_boolean()) fail("expected true or false");
  return j_->get<bool>();
}

std::string Reader::string() const {
  if (!j_->is_string()) fail("expected a string");
  return j_->get<std::string>();
}

Vec Reader::vec() const {
  const std::size_t n = size();
  Vec v(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) v(static_cast<Index>(i)) = at(i).number();
  return v;
}

Mat Reader::mat() const {
  const std::size_t rows = size();
  if (rows == 0) fail("empty matrix");
  const std::size_t cols = at(0).size();
  if (cols == 0) fail("empty matrix row");
  Mat m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    Reader row = at(i);
    if (row.size() != cols) row.fail("row length " + std::to_string(row.size()) + " != " + std::to_string(cols));
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = row.at(j).number();
  }
  return m;
}

namespace {

double clamp_entry(const Reader& r, double v) {
  if (v < -tol::reader) r.fail("negative entry " + Json(v).dump());
  return v < 0 ? 0.0 : v;
}

/// Run a library constructor and report its complaint against this key.
template <class F>
auto guarded(const Reader& r, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    r.fail(e.what());
  }
}

std::vector<Index> index_list(const Reader& r) {
  std::vector<Index> out;
  for (std::size_t i = 0; i < r.size(); ++i) out.push_back(r.at(i).integer());
  return out;
}

void require_shape(const Reader& r, const Mat& m, Index rows, Index cols) {
  if (m.rows() != rows || m.cols() != cols)
    r.fail("shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " != expected " +
           std::to_string(rows) + "x" + std::to_string(cols));
}

}  // namespace

Vec Reader::nonneg_vec() const {
  Vec v = vec();
  for (Index i = 0; i < v.size(); ++i) v(i) = clamp_entry(at(static_cast<std::size_t>(i)), v(i));
  return v;
}

Mat Reader::nonneg_mat() const {
  Mat m = mat();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = clamp_entry(at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)), m(i, j));
  return m;
}

// ---------------------------------------------------------------------------
// Measures

FiniteSpace read_space(const Reader& r) {
  Reader labels = r.at("labels");
  std::vector<std::string> l;
  for (std::size_t i = 0; i < labels.size(); ++i) l.push_back(labels.at(i).string());
  std::vector<std::vector<double>> coords;
  if (auto c = r.find("coords")) {
    for (std::size_t i = 0; i < c->size(); ++i) {
      Vec v = c->at(i).vec();
      coords.emplace_back(v.data(), v.data() + v.size());
    }
  }
  return guarded(r, [&] { return FiniteSpace(l, coords); });
}

namespace {

FiniteSpace space_or_indexed(const Reader& r, Index n, const Reader& sized) {
  if (auto s = r.find("space")) {
    FiniteSpace sp = read_space(*s);
    if (sp.size() != n) sized.fail("size " + std::to_string(n) + " != space size " + std::to_string(sp.size()));
    return sp;
  }
  return FiniteSpace::indexed(n);
}

}  // namespace

ScalarMeasure read_scalar_measure(const Reader& r) {
  if (r.json().is_array()) {
    Vec w = r.nonneg_vec();
    if (w.size() == 0) r.fail("empty measure");
    return ScalarMeasure(w);
  }
  Reader wr = r.at("weights");
  Vec w = wr.nonneg_vec();
  if (w.size() == 0) wr.fail("empty measure");
  FiniteSpace sp = space_or_indexed(r, w.size(), wr);
  return guarded(r, [&] { return ScalarMeasure(sp, w); });
}

VectorMeasure read_vector_measure(const Reader& r) {
  if (r.json().is_array()) {
    Mat v = r.nonneg_mat();
    return guarded(r, [&] { return VectorMeasure(FiniteSpace::indexed(v.rows()), v); });
  }
  Reader vr = r.at("values");
  Mat v = vr.nonneg_mat();
  FiniteSpace sp = space_or_indexed(r, v.rows(), vr);
  if (auto rw = r.find("refWeights")) {
    Vec ref = rw->nonneg_vec();
    if (ref.size() != v.rows()) rw->fail("size != number of atoms");
    return guarded(*rw, [&] { return VectorMeasure(sp, v, ref); });
  }
  return guarded(r, [&] { return VectorMeasure(sp, v); });
}

// ---------------------------------------------------------------------------
// Problem files

namespace {

/// Replace "space": "<name>" by the definition under payload.spaces.
void resolve_spaces(Json& node, const Json& spaces, const std::string& path) {
  if (node.is_object()) {
    for (auto& [k, v] : node.items()) {
      std::string p = path + "." + k;
      if (k == "space" && v.is_string()) {
        std::string name = v.get<std::string>();
        if (!spaces.is_object() || !spaces.contains(name)) throw SchemaError(p, "undefined space \"" + name + "\"");
        v = spaces.at(name);
      } else {
        resolve_spaces(v, spaces, p);
      }
    }
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) resolve_spaces(node[i], spaces, path + "[" + std::to_string(i) + "]");
  }
}

void validate(const std::string& kind, const Reader& r) {
  if (kind == "multi") {
    read_multi(r);
  } else if (kind == "glue") {
    read_glue(r);
  } else if (kind == "vector_ot") {
    read_vector_ot(r);
  } else if (kind == "dominance") {
    read_dominance(r);
  } else if (kind == "martingale") {
    read_martingale(r);
  } else if (kind == "chain") {
    read_chain(r);
  } else if (kind == "game") {
    read_game(r);
  } else if (kind == "moment") {
    read_moment(r);
  } else if (kind == "trig") {
    read_trig(r);
  } else if (kind == "conjugate") {
    read_conjugate(r);
  } else {
    read_scalar_ot(r, kind);
  }
}

}  // namespace

ProblemFile problem_from_json(const Json& j) {
  Reader root(j, "");
  if (!j.is_object()) root.fail("problem file must be an object");
  ProblemFile p;
  p.kind = root.at("kind").string();
  const auto& kinds = problem_kinds();
  if (std::find(kinds.begin(), kinds.end(), p.kind) == kinds.end())
    throw SchemaError("kind", "unknown kind \"" + p.kind + "\"");
  p.payload = root.at("payload").json();
  if (auto t = root.find("tol")) {
    if (!t->json().is_object()) t->fail("expected an object");
    for (const auto& [k, v] : t->json().items()) {
      double x = t->at(k).number();
      if (x < 0) t->at(k).fail("tolerance must be nonnegative");
      p.tol[k] = x;
    }
  }
  if (auto s = root.find("seed")) {
    if (!s->json().is_number_unsigned() && !(s->json().is_number_integer() && s->integer() >= 0))
      s->fail("seed must be a nonnegative integer");
    p.seed = s->json().get<std::uint64_t>();
  }
  for (const auto& [k, v] : j.items())
    if (k != "kind" && k != "payload" && k != "tol" && k != "seed") throw SchemaError(k, "unknown top-level key");
  p.resolved = p.payload;
  if (p.resolved.is_object() && p.resolved.contains("spaces")) {
    const Json spaces = p.resolved["spaces"];
    resolve_spaces(p.resolved, spaces, "payload");
  }
  validate(p.kind, p.payload_reader());
  return p;
}

ProblemFile load(const std::string& path) { return problem_from_json(read_json(path)); }

Json to_json(const ProblemFile& p) {
  Json j = {{"kind", p.kind}, {"payload", p.payload}};
  if (!p.tol.empty()) j["tol"] = p.tol;
  if (p.seed) j["seed"] = *p.seed;
  return j;
}

void save(const ProblemFile& p, const std::string& path) { write_text(path, canonical(to_json(p))); }

// ---------------------------------------------------------------------------
// Kind-specific payloads

ScalarOtInput read_scalar_ot(const Reader& r, const std::string& kind) {
  ScalarOtInput in;
  in.mu = read_scalar_measure(r.at("mu"));
  const Index nx = in.mu.size();
  if (kind == "invariant") {
    Reader mr = r.at("map");
    in.map = index_list(mr);
    if (static_cast<Index>(in.map.size()) != nx) mr.fail("map must have one entry per atom");
    for (std::size_t i = 0; i < in.map.size(); ++i)
      if (in.map[i] < 0 || in.map[i] >= nx) mr.at(i).fail("map target out of range");
    Reader cr = r.at("cost");
    in.cost = cr.mat();
    require_shape(cr, in.cost, nx, nx);
    return in;
  }
  in.nu = read_scalar_measure(r.at("nu"));
  const Index ny = in.nu.size();
  if (kind == "strassen") {
    Reader g = r.at("gamma");
    for (std::size_t k = 0; k < g.size(); ++k) {
      Reader row = g.at(k);
      LinearConstraint c;
      Reader cr = row.at("coeffs");
      c.coeffs = cr.mat();
      require_shape(cr, c.coeffs, nx, ny);
      std::string s = row.find("kind") ? row.at("kind").string() : "le";
      if (s == "le") c.kind = RowKind::Le;
      else if (s == "ge") c.kind = RowKind::Ge;
      else if (s == "eq") c.kind = RowKind::Eq;
      else row.at("kind").fail("expected \"le\", \"ge\" or \"eq\"");
      c.rhs = row.at("rhs").number();
      in.gamma.push_back(std::move(c));
    }
    return in;
  }
  Reader cr = r.at("cost");
  in.cost = cr.mat();
  require_shape(cr, in.cost, nx, ny);
  if (kind == "partial") {
    Reader m = r.at("mass");
    in.mass = m.number();
    if (in.mass < 0) m.fail("mass must be nonnegative");
  } else if (kind == "capacity") {
    Reader c = r.at("capacity");
    in.capacity = c.nonneg_mat();
    require_shape(c, in.capacity, nx, ny);
    if (auto m = r.find("minimize")) in.capacity_min = m->boolean();
  } else if (kind == "local") {
    Reader b = r.at("bound");
    in.bound = b.number();
    if (in.bound < 0) b.fail("bound must be nonnegative");
  }
  return in;
}

MultiInput read_multi(const Reader& r) {
  MultiInput in;
  Reader ms = r.at("marginals");
  if (ms.size() < 2) ms.fail("need at least two marginals");
  double cells = 1;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    in.marginals.push_back(read_scalar_measure(ms.at(i)));
    cells *= static_cast<double>(in.marginals.back().size());
  }
  Reader cr = r.at("cost");
  in.cost = cr.vec();
  if (static_cast<double>(in.cost.size()) != cells) cr.fail("length != product of marginal sizes");
  return in;
}

GlueInput read_glue(const Reader& r) {
  GlueInput in;
  in.mu = r.at("mu").nonneg_mat();
  Reader nr = r.at("nu");
  in.nu = nr.nonneg_mat();
  if (in.nu.rows() != in.mu.cols()) nr.fail("rows != columns of mu");
  if (auto l = r.find("lambda")) {
    in.lambda = l->nonneg_mat();
    require_shape(*l, *in.lambda, in.mu.rows(), in.nu.cols());
  }
  return in;
}

VectorOtProblem read_vector_ot(const Reader& r) {
  VectorOtProblem p;
  p.mu = read_vector_measure(r.at("mu"));
  Reader nr = r.at("nu");
  p.nu = read_vector_measure(nr);
  if (p.nu.dim() != p.mu.dim()) nr.fail("dimension differs from mu");
  if (auto e = r.find("eta")) {
    p.eta = e->nonneg_mat();
    require_shape(*e, *p.eta, p.mu.size(), p.mu.dim());
  }
  if (auto c = r.find("cost")) {
    p.cost = c->mat();
    require_shape(*c, p.cost, p.mu.size(), p.nu.size());
  }
  return p;
}

DominanceInput read_dominance(const Reader& r) {
  DominanceInput in;
  in.mu = read_vector_measure(r.at("mu"));
  Reader nr = r.at("nu");
  in.nu = read_vector_measure(nr);
  if (in.nu.dim() != in.mu.dim()) nr.fail("dimension differs from mu");
  if (auto n = r.find("n")) {
    in.n = n->integer();
    if (*in.n < 1 || *in.n > in.nu.size()) n->fail("n must lie in [1, |Y|]");
  }
  if (auto s = r.find("strong")) in.strong = s->boolean();
  if (auto s = r.find("samples")) {
    Index k = s->integer();
    if (k < 0 || k > 1000000) s->fail("samples must lie in [0, 1e6]");
    in.samples = static_cast<int>(k);
  }
  return in;
}

MartingaleInput read_martingale(const Reader& r) {
  MartingaleInput in;
  in.mu = read_scalar_measure(r.at("mu"));
  in.nu = read_scalar_measure(r.at("nu"));
  Reader fr = r.at("f"), gr = r.at("g"), cr = r.at("cost");
  in.f = fr.mat();
  in.g = gr.mat();
  in.cost = cr.mat();
  if (in.f.rows() != in.mu.size()) fr.fail("one row per atom of mu expected");
  require_shape(gr, in.g, in.nu.size(), in.f.cols());
  require_shape(cr, in.cost, in.mu.size(), in.nu.size());
  return in;
}

ChainInput read_chain(const Reader& r) {
  ChainInput in;
  Reader cr = r.at("cost");
  in.problem.c = cr.mat();
  const Index m = in.problem.c.rows();
  require_shape(cr, in.problem.c, m, m);
  auto measure = [&](const std::string& key) {
    Reader mr = r.at(key);
    ScalarMeasure s = read_scalar_measure(mr);
    if (s.size() != m) mr.fail("size != cost size");
    return s;
  };
  in.problem.mu = measure("mu");
  in.problem.nu = measure("nu");
  if (auto f = r.find("freeMedium")) in.free_medium = f->boolean();
  if (!in.free_medium || r.has("lambda")) in.problem.lambda = measure("lambda");
  Reader nr = r.at("n");
  in.problem.n = nr.integer();
  if (in.problem.n < 1) nr.fail("n must be >= 1");
  return in;
}

GameInput read_game(const Reader& r) {
  GameInput in;
  if (r.json().is_array()) {
    in.f = r.mat();
    return in;
  }
  in.f = r.at("F").mat();
  if (auto l = r.find("lambda")) {
    in.lambda = read_scalar_measure(*l);
    if (in.lambda->size() != in.f.cols()) l->fail("size != number of columns of F");
    if (in.lambda->mass() <= 0) l->fail("lambda has no mass");
  }
  return in;
}

MomentInput read_moment(const Reader& r) {
  MomentInput in;
  in.M = r.at("M").mat();
  Reader mr = r.at("m");
  in.m = mr.vec();
  if (in.m.size() != in.M.rows()) mr.fail("length != rows of M");
  return in;
}

namespace {

Cvec read_coeffs(const Reader& r) {
  Cvec c(static_cast<Index>(r.size()));
  if (c.size() == 0) r.fail("no coefficients");
  for (std::size_t k = 0; k < r.size(); ++k) {
    Reader e = r.at(k);
    if (e.json().is_array()) {
      if (e.size() != 2) e.fail("complex entries are [re, im]");
      c(static_cast<Index>(k)) = {e.at(0).number(), e.at(1).number()};
    } else {
      c(static_cast<Index>(k)) = e.number();
    }
  }
  return c;
}

}  // namespace

TrigInput read_trig(const Reader& r) {
  TrigInput in;
  if (r.json().is_array()) {
    in.coeffs = read_coeffs(r);
  } else {
    in.coeffs = read_coeffs(r.at("coeffs"));
    if (auto g = r.find("grid")) in.grid = g->integer();
  }
  if (in.grid < 4 * in.coeffs.size()) {
    std::string msg = "grid must be at least 4(n+1) = " + std::to_string(4 * in.coeffs.size());
    if (r.has("grid")) r.at("grid").fail(msg);
    r.fail(msg);
  }
  return in;
}

GridFunction read_grid_function(const Reader& r) {
  Reader gr = r.at("grid");
  Vec g = gr.vec(), v = r.at("values").vec();
  if (v.size() != g.size()) r.at("values").fail("length != grid length");
  if (g.size() < 2) gr.fail("need at least two grid points");
  return guarded(gr, [&] { return GridFunction(g, v); });
}

ConjugateInput read_conjugate(const Reader& r) {
  ConjugateInput in;
  if (!r.has("f")) {
    in.f = read_grid_function(r);
    return in;
  }
  in.f = read_grid_function(r.at("f"));
  if (auto ic = r.find("infconv"))
    for (std::size_t i = 0; i < ic->size(); ++i) in.infconv.push_back(read_grid_function(ic->at(i)));
  if (auto d = r.find("dual")) {
    in.dual = d->vec();
    for (Index i = 1; i < in.dual->size(); ++i)
      if (!((*in.dual)(i) > (*in.dual)(i - 1))) d->fail("dual grid must be strictly increasing");
  }
  return in;
}

// ---------------------------------------------------------------------------
// Writers

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(std::move(row));
  }
  return a;
}

Json to_json(const FiniteSpace& s) {
  Json j = {{"labels", s.labels()}};
  if (s.has_coords()) j["coords"] = s.coords();
  return j;
}

Json to_json(const ScalarMeasure& m) { return {{"space", to_json(m.space())}, {"weights", to_json(m.weights())}}; }

Json to_json(const VectorMeasure& m) {
  return {{"space", to_json(m.space())}, {"values", to_json(m.values())}, {"refWeights", to_json(m.ref_weights())}};
}

Json to_json(const Cvec& c) {
  Json a = Json::array();
  for (Index k = 0; k < c.size(); ++k) a.push_back({c(k).real(), c(k).imag()});
  return a;
}

Json to_json(const LpDiagnostics& d) {
  return {{"pivots", d.pivots},
          {"gap", d.gap},
          {"residuals", {{"primal", d.primal_residual}, {"dual", d.dual_residual}, {"slackness", d.slackness}}}};
}

namespace {

Json with_values(Json j, double value, double dual, const LpDiagnostics& d) {
  j["value"] = value;
  j["dualValue"] = dual;
  j["gap"] = std::abs(value - dual);
  j["diagnostics"] = to_json(d);
  j["diagnostics"]["gap"] = std::abs(value - dual);
  return j;
}

Json cert_json(const Certificate& c) {
  Json j = {{"kind", c.kind}, {"psi", to_json(c.psi)}, {"phi", to_json(c.phi)}, {"violation", c.violation}};
  if (c.xi.size()) j["xi"] = to_json(c.xi);
  return j;
}

Json cert_json(const DominanceCert& c) {
  Json j = {{"kind", to_string(c.kind)}};
  if (c.kernel) j["kernel"] = to_json(c.kernel->rows());
  if (c.psi.size()) j["psi"] = to_json(c.psi);
  if (c.phi.size()) j["phi"] = to_json(c.phi);
  if (c.kind == DominanceCert::Kind::Farkas) j["violation"] = c.violation;
  if (!c.partitions.empty()) j["partitions"] = c.partitions;
  return j;
}

}  // namespace

Json result_json(const OtResult& r) {
  Json j = {{"status", to_string(r.status)}};
  if (r.certificate) j["certificate"] = cert_json(*r.certificate);
  if (!r.feasible()) {
    j["diagnostics"] = to_json(r.diag);
    return j;
  }
  j["plan"] = to_json(r.plan.matrix);
  j["psi"] = to_json(r.psi);
  j["phi"] = to_json(r.phi);
  if (r.lambda != 0) j["lambda"] = r.lambda;
  if (r.xi.size()) j["xi"] = to_json(r.xi);
  return with_values(j, r.value, r.dual_value, r.diag);
}

Json result_json(const MultiOtResult& r) {
  Json j = {{"status", to_string(r.status)}, {"dims", r.dims}};
  if (r.certificate) {
    Json c = Json::array();
    for (const auto& v : *r.certificate) c.push_back(to_json(v));
    j["certificate"] = c;
  }
  if (!r.feasible()) {
    j["diagnostics"] = to_json(r.diag);
    return j;
  }
  j["joint"] = to_json(r.joint);
  Json p = Json::array();
  for (const auto& v : r.potentials) p.push_back(to_json(v));
  j["potentials"] = p;
  return with_values(j, r.value, r.dual_value, r.diag);
}

Json result_json(const GlueResult& r) {
  Json j = {{"status", r.feasible ? "feasible" : "infeasible"},
            {"feasible", r.feasible},
            {"lpFeasible", r.lp_feasible},
            {"marginalsAgree", r.marginals_agree},
            {"dims", {r.nx, r.ny, r.nz}},
            {"diagnostics", to_json(r.diag)}};
  if (r.joint.size()) j["joint"] = to_json(r.joint);
  if (!r.feasible && r.psi.size()) {
    j["certificate"] = {{"psi", to_json(r.psi)}, {"phi", to_json(r.phi)}, {"xi", to_json(r.xi)}, {"violation", r.violation}};
  }
  return j;
}

Json result_json(const FeasibilityResult& r) {
  Json j = {{"status", r.feasible ? "feasible" : "infeasible"}, {"feasible", r.feasible}, {"diagnostics", to_json(r.diag)}};
  if (r.feasible) j["plan"] = to_json(r.plan.matrix);
  if (r.certificate) j["certificate"] = cert_json(*r.certificate);
  return j;
}

Json result_json(const VectorOtResult& r) {
  Json j = {{"status", to_string(r.status)}, {"w", to_json(r.w)}, {"f", to_json(r.f)}};
  if (r.certificate) j["certificate"] = cert_json(*r.certificate);
  if (!r.feasible()) {
    j["diagnostics"] = to_json(r.diag);
    return j;
  }
  j["plan"] = to_json(r.plan.matrix);
  j["Psi"] = to_json(r.Psi);
  j["psi"] = to_json(r.psi);
  j["phi"] = to_json(r.phi);
  return with_values(j, r.value, r.dual_value, r.diag);
}

Json result_json(const DominanceResult& r) {
  return {{"status", r.dominates ? "dominates" : "infeasible"},
          {"dominates", r.dominates},
          {"certificate", cert_json(r.cert)},
          {"residual", r.residual}};
}

Json result_json(const BlackwellReport& r) {
  Json j = {{"condDens", {{"holds", r.cond.holds}, {"s", to_json(r.cond.s)}, {"residual", r.cond.residual}}},
            {"planFeasible", r.plan_feasible},
            {"kernelFeasible", r.kernel_feasible},
            {"agree", r.agree()},
            {"restricted", r.restricted()},
            {"reversedChecked", r.reversed_checked},
            {"samples", r.samples},
            {"jensenViolations", r.jensen_violations},
            {"minJensenGap", r.min_jensen_gap},
            {"passes", r.passes()}};
  if (r.reversed_checked) {
    j["forwardMassResidual"] = r.forward_mass_residual;
    j["reversedMassResidual"] = r.reversed_mass_residual;
    j["densityAverageResidual"] = r.density_average_residual;
    if (r.reversed) j["reversedKernel"] = to_json(r.reversed->rows());
  }
  if (r.kernel) j["kernel"] = to_json(r.kernel->rows());
  if (r.certificate) j["certificate"] = cert_json(*r.certificate);
  if (r.certificate_gap) j["certificateGap"] = *r.certificate_gap;
  if (r.worst_g.size()) j["worstG"] = to_json(r.worst_g);
  return j;
}

Json result_json(const PartitionResult& r) {
  Json j = {{"holds", r.holds}, {"checked", r.checked}};
  if (!r.holds) j["witness"] = r.witness;
  if (r.cert) j["certificate"] = cert_json(*r.cert);
  return j;
}

Json result_json(const StrongDominanceResult& r) {
  Json f = Json::array();
  for (const auto& [a, b] : r.failing) f.push_back({{"A", a}, {"B", b}});
  return {{"strong", r.strong},
          {"totalsEqual", r.totals_equal},
          {"dominates", r.dominates},
          {"failing", f},
          {"pairsChecked", r.pairs_checked}};
}

Json result_json(const MartingaleResult& r) {
  Json j = {{"status", to_string(r.status)}};
  if (r.farkas) j["certificate"] = {{"kind", "farkas"}, {"y", to_json(*r.farkas)}};
  if (!r.feasible()) {
    j["diagnostics"] = to_json(r.diag);
    return j;
  }
  j["plan"] = to_json(r.plan.matrix);
  j["Psi"] = to_json(r.Psi);
  j["Phi"] = to_json(r.Phi);
  j["zeta"] = to_json(r.zeta);
  return with_values(j, r.value, r.dual_value, r.diag);
}

Json result_json(const ChainResult& r) {
  Json j = {{"status", to_string(r.status)}};
  if (r.farkas) j["certificate"] = {{"kind", "farkas"}, {"y", to_json(*r.farkas)}};
  if (!r.feasible()) {
    j["diagnostics"] = to_json(r.diag);
    return j;
  }
  Json plans = Json::array();
  for (const auto& p : r.plans) plans.push_back(to_json(p));
  j["plans"] = plans;
  j["f"] = to_json(r.f);
  return with_values(j, r.value, r.theorem_value, r.diag);
}

Json result_json(const GameResult& r) {
  return {{"status", "optimal"},      {"value", r.value},      {"dualValue", r.upper},
          {"lower", r.lower},         {"upper", r.upper},      {"gap", r.upper - r.lower},
          {"row", to_json(r.row)},    {"col", to_json(r.col)}, {"diagnostics", {{"gap", r.upper - r.lower}}}};
}

Json result_json(const MomentResult& r) {
  Json j = {{"status", r.feasible ? "feasible" : "infeasible"}, {"feasible", r.feasible}};
  if (r.feasible) {
    j["weights"] = to_json(r.weights);
    j["diagnostics"] = {{"residuals", {{"primal", r.residual}}}};
  } else {
    j["certificate"] = {{"kind", "separating"}, {"alpha", to_json(r.alpha)}, {"violation", r.violation}};
  }
  return j;
}

Json result_json(const TrigResult& r) {
  Json j = {{"status", r.lp_feasible ? "feasible" : "infeasible"},
            {"psd", r.psd},
            {"lpFeasible", r.lp_feasible},
            {"agree", r.agree()},
            {"minEig", r.min_eig},
            {"norm", r.norm},
            {"eigenvalues", to_json(r.eigenvalues)}};
  if (r.lp_feasible) j["weights"] = to_json(r.weights);
  if (r.certificate) j["certificate"] = to_json(*r.certificate);
  return j;
}

Json result_json(const GridFunction& f) {
  return {{"grid", to_json(f.grid)}, {"values", to_json(f.values)}, {"errorBound", f.error_bound}};
}

Json result_json(const RefinementReport& r) {
  Json rows = Json::array();
  for (const auto& w : r.rows)
    rows.push_back({{"n", w.n},
                    {"value", w.primal},
                    {"dualValue", w.dual},
                    {"gap", w.gap},
                    {"q", w.q},
                    {"qLp", w.q_lp},
                    {"leftMass", w.left_mass},
                    {"splitRows", w.split_rows}});
  return {{"status", "optimal"}, {"rows", rows}, {"increasing", r.increasing}, {"stable", r.stable}};
}

// ---------------------------------------------------------------------------
// Re-validation

namespace {

double reported(const Json& j, const char* key) {
  Reader r(j, "result");
  return r.at(key).number();
}

Mat result_mat(const Json& j, const char* key) { return Reader(j, "result").at(key).mat(); }
Vec result_vec(const Json& j, const char* key) { return Reader(j, "result").at(key).vec(); }

double recheck_scalar(const ScalarOtInput& in, const Json& res) {
  const Vec& mu = in.mu.weights();
  const Vec& nu = in.nu.weights();
  if (res.at("status") != "optimal") {
    Reader c = Reader(res, "result").at("certificate");
    Vec psi = c.at("psi").vec(), phi = c.at("phi").vec();
    double v = psi.dot(mu) + phi.dot(nu);
    double worst = std::abs(v - c.at("violation").number());
    return std::max(worst, std::max(0.0, -detail::min_pair_sum(psi, phi)));
  }
  Mat pi = result_mat(res, "plan");
  Vec psi = result_vec(res, "psi"), phi = result_vec(res, "phi");
  double worst = std::max(max_abs(pi.rowwise().sum() - mu), max_abs(pi.colwise().sum().transpose() - nu));
  worst = std::max(worst, std::abs((in.cost.array() * pi.array()).sum() - reported(res, "value")));
  worst = std::max(worst, std::abs(psi.dot(mu) + phi.dot(nu) - reported(res, "dualValue")));
  worst = std::max(worst, std::max(0.0, dual_violation(psi, phi, in.cost)));
  return worst;
}

double recheck_vector(const VectorOtProblem& p, const Json& res) {
  if (res.at("status") != "optimal") {
    Reader c = Reader(res, "result").at("certificate");
    DominanceCert cert;
    cert.psi = c.at("psi").mat();
    cert.phi = c.at("phi").mat();
    double v = check_dominance_certificate(cert, p.mu.values(), p.density(), p.nu.values());
    return std::isfinite(v) ? std::abs(v - c.at("violation").number()) : kInf;
  }
  const Mat& eta = p.density();
  Mat c = detail::zero_cost_if_empty(p.cost, p.mu.size(), p.nu.size());
  Mat pi = result_mat(res, "plan"), phi = result_mat(res, "phi");
  Vec w = result_vec(res, "w"), Psi = result_vec(res, "Psi");
  double worst = max_abs(pi.rowwise().sum() - w);
  worst = std::max(worst, max_abs(pi.transpose() * eta - p.nu.values()));
  for (Index x = 0; x < eta.rows(); ++x)
    worst = std::max(worst, max_abs(w(x) * eta.row(x) - p.mu.values().row(x)));
  worst = std::max(worst, std::abs((c.array() * pi.array()).sum() - reported(res, "value")));
  worst = std::max(worst, std::abs(Psi.dot(w) + (phi.array() * p.nu.values().array()).sum() - reported(res, "dualValue")));
  for (Index x = 0; x < c.rows(); ++x)
    for (Index y = 0; y < c.cols(); ++y) worst = std::max(worst, Psi(x) + phi.row(y).dot(eta.row(x)) - c(x, y));
  return worst;
}

double recheck_chain(const ChainInput& in, const Json& res) {
  if (res.at("status") != "optimal") return 0;
  const ChainProblem& p = in.problem;
  Reader pr = Reader(res, "result").at("plans");
  std::vector<Mat> plans;
  for (std::size_t i = 0; i < pr.size(); ++i) plans.push_back(pr.at(i).mat());
  if (static_cast<Index>(plans.size()) != p.n + 1) return kInf;
  double worst = max_abs(plans.front().rowwise().sum() - p.mu.weights());
  worst = std::max(worst, max_abs(plans.back().colwise().sum().transpose() - p.nu.weights()));
  Vec medium = Vec::Zero(p.c.rows());
  double value = 0;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    value += (p.c.array() * plans[i].array()).sum();
    if (i == 0) continue;
    worst = std::max(worst, max_abs(plans[i - 1].colwise().sum().transpose() - plans[i].rowwise().sum()));
    medium += plans[i].rowwise().sum();
  }
  if (!in.free_medium) worst = std::max(worst, max_abs(medium - static_cast<double>(p.n) * p.lambda.weights()));
  return std::max(worst, std::abs(value - reported(res, "value")));
}

double recheck_game(const GameInput& in, const Json& res) {
  Vec row = result_vec(res, "row"), col = result_vec(res, "col");
  double lower = (row.transpose() * in.f).minCoeff();
  double upper = (in.f * col).maxCoeff();
  return std::max(std::abs(lower - reported(res, "lower")), std::abs(upper - reported(res, "upper")));
}

}  // namespace

double recheck_result(const ProblemFile& p, const Json& result) {
  Reader r = p.payload_reader();
  if (p.kind == "scalar_ot") return recheck_scalar(read_scalar_ot(r, p.kind), result);
  if (p.kind == "vector_ot") return recheck_vector(read_vector_ot(r), result);
  if (p.kind == "chain") return recheck_chain(read_chain(r), result);
  if (p.kind == "game") return recheck_game(read_game(r), result);
  throw PreconditionError("recheck_result: unsupported kind " + p.kind);
}

}  // namespace vecot::io
