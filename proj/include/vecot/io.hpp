#pragma once

// Problem and result files, seeded instance generation and the golden
// suite behind `vecot verify`. Compiled into the vecot_io library.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vecot/chain.hpp"
#include "vecot/duality.hpp"
#include "vecot/vector_ot.hpp"

namespace vecot::io {

using Json = nlohmann::json;

/// Malformed JSON text. Line and column are 1-based.
struct ParseError : Error {
  Index line, column;
  ParseError(const std::string& msg, Index l, Index c) : Error(msg), line(l), column(c) {}
};

/// Well-formed JSON that does not fit the schema. `key` is the path of the
/// offending value, e.g. "payload.mu.weights[2]".
struct SchemaError : Error {
  std::string key;
  SchemaError(std::string k, const std::string& what) : Error(k + ": " + what), key(std::move(k)) {}
};

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kInfeasible = 2, kSchema = 3, kBreakdown = 4 };

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

// ---------------------------------------------------------------------------
// Text

/// Sorted keys, no whitespace, shortest round-trip doubles, trailing newline.
std::string canonical(const Json& j);

/// Parse with line/column error reporting.
Json parse_text(std::string_view text);
Json read_json(const std::string& path);
void write_text(const std::string& path, const std::string& text);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

// ---------------------------------------------------------------------------
// Schema reading

/// A JSON value together with its path, for error messages.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const Json& json() const { return *j_; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Reader at(const std::string& key) const;
  Reader at(std::size_t i) const;
  std::optional<Reader> find(const std::string& key) const;
  std::size_t size() const;  // array length

  double number() const;  // finite
  Index integer() const;
  bool boolean() const;
  std::string string() const;
  Vec vec() const;
  Mat mat() const;  // array of equal-length rows
  /// Entries below -tol::reader are rejected, [-tol::reader, 0) clamps to 0.
  Vec nonneg_vec() const;
  Mat nonneg_mat() const;

  [[noreturn]] void fail(const std::string& what) const { throw SchemaError(path_, what); }

 private:
  const Json* j_;
  std::string path_;
};

FiniteSpace read_space(const Reader& r);
/// {"space"?, "weights"} or a bare weight array.
ScalarMeasure read_scalar_measure(const Reader& r);
/// {"space"?, "values", "refWeights"?} or a bare value matrix.
VectorMeasure read_vector_measure(const Reader& r);

// ---------------------------------------------------------------------------
// Problem files

inline const std::vector<std::string>& problem_kinds() {
  static const std::vector<std::string> k{"scalar_ot", "partial",   "capacity", "invariant", "multi",  "glue",
                                          "local",     "strassen",  "vector_ot", "dominance", "martingale",
                                          "chain",     "game",      "moment",    "trig",      "conjugate"};
  return k;
}

struct ProblemFile {
  std::string kind;
  Json payload;
  std::map<std::string, double> tol;  // overrides by name, e.g. "gap"
  std::optional<std::uint64_t> seed;
  Json resolved;  // payload with named spaces substituted; set by problem_from_json

  Reader payload_reader() const { return Reader(resolved, "payload"); }
};

/// Validate a parsed document. Throws SchemaError.
ProblemFile problem_from_json(const Json& j);
ProblemFile load(const std::string& path);
Json to_json(const ProblemFile& p);
void save(const ProblemFile& p, const std::string& path);

/// Scalar transport family: plain, partial, capacity, invariant, local, strassen.
struct ScalarOtInput {
  ScalarMeasure mu, nu;
  Mat cost;
  double mass = 0;                     // partial
  Mat capacity;                        // capacity
  bool capacity_min = false;           // capacity: solve the min-cost variant
  std::vector<Index> map;              // invariant: T
  double bound = 0;                    // local: D
  std::vector<LinearConstraint> gamma; // strassen
};

struct MultiInput {
  std::vector<ScalarMeasure> marginals;
  Vec cost;  // flattened, first marginal slowest
};

struct GlueInput {
  Mat mu, nu;
  std::optional<Mat> lambda;
};

struct DominanceInput {
  VectorMeasure mu, nu;
  std::optional<Index> n;
  bool strong = false;
  std::optional<int> samples;  // Blackwell report when set
};

struct MartingaleInput {
  ScalarMeasure mu, nu;
  Mat f, g, cost;
};

struct ChainInput {
  ChainProblem problem;
  bool free_medium = false;
};

struct GameInput {
  Mat f;
  std::optional<ScalarMeasure> lambda;
};

struct MomentInput {
  Mat M;
  Vec m;
};

struct TrigInput {
  Cvec coeffs;
  Index grid = 256;
};

struct ConjugateInput {
  GridFunction f;
  std::vector<GridFunction> infconv;
  std::optional<Vec> dual;
};

ScalarOtInput read_scalar_ot(const Reader& r, const std::string& kind);
MultiInput read_multi(const Reader& r);
GlueInput read_glue(const Reader& r);
VectorOtProblem read_vector_ot(const Reader& r);
DominanceInput read_dominance(const Reader& r);
MartingaleInput read_martingale(const Reader& r);
ChainInput read_chain(const Reader& r);
GameInput read_game(const Reader& r);
MomentInput read_moment(const Reader& r);
TrigInput read_trig(const Reader& r);
GridFunction read_grid_function(const Reader& r);
ConjugateInput read_conjugate(const Reader& r);

// ---------------------------------------------------------------------------
// Writers. Matrices are arrays of rows.

Json to_json(const Vec& v);
Json to_json(const Mat& m);
Json to_json(const FiniteSpace& s);
Json to_json(const ScalarMeasure& m);
Json to_json(const VectorMeasure& m);
Json to_json(const Cvec& c);
Json to_json(const LpDiagnostics& d);

// ResultFile builders. Every optimal result carries value, dualValue and gap.
Json result_json(const OtResult& r);
Json result_json(const MultiOtResult& r);
Json result_json(const GlueResult& r);
Json result_json(const FeasibilityResult& r);
Json result_json(const VectorOtResult& r);
Json result_json(const DominanceResult& r);
Json result_json(const BlackwellReport& r);
Json result_json(const PartitionResult& r);
Json result_json(const StrongDominanceResult& r);
Json result_json(const MartingaleResult& r);
Json result_json(const ChainResult& r);
Json result_json(const GameResult& r);
Json result_json(const MomentResult& r);
Json result_json(const TrigResult& r);
Json result_json(const GridFunction& f);
Json result_json(const RefinementReport& r);

/// Recompute residuals of a serialized result from the serialized problem
/// and return the largest disagreement with the reported diagnostics and
/// value. Supports scalar_ot, vector_ot, chain and game.
double recheck_result(const ProblemFile& p, const Json& result);

// ---------------------------------------------------------------------------
// Seeded generation

/// Sizes by name: X, Y, d for transport kinds; X, n for chain; X, Y for
/// game; X, k for moment; n, grid for trig; X for conjugate.
using GenSize = std::map<std::string, Index>;

/// Reproducible instance. With `feasible`, transport and dominance
/// instances are built forward (kernel first, targets derived), moment and
/// trig targets are moments of a random measure.
ProblemFile gen(const std::string& kind, const GenSize& size, std::uint64_t seed, bool feasible = true);
GenSize parse_size(const std::string& text);  // "X=4,Y=3,d=2"

// ---------------------------------------------------------------------------
// Golden suite

struct GoldenItem {
  std::string group, name;
  double measured = 0, expected = 0, tolerance = 0;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  std::optional<double> tol;  // replaces every item tolerance
  std::vector<std::string> only;
  int jobs = 1;
};

struct VerifyReport {
  std::vector<GoldenItem> items;
  bool ok() const {
    for (const auto& i : items)
      if (!i.pass) return false;
    return !items.empty();
  }
};

const std::vector<std::string>& golden_groups();
VerifyReport verify(const VerifyOptions& opt = {});
std::string format_report(const VerifyReport& r);

// ---------------------------------------------------------------------------
// Expressions in one variable x, used by `refine`: numbers, x, + - * / ^,
// implicit products ("2x"), and abs, sqrt, exp, log, pos, min, max.

class Expr {
 public:
  explicit Expr(std::string text);
  double operator()(double x) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

/// Split at top-level commas: "1,2x" -> {"1", "2x"}; "max(x,0)" stays whole.
std::vector<Expr> parse_expr_list(const std::string& text);

}  // namespace vecot::io
