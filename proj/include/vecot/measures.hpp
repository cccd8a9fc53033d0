#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vecot/common.hpp"

namespace vecot {

/// Labeled finite point set, optionally embedded in R^k.
class FiniteSpace {
 public:
  FiniteSpace() = default;

  explicit FiniteSpace(std::vector<std::string> labels,
                       std::vector<std::vector<double>> coords = {})
      : labels_(std::move(labels)), coords_(std::move(coords)) {
    require(!labels_.empty(), "FiniteSpace: empty label list");
    std::set<std::string> seen(labels_.begin(), labels_.end());
    require(seen.size() == labels_.size(), "FiniteSpace: duplicate labels");
    require(coords_.empty() || coords_.size() == labels_.size(),
            "FiniteSpace: coords must have one vector per label");
  }

  /// Atoms labeled "0".."n-1".
  static FiniteSpace indexed(Index n) {
    std::vector<std::string> l;
    for (Index i = 0; i < n; ++i) l.push_back(std::to_string(i));
    return FiniteSpace(std::move(l));
  }

  /// Midpoint grid x_i = (i - 1/2)/N on [0,1].
  static FiniteSpace midpoint_grid(Index n) {
    std::vector<std::string> l;
    std::vector<std::vector<double>> c;
    for (Index i = 0; i < n; ++i) {
      l.push_back("x" + std::to_string(i));
      c.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(n)});
    }
    return FiniteSpace(std::move(l), std::move(c));
  }

  /// Uniform grid on [lo, hi] with n points.
  static FiniteSpace uniform_grid(double lo, double hi, Index n) {
    std::vector<std::string> l;
    std::vector<std::vector<double>> c;
    for (Index i = 0; i < n; ++i) {
      l.push_back("x" + std::to_string(i));
      double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      c.push_back({lo + (hi - lo) * t});
    }
    return FiniteSpace(std::move(l), std::move(c));
  }

  Index size() const { return static_cast<Index>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::vector<double>>& coords() const { return coords_; }
  bool has_coords() const { return !coords_.empty(); }
  double coord(Index i, std::size_t k = 0) const { return coords_.at(i).at(k); }

  Index index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    require(it != labels_.end(), "FiniteSpace: unknown label " + label);
    return static_cast<Index>(it - labels_.begin());
  }

  /// Subspace on the given atoms, in the given order.
  FiniteSpace subspace(const std::vector<Index>& atoms) const {
    std::vector<std::string> l;
    std::vector<std::vector<double>> c;
    for (Index a : atoms) {
      l.push_back(labels_.at(a));
      if (has_coords()) c.push_back(coords_.at(a));
    }
    return FiniteSpace(std::move(l), std::move(c));
  }

  bool operator==(const FiniteSpace& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> coords_;
};

namespace detail {

inline void clamp_nonnegative(Mat& m, double slack, const char* what) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      double& v = m(i, j);
      require(std::isfinite(v), std::string(what) + ": non-finite entry");
      require(v >= -slack, std::string(what) + ": negative entry");
      if (v < 0) v = 0;
    }
}

}  // namespace detail

/// Nonnegative measure on a finite space.
class ScalarMeasure {
 public:
  ScalarMeasure() = default;

  ScalarMeasure(FiniteSpace space, Vec weights)
      : space_(std::move(space)), weights_(std::move(weights)) {
    require_dims(weights_.size() == space_.size(), "ScalarMeasure: weight count != space size");
    Mat w = weights_;
    detail::clamp_nonnegative(w, tol::entry, "ScalarMeasure");
    weights_ = w.col(0);
  }

  explicit ScalarMeasure(const Vec& weights) : ScalarMeasure(FiniteSpace::indexed(weights.size()), weights) {}

  const FiniteSpace& space() const { return space_; }
  const Vec& weights() const { return weights_; }
  double operator()(Index i) const { return weights_(i); }
  Index size() const { return weights_.size(); }
  double mass() const { return weights_.sum(); }

 private:
  FiniteSpace space_;
  Vec weights_;
};

/// R^d-valued measure with nonnegative components, stored as values plus
/// the decomposition values(x) = density(x) * refWeights(x).
class VectorMeasure {
 public:
  VectorMeasure() = default;

  /// Reference weights default to the componentwise sum.
  VectorMeasure(FiniteSpace space, Mat values)
      : VectorMeasure(space, values, Vec(values.rowwise().sum())) {}

  /// User-supplied reference weights. Atoms with zero weight must carry zero
  /// values; elsewhere the density is values / refWeights.
  VectorMeasure(FiniteSpace space, Mat values, Vec ref)
      : space_(std::move(space)), values_(std::move(values)), ref_(std::move(ref)) {
    require_dims(values_.rows() == space_.size(), "VectorMeasure: value rows != space size");
    require_dims(values_.cols() >= 1, "VectorMeasure: dimension must be >= 1");
    require_dims(ref_.size() == space_.size(), "VectorMeasure: refWeights size != space size");
    detail::clamp_nonnegative(values_, tol::entry, "VectorMeasure values");
    Mat r = ref_;
    detail::clamp_nonnegative(r, tol::entry, "VectorMeasure refWeights");
    ref_ = r.col(0);
    density_ = Mat::Zero(values_.rows(), values_.cols());
    for (Index x = 0; x < values_.rows(); ++x) {
      if (ref_(x) > 0) {
        density_.row(x) = values_.row(x) / ref_(x);
      } else {
        require(values_.row(x).cwiseAbs().maxCoeff() <= tol::entry,
                "VectorMeasure: atom with zero reference weight carries mass");
        values_.row(x).setZero();
      }
    }
  }

  /// Build from a density and reference weights.
  static VectorMeasure from_density(FiniteSpace space, const Mat& density, const Vec& ref) {
    require_dims(density.rows() == ref.size(), "VectorMeasure: density rows != refWeights size");
    Mat values = density;
    for (Index x = 0; x < density.rows(); ++x) values.row(x) *= ref(x);
    VectorMeasure m(std::move(space), values, ref);
    for (Index x = 0; x < density.rows(); ++x)
      if (ref(x) > 0) m.density_.row(x) = density.row(x);
    return m;
  }

  /// Build from component vectors, one per coordinate of R^d:
  /// components[i](x) is the i-th component at atom x.
  static VectorMeasure from_components(FiniteSpace space, const std::vector<Vec>& components) {
    require(!components.empty(), "VectorMeasure: no components");
    Mat values(space.size(), static_cast<Index>(components.size()));
    for (std::size_t i = 0; i < components.size(); ++i) {
      require_dims(components[i].size() == space.size(), "VectorMeasure: component size mismatch");
      values.col(static_cast<Index>(i)) = components[i];
    }
    return VectorMeasure(std::move(space), values);
  }

  static VectorMeasure from_components(const std::vector<Vec>& components) {
    require(!components.empty(), "VectorMeasure: no components");
    return from_components(FiniteSpace::indexed(components.front().size()), components);
  }

  const FiniteSpace& space() const { return space_; }
  Index size() const { return values_.rows(); }
  Index dim() const { return values_.cols(); }
  const Mat& values() const { return values_; }
  const Vec& ref_weights() const { return ref_; }
  const Mat& density() const { return density_; }
  ScalarMeasure reference() const { return ScalarMeasure(space_, ref_); }

  /// Componentwise total mass.
  Vec total() const { return values_.colwise().sum().transpose(); }

  /// Restriction to a subset of atoms (a measure on the subspace).
  VectorMeasure restrict(const std::vector<Index>& atoms) const {
    Mat v(static_cast<Index>(atoms.size()), dim());
    Vec r(static_cast<Index>(atoms.size()));
    Mat d(static_cast<Index>(atoms.size()), dim());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      v.row(static_cast<Index>(k)) = values_.row(atoms[k]);
      r(static_cast<Index>(k)) = ref_(atoms[k]);
      d.row(static_cast<Index>(k)) = density_.row(atoms[k]);
    }
    VectorMeasure out(space_.subspace(atoms), v, r);
    out.density_ = d;
    return out;
  }

 private:
  FiniteSpace space_;
  Mat values_;
  Vec ref_;
  Mat density_;
};

/// Row-stochastic matrix from one finite space to another.
class Kernel {
 public:
  Kernel() = default;

  Kernel(FiniteSpace source, FiniteSpace target, Mat rows)
      : source_(std::move(source)), target_(std::move(target)), rows_(std::move(rows)) {
    require_dims(rows_.rows() == source_.size() && rows_.cols() == target_.size(),
                 "Kernel: matrix shape does not match spaces");
    detail::clamp_nonnegative(rows_, 1e-15, "Kernel");
    for (Index x = 0; x < rows_.rows(); ++x)
      require(std::abs(rows_.row(x).sum() - 1.0) <= tol::entry, "Kernel: row does not sum to 1");
  }

  /// Deterministic kernel P_x = delta_{T x}.
  static Kernel from_map(const FiniteSpace& source, const FiniteSpace& target,
                         const std::vector<Index>& map) {
    require_dims(static_cast<Index>(map.size()) == source.size(), "Kernel: map not total");
    Mat m = Mat::Zero(source.size(), target.size());
    for (Index x = 0; x < source.size(); ++x) {
      require_dims(map[x] >= 0 && map[x] < target.size(), "Kernel: map image out of range");
      m(x, map[x]) = 1.0;
    }
    return Kernel(source, target, m);
  }

  static Kernel identity(const FiniteSpace& s) {
    return Kernel(s, s, Mat::Identity(s.size(), s.size()));
  }

  const FiniteSpace& source() const { return source_; }
  const FiniteSpace& target() const { return target_; }
  const Mat& rows() const { return rows_; }
  double operator()(Index x, Index y) const { return rows_(x, y); }

 private:
  FiniteSpace source_, target_;
  Mat rows_;
};

/// Nonnegative matrix on X x Y.
struct TransportPlan {
  Mat matrix;
  std::optional<Mat> density_tag;

  TransportPlan() = default;
  explicit TransportPlan(Mat m, std::optional<Mat> tag = std::nullopt)
      : matrix(std::move(m)), density_tag(std::move(tag)) {
    detail::clamp_nonnegative(matrix, tol::reader, "TransportPlan");
  }

  double mass() const { return matrix.sum(); }
  Vec x_marginal() const { return matrix.rowwise().sum(); }
  Vec y_marginal() const { return matrix.colwise().sum().transpose(); }
};

// ---------------------------------------------------------------------------
// Operations

/// Push mu forward along map: atom x goes to map[x] in target.
inline VectorMeasure pushforward(const VectorMeasure& mu, const std::vector<Index>& map,
                                 const FiniteSpace& target) {
  require_dims(static_cast<Index>(map.size()) == mu.size(), "pushforward: map not total");
  Mat v = Mat::Zero(target.size(), mu.dim());
  Vec r = Vec::Zero(target.size());
  for (Index x = 0; x < mu.size(); ++x) {
    require_dims(map[x] >= 0 && map[x] < target.size(), "pushforward: image out of range");
    v.row(map[x]) += mu.values().row(x);
    r(map[x]) += mu.ref_weights()(x);
  }
  return VectorMeasure(target, v, r);
}

/// (P mu)(y) = sum_x P(x,y) mu(x), componentwise. Reference weights are
/// transported the same way.
inline VectorMeasure kernel_apply(const Kernel& p, const VectorMeasure& mu) {
  require_dims(p.source() == mu.space(), "kernel_apply: kernel source != measure space");
  Mat v = p.rows().transpose() * mu.values();
  Vec r = p.rows().transpose() * mu.ref_weights();
  v = v.cwiseMax(0.0);
  r = r.cwiseMax(0.0);
  for (Index y = 0; y < r.size(); ++y)
    if (r(y) == 0) v.row(y).setZero();
  return VectorMeasure(p.target(), v, r);
}

inline Kernel kernel_compose(const Kernel& p, const Kernel& q) {
  require_dims(p.target() == q.source(), "kernel_compose: P target != Q source");
  Mat k = p.rows() * q.rows();
  for (Index x = 0; x < k.rows(); ++x) k.row(x) /= k.row(x).sum();
  return Kernel(p.source(), q.target(), k);
}

/// The plan P (x) |mu|: matrix(x,y) = P(x,y) |mu|(x).
inline TransportPlan product(const Kernel& p, const VectorMeasure& mu) {
  require_dims(p.source() == mu.space(), "product: kernel source != measure space");
  return TransportPlan(mu.ref_weights().asDiagonal() * p.rows());
}

inline TransportPlan product(const Kernel& p, const ScalarMeasure& m) {
  require_dims(p.source() == m.space(), "product: kernel source != measure space");
  return TransportPlan(m.weights().asDiagonal() * p.rows());
}

enum class Axis { X, Y };

/// Split a plan into its marginal on `axis` and the conditional kernel.
/// Atoms with zero marginal get the uniform row.
inline std::pair<Kernel, ScalarMeasure> disintegrate(const TransportPlan& pi, Axis axis,
                                                     const FiniteSpace& xs,
                                                     const FiniteSpace& ys) {
  require_dims(pi.matrix.rows() == xs.size() && pi.matrix.cols() == ys.size(),
               "disintegrate: plan shape does not match spaces");
  Mat m = axis == Axis::X ? Mat(pi.matrix) : Mat(pi.matrix.transpose());
  m = m.cwiseMax(0.0);
  Vec marg = m.rowwise().sum();
  Mat k(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    if (marg(i) > 0) {
      k.row(i) = m.row(i) / marg(i);
      k.row(i) /= k.row(i).sum();
    } else {
      k.row(i).setConstant(1.0 / static_cast<double>(m.cols()));
    }
  }
  const FiniteSpace& src = axis == Axis::X ? xs : ys;
  const FiniteSpace& dst = axis == Axis::X ? ys : xs;
  return {Kernel(src, dst, k), ScalarMeasure(src, marg)};
}

enum class Norm { L1, L2, Linf };

inline double norm_of(const Eigen::Ref<const Eigen::RowVectorXd>& v, Norm n) {
  switch (n) {
    case Norm::L1: return v.cwiseAbs().sum();
    case Norm::L2: return v.norm();
    case Norm::Linf: return v.cwiseAbs().maxCoeff();
  }
  return 0;
}

/// V(mu)(x) = ||density(x)|| |mu|(x).
inline ScalarMeasure variation(const VectorMeasure& mu, Norm n = Norm::L1) {
  Vec w(mu.size());
  for (Index x = 0; x < mu.size(); ++x) w(x) = norm_of(mu.density().row(x), n) * mu.ref_weights()(x);
  return ScalarMeasure(mu.space(), w);
}

/// The same measure expressed with reference V(mu) and density eta/||eta||.
inline VectorMeasure renormalize(const VectorMeasure& mu, Norm n = Norm::L1) {
  ScalarMeasure v = variation(mu, n);
  Mat d = Mat::Zero(mu.size(), mu.dim());
  for (Index x = 0; x < mu.size(); ++x) {
    double s = norm_of(mu.density().row(x), n);
    if (s > 0) d.row(x) = mu.density().row(x) / s;
  }
  return VectorMeasure::from_density(mu.space(), d, v.weights());
}

}  // namespace vecot
