#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlab/corpus.hpp"
#include "dlab/error.hpp"
#include "dlab/scheme.hpp"
#include "dlab/stats.hpp"

namespace dlab::ena {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Accumulation { binary, weighted };

/// Moving stanza window over the coded utterances of one dialogue. Every run of `window`
/// consecutive coded utterances is one window; a dialogue shorter than the window is one window.
struct StanzaConfig {
  std::size_t window = 4;
  bool whole_conversation = false;
  Accumulation accumulation = Accumulation::binary;

  static StanzaConfig whole(Accumulation accumulation = Accumulation::binary) {
    return {0, true, accumulation};
  }
};

inline std::string window_label(const StanzaConfig& cfg) {
  return cfg.whole_conversation ? "whole_conversation" : std::to_string(cfg.window);
}

inline std::string accumulation_label(Accumulation a) { return a == Accumulation::binary ? "binary" : "weighted"; }

/// One co-occurrence weight per unordered code pair, in edge_index order.
template <typename Scalar = double>
struct AdjacencyVector {
  std::string dialogue_id;
  Group group = Group::human;
  Vector<Scalar> weights;
};

struct Exclusion {
  std::string dialogue_id;
  std::string reason;
};

template <typename Scalar = double>
struct AccumulationResult {
  std::vector<AdjacencyVector<Scalar>> vectors;  // sorted by dialogue id
  std::vector<Exclusion> exclusions;
};

/// Co-occurrence accumulation over a sequence of code indices (each < k).
/// Binary: each window adds 1 to every pair of distinct codes present in it.
/// Weighted: each window adds count_i * count_j.
template <typename Scalar = double>
Vector<Scalar> accumulate_codes(std::span<const std::size_t> codes, std::size_t k, const StanzaConfig& cfg) {
  if (!cfg.whole_conversation && cfg.window < 2) throw DomainError("stanza window must be at least 2");
  Vector<Scalar> weights = Vector<Scalar>::Zero(static_cast<Eigen::Index>(edge_count(k)));
  const std::size_t length = codes.size();
  if (length < 2) return weights;
  const std::size_t width = cfg.whole_conversation ? length : std::min(cfg.window, length);

  std::vector<std::size_t> counts(k);
  for (std::size_t start = 0; start + width <= length; ++start) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = start; i < start + width; ++i) {
      if (codes[i] >= k) throw DomainError("code index out of range");
      ++counts[codes[i]];
    }
    for (std::size_t a = 0; a < k; ++a) {
      if (!counts[a]) continue;
      for (std::size_t b = a + 1; b < k; ++b) {
        if (!counts[b]) continue;
        const auto e = static_cast<Eigen::Index>(edge_index(a, b, k));
        weights(e) += cfg.accumulation == Accumulation::binary
                          ? Scalar(1)
                          : static_cast<Scalar>(counts[a]) * static_cast<Scalar>(counts[b]);
      }
    }
  }
  return weights;
}

/// Indices (into the scheme) of the coded utterances of a dialogue, in order.
inline std::vector<std::size_t> coded_sequence(const Dialogue& dialogue, const CodeScheme& scheme) {
  std::vector<std::size_t> out;
  for (const Utterance& u : dialogue.utterances) {
    if (!u.code) continue;
    auto index = scheme.index_of(*u.code);
    if (!index) throw SchemaError(dialogue.id, "unknown code '" + *u.code + "'");
    out.push_back(*index);
  }
  return out;
}

/// One adjacency vector per dialogue with at least 2 coded utterances; the rest are
/// listed as exclusions.
template <typename Scalar = double>
AccumulationResult<Scalar> accumulate(const Corpus& corpus, const CodeScheme& scheme, const StanzaConfig& cfg) {
  AccumulationResult<Scalar> out;
  for (const Dialogue& d : corpus.dialogues) {
    const auto codes = coded_sequence(d, scheme);
    if (codes.size() < 2) {
      out.exclusions.push_back({d.id, "fewer than 2 coded utterances"});
      continue;
    }
    out.vectors.push_back({d.id, d.group, accumulate_codes<Scalar>(codes, scheme.size(), cfg)});
  }
  std::sort(out.vectors.begin(), out.vectors.end(),
            [](const auto& a, const auto& b) { return a.dialogue_id < b.dialogue_id; });
  return out;
}

/// v / ||v||. The zero vector is returned unchanged. Dividing by the largest magnitude first
/// makes the result independent of any exact rescaling of v.
template <typename Derived>
Vector<typename Derived::Scalar> spherical_normalize(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> out = v;
  if (out.size() == 0) return out;
  const Scalar largest = out.cwiseAbs().maxCoeff();
  if (!(largest > 0)) return out;
  out /= largest;
  out /= out.norm();
  return out;
}

template <typename Scalar>
struct NormalizedVector {
  AdjacencyVector<Scalar> vector;
  bool zero_norm = false;
};

template <typename Scalar>
NormalizedVector<Scalar> spherical_normalize(const AdjacencyVector<Scalar>& v) {
  const bool zero = v.weights.size() == 0 || !(v.weights.cwiseAbs().maxCoeff() > 0);
  return {{v.dialogue_id, v.group, spherical_normalize(v.weights)}, zero};
}

template <typename Scalar>
Matrix<Scalar> stack(std::span<const AdjacencyVector<Scalar>> vectors) {
  if (vectors.empty()) return {};
  const Eigen::Index edges = vectors.front().weights.size();
  Matrix<Scalar> out(static_cast<Eigen::Index>(vectors.size()), edges);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].weights.size() != edges) throw DomainError("adjacency vectors differ in dimension");
    out.row(static_cast<Eigen::Index>(i)) = vectors[i].weights.transpose();
  }
  return out;
}

/// Element-wise mean of the vectors belonging to `group`.
template <typename Scalar>
Vector<Scalar> group_mean_network(std::span<const AdjacencyVector<Scalar>> vectors, Group group) {
  Vector<Scalar> sum;
  std::size_t n = 0;
  for (const auto& v : vectors) {
    if (v.group != group) continue;
    if (n == 0) sum = Vector<Scalar>::Zero(v.weights.size());
    if (v.weights.size() != sum.size()) throw DomainError("adjacency vectors differ in dimension");
    sum += v.weights;
    ++n;
  }
  if (n == 0) throw DomainError("group '" + std::string(to_string(group)) + "' is empty");
  return sum / static_cast<Scalar>(n);
}

/// Signed edge weights: positive where `a` dominates.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> difference_network(const Eigen::MatrixBase<DerivedA>& a,
                                                     const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw DomainError("networks differ in dimension");
  return a - b;
}

/// Grand-mean centroid plus two orthonormal axes (columns) in edge space.
template <typename Scalar = double>
struct Rotation {
  Vector<Scalar> centroid;
  Matrix<Scalar> axes;
};

namespace detail {

// Largest-magnitude component positive; ties resolved toward the lower index.
template <typename Scalar>
void fix_sign(Eigen::Ref<Vector<Scalar>> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  if (v(best) < 0) v = -v;
}

}  // namespace detail

/// Means rotation over spherically normalized vectors of two groups. Axis 1 runs along
/// mean(human) - mean(ai), so the human centroid lands at x >= 0. Axis 2 is the leading right
/// singular vector of the centered data with the axis-1 component removed.
template <typename Scalar>
Rotation<Scalar> means_rotation(std::span<const AdjacencyVector<Scalar>> vectors) {
  const Matrix<Scalar> data = stack(vectors);
  if (data.cols() < 2) throw DomainError("means rotation needs at least 2 edges");
  const Vector<Scalar> human = group_mean_network(vectors, Group::human);
  const Vector<Scalar> ai = group_mean_network(vectors, Group::ai);

  Rotation<Scalar> out;
  out.centroid = data.colwise().mean().transpose();
  Vector<Scalar> axis1 = human - ai;
  const Scalar separation = axis1.norm();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  if (!(separation > 64 * eps * std::max(Scalar(1), human.norm())))
    throw DomainError("degenerate axis 1: group means are identical");
  axis1 /= separation;

  Matrix<Scalar> centered = data.rowwise() - out.centroid.transpose();
  centered -= (centered * axis1) * axis1.transpose();

  Vector<Scalar> axis2;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(centered, Eigen::ComputeThinV);
  const auto& singular = svd.singularValues();
  if (singular.size() > 0 && singular(0) > 1e3 * eps * std::max(Scalar(1), centered.cwiseAbs().maxCoeff())) {
    axis2 = svd.matrixV().col(0);
  } else {
    // No residual variance: any unit direction orthogonal to axis 1.
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < axis1.size(); ++i)
      if (std::abs(axis1(i)) < std::abs(axis1(best))) best = i;
    axis2 = Vector<Scalar>::Unit(axis1.size(), best);
  }
  axis2 -= axis2.dot(axis1) * axis1;
  axis2.normalize();
  detail::fix_sign<Scalar>(axis2);

  out.axes.resize(axis1.size(), 2);
  out.axes.col(0) = axis1;
  out.axes.col(1) = axis2;
  return out;
}

/// Centered vectors dotted with each axis: one row of coordinates per vector.
template <typename Scalar>
Matrix<Scalar> project(const Rotation<Scalar>& rotation, std::span<const AdjacencyVector<Scalar>> vectors) {
  Matrix<Scalar> out(static_cast<Eigen::Index>(vectors.size()), rotation.axes.cols());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].weights.size() != rotation.centroid.size())
      throw DomainError("vector '" + vectors[i].dialogue_id + "' does not match the model dimension");
    out.row(static_cast<Eigen::Index>(i)) = ((vectors[i].weights - rotation.centroid).transpose() * rotation.axes);
  }
  return out;
}

/// Maps node positions (k x 2) to per-unit network centroids: row u holds, for each code i,
/// the share of unit u's edge weight touching i, halved (edge midpoint weighting).
template <typename Scalar>
Matrix<Scalar> centroid_operator(std::span<const AdjacencyVector<Scalar>> vectors, std::size_t k) {
  const auto edges = static_cast<Eigen::Index>(edge_count(k));
  Matrix<Scalar> op = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(k));
  for (std::size_t u = 0; u < vectors.size(); ++u) {
    const auto& w = vectors[u].weights;
    if (w.size() != edges) throw DomainError("vector '" + vectors[u].dialogue_id + "' does not match k");
    const Scalar total = w.sum();
    if (!(total > 0)) throw DomainError("unit '" + vectors[u].dialogue_id + "' has no edge weight");
    for (Eigen::Index e = 0; e < edges; ++e) {
      if (w(e) == 0) continue;
      const auto [i, j] = edge_pair(static_cast<std::size_t>(e), k);
      const Scalar share = w(e) / (2 * total);
      op(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) += share;
      op(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)) += share;
    }
  }
  return op;
}

/// Sum over units of the squared distance between projected point and network centroid.
template <typename Scalar>
Scalar co_registration_residual(const Matrix<Scalar>& op, const Matrix<Scalar>& nodes, const Matrix<Scalar>& points) {
  return (op * nodes - points).squaredNorm();
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar pearson(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Vector<Scalar> da = a.array() - a.mean();
  const Vector<Scalar> db = b.array() - b.mean();
  const Scalar denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (!(denom > 0)) return 0;
  return std::clamp(da.dot(db) / denom, Scalar(-1), Scalar(1));
}

template <typename Scalar = double>
struct NodeFit {
  Matrix<Scalar> positions;   // k x 2
  Matrix<Scalar> centroids;   // units x 2
  Eigen::Matrix<Scalar, 2, 1> fit = Eigen::Matrix<Scalar, 2, 1>::Zero();  // Pearson r per dimension
  Scalar residual = 0;
  bool rank_deficient = false;  // minimum-norm solution returned
};

/// Least-squares node placement: positions N minimizing sum_u ||P_u - C_u(N)||^2.
/// Pearson r per dimension is 0 when either side has no variance.
template <typename Scalar>
NodeFit<Scalar> fit_nodes(const Matrix<Scalar>& points, std::span<const AdjacencyVector<Scalar>> vectors,
                          std::size_t k) {
  if (points.rows() != static_cast<Eigen::Index>(vectors.size()))
    throw DomainError("point count does not match vector count");
  const Matrix<Scalar> op = centroid_operator(vectors, k);
  Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod(op);
  NodeFit<Scalar> out;
  out.positions = cod.solve(points);
  out.rank_deficient = cod.rank() < static_cast<Eigen::Index>(k);
  out.centroids = op * out.positions;
  out.residual = (out.centroids - points).squaredNorm();
  for (Eigen::Index d = 0; d < std::min<Eigen::Index>(2, points.cols()); ++d)
    out.fit(d) = pearson(points.col(d), out.centroids.col(d));
  return out;
}

/// Welch t and Cohen's d per dimension, human minus ai. A dimension on which neither group
/// varies yields no test.
template <typename Scalar>
std::array<std::optional<stats::TestResult<Scalar>>, 2> centroid_comparison(const Matrix<Scalar>& points,
                                                                           std::span<const Group> groups) {
  if (points.rows() != static_cast<Eigen::Index>(groups.size())) throw DomainError("group labels do not match points");
  std::vector<Eigen::Index> human, ai;
  for (std::size_t i = 0; i < groups.size(); ++i)
    (groups[i] == Group::human ? human : ai).push_back(static_cast<Eigen::Index>(i));
  std::array<std::optional<stats::TestResult<Scalar>>, 2> out;
  for (Eigen::Index d = 0; d < 2; ++d) {
    const Vector<Scalar> h = points(human, d);
    const Vector<Scalar> a = points(ai, d);
    const bool flat = h.size() > 1 && a.size() > 1 && (h.array() == h(0)).all() && (a.array() == a(0)).all();
    if (!flat) out[static_cast<std::size_t>(d)] = stats::welch_t(h, a);
  }
  return out;
}

template <typename Scalar = double>
struct Model {
  StanzaConfig config;
  std::vector<AdjacencyVector<Scalar>> units;  // normalized, sorted by dialogue id
  Rotation<Scalar> rotation;
  Matrix<Scalar> points;  // units x 2
  NodeFit<Scalar> nodes;
  Vector<Scalar> human_mean;
  Vector<Scalar> ai_mean;
  std::array<std::optional<stats::TestResult<Scalar>>, 2> centroid_tests;
  Eigen::Matrix<Scalar, 2, 1> variance_explained = Eigen::Matrix<Scalar, 2, 1>::Zero();
  std::vector<Exclusion> exclusions;

  std::vector<Group> groups() const {
    std::vector<Group> out;
    for (const auto& u : units) out.push_back(u.group);
    return out;
  }
};

/// Accumulate, normalize, rotate, project, co-register, and compare centroids.
template <typename Scalar = double>
Model<Scalar> fit_model(const Corpus& corpus, const CodeScheme& scheme, const StanzaConfig& cfg) {
  auto accumulated = accumulate<Scalar>(corpus, scheme, cfg);
  Model<Scalar> model;
  model.config = cfg;
  model.exclusions = std::move(accumulated.exclusions);
  for (const auto& raw : accumulated.vectors) {
    auto normalized = spherical_normalize(raw);
    if (normalized.zero_norm) {
      model.exclusions.push_back({raw.dialogue_id, "no co-occurrences (zero-norm adjacency vector)"});
      continue;
    }
    model.units.push_back(std::move(normalized.vector));
  }
  std::sort(model.exclusions.begin(), model.exclusions.end(),
            [](const Exclusion& a, const Exclusion& b) { return a.dialogue_id < b.dialogue_id; });

  const std::span<const AdjacencyVector<Scalar>> units(model.units);
  model.rotation = means_rotation(units);
  model.points = project(model.rotation, units);
  model.nodes = fit_nodes(model.points, units, scheme.size());
  model.human_mean = group_mean_network(units, Group::human);
  model.ai_mean = group_mean_network(units, Group::ai);
  const auto groups = model.groups();
  model.centroid_tests = centroid_comparison(model.points, std::span<const Group>(groups));

  const Matrix<Scalar> centered = stack(units).rowwise() - model.rotation.centroid.transpose();
  const Scalar total = centered.squaredNorm();
  if (total > 0)
    for (Eigen::Index d = 0; d < 2; ++d) model.variance_explained(d) = model.points.col(d).squaredNorm() / total;
  return model;
}

}  // namespace dlab::ena
