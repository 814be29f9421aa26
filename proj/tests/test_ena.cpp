#include "doctest.h"

#include <random>

#include "dlab/ena.hpp"
#include "dlab/synth.hpp"
#include "oracles.hpp"

using namespace dlab;
using ena::AdjacencyVector;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const CodeScheme& S = scheme_default();

std::size_t idx(const char* code) { return *S.index_of(code); }

double edge(const VectorXd& w, const char* a, const char* b) {
  auto i = idx(a), j = idx(b);
  if (i > j) std::swap(i, j);
  return w(static_cast<Eigen::Index>(edge_index(i, j, S.size())));
}

VectorXd acc(std::initializer_list<const char*> codes, std::size_t window, bool whole = false,
             ena::Accumulation mode = ena::Accumulation::binary) {
  std::vector<std::size_t> seq;
  for (const char* c : codes) seq.push_back(idx(c));
  ena::StanzaConfig cfg{window, whole, mode};
  return ena::accumulate_codes<double>(seq, S.size(), cfg);
}

Corpus two_groups(std::uint64_t seed, double noise = 0.2, std::size_t per_group = 49) {
  synth::TwoGroupSpec spec;
  spec.seed = seed;
  spec.noise = noise;
  spec.per_group = per_group;
  return synth::two_group_corpus(spec, S);
}

AdjacencyVector<double> unit(std::string id, Group g, std::initializer_list<double> w) {
  VectorXd v(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double x : w) v(i++) = x;
  return {std::move(id), g, v};
}

void check_geometry(const ena::Model<double>& m) {
  const MatrixXd gram = m.rotation.axes.transpose() * m.rotation.axes;
  CHECK((gram - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(m.points.col(0).sum()) < 1e-9);
  CHECK(std::abs(m.points.col(1).sum()) < 1e-9);
  for (const auto& u : m.units) CHECK(std::abs(u.weights.norm() - 1) < 1e-9);
  double human_x = 0;
  int n = 0;
  for (std::size_t i = 0; i < m.units.size(); ++i)
    if (m.units[i].group == Group::human) human_x += m.points(static_cast<Eigen::Index>(i), 0), ++n;
  CHECK(human_x / n >= 0);
}

}  // namespace

TEST_CASE("accumulation examples") {
  SUBCASE("two codes, window 2") {
    const VectorXd w = acc({"I-Q", "R-FR"}, 2);
    CHECK(edge(w, "I-Q", "R-FR") == 1);
    CHECK(w.sum() == 1);
  }
  SUBCASE("three codes, window 2") {
    const VectorXd w = acc({"I-Q", "R-FR", "F-F"}, 2);
    CHECK(edge(w, "I-Q", "R-FR") == 1);
    CHECK(edge(w, "R-FR", "F-F") == 1);
    CHECK(edge(w, "I-Q", "F-F") == 0);
  }
  SUBCASE("four codes, window 3") {
    // Windows [I-Q R-FR F-F] and [R-FR F-F I-Q] each hold all three pairs.
    const VectorXd w = acc({"I-Q", "R-FR", "F-F", "I-Q"}, 3);
    CHECK(edge(w, "I-Q", "R-FR") == 2);
    CHECK(edge(w, "I-Q", "F-F") == 2);
    CHECK(edge(w, "R-FR", "F-F") == 2);
    CHECK(w.sum() == 6);
  }
  SUBCASE("weighted counts repeated codes") {
    const VectorXd w = acc({"I-Q", "R-FR", "I-Q"}, 3, false, ena::Accumulation::weighted);
    CHECK(edge(w, "I-Q", "R-FR") == 2);
  }
  SUBCASE("repeated single code has no edges") { CHECK(acc({"I-Q", "I-Q", "I-Q"}, 2).sum() == 0); }
  CHECK_THROWS_AS(acc({"I-Q", "R-FR"}, 1), DomainError);
}

TEST_CASE("accumulation matches the window enumerator") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t len = rng() % 16;
    std::vector<std::size_t> seq;
    std::vector<int> ints;
    const std::size_t alphabet = 1 + rng() % 10;
    for (std::size_t i = 0; i < len; ++i) {
      seq.push_back(rng() % alphabet);
      ints.push_back(static_cast<int>(seq.back()));
    }
    for (int window : {2, 3, 4, 5, 0})
      for (auto mode : {ena::Accumulation::binary, ena::Accumulation::weighted}) {
        ena::StanzaConfig cfg{static_cast<std::size_t>(std::max(window, 2)), window == 0, mode};
        const VectorXd w = ena::accumulate_codes<double>(seq, 10, cfg);
        const auto expected = oracle::windows(ints, window, mode == ena::Accumulation::weighted);
        VectorXd want = VectorXd::Zero(45);
        for (const auto& [pair, count] : expected)
          want(static_cast<Eigen::Index>(edge_index(pair.first, pair.second, 10))) = static_cast<double>(count);
        CHECK(w == want);
      }
  }
}

TEST_CASE("whole conversation equals a window as long as the dialogue") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> seq(2 + rng() % 20);
    for (auto& c : seq) c = rng() % 10;
    const VectorXd whole = ena::accumulate_codes<double>(seq, 10, ena::StanzaConfig::whole());
    const VectorXd full = ena::accumulate_codes<double>(seq, 10, ena::StanzaConfig{seq.size(), false, {}});
    CHECK(whole == full);
  }
}

TEST_CASE("accumulate excludes dialogues with fewer than two coded utterances") {
  Corpus c = two_groups(1, 0.2, 3);
  for (auto& u : c.dialogues[0].utterances) u.code.reset();
  c.dialogues[1].utterances[0].code.reset();
  for (std::size_t i = 1; i < c.dialogues[1].utterances.size(); ++i) c.dialogues[1].utterances[i].code.reset();
  const auto r = ena::accumulate<double>(c, S, {});
  CHECK(r.vectors.size() == 4);
  REQUIRE(r.exclusions.size() == 2);
  CHECK(std::is_sorted(r.vectors.begin(), r.vectors.end(),
                       [](const auto& a, const auto& b) { return a.dialogue_id < b.dialogue_id; }));
}

TEST_CASE("spherical normalization") {
  VectorXd v = VectorXd::Zero(45);
  v(3) = 7;
  CHECK(ena::spherical_normalize(v)(3) == 1.0);
  v(10) = 7;
  CHECK(ena::spherical_normalize(v)(3) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-15));

  const auto zero = ena::spherical_normalize(AdjacencyVector<double>{"z", Group::ai, VectorXd::Zero(45)});
  CHECK(zero.zero_norm);
  CHECK(zero.vector.weights.isZero());

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    VectorXd r(45);
    for (auto& x : r) x = static_cast<double>(rng() % 12);
    if (r.isZero()) continue;
    const VectorXd n = ena::spherical_normalize(r);
    CHECK(std::abs(n.norm() - 1) < 1e-9);
    for (double c : {2.0, 3.0, 7.0, 1000.0, 0.5, 0.0625}) CHECK(ena::spherical_normalize((r * c).eval()) == n);
    for (double c : {0.1, 1.7, 3.3e-4})
      CHECK((ena::spherical_normalize((r * c).eval()) - n).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("means rotation") {
  SUBCASE("two groups on disjoint single edges") {
    std::vector<AdjacencyVector<double>> units{unit("a", Group::human, {1, 0, 0}), unit("b", Group::human, {1, 0, 0}),
                                               unit("c", Group::ai, {0, 0, 1}), unit("d", Group::ai, {0, 0, 1})};
    const auto rot = ena::means_rotation<double>(units);
    CHECK(rot.axes(0, 0) > 0);
    CHECK(rot.axes(2, 0) < 0);
    CHECK(rot.axes(1, 0) == 0);
    CHECK(rot.axes(0, 0) == doctest::Approx(-rot.axes(2, 0)));
  }
  SUBCASE("identical group means") {
    std::vector<AdjacencyVector<double>> units{unit("a", Group::human, {1, 0, 0}), unit("b", Group::ai, {1, 0, 0})};
    CHECK_THROWS_AS(ena::means_rotation<double>(units), DomainError);
  }
  SUBCASE("six-unit dataset") {
    std::vector<AdjacencyVector<double>> units{
        unit("h1", Group::human, {1, 0, 0}),   unit("h2", Group::human, {0.6, 0.8, 0}),
        unit("h3", Group::human, {0.8, 0.6, 0}), unit("a1", Group::ai, {0, 0, 1}),
        unit("a2", Group::ai, {0, 0.6, 0.8}),  unit("a3", Group::ai, {0.6, 0, 0.8})};
    // Group means (0.8, 7/15, 0) and (0.2, 0.2, 13/15); difference (0.6, 4/15, -13/15).
    const double norm = std::sqrt(0.36 + 16.0 / 225 + 169.0 / 225);
    const auto rot = ena::means_rotation<double>(units);
    CHECK(std::abs(rot.axes(0, 0) - 0.6 / norm) < 1e-9);
    CHECK(std::abs(rot.axes(1, 0) - (4.0 / 15) / norm) < 1e-9);
    CHECK(std::abs(rot.axes(2, 0) + (13.0 / 15) / norm) < 1e-9);
    CHECK(std::abs(rot.axes.col(0).dot(rot.axes.col(1))) < 1e-12);

    const MatrixXd pts = ena::project<double>(rot, units);
    // Centroid (0.5, 1/3, 13/30); h1 - centroid = (0.5, -1/3, -13/30).
    const double x_h1 = (0.5 * 0.6 - (1.0 / 3) * (4.0 / 15) + (13.0 / 30) * (13.0 / 15)) / norm;
    CHECK(std::abs(pts(0, 0) - x_h1) < 1e-9);
    CHECK(std::abs(pts.col(0).sum()) < 1e-12);

    std::vector<AdjacencyVector<double>> probes{{"mean", Group::human, rot.centroid},
                                                {"h", Group::human, ena::group_mean_network<double>(units, Group::human)}};
    const MatrixXd p = ena::project<double>(rot, probes);
    CHECK(p.row(0).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(p(1, 0) > 0);
    std::vector<AdjacencyVector<double>> wrong{unit("w", Group::ai, {1, 0})};
    CHECK_THROWS_AS(ena::project<double>(rot, wrong), DomainError);
  }
}

TEST_CASE("node co-registration") {
  SUBCASE("single unit, single edge") {
    std::vector<AdjacencyVector<double>> units{unit("u", Group::human, {1})};
    MatrixXd p(1, 2);
    p << 1, 0;
    const auto fit = ena::fit_nodes<double>(p, units, 2);
    CHECK(fit.rank_deficient);
    CHECK((fit.positions - (MatrixXd(2, 2) << 1, 0, 1, 0).finished()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(fit.residual < 1e-24);
  }
  SUBCASE("two disjoint cliques land on opposite sides") {
    const auto m = ena::fit_model<double>(two_groups(2, 0.0), S, {});
    for (const char* c : {"I-Q", "R-FR", "F-F"}) CHECK(m.nodes.positions(static_cast<Eigen::Index>(idx(c)), 0) > 0);
    for (const char* c : {"F-E", "R-SR"}) CHECK(m.nodes.positions(static_cast<Eigen::Index>(idx(c)), 0) < 0);
  }
  SUBCASE("least-squares residual beats perturbations") {
    const auto m = ena::fit_model<double>(two_groups(3), S, {});
    const MatrixXd op = ena::centroid_operator<double>(m.units, S.size());
    const double best = ena::co_registration_residual<double>(op, m.nodes.positions, m.points);
    CHECK(best == doctest::Approx(m.nodes.residual).epsilon(1e-12));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1e-2);
    for (int i = 0; i < 200; ++i) {
      MatrixXd moved = m.nodes.positions;
      for (auto& x : moved.reshaped()) x += n(rng);
      CHECK(best <= ena::co_registration_residual<double>(op, moved, m.points) + 1e-12);
    }
    CHECK(m.nodes.fit(0) > 0.9);
  }
}

TEST_CASE("group and difference networks") {
  std::vector<AdjacencyVector<double>> one{unit("a", Group::human, {0.6, 0.8, 0})};
  CHECK(ena::group_mean_network<double>(one, Group::human) == one[0].weights);
  CHECK_THROWS_AS(ena::group_mean_network<double>(one, Group::ai), DomainError);

  std::vector<AdjacencyVector<double>> two{unit("a", Group::ai, {1, 0, 0}), unit("b", Group::ai, {0, 0, 1})};
  const VectorXd mean = ena::group_mean_network<double>(two, Group::ai);
  CHECK(mean == (VectorXd(3) << 0.5, 0, 0.5).finished());
  const VectorXd diff = ena::difference_network(one[0].weights, mean);
  CHECK(diff.isApprox((VectorXd(3) << 0.1, 0.8, -0.5).finished()));

  const auto m = ena::fit_model<double>(two_groups(4), S, {});
  Eigen::Index h = 0, a = 0;
  m.human_mean.maxCoeff(&h);
  m.ai_mean.maxCoeff(&a);
  CHECK(edge_pair(static_cast<std::size_t>(h), 10) == std::pair{idx("I-Q"), idx("R-FR")});
  CHECK(edge_pair(static_cast<std::size_t>(a), 10) == std::pair{idx("R-SR"), idx("F-E")});
}

TEST_CASE("centroid comparison") {
  MatrixXd pts(6, 2);
  pts << 1, 2, 3, 1, 2, 5, 1, 2, 3, 1, 2, 5;
  const std::vector<Group> g{Group::human, Group::human, Group::human, Group::ai, Group::ai, Group::ai};
  const auto r = ena::centroid_comparison<double>(pts, g);
  CHECK(r[0]->t == 0);
  CHECK(r[1]->t == 0);
  MatrixXd flat = MatrixXd::Zero(6, 2);
  flat.col(0) << 1, 1, 1, -1, -1, -1;
  const auto f = ena::centroid_comparison<double>(flat, g);
  CHECK_FALSE(f[0].has_value());
  CHECK_FALSE(f[1].has_value());

  const auto m = ena::fit_model<double>(two_groups(5), S, {});
  CHECK(m.centroid_tests[0]->t > 0);
  CHECK(std::abs(*m.centroid_tests[0]->d) > 1);
  CHECK(std::abs(*m.centroid_tests[1]->d) < 0.3);
  CHECK(m.centroid_tests[0]->df > 48);
  CHECK(m.centroid_tests[0]->df < 96);
}

TEST_CASE("fitted models satisfy the geometric invariants") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    for (ena::StanzaConfig cfg : {ena::StanzaConfig{}, ena::StanzaConfig{2, false, {}},
                                  ena::StanzaConfig{3, false, ena::Accumulation::weighted}, ena::StanzaConfig::whole()}) {
      check_geometry(ena::fit_model<double>(two_groups(seed, 0.4, 12), S, cfg));
    }
}

TEST_CASE("dialogue order does not change the model") {
  Corpus c = two_groups(8, 0.3, 20);
  const auto base = ena::fit_model<double>(c, S, {});
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(c.dialogues.begin(), c.dialogues.end(), rng);
    const auto m = ena::fit_model<double>(c, S, {});
    CHECK((m.human_mean - base.human_mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((m.ai_mean - base.ai_mean).cwiseAbs().maxCoeff() < 1e-12);
    for (int d = 0; d < 2; ++d) {
      const double dot = m.rotation.axes.col(d).dot(base.rotation.axes.col(d));
      CHECK(std::abs(std::abs(dot) - 1) < 1e-9);
      CHECK(std::abs(std::abs(m.centroid_tests[d]->t) - std::abs(base.centroid_tests[d]->t)) < 1e-6);
    }
  }
}

TEST_CASE("zero-norm units are excluded and reported") {
  Corpus c = two_groups(9, 0.2, 5);
  for (auto& u : c.dialogues[0].utterances) u.code = u.speaker == Role::teacher ? "I-Q" : "R-FR";
  c.dialogues[2].utterances.resize(2);
  c.dialogues[2].utterances[0] = {Role::teacher, "x", "I-Q"};
  c.dialogues[2].utterances[1] = {Role::teacher, "y", "I-Q"};
  const auto m = ena::fit_model<double>(c, S, {});
  REQUIRE(m.exclusions.size() == 1);
  CHECK(m.exclusions[0].dialogue_id == c.dialogues[2].id);
  CHECK(m.units.size() == 9);
}

TEST_CASE("float models") {
  const auto m = ena::fit_model<float>(two_groups(10, 0.2, 10), S, {});
  CHECK(std::abs(m.points.col(0).sum()) < 1e-4f);
  CHECK(m.centroid_tests[0]->t > 0);
}
