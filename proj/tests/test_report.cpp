#include "doctest.h"

#include <cmath>
#include <limits>
#include <regex>

#include "dlab/analysis.hpp"
#include "dlab/error.hpp"
#include "dlab/report.hpp"
#include "table2_fixture.hpp"

using namespace dlab;
using namespace dlab::report;

namespace {

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("network svg") {
  const std::vector<NetworkNode> nodes{{"I-Q", -1, 0.5, 10}, {"R-FR", 1, -0.5, 5}};
  const std::vector<NetworkEdge> edges{{0, 1, 0.8}};
  NetworkStyle style;
  style.title = "Human & AI <mean>";
  const std::string svg = render_network_svg(nodes, edges, style);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(count(svg, "<circle") == 2);
  CHECK(count(svg, "<line") == 1);
  CHECK(svg.find("Human &amp; AI &lt;mean&gt;") != std::string::npos);
  CHECK(svg.find(style.positive_color) != std::string::npos);
  CHECK(svg == render_network_svg(nodes, edges, style));

  SUBCASE("negative weights take the second color") {
    const std::vector<NetworkEdge> negative{{0, 1, -0.8}};
    const std::string s = render_network_svg(nodes, negative, style);
    CHECK(s.find(style.negative_color) != std::string::npos);
  }
  SUBCASE("zero-weight edges are not drawn") {
    const std::vector<NetworkEdge> zero{{0, 1, 0.0}};
    CHECK(count(render_network_svg(nodes, zero, style), "<line") == 0);
  }
  SUBCASE("strongest edge is thickest") {
    const std::vector<NetworkNode> three{{"a", 0, 1, 1}, {"b", 1, 0, 1}, {"c", -1, 0, 1}};
    const std::vector<NetworkEdge> two{{0, 1, 2.0}, {0, 2, 0.5}};
    const std::string s = render_network_svg(three, two, style);
    std::regex width_re("stroke-width=\"([0-9.]+)\"");
    std::vector<double> widths;
    for (std::sregex_iterator it(s.begin(), s.end(), width_re), end; it != end; ++it)
      widths.push_back(std::stod((*it)[1]));
    REQUIRE(widths.size() == 2);
    CHECK(widths[0] < widths[1]);
    CHECK(widths[1] == doctest::Approx(style.edge_max));
  }
  SUBCASE("empty network keeps the legend") {
    NetworkStyle legend_only;
    legend_only.legend = {{"human", "#d62728"}, {"ai", "#1f77b4"}};
    const std::string s = render_network_svg({}, {}, legend_only);
    CHECK(count(s, "<circle") == 0);
    CHECK(count(s, "<line") == 0);
    CHECK(s.find(">human<") != std::string::npos);
    CHECK(s.find(">ai<") != std::string::npos);
  }
  SUBCASE("non-finite input is rejected") {
    std::vector<NetworkNode> bad = nodes;
    bad[0].x = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(render_network_svg(bad, edges, style), DomainError);
    const std::vector<NetworkEdge> inf{{0, 1, std::numeric_limits<double>::infinity()}};
    CHECK_THROWS_AS(render_network_svg(nodes, inf, style), DomainError);
  }
}

TEST_CASE("network_from_rows") {
  const std::vector<NodeRow> nodes{{"I-Q", 1, 2}, {"R-FR", -1, 0}};
  const std::vector<EdgeRow> edges{{"I-Q", "R-FR", 0.3}};
  const std::vector<double> freq{4, 2};
  const auto [n, e] = network_from_rows(nodes, edges, freq);
  REQUIRE(n.size() == 2);
  CHECK(n[0].frequency == 4);
  REQUIRE(e.size() == 1);
  CHECK(e[0].a == 0);
  CHECK(e[0].b == 1);
  const std::vector<EdgeRow> unknown{{"I-Q", "F-E", 0.3}};
  CHECK_THROWS(network_from_rows(nodes, unknown, freq));
}

TEST_CASE("csv tables round-trip") {
  SUBCASE("points") {
    const std::vector<PointRow> rows{{"h-p01", Group::human, 0.125, -0.5}, {"ai,\"x\"", Group::ai, -0.25, 0}};
    const auto parsed = parse_points_csv(emit_points_csv(rows));
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[1].dialogue_id == "ai,\"x\"");
    CHECK(parsed[1].group == Group::ai);
    CHECK(parsed[0].x == doctest::Approx(0.125));
    CHECK(emit_points_csv(parsed) == emit_points_csv(rows));
  }
  SUBCASE("nodes, edges, frequencies") {
    const std::vector<NodeRow> nodes{{"I-Q", 0.5, -0.25}};
    CHECK(emit_nodes_csv(parse_nodes_csv(emit_nodes_csv(nodes))) == emit_nodes_csv(nodes));
    const std::vector<EdgeRow> edges{{"I-Q", "R-FR", -0.0625}};
    CHECK(parse_edges_csv(emit_edges_csv(edges))[0].weight == doctest::Approx(-0.0625));
    const std::vector<FrequencyRow> freq{{"I-Q", 12, 3}};
    CHECK(parse_frequencies_csv(emit_frequencies_csv(freq))[0].ai == 3);
  }
  SUBCASE("table2") {
    std::vector<Table2Row> rows(3);
    rows[0] = {"I-Q", 0.302, 0.043, 0.339, 0.068, -3.121, 0.0025, "**"};
    rows[1] = {"R-SR", 0.223, 0.081, 0.147, 0.083, 4.356, 0.00004, "***"};
    rows[2] = {"I-M", 0, 0, 0, 0, std::nullopt, std::nullopt, ""};
    const std::string csv = emit_table2_csv(rows);
    CHECK(csv ==
          "code,ai_mean,ai_std,human_mean,human_std,t_stat,p_value\n"
          "I-Q,0.302,0.043,0.339,0.068,-3.121,0.003**\n"
          "R-SR,0.223,0.081,0.147,0.083,4.356,<0.001***\n"
          "I-M,0.000,0.000,0.000,0.000,NA,NA\n");
    const auto parsed = parse_table2_csv(csv);
    REQUIRE(parsed.size() == 3);
    CHECK(parsed[0].stars == "**");
    CHECK(*parsed[1].p < 0.001);
    CHECK_FALSE(parsed[2].t.has_value());
    CHECK(emit_table2_csv(parsed) == csv);
  }
  SUBCASE("lengths") {
    LengthRow row;
    row.role = Role::student;
    row.group = Group::ai;
    row.distribution = {4, 2.5, 1.25, 1, 1.75, 2.5, 3.25, 4};
    row.test = stats::TestResult<double>{2.0, 5.5, 0.0956, std::nullopt};
    const std::vector<LengthRow> rows{row};
    const std::string csv = emit_lengths_csv(rows);
    const auto parsed = parse_lengths_csv(csv);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].role == Role::student);
    CHECK(parsed[0].distribution.n == 4);
    CHECK(parsed[0].distribution.q3 == doctest::Approx(3.25));
    CHECK(emit_lengths_csv(parsed) == csv);
  }
  SUBCASE("wrong header") {
    CHECK_THROWS(parse_nodes_csv("id,x,y\nI-Q,0,0\n"));
    CHECK_THROWS(parse_edges_csv("code_a,code_b,weight\nI-Q,R-FR\n"));
  }
}

TEST_CASE("format_fixed") {
  CHECK(format_fixed(0.0005, 3) == "0.001");
  CHECK(format_fixed(-0.0001, 3) == "0.000");
  CHECK(format_fixed(2.5, 1) == "2.5");
}

TEST_CASE("table2 from a corpus matching the published moments") {
  const CodeScheme& scheme = scheme_default();
  const Corpus corpus = fixture::table2_corpus(scheme);
  const auto rows = parse_table2_csv(emit_table2_csv(to_table2_rows(compare_proportions(corpus, scheme))));
  REQUIRE(rows.size() == 10);
  for (const auto& ref : fixture::table2()) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const Table2Row& r) { return r.code == ref.code; });
    REQUIRE(it != rows.end());
    CHECK(std::abs(it->ai_mean - ref.ai_mean) <= 0.01);
    CHECK(std::abs(it->ai_std - ref.ai_std) <= 0.01);
    CHECK(std::abs(it->human_mean - ref.human_mean) <= 0.01);
    CHECK(std::abs(it->human_std - ref.human_std) <= 0.01);
  }
}

TEST_CASE("single-code corpus gives degenerate tests") {
  const CodeScheme& scheme = scheme_default();
  Corpus c;
  for (std::string pid : {"p1", "p2", "p3"})
    for (Group g : {Group::human, Group::ai})
      c.dialogues.push_back({std::string(to_string(g)) + "-" + pid, g, pid,
                             {{Role::teacher, "Explain.", "F-E"}, {Role::student, "ok", std::nullopt}}, {}});
  const auto rows = to_table2_rows(compare_proportions(c, scheme));
  const std::string csv = emit_table2_csv(rows);
  for (const Table2Row& r : rows) {
    CHECK_FALSE(r.p.has_value());
    CHECK(r.stars.empty());
  }
  CHECK(csv.find("F-E,1.000,0.000,1.000,0.000,NA,NA") != std::string::npos);
}
