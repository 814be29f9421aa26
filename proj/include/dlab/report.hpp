#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dlab/analysis.hpp"
#include "dlab/scheme.hpp"

namespace dlab::report {

struct NetworkNode {
  std::string label;
  double x = 0;
  double y = 0;
  double frequency = 0;  // radius grows linearly with frequency
};

struct NetworkEdge {
  std::size_t a = 0;  // node indices
  std::size_t b = 0;
  double weight = 0;  // sign selects the color, |weight| the thickness
};

struct LegendEntry {
  std::string label;
  std::string color;
};

struct NetworkStyle {
  int width = 640;
  int height = 680;
  double edge_floor = 0.5;  // px, thickness of the weakest nonzero edge
  double edge_max = 14.0;   // px, thickness of the strongest edge
  double radius_min = 4.0;
  double radius_max = 18.0;
  std::string positive_color = "#d62728";
  std::string negative_color = "#1f77b4";
  std::string title;
  std::vector<LegendEntry> legend;
};

/// Standalone SVG: one <circle> per node, one <line> per nonzero edge. Element order and
/// coordinate precision are fixed, so identical input gives identical bytes. Throws
/// DomainError on a non-finite coordinate or weight.
std::string render_network_svg(std::span<const NetworkNode> nodes, std::span<const NetworkEdge> edges,
                               const NetworkStyle& style);

/// Presentation row of the behavior comparison table. Numbers print at 3 decimals; `stars`
/// is computed from the unrounded p value.
struct Table2Row {
  std::string code;
  double ai_mean = 0;
  double ai_std = 0;
  double human_mean = 0;
  double human_std = 0;
  std::optional<double> t;
  std::optional<double> p;
  std::string stars;
};

Table2Row to_table2_row(const ProportionComparison& comparison);
std::vector<Table2Row> to_table2_rows(std::span<const ProportionComparison> comparisons);

/// Header `code,ai_mean,ai_std,human_mean,human_std,t_stat,p_value`. p below .001 prints as
/// "<0.001"; a degenerate test prints "NA" in both test columns.
std::string emit_table2_csv(std::span<const Table2Row> rows);
std::vector<Table2Row> parse_table2_csv(std::string_view csv);

struct LengthRow {
  Role role = Role::teacher;
  Group group = Group::human;
  Distribution distribution;
  std::optional<stats::TestResult<double>> test;  // human vs ai within the role, repeated on both rows
};

std::vector<LengthRow> to_length_rows(std::span<const LengthComparison> comparisons);
std::string emit_lengths_csv(std::span<const LengthRow> rows);
std::vector<LengthRow> parse_lengths_csv(std::string_view csv);

// Plain CSV tables of the network model.

struct PointRow {
  std::string dialogue_id;
  Group group = Group::human;
  double x = 0;
  double y = 0;
};

struct NodeRow {
  std::string code;
  double x = 0;
  double y = 0;
};

struct EdgeRow {
  std::string code_a;
  std::string code_b;
  double weight = 0;
};

struct FrequencyRow {
  std::string code;
  double human = 0;
  double ai = 0;
};

std::string emit_points_csv(std::span<const PointRow> rows);
std::string emit_nodes_csv(std::span<const NodeRow> rows);
std::string emit_edges_csv(std::span<const EdgeRow> rows);
std::string emit_frequencies_csv(std::span<const FrequencyRow> rows);
std::vector<PointRow> parse_points_csv(std::string_view csv);
std::vector<NodeRow> parse_nodes_csv(std::string_view csv);
std::vector<EdgeRow> parse_edges_csv(std::string_view csv);
std::vector<FrequencyRow> parse_frequencies_csv(std::string_view csv);

/// Edge rows for a weight vector laid out in edge_index order over `scheme`.
template <typename Derived>
std::vector<EdgeRow> edge_rows(const CodeScheme& scheme, const Derived& weights) {
  std::vector<EdgeRow> out;
  for (std::size_t e = 0; e < scheme.edges(); ++e) {
    const auto [i, j] = edge_pair(e, scheme.size());
    out.push_back({scheme.at(i).id, scheme.at(j).id, static_cast<double>(weights(static_cast<long>(e)))});
  }
  return out;
}

/// Joins node and edge tables into renderable form. Edges naming unknown nodes are an error.
std::pair<std::vector<NetworkNode>, std::vector<NetworkEdge>> network_from_rows(
    std::span<const NodeRow> nodes, std::span<const EdgeRow> edges, std::span<const double> frequencies);

/// Fixed-point formatting used by every emitted table.
std::string format_fixed(double value, int decimals);

/// Splits one CSV record, honoring double quotes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_field(std::string_view value);

}  // namespace dlab::report
