#include "dlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dlab/error.hpp"

namespace dlab::report {

namespace {

std::string escape_xml(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string px(double v) { return format_fixed(v, 3); }

std::vector<std::vector<std::string>> parse_table(std::string_view csv, std::span<const std::string_view> header) {
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!csv.empty()) {
    ++line_no;
    const std::size_t newline = csv.find('\n');
    std::string_view line = csv.substr(0, newline);
    csv = newline == std::string_view::npos ? std::string_view() : csv.substr(newline + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (!header_seen) {
      if (fields.size() != header.size() || !std::equal(fields.begin(), fields.end(), header.begin()))
        throw ParseError("unexpected header", line_no);
      header_seen = true;
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                       line_no);
    rows.push_back(std::move(fields));
  }
  if (!header_seen) throw ParseError("missing header", 1);
  return rows;
}

double parse_number(const std::string& field) {
  try {
    std::size_t used = 0;
    const double value = std::stod(field, &used);
    if (used != field.size()) throw Error("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw Error("not a number: '" + field + "'");
  }
}

std::optional<double> parse_optional(const std::string& field) {
  if (field == "NA") return std::nullopt;
  return parse_number(field);
}

std::string optional_fixed(const std::optional<double>& value, int decimals) {
  return value ? format_fixed(*value, decimals) : "NA";
}

Group require_group(const std::string& text) {
  auto g = parse_group(text);
  if (!g) throw Error("unknown group '" + text + "'");
  return *g;
}

}  // namespace

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
  std::string out = buffer;
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::string render_network_svg(std::span<const NetworkNode> nodes, std::span<const NetworkEdge> edges,
                               const NetworkStyle& style) {
  for (const NetworkNode& n : nodes)
    if (!std::isfinite(n.x) || !std::isfinite(n.y) || !std::isfinite(n.frequency))
      throw DomainError("non-finite coordinate for node '" + n.label + "'");
  for (const NetworkEdge& e : edges) {
    if (!std::isfinite(e.weight)) throw DomainError("non-finite edge weight");
    if (e.a >= nodes.size() || e.b >= nodes.size()) throw DomainError("edge references a missing node");
  }

  const double width = style.width;
  const double height = style.height;
  const double title_band = 40;
  const double legend_band = 36 + 20.0 * static_cast<double>((style.legend.size() + 1) / 2);
  const double margin = style.radius_max + 28;
  const double cx = width / 2;
  const double cy = title_band + (height - title_band - legend_band) / 2;
  const double half = std::max(1.0, std::min(width / 2 - margin, (height - title_band - legend_band) / 2 - margin));

  double extent = 0;
  for (const NetworkNode& n : nodes) extent = std::max({extent, std::abs(n.x), std::abs(n.y)});
  const double scale = extent > 0 ? half / extent : 1.0;
  auto sx = [&](double x) { return cx + x * scale; };
  auto sy = [&](double y) { return cy - y * scale; };

  double max_frequency = 0;
  for (const NetworkNode& n : nodes) max_frequency = std::max(max_frequency, n.frequency);
  double max_weight = 0;
  for (const NetworkEdge& e : edges) max_weight = std::max(max_weight, std::abs(e.weight));

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
      << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << style.width << "\" height=\"" << style.height
      << "\" fill=\"#ffffff\"/>\n";
  if (!style.title.empty())
    svg << "<text x=\"" << px(cx) << "\" y=\"26.000\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"16\">" << escape_xml(style.title) << "</text>\n";

  // Weakest edges first so strong ones are drawn on top.
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(edges[a].weight) < std::abs(edges[b].weight); });
  svg << "<g id=\"edges\" stroke-linecap=\"round\">\n";
  for (std::size_t index : order) {
    const NetworkEdge& e = edges[index];
    if (e.weight == 0) continue;
    const double thickness = style.edge_floor + (style.edge_max - style.edge_floor) * std::abs(e.weight) / max_weight;
    const NetworkNode& a = nodes[e.a];
    const NetworkNode& b = nodes[e.b];
    svg << "<line x1=\"" << px(sx(a.x)) << "\" y1=\"" << px(sy(a.y)) << "\" x2=\"" << px(sx(b.x)) << "\" y2=\""
        << px(sy(b.y)) << "\" stroke=\"" << (e.weight > 0 ? style.positive_color : style.negative_color)
        << "\" stroke-width=\"" << px(thickness) << "\" stroke-opacity=\"0.75\"/>\n";
  }
  svg << "</g>\n<g id=\"nodes\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (const NetworkNode& n : nodes) {
    const double radius = max_frequency > 0
                              ? style.radius_min + (style.radius_max - style.radius_min) * n.frequency / max_frequency
                              : style.radius_min;
    svg << "<circle cx=\"" << px(sx(n.x)) << "\" cy=\"" << px(sy(n.y)) << "\" r=\"" << px(radius)
        << "\" fill=\"#404040\" fill-opacity=\"0.85\"/>\n"
        << "<text x=\"" << px(sx(n.x)) << "\" y=\"" << px(sy(n.y) - radius - 4) << "\" text-anchor=\"middle\">"
        << escape_xml(n.label) << "</text>\n";
  }
  svg << "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < style.legend.size(); ++i) {
    const double x = 24 + static_cast<double>(i % 2) * (width / 2);
    const double y = height - legend_band + 24 + 20.0 * static_cast<double>(i / 2);
    svg << "<rect x=\"" << px(x) << "\" y=\"" << px(y - 10) << "\" width=\"24.000\" height=\"10.000\" fill=\""
        << escape_xml(style.legend[i].color) << "\"/>\n"
        << "<text x=\"" << px(x + 32) << "\" y=\"" << px(y) << "\">" << escape_xml(style.legend[i].label)
        << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

Table2Row to_table2_row(const ProportionComparison& c) {
  Table2Row row;
  row.code = c.label;
  row.ai_mean = c.ai.mean;
  row.ai_std = c.ai.std;
  row.human_mean = c.human.mean;
  row.human_std = c.human.std;
  if (c.test) {
    row.t = c.test->t;
    row.p = c.test->p_two_sided;
    row.stars = stats::significance_stars(c.test->p_two_sided);
  }
  return row;
}

std::vector<Table2Row> to_table2_rows(std::span<const ProportionComparison> comparisons) {
  std::vector<Table2Row> out;
  for (const auto& c : comparisons) out.push_back(to_table2_row(c));
  return out;
}

namespace {
constexpr std::string_view kTable2Header[] = {"code", "ai_mean", "ai_std", "human_mean", "human_std", "t_stat", "p_value"};
constexpr std::string_view kLengthsHeader[] = {"role", "group", "n",      "mean", "std", "min",     "q1",
                                               "median", "q3",  "max", "t_stat", "df",  "p_value"};
constexpr std::string_view kPointsHeader[] = {"dialogue_id", "group", "x", "y"};
constexpr std::string_view kNodesHeader[] = {"code", "x", "y"};
constexpr std::string_view kEdgesHeader[] = {"code_a", "code_b", "weight"};
constexpr std::string_view kFrequencyHeader[] = {"code", "human", "ai"};

template <std::size_t N>
std::string header_line(const std::string_view (&header)[N]) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) out += (i ? "," : "") + std::string(header[i]);
  return out + '\n';
}
}  // namespace

std::string emit_table2_csv(std::span<const Table2Row> rows) {
  std::string out = header_line(kTable2Header);
  for (const Table2Row& r : rows) {
    out += csv_field(r.code) + ',' + format_fixed(r.ai_mean, 3) + ',' + format_fixed(r.ai_std, 3) + ',' +
           format_fixed(r.human_mean, 3) + ',' + format_fixed(r.human_std, 3) + ',' + optional_fixed(r.t, 3) + ',';
    if (!r.p) {
      out += "NA";
    } else if (*r.p < 0.001) {
      out += "<0.001" + r.stars;
    } else {
      out += format_fixed(*r.p, 3) + r.stars;
    }
    out += '\n';
  }
  return out;
}

std::vector<Table2Row> parse_table2_csv(std::string_view csv) {
  std::vector<Table2Row> out;
  for (const auto& f : parse_table(csv, kTable2Header)) {
    Table2Row row;
    row.code = f[0];
    row.ai_mean = parse_number(f[1]);
    row.ai_std = parse_number(f[2]);
    row.human_mean = parse_number(f[3]);
    row.human_std = parse_number(f[4]);
    row.t = parse_optional(f[5]);
    std::string p = f[6];
    const std::size_t star = p.find('*');
    if (star != std::string::npos) {
      row.stars = p.substr(star);
      p.resize(star);
    }
    if (p == "NA") {
      row.p.reset();
    } else if (p == "<0.001") {
      row.p = 0.0;
    } else {
      row.p = parse_number(p);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<LengthRow> to_length_rows(std::span<const LengthComparison> comparisons) {
  std::vector<LengthRow> out;
  for (const LengthComparison& c : comparisons) {
    out.push_back({c.role, Group::human, c.human, c.test});
    out.push_back({c.role, Group::ai, c.ai, c.test});
  }
  return out;
}

std::string emit_lengths_csv(std::span<const LengthRow> rows) {
  std::string out = header_line(kLengthsHeader);
  for (const LengthRow& r : rows) {
    const Distribution& d = r.distribution;
    out += std::string(to_string(r.role)) + ',' + std::string(to_string(r.group)) + ',' + std::to_string(d.n) + ',' +
           format_fixed(d.mean, 3) + ',' + format_fixed(d.std, 3) + ',' + format_fixed(d.min, 3) + ',' +
           format_fixed(d.q1, 3) + ',' + format_fixed(d.median, 3) + ',' + format_fixed(d.q3, 3) + ',' +
           format_fixed(d.max, 3) + ',';
    if (r.test) {
      out += format_fixed(r.test->t, 3) + ',' + format_fixed(r.test->df, 3) + ',' +
             format_fixed(r.test->p_two_sided, 6) + '\n';
    } else {
      out += "NA,NA,NA\n";
    }
  }
  return out;
}

std::vector<LengthRow> parse_lengths_csv(std::string_view csv) {
  std::vector<LengthRow> out;
  for (const auto& f : parse_table(csv, kLengthsHeader)) {
    LengthRow row;
    auto role = parse_role(f[0]);
    if (!role) throw Error("unknown role '" + f[0] + "'");
    row.role = *role;
    row.group = require_group(f[1]);
    Distribution& d = row.distribution;
    d.n = static_cast<std::size_t>(parse_number(f[2]));
    d.mean = parse_number(f[3]);
    d.std = parse_number(f[4]);
    d.min = parse_number(f[5]);
    d.q1 = parse_number(f[6]);
    d.median = parse_number(f[7]);
    d.q3 = parse_number(f[8]);
    d.max = parse_number(f[9]);
    if (f[10] != "NA") row.test = stats::TestResult<double>{parse_number(f[10]), parse_number(f[11]), parse_number(f[12]), {}};
    out.push_back(std::move(row));
  }
  return out;
}

std::string emit_points_csv(std::span<const PointRow> rows) {
  std::string out = header_line(kPointsHeader);
  for (const PointRow& r : rows)
    out += csv_field(r.dialogue_id) + ',' + std::string(to_string(r.group)) + ',' + format_fixed(r.x, 9) + ',' +
           format_fixed(r.y, 9) + '\n';
  return out;
}

std::string emit_nodes_csv(std::span<const NodeRow> rows) {
  std::string out = header_line(kNodesHeader);
  for (const NodeRow& r : rows)
    out += csv_field(r.code) + ',' + format_fixed(r.x, 9) + ',' + format_fixed(r.y, 9) + '\n';
  return out;
}

std::string emit_edges_csv(std::span<const EdgeRow> rows) {
  std::string out = header_line(kEdgesHeader);
  for (const EdgeRow& r : rows)
    out += csv_field(r.code_a) + ',' + csv_field(r.code_b) + ',' + format_fixed(r.weight, 9) + '\n';
  return out;
}

std::string emit_frequencies_csv(std::span<const FrequencyRow> rows) {
  std::string out = header_line(kFrequencyHeader);
  for (const FrequencyRow& r : rows)
    out += csv_field(r.code) + ',' + format_fixed(r.human, 0) + ',' + format_fixed(r.ai, 0) + '\n';
  return out;
}

std::vector<PointRow> parse_points_csv(std::string_view csv) {
  std::vector<PointRow> out;
  for (const auto& f : parse_table(csv, kPointsHeader))
    out.push_back({f[0], require_group(f[1]), parse_number(f[2]), parse_number(f[3])});
  return out;
}

std::vector<NodeRow> parse_nodes_csv(std::string_view csv) {
  std::vector<NodeRow> out;
  for (const auto& f : parse_table(csv, kNodesHeader)) out.push_back({f[0], parse_number(f[1]), parse_number(f[2])});
  return out;
}

std::vector<EdgeRow> parse_edges_csv(std::string_view csv) {
  std::vector<EdgeRow> out;
  for (const auto& f : parse_table(csv, kEdgesHeader)) out.push_back({f[0], f[1], parse_number(f[2])});
  return out;
}

std::vector<FrequencyRow> parse_frequencies_csv(std::string_view csv) {
  std::vector<FrequencyRow> out;
  for (const auto& f : parse_table(csv, kFrequencyHeader))
    out.push_back({f[0], parse_number(f[1]), parse_number(f[2])});
  return out;
}

std::pair<std::vector<NetworkNode>, std::vector<NetworkEdge>> network_from_rows(std::span<const NodeRow> nodes,
                                                                                std::span<const EdgeRow> edges,
                                                                                std::span<const double> frequencies) {
  if (!frequencies.empty() && frequencies.size() != nodes.size())
    throw DomainError("frequency count does not match node count");
  std::vector<NetworkNode> out_nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    out_nodes.push_back({nodes[i].code, nodes[i].x, nodes[i].y, frequencies.empty() ? 0.0 : frequencies[i]});
  auto find = [&](const std::string& code) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].code == code) return i;
    throw DomainError("edge references unknown node '" + code + "'");
  };
  std::vector<NetworkEdge> out_edges;
  for (const EdgeRow& e : edges) out_edges.push_back({find(e.code_a), find(e.code_b), e.weight});
  return {std::move(out_nodes), std::move(out_edges)};
}

}  // namespace dlab::report
