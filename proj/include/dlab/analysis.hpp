#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "dlab/corpus.hpp"
#include "dlab/scheme.hpp"
#include "dlab/stats.hpp"

namespace dlab {

enum class Breakdown { subtype, dimension };

/// One row of the AI-vs-human behavior comparison over paired dialogues.
struct ProportionComparison {
  std::string label;  // code id, or "I"/"R"/"F" by dimension
  stats::SampleSummary<double> ai;
  stats::SampleSummary<double> human;
  std::optional<stats::TestResult<double>> test;  // paired t on ai - human; empty when differences are degenerate
};

/// Proportion vectors of every human/ai pair sharing a problem_id, summarized per group and
/// compared with a paired t test. Unpaired dialogues are ignored. Throws DomainError for an
/// uncoded paired dialogue or fewer than 2 pairs.
std::vector<ProportionComparison> compare_proportions(const Corpus& corpus, const CodeScheme& scheme,
                                                      Breakdown by = Breakdown::subtype);

struct Distribution {
  std::size_t n = 0;
  double mean = 0, std = 0, min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Quartiles use linear interpolation between order statistics.
Distribution describe(std::vector<double> samples);

struct LengthComparison {
  Role role;
  Distribution human;
  Distribution ai;
  std::optional<stats::TestResult<double>> test;  // Welch, human minus ai
};

/// Utterance-length distributions per role and group, with a Welch test between groups.
std::vector<LengthComparison> compare_lengths(const Corpus& corpus, LengthUnit unit);

/// Count of each code (scheme order) over the dialogues of `group`, or all dialogues.
Eigen::VectorXd code_counts(const Corpus& corpus, const CodeScheme& scheme, std::optional<Group> group = std::nullopt);

}  // namespace dlab
