#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlab/corpus.hpp"
#include "dlab/scheme.hpp"

namespace dlab {

struct CodeAssignment {
  std::size_t utterance;
  std::string code;
};

/// Returns a copy of `dialogue` with the listed utterances coded. Throws CodingError on an
/// out-of-range index, an unknown code, a role-constraint violation, or two different codes
/// for the same index.
Dialogue apply_codes(const Dialogue& dialogue, std::span<const CodeAssignment> assignments, const CodeScheme& scheme);

/// Per-dialogue share of each code among its coded utterances, in scheme order.
struct CodeProportionVector {
  std::string dialogue_id;
  Eigen::VectorXd proportions;

  double operator[](std::size_t code) const { return proportions(static_cast<Eigen::Index>(code)); }
};

/// Throws DomainError ("uncoded dialogue") when no utterance carries a code.
CodeProportionVector proportion_vector(const Dialogue& dialogue, const CodeScheme& scheme);

struct ReliabilityReport {
  double kappa = 0;
  double observed_agreement = 0;
  double expected_agreement = 0;
  std::size_t n_items = 0;
  Eigen::MatrixXi confusion;  // rows: rater A, columns: rater B, scheme order
};

/// Unweighted Cohen's kappa over the full scheme. When both raters use one identical code
/// throughout (expected agreement 1) kappa is reported as 1.
ReliabilityReport cohen_kappa(std::span<const std::string> rater_a, std::span<const std::string> rater_b,
                              const CodeScheme& scheme);

// Sidecar format for externally produced codes: `dialogue_id<TAB>utterance_index<TAB>code_id`,
// one assignment per line, 0-based utterance index. Blank lines and lines starting with '#' are ignored.

struct SidecarEntry {
  std::string dialogue_id;
  std::size_t utterance = 0;
  std::string code;

  friend bool operator==(const SidecarEntry&, const SidecarEntry&) = default;
};

std::vector<SidecarEntry> parse_sidecar(std::string_view text);
std::string serialize_sidecar(std::span<const SidecarEntry> entries);
std::vector<SidecarEntry> read_sidecar(const std::filesystem::path& path);

/// Applies sidecar codes to every dialogue they name. Throws SchemaError for an unknown
/// dialogue id and CodingError (wrapped in SchemaError naming the dialogue) for bad assignments.
Corpus apply_sidecar(const Corpus& corpus, std::span<const SidecarEntry> entries, const CodeScheme& scheme);

/// Extracts codes from a coded corpus as sidecar entries, in corpus order.
std::vector<SidecarEntry> extract_sidecar(const Corpus& corpus);

struct AlignedRatings {
  std::vector<std::string> rater_a;
  std::vector<std::string> rater_b;
};

/// Pairs two sidecars item by item on (dialogue_id, utterance). Both must cover the same items;
/// otherwise throws SchemaError naming the first unmatched dialogue.
AlignedRatings align_ratings(std::span<const SidecarEntry> a, std::span<const SidecarEntry> b);

}  // namespace dlab
