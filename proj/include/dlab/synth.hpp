#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dlab/corpus.hpp"
#include "dlab/scheme.hpp"

// Synthetic corpora for tests, acceptance runs, and the bundled demo data.
namespace dlab::synth {

/// `length` codes repeating `cycle`. Each repetition keeps its first two moves and drops the
/// rest with probability `tail_skip`; each emitted code is then replaced, with probability
/// `noise`, by a code drawn uniformly from the scheme codes of the same role.
std::vector<std::string> cycle_codes(std::mt19937_64& rng, const CodeScheme& scheme, std::span<const std::string> cycle,
                                     double noise, std::size_t length, double tail_skip = 0);

/// Short utterance text for a code; human teacher turns run longer than ai teacher turns.
std::string utterance_text(std::mt19937_64& rng, const std::string& code, Group group, Role speaker);

/// Dialogue whose speakers follow the role constraints of `codes`.
Dialogue dialogue_from_codes(std::string id, Group group, std::string problem_id, std::span<const std::string> codes,
                             const CodeScheme& scheme, std::mt19937_64& rng);

struct TwoGroupSpec {
  std::size_t per_group = 49;
  std::vector<std::string> human_cycle{"I-Q", "R-FR", "F-F"};
  std::vector<std::string> ai_cycle{"F-E", "R-SR"};
  double noise = 0.2;
  double tail_skip = 0.3;
  std::size_t min_length = 9;
  std::size_t max_length = 24;
  std::uint64_t seed = 1;
};

/// Paired corpus: problems p01.., one human ("h-<pid>") and one ai ("ai-<pid>") dialogue each.
Corpus two_group_corpus(const TwoGroupSpec& spec, const CodeScheme& scheme);

struct CodeMoments {
  std::string code;
  double mean = 0;
  double std = 0;
};

/// n x k matrix of nonnegative rows summing to 1 whose column means and (n-1) standard
/// deviations approximate `moments` (columns in the given order).
Eigen::MatrixXd proportions_matching(std::span<const CodeMoments> moments, std::size_t n, std::uint64_t seed);

/// Dialogue with `utterances` coded turns whose code counts are the largest-remainder rounding
/// of `proportions` (scheme order), interleaved teacher/student where possible.
Dialogue dialogue_from_proportions(std::string id, Group group, std::string problem_id,
                                   const Eigen::VectorXd& proportions, const CodeScheme& scheme,
                                   std::size_t utterances, std::mt19937_64& rng);

}  // namespace dlab::synth
