#pragma once

#include "augkit/corpus.hpp"
#include "augkit/parse.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace augkit::quality {

struct FilterReport {
    std::size_t kept = 0;
    std::size_t removed_no_answer = 0;
    std::size_t removed_too_long = 0;
    std::size_t trimmed = 0; // survivors whose response was shortened
};

// Drops responses without an extractable answer, then responses longer than
// max_len characters (Unicode scalar values); survivors are trimmed down to
// "reasoning path + answer".
std::pair<std::vector<corpus::Sample>, FilterReport>
filter_responses(std::span<const corpus::Sample> samples, std::size_t max_len = 1500);

// Truncates everything after the answer token that follows the last "#####"
// marker and strips surrounding whitespace. Idempotent. Input without a
// marker is returned whitespace-trimmed.
std::string trim_superfluous(std::string_view response);

enum class Verdict { consensus, all_distinct, tie };
enum class Label : std::uint8_t { correct, wrong };

struct VoteOutcome {
    Verdict verdict = Verdict::all_distinct;
    parse::ExtractedAnswer consensus_answer; // meaningful under consensus
    std::size_t votes = 0;                   // >= 2 under consensus
    std::vector<Label> per_response;         // populated only under consensus
};

// Majority vote over the answers of one query's responses. Answers are
// grouped into answers_equal-equivalence classes (transitive closure); a
// unique maximal class wins, all-singleton groupings are AllDistinct, and a
// shared maximum is a Tie.
VoteOutcome vote(std::span<const corpus::Sample> responses, double abs_tol = 1e-3);

struct ResponseGroup {
    std::string query;
    std::vector<corpus::Sample> samples;
};

// Groups samples by exact query text, sorted by query.
std::vector<ResponseGroup> group_by_query(std::span<const corpus::Sample> samples);

// Drops whole groups whose verdict is AllDistinct; every other group passes
// through unchanged (wrong-labeled responses are not removed here).
// Single-response groups cannot disagree with themselves and pass through.
std::vector<corpus::Sample> apply_majority_filter(std::span<const ResponseGroup> groups,
                                                  double abs_tol = 1e-3);

struct CwhSplit {
    std::vector<corpus::Sample> correct;
    std::vector<corpus::Sample> wrong;
    std::vector<corpus::Sample> half;
};

// For every group with a strict consensus that is neither unanimous nor
// all-distinct, draws one majority-labeled and one minority-labeled response;
// the half set mixes a random half of the correct picks with the
// complementary wrong picks. All three sets share one query multiset.
CwhSplit build_correct_wrong_half(std::span<const ResponseGroup> groups, std::uint64_t seed,
                                  double abs_tol = 1e-3);

} // namespace augkit::quality
