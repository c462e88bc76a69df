#include "augkit/errors.hpp"

namespace augkit {

const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::malformed_line: return "MalformedLine";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::missing_field: return "MissingField";
    case Errc::io_failure: return "IoFailure";
    case Errc::target_too_large: return "TargetTooLarge";
    case Errc::empty_strategy_set: return "EmptyStrategySet";
    case Errc::missing_placeholder: return "MissingPlaceholder";
    case Errc::duplicate_name: return "DuplicateName";
    case Errc::unknown_subset: return "UnknownSubset";
    case Errc::no_answer: return "NoAnswer";
    case Errc::unbalanced_braces: return "UnbalancedBraces";
    case Errc::not_numeric: return "NotNumeric";
    case Errc::transport: return "Transport";
    case Errc::cache_miss: return "CacheMiss";
    case Errc::fixture_missing: return "FixtureMissing";
    case Errc::wrong_item_count: return "WrongItemCount";
    case Errc::empty_item: return "EmptyItem";
    case Errc::no_answer_marker: return "NoAnswerMarker";
    case Errc::no_pairs_found: return "NoPairsFound";
    case Errc::too_few_responses: return "TooFewResponses";
    case Errc::no_eligible_groups: return "NoEligibleGroups";
    case Errc::degenerate_x: return "DegenerateX";
    case Errc::insufficient_points: return "InsufficientPoints";
    case Errc::degenerate_variance: return "DegenerateVariance";
    case Errc::missing_eval_results: return "MissingEvalResults";
    case Errc::unknown_problem_id: return "UnknownProblemId";
    case Errc::missing_label: return "MissingLabel";
    case Errc::unknown_command: return "UnknownCommand";
    case Errc::config_error: return "ConfigError";
    case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace augkit
