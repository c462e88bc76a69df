#pragma once

#include <stdexcept>
#include <string>

namespace augkit {

enum class Errc {
    // jsonl / corpus
    malformed_line,
    duplicate_id,
    missing_field,
    io_failure,
    target_too_large,
    empty_strategy_set,
    missing_placeholder,
    duplicate_name,
    unknown_subset,
    // parsing
    no_answer,
    unbalanced_braces,
    not_numeric,
    // llm backend
    transport,
    cache_miss,
    fixture_missing,
    // augmentation output parsing
    wrong_item_count,
    empty_item,
    no_answer_marker,
    no_pairs_found,
    // quality
    too_few_responses,
    no_eligible_groups,
    // analysis
    degenerate_x,
    insufficient_points,
    degenerate_variance,
    missing_eval_results,
    // eval harness
    unknown_problem_id,
    missing_label,
    // cli
    unknown_command,
    config_error,
    invalid_argument,
};

const char* errc_name(Errc code) noexcept;

// Single exception type for the whole library. `detail` carries the
// operation-specific number the contract mentions (line number, slot,
// item count); -1 when not applicable.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, long detail = -1)
        : std::runtime_error(message), code_(code), detail_(detail) {}

    Errc code() const noexcept { return code_; }
    long detail() const noexcept { return detail_; }

private:
    Errc code_;
    long detail_;
};

} // namespace augkit
