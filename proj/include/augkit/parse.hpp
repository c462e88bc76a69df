#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace augkit::parse {

// One inline calculator span: "<<48/2=24>>" -> { "48/2", "24" }.
struct CalcAnnotation {
    std::string expression; // left of "="
    std::string value;      // right of "="
};

struct CalcScan {
    std::vector<CalcAnnotation> annotations; // in text order
    std::size_t skipped = 0;                 // unbalanced or malformed spans
};

struct ExtractedAnswer {
    std::string raw;
    std::optional<double> numeric; // present iff raw canonicalizes to a number
};

enum class Difficulty { easy, medium, hard };

// Content after the LAST "#####" marker, whitespace-trimmed.
// Throws Error(no_answer) when no marker is present or nothing follows it.
ExtractedAnswer extract_final_answer_gsm(std::string_view text);

// Content of the LAST \boxed{...} with balanced braces, nested braces kept
// verbatim. Throws Error(no_answer) / Error(unbalanced_braces).
ExtractedAnswer extract_boxed_math(std::string_view text);

// All balanced calculator spans in order. Accepts both "<<...>>" and the
// guillemet form. Malformed spans are skipped and counted, never fatal.
CalcScan parse_calc_annotations(std::string_view text);

// One annotation == one reasoning step.
std::size_t count_reasoning_steps_gsm(std::string_view text);

// One step per non-empty segment terminated by '.' or ';'. A '.' between
// two digits is a decimal point, not a terminator.
std::size_t count_reasoning_steps_sentences(std::string_view text);

// Strips currency signs, thousands separators, '%', surrounding whitespace
// and trailing punctuation; rounds half-away-from-zero to 3 decimals.
// Throws Error(not_numeric) when the remainder is not a plain number.
double canonicalize_number(std::string_view raw);
std::optional<double> try_canonicalize_number(std::string_view raw);

// raw + its canonicalization (when it has one).
ExtractedAnswer make_answer(std::string raw);

// Numeric comparison at abs_tol when both sides canonicalize; otherwise
// whitespace-normalized string equality.
bool answers_equal(const ExtractedAnswer& a, const ExtractedAnswer& b, double abs_tol = 1e-3);

// step count < 3 -> easy, == 3 -> medium, > 3 -> hard.
Difficulty classify_difficulty(std::size_t step_count);

const char* to_string(Difficulty d) noexcept;
Difficulty difficulty_from_string(std::string_view name);

} // namespace augkit::parse
