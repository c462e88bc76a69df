#include "augkit/parse.hpp"

#include "augkit/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace augkit::parse {

namespace {

constexpr std::string_view kGsmMarker = "#####";
constexpr std::string_view kBoxed = "\\boxed{";
constexpr std::string_view kOpenAscii = "<<";
constexpr std::string_view kCloseAscii = ">>";
constexpr std::string_view kOpenGuillemet = "\xc2\xab";  // «
constexpr std::string_view kCloseGuillemet = "\xc2\xbb"; // »

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : trim(s)) {
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

} // namespace

ExtractedAnswer extract_final_answer_gsm(std::string_view text) {
    const auto pos = text.rfind(kGsmMarker);
    if (pos == std::string_view::npos) {
        throw Error(Errc::no_answer, "no '#####' answer marker in text");
    }
    const std::string_view tail = trim(text.substr(pos + kGsmMarker.size()));
    if (tail.empty()) {
        throw Error(Errc::no_answer, "answer marker with no content after it");
    }
    return make_answer(std::string(tail));
}

ExtractedAnswer extract_boxed_math(std::string_view text) {
    const auto pos = text.rfind(kBoxed);
    if (pos == std::string_view::npos) {
        throw Error(Errc::no_answer, "no \\boxed{...} answer in text");
    }
    std::size_t i = pos + kBoxed.size();
    int depth = 1;
    const std::size_t start = i;
    for (; i < text.size(); ++i) {
        if (text[i] == '{') {
            ++depth;
        } else if (text[i] == '}') {
            if (--depth == 0) break;
        }
    }
    if (depth != 0) {
        throw Error(Errc::unbalanced_braces, "unbalanced braces in \\boxed answer");
    }
    std::string_view content = text.substr(start, i - start);
    if (trim(content).empty()) {
        throw Error(Errc::no_answer, "empty \\boxed answer");
    }
    return make_answer(std::string(content));
}

CalcScan parse_calc_annotations(std::string_view text) {
    CalcScan scan;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open_ascii = text.find(kOpenAscii, pos);
        const std::size_t open_guill = text.find(kOpenGuillemet, pos);
        const std::size_t open = std::min(open_ascii, open_guill);
        if (open == std::string_view::npos) break;

        const bool ascii = open == open_ascii;
        const std::string_view closer = ascii ? kCloseAscii : kCloseGuillemet;
        const std::size_t body_start = open + (ascii ? kOpenAscii.size() : kOpenGuillemet.size());

        const std::size_t close = text.find(closer, body_start);
        // A second opener before the closer means this span never closes.
        const std::size_t next_open =
            std::min(text.find(kOpenAscii, body_start), text.find(kOpenGuillemet, body_start));
        if (close == std::string_view::npos) {
            ++scan.skipped;
            pos = body_start;
            continue;
        }
        if (next_open != std::string_view::npos && next_open < close) {
            ++scan.skipped;
            pos = next_open;
            continue;
        }

        const std::string_view body = text.substr(body_start, close - body_start);
        const std::size_t n_eq = static_cast<std::size_t>(std::count(body.begin(), body.end(), '='));
        if (n_eq == 1) {
            const std::size_t eq = body.find('=');
            scan.annotations.push_back({std::string(trim(body.substr(0, eq))),
                                        std::string(trim(body.substr(eq + 1)))});
        } else {
            ++scan.skipped;
        }
        pos = close + closer.size();
    }
    return scan;
}

std::size_t count_reasoning_steps_gsm(std::string_view text) {
    return parse_calc_annotations(text).annotations.size();
}

std::size_t count_reasoning_steps_sentences(std::string_view text) {
    std::size_t steps = 0;
    bool segment_has_content = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        bool terminator = false;
        if (c == ';') {
            terminator = true;
        } else if (c == '.') {
            const bool digit_before = i > 0 && is_digit(text[i - 1]);
            const bool digit_after = i + 1 < text.size() && is_digit(text[i + 1]);
            terminator = !(digit_before && digit_after);
        }
        if (terminator) {
            if (segment_has_content) ++steps;
            segment_has_content = false;
        } else if (!is_space(c)) {
            segment_has_content = true;
        }
    }
    return steps;
}

double canonicalize_number(std::string_view raw) {
    std::string s;
    s.reserve(raw.size());
    // Drop currency signs (plain or LaTeX-escaped) up front.
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '$') continue;
        if (raw[i] == '\\' && i + 1 < raw.size() && raw[i + 1] == '$') continue;
        s.push_back(raw[i]);
    }
    // Thousands separators: a comma flanked by digits.
    std::string cleaned;
    cleaned.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',' && i > 0 && i + 1 < s.size() && is_digit(s[i - 1]) && is_digit(s[i + 1])) {
            continue;
        }
        if (s[i] == '%') continue;
        cleaned.push_back(s[i]);
    }
    std::string_view v = trim(cleaned);
    auto is_trailing_punct = [](char c) {
        return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
    };
    while (!v.empty() && is_trailing_punct(v.back())) {
        v.remove_suffix(1);
        v = trim(v);
    }
    if (v.empty()) {
        throw Error(Errc::not_numeric, "empty string is not a number");
    }
    const std::string buf(v);
    char* end = nullptr;
    const double value = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || !std::isfinite(value)) {
        throw Error(Errc::not_numeric, "'" + buf + "' is not a number");
    }
    // Half-away-from-zero at 3 decimals.
    return std::round(value * 1000.0) / 1000.0;
}

std::optional<double> try_canonicalize_number(std::string_view raw) {
    try {
        return canonicalize_number(raw);
    } catch (const Error&) {
        return std::nullopt;
    }
}

ExtractedAnswer make_answer(std::string raw) {
    ExtractedAnswer out;
    out.numeric = try_canonicalize_number(raw);
    out.raw = std::move(raw);
    return out;
}

bool answers_equal(const ExtractedAnswer& a, const ExtractedAnswer& b, double abs_tol) {
    if (a.numeric && b.numeric) {
        return std::fabs(*a.numeric - *b.numeric) <= abs_tol;
    }
    return normalize_whitespace(a.raw) == normalize_whitespace(b.raw);
}

Difficulty classify_difficulty(std::size_t step_count) {
    if (step_count < 3) return Difficulty::easy;
    if (step_count == 3) return Difficulty::medium;
    return Difficulty::hard;
}

const char* to_string(Difficulty d) noexcept {
    switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
    }
    return "easy";
}

Difficulty difficulty_from_string(std::string_view name) {
    if (name == "easy") return Difficulty::easy;
    if (name == "medium") return Difficulty::medium;
    if (name == "hard") return Difficulty::hard;
    throw Error(Errc::invalid_argument, "unknown difficulty label: " + std::string(name));
}

} // namespace augkit::parse
