#include "augkit/augment.hpp"

#include "augkit/parse.hpp"
#include "augkit/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>

namespace augkit::augment {

using corpus::AugmentedQuery;
using corpus::Problem;
using corpus::Sample;
using corpus::Strategy;

namespace {

constexpr std::string_view kGsmQueryTemplate =
    R"(I want you to act as a math teacher. I will provide a grade school math question and you will help to create more challenging math questions by given ways. Given the question: "James writes a 3-page letter to 2 different friends twice a week. How many pages does he write a year?", you will modify it by following ideas:

1. **Change specific numbers:** James writes a 2-page letter to 2 different friends 3 times a week. How many pages does he write in 4 years?
2. **Introduce fractions or percentages:** James writes a 3-page letter to 2 different friends twice a week. Each week, he adds 50% more pages to each letter. How many pages does he write in a month?
3. **Combine multiple concepts:** James writes a 3-page letter to 2 different friends twice a week. He uses both sides of the paper and each side can hold 250 words. If James writes 100 words per minute, how long does it take for him to write all the letters in a week?
4. **Include a conditional statement:** James writes a 3-page letter to 2 different friends twice a week. If it's a holiday, he writes an additional 5-page letter to each friend. Considering there are 10 holidays in a year, how many pages does he write in a year?
5. **Increase the complexity of the problem:** James writes a 3-page letter to 2 different friends twice a week. In addition, he writes a 5-page letter to 3 other friends once a week. How many pages does he write in a month, assuming there are 4 weeks in a month?

Now you are given the question:

****A new math problem here.****
)";

constexpr std::string_view kGsmQueryExtraIdea =
    R"(6. **Introduce unknown quantities:** James writes some pages to his friends every week. After 4 years, he has written 1,440 pages. How many pages does James write each week?
)";

constexpr std::string_view kGsmResponseTemplate =
    R"(I want you to act as an excellent math solver. You will solve the given math question step by step. You need to reply with a python dictionary in the same format as the given examples. Retain decimals to three decimal places. The formulas in the process need to use the format: $48/2 = <<48/2=24>>24$ clips. The end of response needs to be: ##### {answer}.

Examples: {"query": "Natalia sold clips to 48 of her friends in April, and then she sold half as many clips in May. How many clips did Natalia sell altogether in April and May?", "response": "Natalia sold $48/2 = <<48/2=24>>24$ clips in May. Natalia sold $48+24 = <<48+24=72>>72$ clips altogether in April and May.##### 72"}.

The given question:

****A new math problem here.****
)";

constexpr std::string_view kGsmResponseZeroShotTemplate =
    R"(I want you to act as an excellent math solver. You will solve the given math question step by step. You need to reply with a python dictionary with two keys: "query" and "response". Retain decimals to three decimal places. The formulas in the process need to use the format: $48/2 = <<48/2=24>>24$ clips. The end of response needs to be: ##### {answer}.

The given question:

****A new math problem here.****
)";

constexpr std::string_view kMathAugTemplate =
    R"(I want you to act as a math teacher. You should think of some ways to help students do variation training for challenging competition mathematics problems. For example, for a question-solution pair, Question0: James writes a 3-page letter to 2 different friends twice a week. How many pages does he write in a year? Solution0: He writes each friend $3 \times 2 = 6$ pages a week. So he writes $6 \times 2 = 12$ pages every week That means he writes $12 \times 52 = \boxed{624}$ pages a year ##end0" we can propose 5 types of variation exercises, and response with:

1. Change specific numbers: Question1: James writes a 5-page letter to 3 different friends 4 times a week. How many pages does he write in 3 years? Solution1: To calculate the total number of pages James writes in 3 years, let's first figure out how many pages he writes each week and then multiply that by the number of weeks in 3 years. He writes each friend a 5-page letter, so for 3 friends, that's $5 \times 3 = 15$ pages per writing session. He writes 4 times a week, so the weekly total is $15 \times 4 = 60$ pages. There are 52 weeks in a year, so in one year, he writes $60 \times 52 = 3120$ pages. Finally, over the course of 3 years, he writes $3120 \times 3 = \boxed{9360}$ pages. ##end1

2. Introduce fractions or percentages: Question2: James writes a 3-page letter to 2 different friends twice a week. Each week, he adds 100% more pages to each letter. How many pages does he write in a month? Solution2: Let's take this step by step: In the first week, James writes a 3-page letter to 2 friends twice a week, which is $3 \times 2 \times 2 = 12$ pages in total for the first week. In the second week, he writes 100% more pages, thus doubling the number of pages in each letter. So he writes $6 \times 2 \times 2 = 24$ pages in total for the second week. In the third week, he again writes double the previous week's pages, so $12 \times 2 \times 2 = 48$ pages in total for the third week. In the fourth week, the number of pages doubles again, which results in $24 \times 2 \times 2 = 96$ pages in total for the fourth week. Now, we'll add up the pages from all four weeks to find out how many pages he writes in a month: $12 + 24 + 48 + 96 = 180$ pages. Therefore, in a month (assuming a 4-week month), James writes $\boxed{180}$ pages. ##end2

3. Combine multiple concepts: Question3: James writes a 3-page letter to 2 different friends twice a week. He uses both sides of the paper, and each side can hold 250 words. If James writes at a speed of 100 words per minute, how long does it take him to write all the letters in a week? Solution3: To find out how long it takes James to write all the letters in a week, we first calculate how many words he writes in total. Each letter is 3 pages long, and he writes to 2 friends, which is $3 \times 2 = 6$ pages per writing session. Since he writes twice a week, the total number of pages per week is $6 \times 2 = 12$ pages. Considering each page has two sides and each side holds 250 words, the number of words on one page is $250 \times 2 = 500$ words. Therefore, the total number of words James writes in a week is $500 \times 12 = 6000$ words. Given James writes at a speed of 100 words per minute, the time it takes him to write all the letters in a week is calculated by dividing the total number of words by his writing speed: $6000 \text{ words} \div 100 \text{ words/minute} = 60 \text{ minutes}$. So, James takes 60 minutes to write all the letters in a week. ##end3

4. Include a conditional statement: Question4: XX Solution4: XX ##end4

5. Increase the complexity of the problem: Question5: XX Solution5: XX ##end5
Now, find five suitable variation training methods for the new problem. Be careful not to let existing methods limit your thinking. Instead, propose variation training methods that are specifically tailored to the given problem:

Question0: ****A new math problem here.****

Solution0: ****corresponding solution here here.****

Please response with the given example format(including Questions and solutions)
)";

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string replace_first(std::string_view haystack, std::string_view needle,
                          std::string_view value) {
    const auto pos = haystack.find(needle);
    if (pos == std::string_view::npos) {
        throw Error(Errc::missing_placeholder,
                    "template lacks sentinel '" + std::string(needle) + "'");
    }
    std::string out;
    out.reserve(haystack.size() + value.size());
    out.append(haystack.substr(0, pos));
    out.append(value);
    out.append(haystack.substr(pos + needle.size()));
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Words that identify a rewording of one of the strategy headings.
bool looks_like_heading(std::string_view prefix) {
    static constexpr std::array<std::string_view, 12> kWords = {
        "change", "number",      "fraction",  "percent",  "combine",  "concept",
        "condit", "statement",   "increase",  "complex",  "introduc", "unknown"};
    const std::string lowered = to_lower(prefix);
    for (const auto& w : kWords) {
        if (lowered.find(w) != std::string::npos) return true;
    }
    return false;
}

// "**Change specific numbers:** text" / "Change numbers: text" -> "text"
std::string_view strip_heading(std::string_view item) {
    item = trim(item);
    if (item.substr(0, 2) == "**") {
        const auto close = item.find("**", 2);
        if (close != std::string_view::npos) {
            item.remove_prefix(close + 2);
            item = trim(item);
            if (!item.empty() && item.front() == ':') {
                item.remove_prefix(1);
            }
            return trim(item);
        }
    }
    const auto colon = item.find(':');
    if (colon != std::string_view::npos && colon < 64 && looks_like_heading(item.substr(0, colon))) {
        return trim(item.substr(colon + 1));
    }
    return item;
}

// A line opens a numbered item when it starts with optional bold markers and
// "N." or "N)". Returns the slot number, or 0.
int item_slot_at_line(std::string_view line, std::size_t* content_offset) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (line.substr(i, 2) == "**") i += 2;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t digits_start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits_start || i >= line.size()) return 0;
    if (line[i] != '.' && line[i] != ')') return 0;
    int slot = 0;
    for (std::size_t d = digits_start; d < i; ++d) {
        slot = slot * 10 + (line[d] - '0');
    }
    if (content_offset) *content_offset = i + 1;
    return slot;
}

// Decode one python/JSON string literal starting at `pos` (which indexes the
// opening quote). Returns the decoded value and advances pos past the close.
std::optional<std::string> read_quoted(std::string_view text, std::size_t& pos) {
    if (pos >= text.size() || (text[pos] != '"' && text[pos] != '\'')) {
        return std::nullopt;
    }
    const char quote = text[pos];
    ++pos;
    std::string out;
    while (pos < text.size()) {
        const char c = text[pos];
        if (c == '\\' && pos + 1 < text.size()) {
            const char next = text[pos + 1];
            switch (next) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case '\\': out.push_back('\\'); break;
            case '\'': out.push_back('\''); break;
            case '"': out.push_back('"'); break;
            default:
                out.push_back('\\');
                out.push_back(next);
                break;
            }
            pos += 2;
            continue;
        }
        if (c == quote) {
            ++pos;
            return out;
        }
        out.push_back(c);
        ++pos;
    }
    return std::nullopt; // ran off the end
}

// Tolerant reader for "python dictionary" completions: single or double
// quotes, arbitrary key order.
std::optional<std::string> read_dict_value(std::string_view text, std::string_view key) {
    for (const char quote : {'"', '\''}) {
        std::string needle;
        needle.push_back(quote);
        needle.append(key);
        needle.push_back(quote);
        std::size_t pos = text.find(needle);
        while (pos != std::string_view::npos) {
            std::size_t cursor = pos + needle.size();
            while (cursor < text.size() && is_space(text[cursor])) ++cursor;
            if (cursor < text.size() && text[cursor] == ':') {
                ++cursor;
                while (cursor < text.size() && is_space(text[cursor])) ++cursor;
                if (auto value = read_quoted(text, cursor)) {
                    return value;
                }
            }
            pos = text.find(needle, pos + 1);
        }
    }
    return std::nullopt;
}

const PromptTemplates* effective(const PromptTemplates* maybe) {
    return maybe ? maybe : &default_prompt_templates();
}

} // namespace

const PromptTemplates& default_prompt_templates() {
    static const PromptTemplates templates{
        std::string(kGsmQueryTemplate), std::string(kGsmQueryExtraIdea),
        std::string(kGsmResponseTemplate), std::string(kGsmResponseZeroShotTemplate),
        std::string(kMathAugTemplate)};
    return templates;
}

std::string build_gsm_query_prompt(std::string_view seed_query, bool include_introduce_unknown,
                                   const PromptTemplates& templates) {
    std::string tmpl = templates.gsm_query;
    if (include_introduce_unknown) {
        // The extra idea slots in right after idea 5, before the hand-off line.
        const auto pos = tmpl.find("\n\nNow you are given the question:");
        if (pos == std::string::npos) {
            throw Error(Errc::missing_placeholder, "query template lacks the hand-off line");
        }
        tmpl.insert(pos + 1, templates.gsm_query_extra);
    }
    return replace_first(tmpl, kQuerySentinel, seed_query);
}

std::string build_gsm_query_prompt(const Problem& problem, bool include_introduce_unknown,
                                   const PromptTemplates& templates) {
    if (problem.dataset != corpus::Dataset::gsm8k) {
        throw Error(Errc::invalid_argument,
                    "query augmentation prompt expects a gsm8k problem, got " + problem.id);
    }
    return build_gsm_query_prompt(problem.query, include_introduce_unknown, templates);
}

std::string build_gsm_response_prompt(std::string_view query, bool zero_shot,
                                      const PromptTemplates& templates) {
    const std::string& tmpl = zero_shot ? templates.gsm_response_zero : templates.gsm_response;
    return replace_first(tmpl, kQuerySentinel, query);
}

std::string build_math_aug_prompt(const Problem& problem, const PromptTemplates& templates) {
    if (problem.dataset != corpus::Dataset::math) {
        throw Error(Errc::invalid_argument,
                    "variation prompt expects a math problem, got " + problem.id);
    }
    std::string prompt = replace_first(templates.math_aug, kQuerySentinel, problem.query);
    return replace_first(prompt, kSolutionSentinel, problem.gold_response);
}

QueryAugBatch parse_gsm_query_output(std::string_view text, const std::string& parent_id,
                                     const QueryParseContext& ctx) {
    struct RawItem {
        int slot;
        std::size_t begin;
        std::size_t end;
    };
    std::vector<RawItem> items;

    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        const std::string_view line = text.substr(line_start, line_end - line_start);
        std::size_t content_offset = 0;
        const int slot = item_slot_at_line(line, &content_offset);
        if (slot >= 1 && slot <= ctx.expected_items) {
            if (!items.empty()) {
                items.back().end = line_start;
            }
            items.push_back({slot, line_start + content_offset, text.size()});
        }
        if (line_end == text.size()) break;
        line_start = line_end + 1;
    }

    if (static_cast<int>(items.size()) != ctx.expected_items) {
        throw Error(Errc::wrong_item_count,
                    "expected " + std::to_string(ctx.expected_items) + " numbered items, found " +
                        std::to_string(items.size()),
                    static_cast<long>(items.size()));
    }
    std::vector<bool> seen(static_cast<std::size_t>(ctx.expected_items) + 1, false);
    for (const auto& item : items) {
        if (seen[static_cast<std::size_t>(item.slot)]) {
            throw Error(Errc::wrong_item_count,
                        "slot " + std::to_string(item.slot) + " appears more than once",
                        static_cast<long>(items.size()));
        }
        seen[static_cast<std::size_t>(item.slot)] = true;
    }

    QueryAugBatch batch;
    batch.parent_id = parent_id;
    std::sort(items.begin(), items.end(),
              [](const RawItem& a, const RawItem& b) { return a.slot < b.slot; });
    for (const auto& item : items) {
        const std::string_view body = strip_heading(text.substr(item.begin, item.end - item.begin));
        if (body.empty()) {
            throw Error(Errc::empty_item, "item " + std::to_string(item.slot) + " is empty",
                        item.slot);
        }
        AugmentedQuery q;
        q.id = parent_id + ".s" + std::to_string(item.slot);
        q.parent_id = parent_id;
        q.strategy = corpus::strategy_for_slot(item.slot);
        q.query = std::string(body);
        q.generator = ctx.generator;
        q.temperature = ctx.temperature;
        batch.queries.push_back(std::move(q));
    }
    return batch;
}

std::string parse_gsm_response_output(std::string_view completion) {
    const std::string_view trimmed = trim(completion);
    std::string response;
    if (!trimmed.empty() && trimmed.front() == '{') {
        bool parsed = false;
        try {
            const auto obj = nlohmann::json::parse(trimmed);
            if (obj.is_object() && obj.contains("response") && obj["response"].is_string()) {
                response = obj["response"].get<std::string>();
                parsed = true;
            }
        } catch (const nlohmann::json::parse_error&) {
        }
        if (!parsed) {
            if (auto value = read_dict_value(trimmed, "response")) {
                response = std::move(*value);
                parsed = true;
            }
        }
        if (!parsed) {
            response.assign(completion);
        }
    } else {
        response.assign(completion);
    }
    if (response.find("#####") == std::string::npos) {
        throw Error(Errc::no_answer_marker, "completion has no '#####' answer marker");
    }
    return response;
}

MathParse parse_math_aug_output(std::string_view completion) {
    MathParse out;
    for (int slot = 1; slot <= 5; ++slot) {
        const std::string q_label = "Question" + std::to_string(slot) + ":";
        const std::string s_label = "Solution" + std::to_string(slot) + ":";
        const std::string end_label = "##end" + std::to_string(slot);

        const auto q_pos = completion.find(q_label);
        if (q_pos == std::string_view::npos) continue;
        const auto s_pos = completion.find(s_label, q_pos + q_label.size());
        if (s_pos == std::string_view::npos) continue;
        const auto e_pos = completion.find(end_label, s_pos + s_label.size());
        if (e_pos == std::string_view::npos) continue;

        MathAugPair pair;
        pair.slot = slot;
        pair.question =
            std::string(trim(completion.substr(q_pos + q_label.size(), s_pos - q_pos - q_label.size())));
        pair.solution =
            std::string(trim(completion.substr(s_pos + s_label.size(), e_pos - s_pos - s_label.size())));
        if (pair.question.empty() || pair.solution.find("\\boxed{") == std::string::npos) {
            ++out.dropped;
            continue;
        }
        out.pairs.push_back(std::move(pair));
    }
    if (out.pairs.empty() && out.dropped == 0) {
        throw Error(Errc::no_pairs_found, "no QuestionN/SolutionN pairs in completion");
    }
    return out;
}

std::vector<QuerySlot> plan_query_slots(std::span<const std::string> parent_ids, int round,
                                        int n_strategies) {
    std::vector<QuerySlot> slots;
    slots.reserve(parent_ids.size() * static_cast<std::size_t>(n_strategies));
    for (const auto& parent : parent_ids) {
        for (int s = 1; s <= n_strategies; ++s) {
            slots.push_back({parent, round, s, parent + ".s" + std::to_string(s)});
        }
    }
    return slots;
}

std::vector<MathSlot> plan_math_slots(std::span<const std::string> parent_ids, int n_samples) {
    std::vector<MathSlot> slots;
    slots.reserve(parent_ids.size() * static_cast<std::size_t>(n_samples) * 5);
    for (const auto& parent : parent_ids) {
        for (int k = 0; k < n_samples; ++k) {
            for (int s = 1; s <= 5; ++s) {
                slots.push_back(
                    {parent, k, s, parent + ".k" + std::to_string(k) + ".q" + std::to_string(s)});
            }
        }
    }
    return slots;
}

QueryAugRun run_query_augmentation(std::span<const Problem> problems, llm::Client& client,
                                   const QueryAugParams& params) {
    if (params.rounds < 1) {
        throw Error(Errc::invalid_argument, "rounds must be >= 1");
    }
    const PromptTemplates& templates = *effective(params.templates);
    const int expected = params.include_introduce_unknown ? 6 : 5;

    struct Seed {
        std::string id;
        std::string query;
    };
    std::vector<Seed> seeds;
    seeds.reserve(problems.size());
    for (const auto& p : problems) {
        seeds.push_back({p.id, p.query});
    }

    QueryAugRun run;
    for (int round = 1; round <= params.rounds; ++round) {
        std::vector<llm::GenRequest> requests;
        requests.reserve(seeds.size());
        for (const auto& seed : seeds) {
            requests.push_back({build_gsm_query_prompt(seed.query, params.include_introduce_unknown,
                                                       templates),
                                params.model, params.temperature, 2048, 0});
        }
        const auto outcomes = client.generate_batch(requests);

        std::vector<Seed> next_seeds;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const auto& seed = seeds[i];
            if (!outcomes[i].ok()) {
                run.diags.items.push_back({seed.id, outcomes[i].error});
                continue;
            }
            try {
                QueryParseContext ctx{params.model, params.temperature, expected};
                auto batch = parse_gsm_query_output(outcomes[i].result->text, seed.id, ctx);
                for (auto& q : batch.queries) {
                    next_seeds.push_back({q.id, q.query});
                    run.queries.push_back(std::move(q));
                }
            } catch (const Error& e) {
                run.diags.items.push_back({seed.id, e.what()});
            }
        }
        seeds = std::move(next_seeds);
    }
    return run;
}

ResponseAugRun run_response_augmentation(std::span<const AugmentedQuery> queries,
                                         llm::Client& client, const ResponseAugParams& params) {
    if (params.n_samples < 1) {
        throw Error(Errc::invalid_argument, "n_samples must be >= 1");
    }
    const PromptTemplates& templates = *effective(params.templates);

    std::vector<llm::GenRequest> requests;
    requests.reserve(queries.size() * static_cast<std::size_t>(params.n_samples));
    for (const auto& q : queries) {
        for (int k = 0; k < params.n_samples; ++k) {
            requests.push_back({build_gsm_response_prompt(q.query, params.zero_shot, templates),
                                params.model, params.temperature, 2048, k});
        }
    }
    const auto outcomes = client.generate_batch(requests);

    ResponseAugRun run;
    std::size_t idx = 0;
    for (const auto& q : queries) {
        for (int k = 0; k < params.n_samples; ++k, ++idx) {
            const std::string sample_id = q.id + "#" + std::to_string(k);
            if (!outcomes[idx].ok()) {
                run.diags.items.push_back({sample_id, outcomes[idx].error});
                continue;
            }
            try {
                Sample s;
                s.response = parse_gsm_response_output(outcomes[idx].result->text);
                s.answer = parse::extract_final_answer_gsm(s.response).raw;
                s.id = sample_id;
                s.query = q.query;
                s.provenance.subset = params.subset_name;
                s.provenance.query_source =
                    params.query_source.empty() ? q.generator : params.query_source;
                s.provenance.response_source = params.model;
                s.provenance.temperature = params.temperature;
                s.provenance.strategy = q.strategy;
                run.samples.push_back(std::move(s));
            } catch (const Error& e) {
                run.diags.items.push_back({sample_id, e.what()});
            }
        }
    }
    return run;
}

ResponseAugRun run_math_augmentation(std::span<const Problem> problems, llm::Client& client,
                                     const MathAugParams& params) {
    if (params.n_samples < 1) {
        throw Error(Errc::invalid_argument, "n_samples must be >= 1");
    }
    const PromptTemplates& templates = *effective(params.templates);

    std::vector<llm::GenRequest> requests;
    requests.reserve(problems.size() * static_cast<std::size_t>(params.n_samples));
    for (const auto& p : problems) {
        for (int k = 0; k < params.n_samples; ++k) {
            requests.push_back(
                {build_math_aug_prompt(p, templates), params.model, params.temperature, 2048, k});
        }
    }
    const auto outcomes = client.generate_batch(requests);

    ResponseAugRun run;
    std::size_t idx = 0;
    for (const auto& p : problems) {
        for (int k = 0; k < params.n_samples; ++k, ++idx) {
            const std::string call_id = p.id + ".k" + std::to_string(k);
            if (!outcomes[idx].ok()) {
                run.diags.items.push_back({call_id, outcomes[idx].error});
                continue;
            }
            try {
                const auto parsed = parse_math_aug_output(outcomes[idx].result->text);
                if (parsed.dropped > 0) {
                    run.diags.items.push_back(
                        {call_id, std::to_string(parsed.dropped) + " pair(s) without a \\boxed answer"});
                }
                for (const auto& pair : parsed.pairs) {
                    Sample s;
                    s.id = call_id + ".q" + std::to_string(pair.slot);
                    s.query = pair.question;
                    s.response = pair.solution;
                    s.answer = parse::extract_boxed_math(pair.solution).raw;
                    s.provenance.subset = params.subset_name;
                    s.provenance.query_source = params.model;
                    s.provenance.response_source = params.model;
                    s.provenance.temperature = params.temperature;
                    s.provenance.strategy = corpus::strategy_for_slot(pair.slot);
                    run.samples.push_back(std::move(s));
                }
            } catch (const Error& e) {
                run.diags.items.push_back({call_id, e.what()});
            }
        }
    }
    return run;
}

namespace {

std::string_view text_after(std::string_view haystack, std::string_view anchor) {
    const auto pos = haystack.find(anchor);
    if (pos == std::string_view::npos) return {};
    return trim(haystack.substr(pos + anchor.size()));
}

std::string synth_gsm_queries(std::string_view seed, bool six_ideas) {
    static constexpr std::array<std::string_view, 6> kHeadings = {
        "Change specific numbers",    "Introduce fractions or percentages",
        "Combine multiple concepts",  "Include a conditional statement",
        "Increase the complexity of the problem", "Introduce unknown quantities"};
    static constexpr std::array<std::string_view, 6> kTwists = {
        "Assume every count in the story is doubled.",
        "Assume 50% of the final amount is set aside first.",
        "Assume each unit also costs 3 dollars and ask for the total cost.",
        "If it is a weekend, one extra unit is added; assume 2 weekend days.",
        "A second person repeats the same activity three times; ask for the combined total.",
        "The final amount is known instead; ask for the quantity that produced it."};
    const int n = six_ideas ? 6 : 5;
    std::string out;
    for (int slot = 1; slot <= n; ++slot) {
        out += std::to_string(slot) + ". **" + std::string(kHeadings[slot - 1]) + ":** " +
               std::string(seed) + " " + std::string(kTwists[slot - 1]) + "\n";
    }
    return out;
}

std::string synth_gsm_response(std::string_view query, int sample_index) {
    const std::uint64_t h = rng::fnv1a(query);
    const long a = static_cast<long>(h % 50) + 2;
    const long b = static_cast<long>((h >> 8) % 50) + 3;
    long total = a + b;
    // Every fifth query disagrees with itself across samples, so consensus
    // filtering has something to discard.
    if (sample_index > 0 && h % 5 == 0) {
        total += sample_index;
    }
    const std::string expr = std::to_string(a) + "+" + std::to_string(b);
    const std::string sum = std::to_string(total);
    std::string body = "There are $" + expr + " = <<" + expr + "=" + sum + ">>" + sum +
                       "$ items in total. ##### " + sum;
    nlohmann::json dict;
    dict["query"] = std::string(query);
    dict["response"] = body;
    return dict.dump();
}

std::string synth_math_pairs(std::string_view question0) {
    const std::uint64_t h = rng::fnv1a(question0);
    std::string out;
    for (int slot = 1; slot <= 5; ++slot) {
        const long value = static_cast<long>((h >> slot) % 90) + slot;
        out += "Question" + std::to_string(slot) + ": " + std::string(question0) +
               " (variation " + std::to_string(slot) + ")\n";
        out += "Solution" + std::to_string(slot) + ": The value works out to $" +
               std::to_string(value) + " = \\boxed{" + std::to_string(value) + "}$. ##end" +
               std::to_string(slot) + "\n";
    }
    return out;
}

} // namespace

std::function<std::string(const llm::GenRequest&)> offline_synthesizer() {
    return [](const llm::GenRequest& req) -> std::string {
        const std::string_view prompt = req.prompt;
        if (prompt.find("Now you are given the question:") != std::string_view::npos) {
            const bool six = prompt.find("6. **Introduce unknown quantities") != std::string_view::npos;
            return synth_gsm_queries(text_after(prompt, "Now you are given the question:"), six);
        }
        if (prompt.find("The given question:") != std::string_view::npos) {
            return synth_gsm_response(text_after(prompt, "The given question:"), req.sample_index);
        }
        if (prompt.find("Question0:") != std::string_view::npos) {
            std::string_view tail = text_after(prompt, "Now, find five suitable variation");
            const std::string_view q0 = text_after(tail, "Question0:");
            const auto cut = q0.find("\n");
            return synth_math_pairs(trim(cut == std::string_view::npos ? q0 : q0.substr(0, cut)));
        }
        throw Error(Errc::fixture_missing, "offline synthesizer does not recognize this prompt");
    };
}

} // namespace augkit::augment
