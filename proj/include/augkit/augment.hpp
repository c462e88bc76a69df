#pragma once

#include "augkit/corpus.hpp"
#include "augkit/llm_client.hpp"

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace augkit::augment {

// The completion templates for the three generation protocols. Defaults are
// embedded; any of them can be overridden from plain-text files.
struct PromptTemplates {
    std::string gsm_query;           // numbered-ideas query rewriting
    std::string gsm_query_extra;     // optional 6th idea block
    std::string gsm_response;        // 1-shot step-by-step solver
    std::string gsm_response_zero;   // zero-shot solver variant
    std::string math_aug;            // QuestionN/SolutionN variation protocol
};

const PromptTemplates& default_prompt_templates();

// Text that stands in for the seed problem inside every template.
constexpr std::string_view kQuerySentinel = "****A new math problem here.****";
constexpr std::string_view kSolutionSentinel = "****corresponding solution here here.****";

struct QueryAugBatch {
    std::string parent_id;
    std::vector<corpus::AugmentedQuery> queries; // one per strategy slot
};

struct MathAugPair {
    std::string question;
    std::string solution; // carries a \boxed answer
    int slot = 0;         // 1..5, matches the QuestionN/SolutionN labels
};

struct MathParse {
    std::vector<MathAugPair> pairs;
    std::size_t dropped = 0; // pairs without a \boxed answer
};

// Per-seed failures collected instead of aborting a run.
struct Diagnostics {
    struct Item {
        std::string seed_id;
        std::string message;
    };
    std::vector<Item> items;
};

// ---- prompt construction ---------------------------------------------------

std::string build_gsm_query_prompt(const corpus::Problem& problem,
                                   bool include_introduce_unknown = false,
                                   const PromptTemplates& templates = default_prompt_templates());
std::string build_gsm_query_prompt(std::string_view seed_query,
                                   bool include_introduce_unknown = false,
                                   const PromptTemplates& templates = default_prompt_templates());

std::string build_gsm_response_prompt(std::string_view query, bool zero_shot = false,
                                      const PromptTemplates& templates = default_prompt_templates());

std::string build_math_aug_prompt(const corpus::Problem& problem,
                                  const PromptTemplates& templates = default_prompt_templates());

// ---- completion parsing ------------------------------------------------

struct QueryParseContext {
    std::string generator;
    double temperature = 1.0;
    int expected_items = 5; // 6 when the unknown-quantities idea is enabled
};

// Locates the numbered items (tolerant of bold markers and re-worded
// headings), assigns strategies by slot number, strips heading text.
QueryAugBatch parse_gsm_query_output(std::string_view text, const std::string& parent_id,
                                     const QueryParseContext& ctx);

// Accepts either a python-dict-style completion with a "response" key or a
// bare completion; the result must contain a "#####" answer marker.
std::string parse_gsm_response_output(std::string_view completion);

MathParse parse_math_aug_output(std::string_view completion);

// ---- orchestration -------------------------------------------------------

struct QuerySlot {
    std::string parent_id;
    int round = 1;
    int slot = 1;
    std::string id; // deterministic: <parent>.s<slot>
};

struct MathSlot {
    std::string parent_id;
    int sample_index = 0;
    int slot = 1;
    std::string id; // deterministic: <parent>.k<sample>.q<slot>
};

// Slot enumeration drives request construction and id assignment; it is also
// the arithmetic that fixes how many records a run can produce.
std::vector<QuerySlot> plan_query_slots(std::span<const std::string> parent_ids, int round,
                                        int n_strategies);
std::vector<MathSlot> plan_math_slots(std::span<const std::string> parent_ids, int n_samples);

struct QueryAugParams {
    std::string model = "gpt-4";
    double temperature = 1.0;
    int rounds = 1;
    bool include_introduce_unknown = false;
    const PromptTemplates* templates = nullptr; // null -> defaults
};

struct QueryAugRun {
    std::vector<corpus::AugmentedQuery> queries;
    Diagnostics diags;
};

// One generate call per seed per round; round 2+ treats the previous round's
// outputs as seeds. Failed parses are diagnostics, not fatal.
QueryAugRun run_query_augmentation(std::span<const corpus::Problem> problems, llm::Client& client,
                                   const QueryAugParams& params);

struct ResponseAugParams {
    std::string model = "gpt-4";
    double temperature = 1.0;
    int n_samples = 1;
    bool zero_shot = false;
    std::string subset_name;
    std::string query_source;
    const PromptTemplates* templates = nullptr;
};

struct ResponseAugRun {
    std::vector<corpus::Sample> samples;
    Diagnostics diags;
};

// n_samples generate calls per query with distinct sample_index values;
// completions that fail parse_gsm_response_output are dropped with a
// diagnostic.
ResponseAugRun run_response_augmentation(std::span<const corpus::AugmentedQuery> queries,
                                         llm::Client& client, const ResponseAugParams& params);

struct MathAugParams {
    std::string model = "gpt-4";
    double temperature = 0.7;
    int n_samples = 1;
    std::string subset_name;
    const PromptTemplates* templates = nullptr;
};

// The variation protocol yields full (question, solution) pairs, so its
// output is Samples directly.
ResponseAugRun run_math_augmentation(std::span<const corpus::Problem> problems,
                                     llm::Client& client, const MathAugParams& params);

// Deterministic stand-in generator for offline runs: recognizes the three
// prompt protocols and fabricates well-formed completions that depend only
// on the request. Plugged into a mock-backend Client.
std::function<std::string(const llm::GenRequest&)> offline_synthesizer();

} // namespace augkit::augment
