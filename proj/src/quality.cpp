#include "augkit/quality.hpp"

#include "augkit/errors.hpp"
#include "augkit/sampling.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>

namespace augkit::quality {

using corpus::Sample;

namespace {

constexpr std::string_view kMarker = "#####";

std::size_t count_code_points(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

parse::ExtractedAnswer answer_of(const Sample& s) {
    return parse::make_answer(s.answer.value_or(std::string{}));
}

// answers_equal is tolerance-based, so equality is completed into an
// equivalence by transitive closure (union-find).
std::vector<std::size_t> equivalence_classes(const std::vector<parse::ExtractedAnswer>& answers,
                                             double abs_tol) {
    const std::size_t n = answers.size();
    std::vector<std::size_t> root(n);
    std::iota(root.begin(), root.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        while (root[i] != i) {
            root[i] = root[root[i]];
            i = root[i];
        }
        return i;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (parse::answers_equal(answers[i], answers[j], abs_tol)) {
                root[find(i)] = find(j);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) root[i] = find(i);
    return root;
}

void sort_by_id(std::vector<Sample>& samples) {
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.id < b.id; });
}

} // namespace

std::string trim_superfluous(std::string_view response) {
    const auto pos = response.rfind(kMarker);
    if (pos == std::string_view::npos) {
        return std::string(trim_view(response));
    }
    std::size_t i = pos + kMarker.size();
    while (i < response.size() && is_space(response[i])) ++i;
    while (i < response.size() && !is_space(response[i])) ++i;
    return std::string(trim_view(response.substr(0, i)));
}

std::pair<std::vector<Sample>, FilterReport> filter_responses(std::span<const Sample> samples,
                                                              std::size_t max_len) {
    if (max_len == 0) {
        throw Error(Errc::invalid_argument, "max_len must be > 0");
    }
    std::vector<Sample> kept;
    FilterReport report;
    for (const auto& s : samples) {
        parse::ExtractedAnswer extracted;
        try {
            extracted = parse::extract_final_answer_gsm(s.response);
        } catch (const Error&) {
            ++report.removed_no_answer;
            continue;
        }
        if (count_code_points(s.response) > max_len) {
            ++report.removed_too_long;
            continue;
        }
        Sample survivor = s;
        std::string trimmed = trim_superfluous(survivor.response);
        if (trimmed != survivor.response) {
            ++report.trimmed;
            survivor.response = std::move(trimmed);
        }
        survivor.answer = parse::extract_final_answer_gsm(survivor.response).raw;
        kept.push_back(std::move(survivor));
        ++report.kept;
    }
    return {std::move(kept), report};
}

VoteOutcome vote(std::span<const Sample> responses, double abs_tol) {
    if (responses.size() < 2) {
        throw Error(Errc::too_few_responses,
                    "vote needs at least 2 responses, got " + std::to_string(responses.size()));
    }
    std::vector<parse::ExtractedAnswer> answers;
    answers.reserve(responses.size());
    for (const auto& s : responses) {
        answers.push_back(answer_of(s));
    }
    const auto roots = equivalence_classes(answers, abs_tol);

    std::map<std::size_t, std::vector<std::size_t>> classes; // root -> member indexes
    for (std::size_t i = 0; i < roots.size(); ++i) {
        classes[roots[i]].push_back(i);
    }
    std::size_t max_size = 0;
    for (const auto& [root, members] : classes) {
        max_size = std::max(max_size, members.size());
    }

    VoteOutcome outcome;
    if (max_size == 1) {
        outcome.verdict = Verdict::all_distinct;
        return outcome;
    }
    std::vector<std::size_t> winners;
    for (const auto& [root, members] : classes) {
        if (members.size() == max_size) {
            winners.push_back(root);
        }
    }
    if (winners.size() > 1) {
        outcome.verdict = Verdict::tie;
        return outcome;
    }
    const auto& members = classes[winners.front()];
    outcome.verdict = Verdict::consensus;
    outcome.votes = members.size();
    outcome.consensus_answer = answers[*std::min_element(members.begin(), members.end())];
    outcome.per_response.assign(responses.size(), Label::wrong);
    for (std::size_t i : members) {
        outcome.per_response[i] = Label::correct;
    }
    return outcome;
}

std::vector<ResponseGroup> group_by_query(std::span<const Sample> samples) {
    std::map<std::string, ResponseGroup> grouped;
    for (const auto& s : samples) {
        auto& group = grouped[s.query];
        group.query = s.query;
        group.samples.push_back(s);
    }
    std::vector<ResponseGroup> out;
    out.reserve(grouped.size());
    for (auto& [query, group] : grouped) {
        out.push_back(std::move(group));
    }
    return out;
}

std::vector<Sample> apply_majority_filter(std::span<const ResponseGroup> groups, double abs_tol) {
    std::vector<Sample> kept;
    for (const auto& group : groups) {
        if (group.samples.size() >= 2 &&
            vote(group.samples, abs_tol).verdict == Verdict::all_distinct) {
            continue;
        }
        kept.insert(kept.end(), group.samples.begin(), group.samples.end());
    }
    sort_by_id(kept);
    return kept;
}

CwhSplit build_correct_wrong_half(std::span<const ResponseGroup> groups, std::uint64_t seed,
                                  double abs_tol) {
    struct Pick {
        Sample correct;
        Sample wrong;
    };
    std::vector<const ResponseGroup*> ordered;
    for (const auto& g : groups) ordered.push_back(&g);
    std::sort(ordered.begin(), ordered.end(),
              [](const ResponseGroup* a, const ResponseGroup* b) { return a->query < b->query; });

    std::mt19937_64 gen(seed);
    std::vector<Pick> picks;
    for (const ResponseGroup* group : ordered) {
        if (group->samples.size() < 2) continue;
        const auto outcome = vote(group->samples, abs_tol);
        if (outcome.verdict != Verdict::consensus) continue;
        if (outcome.votes == group->samples.size()) continue; // unanimous group

        std::vector<std::size_t> correct_idx, wrong_idx;
        for (std::size_t i = 0; i < outcome.per_response.size(); ++i) {
            (outcome.per_response[i] == Label::correct ? correct_idx : wrong_idx).push_back(i);
        }
        Pick pick;
        pick.correct = group->samples[correct_idx[rng::bounded(gen, correct_idx.size())]];
        pick.wrong = group->samples[wrong_idx[rng::bounded(gen, wrong_idx.size())]];
        picks.push_back(std::move(pick));
    }
    if (picks.empty()) {
        throw Error(Errc::no_eligible_groups,
                    "no group has a non-unanimous consensus to draw from");
    }

    CwhSplit split;
    const auto half_idx = rng::sample_indices(picks.size(), picks.size() / 2, gen);
    std::vector<bool> take_correct(picks.size(), false);
    for (std::size_t i : half_idx) take_correct[i] = true;
    for (std::size_t i = 0; i < picks.size(); ++i) {
        split.correct.push_back(picks[i].correct);
        split.wrong.push_back(picks[i].wrong);
        split.half.push_back(take_correct[i] ? picks[i].correct : picks[i].wrong);
    }
    sort_by_id(split.correct);
    sort_by_id(split.wrong);
    sort_by_id(split.half);
    return split;
}

} // namespace augkit::quality
