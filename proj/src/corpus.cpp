#include "augkit/corpus.hpp"

#include "augkit/errors.hpp"
#include "augkit/parse.hpp"
#include "augkit/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace augkit::corpus {

using nlohmann::json;

namespace {

// Line-oriented reader shared by every load_* entry point.
template <typename Fn>
void for_each_jsonl_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_failure, "cannot open " + path.string());
    }
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(Errc::malformed_line,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        if (!obj.is_object()) {
            throw Error(Errc::malformed_line,
                        path.string() + ":" + std::to_string(line_no) + ": not a JSON object",
                        line_no);
        }
        fn(obj, line_no);
    }
}

std::string require_string(const json& obj, const char* key, long line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error(Errc::missing_field,
                    std::string("line ") + std::to_string(line_no) + ": missing field '" + key +
                        "'",
                    line_no);
    }
    return it->get<std::string>();
}

double require_number(const json& obj, const char* key, long line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw Error(Errc::missing_field,
                    std::string("line ") + std::to_string(line_no) + ": missing field '" + key +
                        "'",
                    line_no);
    }
    return it->get<double>();
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

void check_unique_id(std::unordered_set<std::string>& seen, const std::string& id, long line_no) {
    if (id.empty()) {
        throw Error(Errc::missing_field, "line " + std::to_string(line_no) + ": empty id",
                    line_no);
    }
    if (!seen.insert(id).second) {
        throw Error(Errc::duplicate_id, "duplicate id '" + id + "' at line " +
                                            std::to_string(line_no),
                    line_no);
    }
}

// Validation reuses the one answer comparator the rest of the pipeline
// grades with.
bool answer_matches_response(const std::string& answer, const std::string& response) {
    const auto expected = parse::make_answer(answer);
    try {
        if (parse::answers_equal(parse::extract_final_answer_gsm(response), expected)) {
            return true;
        }
    } catch (const Error&) {
    }
    try {
        if (parse::answers_equal(parse::extract_boxed_math(response), expected)) {
            return true;
        }
    } catch (const Error&) {
    }
    return false;
}

json to_json(const Problem& p) {
    json obj;
    obj["id"] = p.id;
    obj["dataset"] = to_string(p.dataset);
    if (p.subject) obj["subject"] = *p.subject;
    obj["query"] = p.query;
    obj["response"] = p.gold_response;
    if (p.gold_answer) obj["answer"] = *p.gold_answer;
    return obj;
}

json to_json(const AugmentedQuery& q) {
    json obj;
    obj["id"] = q.id;
    obj["parent_id"] = q.parent_id;
    obj["strategy"] = to_string(q.strategy);
    obj["query"] = q.query;
    obj["generator"] = q.generator;
    obj["temperature"] = q.temperature;
    return obj;
}

json to_json(const Sample& s) {
    json prov;
    prov["subset"] = s.provenance.subset;
    prov["query_source"] = s.provenance.query_source;
    prov["response_source"] = s.provenance.response_source;
    prov["temperature"] = s.provenance.temperature;
    if (s.provenance.strategy) prov["strategy"] = to_string(*s.provenance.strategy);

    json obj;
    obj["id"] = s.id;
    obj["query"] = s.query;
    obj["response"] = s.response;
    if (s.answer) obj["answer"] = *s.answer;
    obj["provenance"] = prov;
    return obj;
}

template <typename Record>
std::size_t write_records(std::span<const Record> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::io_failure, "cannot write " + path.string());
    }
    for (const auto& r : records) {
        out << to_json(r).dump() << '\n';
    }
    out.flush();
    if (!out) {
        throw Error(Errc::io_failure, "write failed for " + path.string());
    }
    return records.size();
}

std::string regenerate_id(const Sample& s) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(rng::fnv1a(s.query + '\x1f' + s.response)));
    return s.id + "+" + buf;
}

void sort_by_id(std::vector<Sample>& samples) {
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.id < b.id; });
}

} // namespace

const char* to_string(Dataset d) noexcept {
    return d == Dataset::math ? "math" : "gsm8k";
}

const char* to_string(Strategy s) noexcept {
    switch (s) {
    case Strategy::change_numbers: return "change_numbers";
    case Strategy::fractions_percentages: return "fractions_percentages";
    case Strategy::combine_concepts: return "combine_concepts";
    case Strategy::conditional_statement: return "conditional_statement";
    case Strategy::increase_complexity: return "increase_complexity";
    case Strategy::introduce_unknown: return "introduce_unknown";
    }
    return "change_numbers";
}

Dataset dataset_from_string(std::string_view name) {
    if (name == "gsm8k") return Dataset::gsm8k;
    if (name == "math") return Dataset::math;
    throw Error(Errc::invalid_argument, "unknown dataset: " + std::string(name));
}

Strategy strategy_from_string(std::string_view name) {
    if (name == "change_numbers") return Strategy::change_numbers;
    if (name == "fractions_percentages") return Strategy::fractions_percentages;
    if (name == "combine_concepts") return Strategy::combine_concepts;
    if (name == "conditional_statement") return Strategy::conditional_statement;
    if (name == "increase_complexity") return Strategy::increase_complexity;
    if (name == "introduce_unknown") return Strategy::introduce_unknown;
    throw Error(Errc::invalid_argument, "unknown strategy: " + std::string(name));
}

Strategy strategy_for_slot(int slot) {
    switch (slot) {
    case 1: return Strategy::change_numbers;
    case 2: return Strategy::fractions_percentages;
    case 3: return Strategy::combine_concepts;
    case 4: return Strategy::conditional_statement;
    case 5: return Strategy::increase_complexity;
    case 6: return Strategy::introduce_unknown;
    }
    throw Error(Errc::invalid_argument, "strategy slot out of range: " + std::to_string(slot));
}

int slot_for_strategy(Strategy s) noexcept {
    return static_cast<int>(s) + 1;
}

// ---- SubsetRegistry --------------------------------------------------------

void SubsetRegistry::register_subset(const SubsetSpec& spec, std::string path, std::size_t size) {
    if (spec.name.empty()) {
        throw Error(Errc::invalid_argument, "subset name must be non-empty");
    }
    if (spec.target_size && *spec.target_size == 0) {
        throw Error(Errc::invalid_argument, "subset target_size must be > 0");
    }
    if (entries_.count(spec.name)) {
        throw Error(Errc::duplicate_name, "subset '" + spec.name + "' already registered");
    }
    entries_[spec.name] = ManifestEntry{spec, std::move(path), size};
}

const ManifestEntry& SubsetRegistry::resolve(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw Error(Errc::unknown_subset, "unknown subset '" + name + "'");
    }
    return it->second;
}

bool SubsetRegistry::contains(const std::string& name) const {
    return entries_.count(name) != 0;
}

void SubsetRegistry::update_file(const std::string& name, std::string path, std::size_t size) {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw Error(Errc::unknown_subset, "unknown subset '" + name + "'");
    }
    it->second.path = std::move(path);
    it->second.size = size;
}

void SubsetRegistry::save(const std::filesystem::path& path) const {
    json subsets = json::object();
    for (const auto& [name, entry] : entries_) {
        json spec;
        spec["name"] = entry.spec.name;
        spec["query_source"] = entry.spec.query_source;
        spec["response_source"] = entry.spec.response_source;
        spec["temperature"] = entry.spec.temperature;
        if (entry.spec.target_size) spec["target_size"] = *entry.spec.target_size;
        subsets[name] = {{"spec", spec}, {"path", entry.path}, {"size", entry.size}};
    }
    json manifest;
    manifest["seed"] = seed;
    manifest["subsets"] = subsets;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::io_failure, "cannot write manifest " + path.string());
    }
    out << manifest.dump(2) << '\n';
}

SubsetRegistry SubsetRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_failure, "cannot open manifest " + path.string());
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::parse_error& e) {
        throw Error(Errc::malformed_line, path.string() + ": " + e.what());
    }
    SubsetRegistry reg;
    reg.seed = manifest.value("seed", std::uint64_t{0});
    for (const auto& [name, entry] : manifest.at("subsets").items()) {
        const json& spec = entry.at("spec");
        SubsetSpec s;
        s.name = spec.at("name").get<std::string>();
        s.query_source = spec.value("query_source", "");
        s.response_source = spec.value("response_source", "");
        s.temperature = spec.value("temperature", 0.0);
        if (spec.contains("target_size")) s.target_size = spec.at("target_size").get<std::size_t>();
        reg.register_subset(s, entry.value("path", ""), entry.value("size", std::size_t{0}));
    }
    return reg;
}

std::vector<SubsetSpec> builtin_subsets() {
    std::vector<SubsetSpec> out;
    out.push_back({"D", "human", "human", 0.0, 7500});
    for (int j = 1; j <= 5; ++j) {
        out.push_back({"D_1^" + std::to_string(j), "gpt-3.5", "gpt-4", 1.0, 30000});
    }
    out.push_back({"D_1^6", "gpt-3.5", "gpt-4", 0.0, 30000});
    out.push_back({"D_1^7", "gpt-3.5", "gpt-3.5", 1.0, 25000});
    out.push_back({"D_1^8", "gpt-3.5", "gpt-4", 1.0, 30000});
    out.push_back({"D_2^1", "gpt-4", "gpt-4", 0.0, 35000});
    out.push_back({"hat_D_2^1", "gpt-4", "gpt-4", 0.0, 30000});
    out.push_back({"D_3^1", "gpt-3.5", "gpt-4", 1.0, 30000});
    return out;
}

// ---- JSONL load/store ------------------------------------------------------

std::vector<Problem> load_problems(const std::filesystem::path& path) {
    std::vector<Problem> out;
    std::unordered_set<std::string> ids;
    for_each_jsonl_line(path, [&](const json& obj, long line_no) {
        Problem p;
        p.id = require_string(obj, "id", line_no);
        check_unique_id(ids, p.id, line_no);
        const std::string ds = require_string(obj, "dataset", line_no);
        try {
            p.dataset = dataset_from_string(ds);
        } catch (const Error&) {
            throw Error(Errc::malformed_line,
                        "line " + std::to_string(line_no) + ": bad dataset '" + ds + "'", line_no);
        }
        p.subject = optional_string(obj, "subject");
        if ((p.dataset == Dataset::math) != p.subject.has_value()) {
            throw Error(Errc::malformed_line,
                        "line " + std::to_string(line_no) +
                            ": subject must be present iff dataset is math",
                        line_no);
        }
        p.query = require_string(obj, "query", line_no);
        p.gold_response = require_string(obj, "response", line_no);
        p.gold_answer = optional_string(obj, "answer");
        if (p.gold_answer && !answer_matches_response(*p.gold_answer, p.gold_response)) {
            throw Error(Errc::malformed_line,
                        "line " + std::to_string(line_no) +
                            ": answer is not extractable from response",
                        line_no);
        }
        out.push_back(std::move(p));
    });
    return out;
}

std::vector<AugmentedQuery> load_aug_queries(const std::filesystem::path& path) {
    std::vector<AugmentedQuery> out;
    std::unordered_set<std::string> ids;
    for_each_jsonl_line(path, [&](const json& obj, long line_no) {
        AugmentedQuery q;
        q.id = require_string(obj, "id", line_no);
        check_unique_id(ids, q.id, line_no);
        q.parent_id = require_string(obj, "parent_id", line_no);
        if (q.parent_id.empty()) {
            throw Error(Errc::missing_field, "line " + std::to_string(line_no) + ": empty parent_id",
                        line_no);
        }
        const std::string strat = require_string(obj, "strategy", line_no);
        try {
            q.strategy = strategy_from_string(strat);
        } catch (const Error&) {
            throw Error(Errc::malformed_line,
                        "line " + std::to_string(line_no) + ": bad strategy '" + strat + "'",
                        line_no);
        }
        q.query = require_string(obj, "query", line_no);
        q.generator = require_string(obj, "generator", line_no);
        q.temperature = require_number(obj, "temperature", line_no);
        if (q.temperature < 0.0 || q.temperature > 2.0) {
            throw Error(Errc::malformed_line,
                        "line " + std::to_string(line_no) + ": temperature out of [0,2]", line_no);
        }
        out.push_back(std::move(q));
    });
    return out;
}

std::vector<Sample> load_samples(const std::filesystem::path& path) {
    std::vector<Sample> out;
    std::unordered_set<std::string> ids;
    for_each_jsonl_line(path, [&](const json& obj, long line_no) {
        Sample s;
        s.id = require_string(obj, "id", line_no);
        check_unique_id(ids, s.id, line_no);
        s.query = require_string(obj, "query", line_no);
        s.response = require_string(obj, "response", line_no);
        s.answer = optional_string(obj, "answer");
        if (s.answer && !answer_matches_response(*s.answer, s.response)) {
            throw Error(Errc::malformed_line,
                        "line " + std::to_string(line_no) +
                            ": answer does not equal the extraction from response",
                        line_no);
        }
        auto prov_it = obj.find("provenance");
        if (prov_it == obj.end() || !prov_it->is_object()) {
            throw Error(Errc::missing_field,
                        "line " + std::to_string(line_no) + ": missing field 'provenance'",
                        line_no);
        }
        const json& prov = *prov_it;
        s.provenance.subset = require_string(prov, "subset", line_no);
        s.provenance.query_source = require_string(prov, "query_source", line_no);
        s.provenance.response_source = require_string(prov, "response_source", line_no);
        s.provenance.temperature = require_number(prov, "temperature", line_no);
        if (auto strat = optional_string(prov, "strategy")) {
            s.provenance.strategy = strategy_from_string(*strat);
        }
        out.push_back(std::move(s));
    });
    return out;
}

std::size_t write_jsonl(std::span<const Problem> records, const std::filesystem::path& path) {
    return write_records(records, path);
}

std::size_t write_jsonl(std::span<const AugmentedQuery> records,
                        const std::filesystem::path& path) {
    return write_records(records, path);
}

std::size_t write_jsonl(std::span<const Sample> records, const std::filesystem::path& path) {
    return write_records(records, path);
}

// ---- assembly ----------------------------------------------------------

std::vector<Sample> downsample(std::span<const Sample> samples, std::size_t target_size,
                               std::uint64_t seed) {
    if (target_size > samples.size()) {
        throw Error(Errc::target_too_large,
                    "target " + std::to_string(target_size) + " exceeds input size " +
                        std::to_string(samples.size()));
    }
    std::mt19937_64 gen(seed);
    const auto picks = rng::sample_indices(samples.size(), target_size, gen);
    std::vector<Sample> out;
    out.reserve(picks.size());
    for (std::size_t i : picks) {
        out.push_back(samples[i]);
    }
    sort_by_id(out);
    return out;
}

std::vector<Sample> union_datasets(const std::vector<std::vector<Sample>>& datasets) {
    std::vector<Sample> out;
    std::set<std::pair<std::string_view, std::string_view>> seen_pairs;
    std::unordered_set<std::string> seen_ids;
    for (const auto& ds : datasets) {
        for (const auto& s : ds) {
            if (!seen_pairs.emplace(s.query, s.response).second) {
                continue; // exact duplicate
            }
            Sample copy = s;
            if (!seen_ids.insert(copy.id).second) {
                copy.id = regenerate_id(copy);
                seen_ids.insert(copy.id);
            }
            out.push_back(std::move(copy));
        }
    }
    // seen_pairs views point into `datasets`, which outlives the loop.
    sort_by_id(out);
    return out;
}

std::vector<Sample> build_mixed(const std::map<Strategy, std::vector<Sample>>& per_strategy,
                                double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw Error(Errc::invalid_argument, "fraction must be in (0, 1]");
    }
    std::vector<std::vector<Sample>> picked;
    for (const auto& [strategy, samples] : per_strategy) {
        if (samples.empty()) {
            throw Error(Errc::empty_strategy_set,
                        std::string("strategy set '") + to_string(strategy) + "' is empty");
        }
        const auto k = static_cast<std::size_t>(fraction * static_cast<double>(samples.size()));
        std::mt19937_64 gen(rng::stage_seed(seed, to_string(strategy)));
        const auto picks = rng::sample_indices(samples.size(), k, gen);
        std::vector<Sample> chosen;
        chosen.reserve(picks.size());
        for (std::size_t i : picks) {
            chosen.push_back(samples[i]);
        }
        picked.push_back(std::move(chosen));
    }
    return union_datasets(picked);
}

// ---- SFT export ----------------------------------------------------------

const std::string_view kDefaultSftTemplate =
    "Below is an instruction that describes a task. "
    "Write a response that appropriately completes the request.\n\n"
    "### Instruction:\n{query}\n\n### Response:\n{response}";

namespace {

// Single pass over the template; substituted values are never rescanned.
std::string render_template(std::string_view tmpl, std::string_view query,
                            std::string_view response) {
    static constexpr std::string_view kQuery = "{query}";
    static constexpr std::string_view kResponse = "{response}";
    std::string out;
    out.reserve(tmpl.size() + query.size() + response.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const std::size_t q = tmpl.find(kQuery, pos);
        const std::size_t r = tmpl.find(kResponse, pos);
        const std::size_t next = std::min(q, r);
        if (next == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, next - pos));
        if (next == q) {
            out.append(query);
            pos = next + kQuery.size();
        } else {
            out.append(response);
            pos = next + kResponse.size();
        }
    }
    return out;
}

} // namespace

std::vector<std::string> export_sft(std::span<const Sample> samples, std::string_view tmpl) {
    if (tmpl.find("{query}") == std::string_view::npos) {
        throw Error(Errc::missing_placeholder, "template lacks {query} placeholder");
    }
    if (tmpl.find("{response}") == std::string_view::npos) {
        throw Error(Errc::missing_placeholder, "template lacks {response} placeholder");
    }
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(render_template(tmpl, s.query, s.response));
    }
    return out;
}

} // namespace augkit::corpus
