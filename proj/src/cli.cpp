#include "augkit/cli.hpp"

#include "augkit/analyze.hpp"
#include "augkit/augment.hpp"
#include "augkit/corpus.hpp"
#include "augkit/errors.hpp"
#include "augkit/eval_harness.hpp"
#include "augkit/llm_client.hpp"
#include "augkit/parse.hpp"
#include "augkit/quality.hpp"
#include "augkit/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace augkit::cli {

using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 42;
    std::string backend = "mock";
    std::string base_url;
    std::string api_key_env = "LLM_API_KEY";
    std::string cache_dir;
    int concurrency = 4;
    int retry_max_attempts = 3;
    int retry_backoff_ms = 250;
    double tolerance = 1e-3;
    std::size_t max_response_len = 1500;
    std::string prompts_dir;
    std::string run_manifest;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// key = value file with [section] headers. Flags win over config values.
void apply_config_file(CommonOpts& opts, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::config_error, "cannot open config file " + path);
    }
    std::string section;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v = trim(line);
        if (v.empty() || v.front() == '#') continue;
        if (v.front() == '[' && v.back() == ']') {
            section = std::string(trim(v.substr(1, v.size() - 2)));
            continue;
        }
        const auto eq = v.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Errc::config_error,
                        path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = std::string(trim(v.substr(0, eq)));
        const std::string value = std::string(trim(v.substr(eq + 1)));
        const std::string qualified = section.empty() ? key : section + "." + key;
        try {
            if (qualified == "seed") opts.seed = std::stoull(value);
            else if (qualified == "backend.kind") opts.backend = value;
            else if (qualified == "backend.base_url") opts.base_url = value;
            else if (qualified == "backend.api_key_env") opts.api_key_env = value;
            else if (qualified == "backend.cache_dir") opts.cache_dir = value;
            else if (qualified == "backend.concurrency") opts.concurrency = std::stoi(value);
            else if (qualified == "backend.retry_max_attempts") opts.retry_max_attempts = std::stoi(value);
            else if (qualified == "backend.retry_base_backoff_ms") opts.retry_backoff_ms = std::stoi(value);
            else if (qualified == "tolerances.answer_abs_tol") opts.tolerance = std::stod(value);
            else if (qualified == "tolerances.max_response_len") opts.max_response_len = std::stoul(value);
            else if (qualified == "paths.prompts_dir") opts.prompts_dir = value;
            else {
                throw Error(Errc::config_error,
                            path + ":" + std::to_string(line_no) + ": unknown key '" + qualified +
                                "'");
            }
        } catch (const std::invalid_argument&) {
            throw Error(Errc::config_error,
                        path + ":" + std::to_string(line_no) + ": bad value for '" + qualified +
                            "'");
        }
    }
}

llm::Client make_client(const CommonOpts& opts) {
    llm::BackendConfig cfg;
    cfg.kind = llm::backend_from_string(opts.backend);
    cfg.base_url = opts.base_url;
    cfg.api_key_env = opts.api_key_env;
    cfg.cache_dir = opts.cache_dir;
    cfg.max_concurrency = opts.concurrency;
    cfg.retry.max_attempts = opts.retry_max_attempts;
    cfg.retry.base_backoff = std::chrono::milliseconds(opts.retry_backoff_ms);
    llm::Client client(cfg);
    if (cfg.kind == llm::BackendKind::mock) {
        client.set_mock_synthesizer(augment::offline_synthesizer());
    }
    return client;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::io_failure, "cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

augment::PromptTemplates load_templates(const std::string& dir) {
    augment::PromptTemplates templates = augment::default_prompt_templates();
    if (dir.empty()) return templates;
    auto maybe = [&](const char* name, std::string& slot) {
        const auto path = std::filesystem::path(dir) / name;
        if (std::filesystem::exists(path)) {
            slot = read_text_file(path.string());
        }
    };
    maybe("gsm_query_aug.txt", templates.gsm_query);
    maybe("gsm_query_aug_extra.txt", templates.gsm_query_extra);
    maybe("gsm_response_1shot.txt", templates.gsm_response);
    maybe("gsm_response_zero_shot.txt", templates.gsm_response_zero);
    maybe("math_aug.txt", templates.math_aug);
    return templates;
}

std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) return 0;
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++n;
    }
    return n;
}

void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
}

// Every run records what went in, what came out and how it was seeded.
class RunRecorder {
public:
    RunRecorder(std::string command, const CommonOpts& opts)
        : started_(std::chrono::steady_clock::now()), command_(command),
          path_(opts.run_manifest) {
        manifest_["command"] = std::move(command);
        manifest_["seed"] = opts.seed;
        manifest_["backend"] = opts.backend;
        manifest_["inputs"] = json::object();
        manifest_["outputs"] = json::object();
        manifest_["counts"] = json::object();
    }

    void input(const std::string& path) {
        if (!path.empty()) manifest_["inputs"][path] = count_lines(path);
    }
    void output(const std::string& path) {
        if (!path.empty()) manifest_["outputs"][path] = count_lines(path);
    }
    void count(const std::string& name, std::uint64_t value) {
        manifest_["counts"][name] = value;
    }
    void default_path(const std::string& derived_from) {
        if (path_.empty() && !derived_from.empty()) {
            path_ = derived_from + ".run.json";
        }
    }

    void write() {
        if (path_.empty()) {
            path_ = command_ + ".run.json"; // stdout-only commands still record
        }
        const auto elapsed = std::chrono::steady_clock::now() - started_;
        manifest_["timings_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        ensure_parent_dir(path_);
        std::ofstream out(path_, std::ios::trunc);
        if (!out) {
            throw Error(Errc::io_failure, "cannot write run manifest " + path_);
        }
        out << manifest_.dump(2) << '\n';
    }

private:
    std::chrono::steady_clock::time_point started_;
    std::string command_;
    std::string path_;
    json manifest_;
};

void write_lines(const std::vector<std::string>& lines, const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::io_failure, "cannot write " + path);
    }
    for (const auto& line : lines) {
        out << line << '\n';
    }
}

// ---- ingest ---------------------------------------------------------------

// GSM-style gold responses close with a four-hash marker; the pipeline's
// parsers key on five, so ingestion widens it.
std::string normalize_gsm_marker(std::string response) {
    auto pos = response.rfind("####");
    while (pos != std::string::npos) {
        const bool five = (pos + 4 < response.size() && response[pos + 4] == '#') ||
                          (pos > 0 && response[pos - 1] == '#');
        if (!five) {
            response.insert(pos, "#");
            return response;
        }
        pos = pos == 0 ? std::string::npos : response.rfind("####", pos - 1);
    }
    return response;
}

int cmd_ingest(const CommonOpts& opts, const std::string& input, const std::string& format,
               const std::string& output, const std::string& id_prefix) {
    RunRecorder rec("ingest", opts);
    rec.default_path(output);
    rec.input(input);

    std::vector<corpus::Problem> problems;
    if (format == "problems") {
        problems = corpus::load_problems(input);
    } else {
        std::ifstream in(input);
        if (!in) {
            throw Error(Errc::io_failure, "cannot open " + input);
        }
        std::string line;
        long line_no = 0;
        std::size_t index = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json obj;
            try {
                obj = json::parse(line);
            } catch (const json::parse_error& e) {
                throw Error(Errc::malformed_line,
                            input + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
            }
            char suffix[16];
            std::snprintf(suffix, sizeof(suffix), "%05zu", index++);
            corpus::Problem p;
            p.id = id_prefix + suffix;
            if (format == "gsm8k") {
                if (!obj.contains("question") || !obj.contains("answer")) {
                    throw Error(Errc::missing_field,
                                "line " + std::to_string(line_no) + ": need 'question', 'answer'",
                                line_no);
                }
                p.dataset = corpus::Dataset::gsm8k;
                p.query = obj["question"].get<std::string>();
                p.gold_response = normalize_gsm_marker(obj["answer"].get<std::string>());
                try {
                    p.gold_answer = parse::extract_final_answer_gsm(p.gold_response).raw;
                } catch (const Error&) {
                }
            } else if (format == "math") {
                if (!obj.contains("problem") || !obj.contains("solution")) {
                    throw Error(Errc::missing_field,
                                "line " + std::to_string(line_no) + ": need 'problem', 'solution'",
                                line_no);
                }
                p.dataset = corpus::Dataset::math;
                p.subject = obj.value("type", "unknown");
                p.query = obj["problem"].get<std::string>();
                p.gold_response = obj["solution"].get<std::string>();
                try {
                    p.gold_answer = parse::extract_boxed_math(p.gold_response).raw;
                } catch (const Error&) {
                }
            } else {
                throw Error(Errc::invalid_argument, "unknown ingest format: " + format);
            }
            problems.push_back(std::move(p));
        }
    }
    ensure_parent_dir(output);
    corpus::write_jsonl(std::span<const corpus::Problem>(problems), output);
    rec.output(output);
    rec.count("problems", problems.size());
    rec.write();
    std::cout << "ingested " << problems.size() << " problems -> " << output << '\n';
    return 0;
}

// ---- augment-queries -------------------------------------------------------

int cmd_augment_queries(const CommonOpts& opts, const std::string& input,
                        const std::string& output, const std::string& model, double temperature,
                        int rounds, bool six_strategies, const std::string& protocol,
                        int n_samples, const std::string& subset_name) {
    RunRecorder rec("augment-queries", opts);
    rec.default_path(output);
    rec.input(input);

    const auto problems = corpus::load_problems(input);
    auto client = make_client(opts);
    const auto templates = load_templates(opts.prompts_dir);
    ensure_parent_dir(output);

    std::size_t produced = 0;
    std::size_t diags = 0;
    if (protocol == "gsm") {
        augment::QueryAugParams params;
        params.model = model;
        params.temperature = temperature;
        params.rounds = rounds;
        params.include_introduce_unknown = six_strategies;
        params.templates = &templates;
        auto run = augment::run_query_augmentation(problems, client, params);
        corpus::write_jsonl(std::span<const corpus::AugmentedQuery>(run.queries), output);
        produced = run.queries.size();
        diags = run.diags.items.size();
        rec.count("augmented_queries", produced);
    } else if (protocol == "math") {
        augment::MathAugParams params;
        params.model = model;
        params.temperature = temperature;
        params.n_samples = n_samples;
        params.subset_name = subset_name;
        params.templates = &templates;
        auto run = augment::run_math_augmentation(problems, client, params);
        corpus::write_jsonl(std::span<const corpus::Sample>(run.samples), output);
        produced = run.samples.size();
        diags = run.diags.items.size();
        rec.count("samples", produced);
    } else {
        throw Error(Errc::invalid_argument, "unknown protocol: " + protocol);
    }
    rec.count("diagnostics", diags);
    rec.output(output);
    rec.write();
    std::cout << "augmented " << problems.size() << " seeds -> " << produced << " records ("
              << diags << " diagnostics) -> " << output << '\n';
    return 0;
}

// ---- augment-responses -------------------------------------------------

int cmd_augment_responses(const CommonOpts& opts, const std::string& queries_path,
                          const std::string& output, const std::string& model, double temperature,
                          int n_samples, bool zero_shot, const std::string& subset_name,
                          const std::string& query_source) {
    RunRecorder rec("augment-responses", opts);
    rec.default_path(output);
    rec.input(queries_path);

    const auto queries = corpus::load_aug_queries(queries_path);
    auto client = make_client(opts);
    const auto templates = load_templates(opts.prompts_dir);

    augment::ResponseAugParams params;
    params.model = model;
    params.temperature = temperature;
    params.n_samples = n_samples;
    params.zero_shot = zero_shot;
    params.subset_name = subset_name;
    params.query_source = query_source;
    params.templates = &templates;
    auto run = augment::run_response_augmentation(queries, client, params);

    ensure_parent_dir(output);
    corpus::write_jsonl(std::span<const corpus::Sample>(run.samples), output);
    rec.output(output);
    rec.count("samples", run.samples.size());
    rec.count("diagnostics", run.diags.items.size());
    rec.write();
    std::cout << "sampled " << run.samples.size() << " responses for " << queries.size()
              << " queries (" << run.diags.items.size() << " diagnostics) -> " << output << '\n';
    return 0;
}

// ---- filter -----------------------------------------------------------

int cmd_filter(const CommonOpts& opts, const std::string& input, const std::string& output,
               std::size_t max_len, std::string report_path) {
    RunRecorder rec("filter", opts);
    rec.default_path(output);
    rec.input(input);

    const auto samples = corpus::load_samples(input);
    auto [kept, report] = quality::filter_responses(samples, max_len);
    ensure_parent_dir(output);
    corpus::write_jsonl(std::span<const corpus::Sample>(kept), output);

    if (report_path.empty()) report_path = output + ".filter.json";
    json rj;
    rj["kept"] = report.kept;
    rj["removed_no_answer"] = report.removed_no_answer;
    rj["removed_too_long"] = report.removed_too_long;
    rj["trimmed"] = report.trimmed;
    ensure_parent_dir(report_path);
    std::ofstream rout(report_path, std::ios::trunc);
    rout << rj.dump(2) << '\n';

    rec.output(output);
    rec.count("kept", report.kept);
    rec.count("removed_no_answer", report.removed_no_answer);
    rec.count("removed_too_long", report.removed_too_long);
    rec.count("trimmed", report.trimmed);
    rec.write();
    std::cout << "kept " << report.kept << " / " << samples.size() << " (no_answer "
              << report.removed_no_answer << ", too_long " << report.removed_too_long
              << ", trimmed " << report.trimmed << ") -> " << output << '\n';
    return 0;
}

// ---- vote -------------------------------------------------------------

const char* verdict_name(quality::Verdict v) {
    switch (v) {
    case quality::Verdict::consensus: return "consensus";
    case quality::Verdict::all_distinct: return "all_distinct";
    case quality::Verdict::tie: return "tie";
    }
    return "all_distinct";
}

int cmd_vote(const CommonOpts& opts, const std::string& groups_path, const std::string& output,
             const std::string& votes_out) {
    RunRecorder rec("vote", opts);
    rec.default_path(output);
    rec.input(groups_path);

    const auto samples = corpus::load_samples(groups_path);
    const auto groups = quality::group_by_query(samples);
    const auto kept = quality::apply_majority_filter(groups, opts.tolerance);

    ensure_parent_dir(output);
    corpus::write_jsonl(std::span<const corpus::Sample>(kept), output);

    if (!votes_out.empty()) {
        std::vector<std::string> lines;
        for (const auto& group : groups) {
            json row;
            row["query"] = group.query;
            row["n"] = group.samples.size();
            if (group.samples.size() < 2) {
                row["verdict"] = "singleton";
            } else {
                const auto outcome = quality::vote(group.samples, opts.tolerance);
                row["verdict"] = verdict_name(outcome.verdict);
                if (outcome.verdict == quality::Verdict::consensus) {
                    row["votes"] = outcome.votes;
                    row["answer"] = outcome.consensus_answer.raw;
                }
            }
            lines.push_back(row.dump());
        }
        write_lines(lines, votes_out);
        rec.output(votes_out);
    }
    rec.output(output);
    rec.count("groups", groups.size());
    rec.count("kept_samples", kept.size());
    rec.write();
    std::cout << "kept " << kept.size() << " of " << samples.size() << " samples across "
              << groups.size() << " groups -> " << output << '\n';
    return 0;
}

// ---- split-jsets ------------------------------------------------------

int cmd_split_jsets(const CommonOpts& opts, const std::string& input,
                    const std::string& out_prefix) {
    RunRecorder rec("split-jsets", opts);
    rec.default_path(out_prefix + "_correct.jsonl");
    rec.input(input);

    const auto samples = corpus::load_samples(input);
    const auto groups = quality::group_by_query(samples);
    const auto split = quality::build_correct_wrong_half(
        groups, rng::stage_seed(opts.seed, "split-jsets"), opts.tolerance);

    const std::string correct_path = out_prefix + "_correct.jsonl";
    const std::string wrong_path = out_prefix + "_wrong.jsonl";
    const std::string half_path = out_prefix + "_half.jsonl";
    ensure_parent_dir(correct_path);
    corpus::write_jsonl(std::span<const corpus::Sample>(split.correct), correct_path);
    corpus::write_jsonl(std::span<const corpus::Sample>(split.wrong), wrong_path);
    corpus::write_jsonl(std::span<const corpus::Sample>(split.half), half_path);

    rec.output(correct_path);
    rec.output(wrong_path);
    rec.output(half_path);
    rec.count("eligible_queries", split.correct.size());
    rec.write();
    std::cout << "split " << groups.size() << " groups into 3 x " << split.correct.size()
              << " samples -> " << out_prefix << "_{correct,wrong,half}.jsonl\n";
    return 0;
}

// ---- assemble -----------------------------------------------------------

int cmd_assemble(const CommonOpts& opts, const std::vector<std::string>& inputs,
                 const std::string& op, double fraction, std::size_t target_size,
                 const std::string& output, const std::string& manifest_path,
                 const std::string& name, const std::string& query_source,
                 const std::string& response_source, double temperature) {
    RunRecorder rec("assemble", opts);
    rec.default_path(output);
    for (const auto& path : inputs) rec.input(path);

    std::vector<std::vector<corpus::Sample>> datasets;
    datasets.reserve(inputs.size());
    for (const auto& path : inputs) {
        datasets.push_back(corpus::load_samples(path));
    }

    std::vector<corpus::Sample> result;
    const std::uint64_t seed = rng::stage_seed(opts.seed, "assemble");
    if (op == "union") {
        result = corpus::union_datasets(datasets);
    } else if (op == "downsample") {
        if (datasets.size() != 1) {
            throw Error(Errc::invalid_argument, "downsample expects exactly one input");
        }
        result = corpus::downsample(datasets[0], target_size, seed);
    } else if (op == "mixed") {
        std::map<corpus::Strategy, std::vector<corpus::Sample>> per_strategy;
        for (auto& ds : datasets) {
            for (auto& s : ds) {
                if (!s.provenance.strategy) {
                    throw Error(Errc::invalid_argument,
                                "sample " + s.id + " lacks a strategy tag; mixed needs one");
                }
                per_strategy[*s.provenance.strategy].push_back(std::move(s));
            }
        }
        result = corpus::build_mixed(per_strategy, fraction, seed);
    } else {
        throw Error(Errc::invalid_argument, "unknown assemble op: " + op);
    }

    ensure_parent_dir(output);
    corpus::write_jsonl(std::span<const corpus::Sample>(result), output);
    rec.output(output);
    rec.count("samples", result.size());

    if (!manifest_path.empty()) {
        corpus::SubsetRegistry registry;
        if (std::filesystem::exists(manifest_path)) {
            registry = corpus::SubsetRegistry::load(manifest_path);
        } else {
            registry.seed = opts.seed;
        }
        const std::string subset_name = name.empty() ? output : name;
        corpus::SubsetSpec spec{subset_name, query_source, response_source, temperature,
                                result.empty() ? std::optional<std::size_t>{}
                                               : std::optional<std::size_t>{result.size()}};
        if (registry.contains(subset_name)) {
            registry.update_file(subset_name, output, result.size());
        } else {
            registry.register_subset(spec, output, result.size());
        }
        ensure_parent_dir(manifest_path);
        registry.save(manifest_path);
        rec.output(manifest_path);
    }
    rec.write();
    std::cout << op << " of " << inputs.size() << " file(s) -> " << result.size()
              << " samples -> " << output << '\n';
    return 0;
}

// ---- stratify -----------------------------------------------------------

std::map<std::string, bool> load_eval_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_failure, "cannot open " + path);
    }
    std::map<std::string, bool> results;
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
                        path + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        if (!obj.contains("id") || !obj.contains("correct")) {
            throw Error(Errc::missing_field,
                        "line " + std::to_string(line_no) + ": need 'id' and 'correct'", line_no);
        }
        results[obj["id"].get<std::string>()] = obj["correct"].get<bool>();
    }
    return results;
}

int cmd_stratify(const CommonOpts& opts, const std::string& input, const std::string& mode,
                 std::size_t n, const std::string& eval_results_path, const std::string& output) {
    RunRecorder rec("stratify", opts);
    rec.default_path(output);
    rec.input(input);

    const auto problems = corpus::load_problems(input);
    if (mode == "histogram") {
        const auto hist = analyze::difficulty_histogram(problems);
        json out;
        out["easy"] = hist.easy;
        out["medium"] = hist.medium;
        out["hard"] = hist.hard;
        out["total"] = hist.total();
        if (!output.empty()) {
            ensure_parent_dir(output);
            std::ofstream f(output, std::ios::trunc);
            f << out.dump(2) << '\n';
            rec.output(output);
        }
        rec.count("easy", hist.easy);
        rec.count("medium", hist.medium);
        rec.count("hard", hist.hard);
        rec.write();
        std::cout << out.dump(2) << '\n';
        return 0;
    }

    std::optional<std::map<std::string, bool>> eval_results;
    if (!eval_results_path.empty()) {
        rec.input(eval_results_path);
        eval_results = load_eval_results(eval_results_path);
    }
    const auto selected = analyze::select_targets(
        problems, analyze::target_mode_from_string(mode),
        eval_results ? &*eval_results : nullptr, n == 0 ? problems.size() : n,
        rng::stage_seed(opts.seed, "stratify"));
    if (output.empty()) {
        throw Error(Errc::invalid_argument, "selection modes need --output");
    }
    ensure_parent_dir(output);
    corpus::write_jsonl(std::span<const corpus::Problem>(selected), output);
    rec.output(output);
    rec.count("selected", selected.size());
    rec.write();
    std::cout << "selected " << selected.size() << " problems (" << mode << ") -> " << output
              << '\n';
    return 0;
}

// ---- export-sft ---------------------------------------------------------

int cmd_export_sft(const CommonOpts& opts, const std::string& input, const std::string& output,
                   const std::string& template_path) {
    RunRecorder rec("export-sft", opts);
    rec.default_path(output);
    rec.input(input);

    const auto samples = corpus::load_samples(input);
    std::string tmpl(corpus::kDefaultSftTemplate);
    if (!template_path.empty()) {
        tmpl = read_text_file(template_path);
    }
    const auto rendered = corpus::export_sft(samples, tmpl);
    std::vector<std::string> lines;
    lines.reserve(rendered.size());
    for (const auto& text : rendered) {
        json row;
        row["text"] = text;
        lines.push_back(row.dump());
    }
    write_lines(lines, output);
    rec.output(output);
    rec.count("records", rendered.size());
    rec.write();
    std::cout << "exported " << rendered.size() << " records -> " << output << '\n';
    return 0;
}

// ---- grade ---------------------------------------------------------------

int cmd_grade(const CommonOpts& opts, const std::string& outputs_path, const std::string& gold_path,
              const std::string& style_name, const std::string& report_json_path,
              const std::string& report_txt_path, const std::string& records_out) {
    RunRecorder rec("grade", opts);
    rec.default_path(report_json_path.empty() ? outputs_path + ".graded" : report_json_path);
    rec.input(outputs_path);
    rec.input(gold_path);

    const auto style = eval::style_from_string(style_name);
    const auto outputs = eval::load_outputs_jsonl(outputs_path);
    const auto gold = corpus::load_problems(gold_path);
    auto [records, plain_report] = eval::grade(outputs, gold, style, opts.tolerance);

    // Difficulty labels come from the gold annotation counts; subjects are
    // only meaningful for the competition-style corpus.
    eval::AccuracyReport report = plain_report;
    if (style == eval::Style::gsm) {
        std::map<std::string, parse::Difficulty> labels;
        for (const auto& p : gold) {
            labels[p.id] =
                parse::classify_difficulty(parse::count_reasoning_steps_gsm(p.gold_response));
        }
        report = eval::stratified_report(records, labels, nullptr);
    } else {
        std::map<std::string, parse::Difficulty> labels;
        std::map<std::string, std::string> subjects;
        for (const auto& p : gold) {
            labels[p.id] = parse::classify_difficulty(
                parse::count_reasoning_steps_sentences(p.gold_response));
            if (p.subject) subjects[p.id] = *p.subject;
        }
        report = eval::stratified_report(records, labels, &subjects);
    }

    if (!report_json_path.empty()) {
        ensure_parent_dir(report_json_path);
        std::ofstream f(report_json_path, std::ios::trunc);
        f << eval::report_to_json(report) << '\n';
        rec.output(report_json_path);
    }
    if (!report_txt_path.empty()) {
        ensure_parent_dir(report_txt_path);
        std::ofstream f(report_txt_path, std::ios::trunc);
        f << eval::render_text_table(report);
        rec.output(report_txt_path);
    }
    if (!records_out.empty()) {
        std::vector<std::string> lines;
        for (const auto& r : records) {
            json row;
            row["id"] = r.problem_id;
            row["correct"] = r.correct;
            if (r.extracted) row["extracted"] = r.extracted->raw;
            row["gold"] = r.gold.raw;
            lines.push_back(row.dump());
        }
        write_lines(lines, records_out);
        rec.output(records_out);
    }
    rec.count("graded", report.n);
    rec.count("correct", report.n_correct);
    rec.write();
    std::cout << eval::render_text_table(report);
    return 0;
}

// ---- fit-scaling ----------------------------------------------------------

std::vector<std::pair<double, double>> parse_ranges(const std::string& spec) {
    std::vector<std::pair<double, double>> ranges;
    std::istringstream in(spec);
    std::string token;
    while (std::getline(in, token, ',')) {
        const auto colon = token.find(':');
        if (colon == std::string::npos) {
            throw Error(Errc::invalid_argument, "range must look like lo:hi, got '" + token + "'");
        }
        ranges.emplace_back(std::stod(token.substr(0, colon)), std::stod(token.substr(colon + 1)));
    }
    if (ranges.empty()) {
        throw Error(Errc::invalid_argument, "no ranges given");
    }
    return ranges;
}

int cmd_fit_scaling(const CommonOpts& opts, const std::string& input, const std::string& mode,
                    const std::string& ranges_spec, const std::string& output) {
    RunRecorder rec("fit-scaling", opts);
    rec.input(input);

    const auto points = analyze::load_points_csv(input);
    std::string rendered;
    if (mode == "loglinear") {
        rendered = analyze::fit_to_json(analyze::fit_loglinear(points));
    } else if (mode == "segmented") {
        if (ranges_spec.empty()) {
            throw Error(Errc::invalid_argument, "segmented mode needs --ranges lo:hi,lo:hi");
        }
        rendered = analyze::fit_to_json(analyze::fit_segmented(points, parse_ranges(ranges_spec)));
    } else if (mode == "auto") {
        rendered = analyze::fit_to_json(analyze::fit_segmented_auto(points));
    } else {
        throw Error(Errc::invalid_argument, "unknown fit mode: " + mode);
    }

    if (!output.empty()) {
        ensure_parent_dir(output);
        std::ofstream f(output, std::ios::trunc);
        f << rendered << '\n';
        rec.output(output);
        rec.default_path(output);
    }
    rec.count("points", points.size());
    rec.write();
    std::cout << rendered << '\n';
    return 0;
}

// ---- report ----------------------------------------------------------------

int cmd_report(const CommonOpts& opts, const std::string& dataset_path,
               const std::string& registry_path, const std::string& run_path) {
    if (dataset_path.empty() && registry_path.empty() && run_path.empty()) {
        throw Error(Errc::invalid_argument,
                    "report needs at least one of --dataset, --registry, --run");
    }
    RunRecorder rec("report", opts);
    rec.input(dataset_path);
    rec.input(registry_path);
    rec.input(run_path);
    if (!dataset_path.empty()) {
        const auto samples = corpus::load_samples(dataset_path);
        std::size_t total_steps = 0;
        std::map<std::string, std::size_t> by_strategy;
        std::set<std::string> queries;
        for (const auto& s : samples) {
            total_steps += parse::count_reasoning_steps_gsm(s.response);
            queries.insert(s.query);
            by_strategy[s.provenance.strategy ? corpus::to_string(*s.provenance.strategy)
                                              : "untagged"] += 1;
        }
        std::cout << "dataset " << dataset_path << '\n';
        std::cout << "  samples:          " << samples.size() << '\n';
        std::cout << "  distinct queries: " << queries.size() << '\n';
        if (!samples.empty()) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.2f",
                          static_cast<double>(total_steps) / static_cast<double>(samples.size()));
            std::cout << "  mean steps:       " << buf << '\n';
        }
        for (const auto& [strategy, count] : by_strategy) {
            std::cout << "  strategy " << strategy << ": " << count << '\n';
        }
    }
    if (!registry_path.empty()) {
        const auto registry = corpus::SubsetRegistry::load(registry_path);
        char row[256];
        std::snprintf(row, sizeof(row), "%-12s %-10s %-10s %6s %8s  %s\n", "subset", "query",
                      "response", "temp", "size", "path");
        std::cout << row;
        for (const auto& [name, entry] : registry.entries()) {
            std::snprintf(row, sizeof(row), "%-12s %-10s %-10s %6.1f %8zu  %s\n", name.c_str(),
                          entry.spec.query_source.c_str(), entry.spec.response_source.c_str(),
                          entry.spec.temperature, entry.size, entry.path.c_str());
            std::cout << row;
        }
    }
    if (!run_path.empty()) {
        std::cout << read_text_file(run_path);
    }
    rec.write();
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"query/response augmentation, filtering and scaling analysis for grade-school "
                 "math reasoning corpora"};
    app.require_subcommand(1);

    CommonOpts opts;
    // --config is applied before CLI11 assigns flag values, so flags win.
    for (int i = 1; i + 1 < argc; ++i) {
        const std::string_view arg = argv[i];
        if (arg == "--config") {
            opts.config_path = argv[i + 1];
        } else if (arg.rfind("--config=", 0) == 0) {
            opts.config_path = std::string(arg.substr(9));
        }
    }
    try {
        if (!opts.config_path.empty()) {
            apply_config_file(opts, opts.config_path);
        }
    } catch (const Error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
        return 1;
    }

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "key=value config file");
        cmd->add_option("--seed", opts.seed, "global RNG seed");
        cmd->add_option("--backend", opts.backend, "live | replay | mock")
            ->check(CLI::IsMember({"live", "replay", "mock"}));
        cmd->add_option("--base-url", opts.base_url, "chat-completions base URL (live)");
        cmd->add_option("--api-key-env", opts.api_key_env, "env var holding the API key");
        cmd->add_option("--cache-dir", opts.cache_dir, "replay cache directory");
        cmd->add_option("--concurrency", opts.concurrency, "max in-flight requests");
        cmd->add_option("--tolerance", opts.tolerance, "answer comparison tolerance");
        cmd->add_option("--max-response-len", opts.max_response_len,
                        "filter length bound (characters)");
        cmd->add_option("--prompts-dir", opts.prompts_dir, "prompt template override directory");
        cmd->add_option("--run-manifest", opts.run_manifest, "where to write the run manifest");
    };

    int exit_code = 0;
    auto guard = [&exit_code](auto&& fn) {
        try {
            exit_code = fn();
        } catch (const Error& e) {
            std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
            switch (e.code()) {
            case Errc::io_failure:
            case Errc::transport:
            case Errc::cache_miss:
            case Errc::fixture_missing:
                exit_code = 2;
                break;
            default:
                exit_code = 1;
                break;
            }
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            exit_code = 2;
        }
    };

    // ingest
    {
        auto* cmd = app.add_subcommand("ingest", "convert a raw dataset into the problem schema");
        auto input = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("gsm8k");
        auto output = std::make_shared<std::string>();
        auto prefix = std::make_shared<std::string>("p");
        cmd->add_option("--input", *input, "raw dataset JSONL")->required();
        cmd->add_option("--format", *format, "gsm8k | math | problems")
            ->check(CLI::IsMember({"gsm8k", "math", "problems"}));
        cmd->add_option("--output", *output, "problems JSONL")->required();
        cmd->add_option("--id-prefix", *prefix, "prefix for generated ids");
        add_common(cmd);
        cmd->callback([&, input, format, output, prefix] {
            guard([&] { return cmd_ingest(opts, *input, *format, *output, *prefix); });
        });
    }
    // augment-queries
    {
        auto* cmd = app.add_subcommand("augment-queries", "generate new queries from seeds");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto model = std::make_shared<std::string>("gpt-4");
        auto temperature = std::make_shared<double>(1.0);
        auto rounds = std::make_shared<int>(1);
        auto six = std::make_shared<bool>(false);
        auto protocol = std::make_shared<std::string>("gsm");
        auto n_samples = std::make_shared<int>(1);
        auto subset = std::make_shared<std::string>("aug");
        cmd->add_option("--input", *input, "seed problems JSONL")->required();
        cmd->add_option("--output", *output, "augmented queries (gsm) or samples (math)")
            ->required();
        cmd->add_option("--model", *model, "generator model identifier");
        cmd->add_option("--temperature", *temperature, "sampling temperature");
        cmd->add_option("--rounds", *rounds, "augmentation rounds (round 2+ reuses outputs)");
        cmd->add_flag("--six-strategies", *six, "add the unknown-quantities idea");
        cmd->add_option("--protocol", *protocol, "gsm | math")
            ->check(CLI::IsMember({"gsm", "math"}));
        cmd->add_option("--n-samples", *n_samples, "samples per seed (math protocol)");
        cmd->add_option("--subset-name", *subset, "provenance subset tag (math protocol)");
        add_common(cmd);
        cmd->callback([&, input, output, model, temperature, rounds, six, protocol, n_samples,
                       subset] {
            guard([&] {
                return cmd_augment_queries(opts, *input, *output, *model, *temperature, *rounds,
                                           *six, *protocol, *n_samples, *subset);
            });
        });
    }
    // augment-responses
    {
        auto* cmd = app.add_subcommand("augment-responses", "sample reasoning paths for queries");
        auto queries = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto model = std::make_shared<std::string>("gpt-4");
        auto temperature = std::make_shared<double>(1.0);
        auto n_samples = std::make_shared<int>(1);
        auto zero_shot = std::make_shared<bool>(false);
        auto subset = std::make_shared<std::string>("aug");
        auto query_source = std::make_shared<std::string>();
        cmd->add_option("--queries", *queries, "augmented queries JSONL")->required();
        cmd->add_option("--output", *output, "samples JSONL")->required();
        cmd->add_option("--model", *model, "generator model identifier");
        cmd->add_option("--temperature", *temperature, "sampling temperature");
        cmd->add_option("--n-samples", *n_samples, "responses per query");
        cmd->add_flag("--zero-shot", *zero_shot, "drop the worked example from the prompt");
        cmd->add_option("--subset-name", *subset, "provenance subset tag");
        cmd->add_option("--query-source", *query_source, "provenance query source");
        add_common(cmd);
        cmd->callback([&, queries, output, model, temperature, n_samples, zero_shot, subset,
                       query_source] {
            guard([&] {
                return cmd_augment_responses(opts, *queries, *output, *model, *temperature,
                                             *n_samples, *zero_shot, *subset, *query_source);
            });
        });
    }
    // filter
    {
        auto* cmd = app.add_subcommand("filter", "drop unusable responses, trim the rest");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto report = std::make_shared<std::string>();
        cmd->add_option("--input", *input, "samples JSONL")->required();
        cmd->add_option("--output", *output, "filtered samples JSONL")->required();
        cmd->add_option("--report", *report, "filter report JSON path");
        add_common(cmd);
        cmd->callback([&, input, output, report] {
            guard([&] {
                return cmd_filter(opts, *input, *output, opts.max_response_len, *report);
            });
        });
    }
    // vote
    {
        auto* cmd = app.add_subcommand("vote", "majority-vote filter over response groups");
        auto groups = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto votes_out = std::make_shared<std::string>();
        cmd->add_option("--groups", *groups, "samples JSONL (grouped by query)")->required();
        cmd->add_option("--output", *output, "kept samples JSONL")->required();
        cmd->add_option("--votes-out", *votes_out, "per-group verdict JSONL");
        add_common(cmd);
        cmd->callback([&, groups, output, votes_out] {
            guard([&] { return cmd_vote(opts, *groups, *output, *votes_out); });
        });
    }
    // split-jsets
    {
        auto* cmd = app.add_subcommand("split-jsets",
                                       "build correct / wrong / half response-quality sets");
        auto input = std::make_shared<std::string>();
        auto prefix = std::make_shared<std::string>();
        cmd->add_option("--input", *input, "samples JSONL with multiple responses per query")
            ->required();
        cmd->add_option("--out-prefix", *prefix, "output prefix")->required();
        add_common(cmd);
        cmd->callback([&, input, prefix] {
            guard([&] { return cmd_split_jsets(opts, *input, *prefix); });
        });
    }
    // assemble
    {
        auto* cmd = app.add_subcommand("assemble", "union / downsample / mixed subset assembly");
        auto inputs = std::make_shared<std::vector<std::string>>();
        auto op = std::make_shared<std::string>("union");
        auto fraction = std::make_shared<double>(0.2);
        auto target = std::make_shared<std::size_t>(0);
        auto output = std::make_shared<std::string>();
        auto manifest = std::make_shared<std::string>();
        auto name = std::make_shared<std::string>();
        auto qsource = std::make_shared<std::string>();
        auto rsource = std::make_shared<std::string>();
        auto temperature = std::make_shared<double>(0.0);
        cmd->add_option("--inputs", *inputs, "input samples JSONL files")
            ->required()
            ->delimiter(',');
        cmd->add_option("--op", *op, "union | downsample | mixed")
            ->check(CLI::IsMember({"union", "downsample", "mixed"}));
        cmd->add_option("--fraction", *fraction, "per-strategy fraction (mixed)");
        cmd->add_option("--target-size", *target, "output size (downsample)");
        cmd->add_option("--output", *output, "assembled samples JSONL")->required();
        cmd->add_option("--manifest", *manifest, "subset manifest JSON to update");
        cmd->add_option("--name", *name, "subset name to register");
        cmd->add_option("--query-source", *qsource, "subset query source");
        cmd->add_option("--response-source", *rsource, "subset response source");
        cmd->add_option("--temperature", *temperature, "subset temperature");
        add_common(cmd);
        cmd->callback([&, inputs, op, fraction, target, output, manifest, name, qsource, rsource,
                       temperature] {
            guard([&] {
                return cmd_assemble(opts, *inputs, *op, *fraction, *target, *output, *manifest,
                                    *name, *qsource, *rsource, *temperature);
            });
        });
    }
    // stratify
    {
        auto* cmd = app.add_subcommand("stratify", "difficulty histogram and target selection");
        auto input = std::make_shared<std::string>();
        auto mode = std::make_shared<std::string>("histogram");
        auto n = std::make_shared<std::size_t>(0);
        auto eval_results = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        cmd->add_option("--input", *input, "problems JSONL")->required();
        cmd->add_option("--mode", *mode, "histogram | easy | medium | hard | wrong | random")
            ->check(CLI::IsMember({"histogram", "easy", "medium", "hard", "wrong", "random"}));
        cmd->add_option("--n", *n, "number of problems to select (0 = all eligible)");
        cmd->add_option("--eval-results", *eval_results, "grade records JSONL (wrong mode)");
        cmd->add_option("--output", *output, "output path");
        add_common(cmd);
        cmd->callback([&, input, mode, n, eval_results, output] {
            guard([&] { return cmd_stratify(opts, *input, *mode, *n, *eval_results, *output); });
        });
    }
    // export-sft
    {
        auto* cmd = app.add_subcommand("export-sft", "render samples through the training prompt");
        auto input = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        auto tmpl = std::make_shared<std::string>();
        cmd->add_option("--input", *input, "samples JSONL")->required();
        cmd->add_option("--output", *output, "text records JSONL")->required();
        cmd->add_option("--template", *tmpl, "template file with {query}/{response}");
        add_common(cmd);
        cmd->callback([&, input, output, tmpl] {
            guard([&] { return cmd_export_sft(opts, *input, *output, *tmpl); });
        });
    }
    // grade
    {
        auto* cmd = app.add_subcommand("grade", "grade externally produced outputs");
        auto outputs = std::make_shared<std::string>();
        auto gold = std::make_shared<std::string>();
        auto style = std::make_shared<std::string>("gsm");
        auto report_json = std::make_shared<std::string>();
        auto report_txt = std::make_shared<std::string>();
        auto records_out = std::make_shared<std::string>();
        cmd->add_option("--outputs", *outputs, "model outputs JSONL {id, output}")->required();
        cmd->add_option("--gold", *gold, "gold problems JSONL")->required();
        cmd->add_option("--style", *style, "gsm | math")->check(CLI::IsMember({"gsm", "math"}));
        cmd->add_option("--report-json", *report_json, "accuracy report JSON path");
        cmd->add_option("--report-txt", *report_txt, "accuracy report text path");
        cmd->add_option("--records-out", *records_out, "per-problem records JSONL");
        add_common(cmd);
        cmd->callback([&, outputs, gold, style, report_json, report_txt, records_out] {
            guard([&] {
                return cmd_grade(opts, *outputs, *gold, *style, *report_json, *report_txt,
                                 *records_out);
            });
        });
    }
    // fit-scaling
    {
        auto* cmd = app.add_subcommand("fit-scaling", "log-linear scaling fits");
        auto input = std::make_shared<std::string>();
        auto mode = std::make_shared<std::string>("loglinear");
        auto ranges = std::make_shared<std::string>();
        auto output = std::make_shared<std::string>();
        cmd->add_option("--input", *input, "CSV with header x_thousands,y_accuracy")->required();
        cmd->add_option("--mode", *mode, "loglinear | segmented | auto")
            ->check(CLI::IsMember({"loglinear", "segmented", "auto"}));
        cmd->add_option("--ranges", *ranges, "explicit segments, e.g. 7.5:37.5,82.5:307.5");
        cmd->add_option("--output", *output, "also write the fit JSON here");
        add_common(cmd);
        cmd->callback([&, input, mode, ranges, output] {
            guard([&] { return cmd_fit_scaling(opts, *input, *mode, *ranges, *output); });
        });
    }
    // report
    {
        auto* cmd = app.add_subcommand("report", "summarize datasets, registries and runs");
        auto dataset = std::make_shared<std::string>();
        auto registry = std::make_shared<std::string>();
        auto run_file = std::make_shared<std::string>();
        cmd->add_option("--dataset", *dataset, "samples JSONL to summarize");
        cmd->add_option("--registry", *registry, "subset manifest JSON");
        cmd->add_option("--run", *run_file, "run manifest JSON");
        add_common(cmd);
        cmd->callback([&, dataset, registry, run_file] {
            guard([&] { return cmd_report(opts, *dataset, *registry, *run_file); });
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1; // usage problems are validation errors
    }
    return exit_code;
}

} // namespace augkit::cli
