#include <doctest.h>

#include "augkit/corpus.hpp"
#include "augkit/errors.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

using namespace augkit;
using corpus::Problem;
using corpus::Sample;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
    static int counter = 0;
    auto dir = fs::temp_directory_path() / ("augkit_corpus_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Sample make_sample(const std::string& id, const std::string& query, const std::string& answer) {
    Sample s;
    s.id = id;
    s.query = query;
    s.response = "Working it out. ##### " + answer;
    s.answer = answer;
    s.provenance = {"test", "unit", "unit", 1.0, corpus::Strategy::change_numbers};
    return s;
}

} // namespace

TEST_CASE("problems load in order and validate") {
    const auto dir = temp_dir();
    const auto path = dir / "problems.jsonl";
    write_text(path,
               R"({"id":"a","dataset":"gsm8k","query":"Q1","response":"R ##### 1","answer":"1"})"
               "\n"
               R"({"id":"b","dataset":"gsm8k","query":"Q2","response":"R ##### 2"})"
               "\n"
               R"({"id":"c","dataset":"math","subject":"Algebra","query":"Q3","response":"\\boxed{5}","answer":"5"})"
               "\n");
    const auto problems = corpus::load_problems(path);
    REQUIRE(problems.size() == 3);
    CHECK(problems[0].id == "a");
    CHECK(problems[1].id == "b");
    CHECK(problems[2].id == "c");
    CHECK(problems[2].subject == "Algebra");
}

TEST_CASE("load errors carry their contract names") {
    const auto dir = temp_dir();

    const auto missing = dir / "missing_query.jsonl";
    write_text(missing, R"({"id":"a","dataset":"gsm8k","response":"x ##### 1"})" "\n");
    try {
        corpus::load_problems(missing);
        FAIL("expected MissingField");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::missing_field);
    }

    const auto malformed = dir / "malformed.jsonl";
    write_text(malformed, "{\"id\":\"a\"\n");
    try {
        corpus::load_problems(malformed);
        FAIL("expected MalformedLine");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::malformed_line);
        CHECK(e.detail() == 1);
    }

    const auto dup = dir / "dup.jsonl";
    write_text(dup,
               R"({"id":"a","dataset":"gsm8k","query":"Q","response":"x"})" "\n"
               R"({"id":"a","dataset":"gsm8k","query":"Q2","response":"y"})" "\n");
    try {
        corpus::load_problems(dup);
        FAIL("expected DuplicateId");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::duplicate_id);
        CHECK(e.detail() == 2);
    }

    // subject present iff dataset is math
    const auto bad_subject = dir / "subject.jsonl";
    write_text(bad_subject,
               R"({"id":"a","dataset":"gsm8k","subject":"Algebra","query":"Q","response":"x"})"
               "\n");
    CHECK_THROWS_AS(corpus::load_problems(bad_subject), Error);

    CHECK_THROWS_AS(corpus::load_problems(dir / "does_not_exist.jsonl"), Error);
}

TEST_CASE("write/load is the identity on validated records") {
    const auto dir = temp_dir();
    const auto path = dir / "samples.jsonl";

    std::mt19937_64 gen(17);
    const std::vector<std::string> pieces = {"plain",  "tab\tchar", "newline\nsplit",
                                             "quote\"q", "back\\slash", "unicode \xc2\xab\xe2\x9c\x93",
                                             "emoji \xf0\x9f\x98\x80"};
    std::vector<Sample> samples;
    for (int i = 0; i < 40; ++i) {
        std::string query, answer = std::to_string(gen() % 1000);
        for (int k = 0; k < 3; ++k) query += pieces[gen() % pieces.size()] + " ";
        auto s = make_sample("id" + std::to_string(i), query, answer);
        if (i % 4 == 0) s.answer.reset();
        if (i % 3 == 0) s.provenance.strategy.reset();
        samples.push_back(std::move(s));
    }

    CHECK(corpus::write_jsonl(std::span<const Sample>(samples), path) == samples.size());
    const auto loaded = corpus::load_samples(path);
    REQUIRE(loaded.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded[i] == samples[i]);
    }

    // byte-identical on re-write
    const auto path2 = dir / "samples2.jsonl";
    corpus::write_jsonl(std::span<const Sample>(loaded), path2);
    CHECK(read_text(path) == read_text(path2));
}

TEST_CASE("empty write produces a 0-byte file") {
    const auto dir = temp_dir();
    const auto path = dir / "empty.jsonl";
    CHECK(corpus::write_jsonl(std::span<const Sample>{}, path) == 0);
    CHECK(fs::file_size(path) == 0);
}

TEST_CASE("aug queries round-trip and validate temperature") {
    const auto dir = temp_dir();
    const auto path = dir / "queries.jsonl";
    std::vector<corpus::AugmentedQuery> queries;
    for (int i = 0; i < 6; ++i) {
        queries.push_back({"q" + std::to_string(i), "p0", corpus::strategy_for_slot(1 + i % 6),
                           "text " + std::to_string(i), "gpt-4", 1.0});
    }
    corpus::write_jsonl(std::span<const corpus::AugmentedQuery>(queries), path);
    const auto loaded = corpus::load_aug_queries(path);
    REQUIRE(loaded.size() == queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        CHECK(loaded[i] == queries[i]);
    }

    const auto bad = dir / "bad_temp.jsonl";
    write_text(bad, R"({"id":"q","parent_id":"p","strategy":"change_numbers","query":"x","generator":"g","temperature":3.5})"
                    "\n");
    CHECK_THROWS_AS(corpus::load_aug_queries(bad), Error);
}

TEST_CASE("downsample is a deterministic uniform subset") {
    std::vector<Sample> samples;
    for (int i = 0; i < 100; ++i) {
        samples.push_back(make_sample("s" + std::to_string(1000 + i), "q" + std::to_string(i),
                                      std::to_string(i)));
    }
    const auto a = corpus::downsample(samples, 40, 9001);
    const auto b = corpus::downsample(samples, 40, 9001);
    REQUIRE(a.size() == 40);
    CHECK(a == b);

    // sorted by id and a subset of the input
    std::set<std::string> input_ids;
    for (const auto& s : samples) input_ids.insert(s.id);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(input_ids.count(a[i].id) == 1);
        if (i > 0) CHECK(a[i - 1].id < a[i].id);
    }

    const auto different = corpus::downsample(samples, 40, 9002);
    CHECK(different != a); // astronomically unlikely to coincide

    const auto identity = corpus::downsample(samples, samples.size(), 1);
    CHECK(identity.size() == samples.size());

    CHECK_THROWS_AS(corpus::downsample(samples, 101, 1), Error);
}

TEST_CASE("downsample handles the published subset sizes") {
    std::vector<Sample> big;
    big.reserve(35000);
    for (int i = 0; i < 35000; ++i) {
        big.push_back(make_sample("d2#" + std::to_string(i), "q" + std::to_string(i), "1"));
    }
    const auto hat = corpus::downsample(big, 30000, 4242);
    CHECK(hat.size() == 30000);
}

TEST_CASE("union dedups exact (query, response) pairs") {
    std::vector<Sample> a, b;
    for (int i = 0; i < 5; ++i) a.push_back(make_sample("a" + std::to_string(i), "qa" + std::to_string(i), "1"));
    for (int i = 0; i < 6; ++i) b.push_back(make_sample("b" + std::to_string(i), "qb" + std::to_string(i), "2"));
    // two exact duplicates of records in a
    b[0].query = a[0].query;
    b[0].response = a[0].response;
    b[1].query = a[1].query;
    b[1].response = a[1].response;

    const auto u = corpus::union_datasets({a, b});
    CHECK(u.size() == 9);

    const auto disjoint = corpus::union_datasets(
        {std::vector<Sample>(a.begin(), a.begin() + 3), std::vector<Sample>(b.begin() + 2, b.begin() + 6)});
    CHECK(disjoint.size() == 7);

    const auto self = corpus::union_datasets({a, a});
    CHECK(self.size() == a.size());

    // commutative up to ordering (ids are stable when no id collides)
    auto u2 = corpus::union_datasets({b, a});
    CHECK(u2.size() == u.size());
    std::multiset<std::string> q1, q2;
    for (const auto& s : u) q1.insert(s.query);
    for (const auto& s : u2) q2.insert(s.query);
    CHECK(q1 == q2);
}

TEST_CASE("union regenerates colliding ids deterministically") {
    auto a = make_sample("same", "query one", "1");
    auto b = make_sample("same", "query two", "2");
    const auto u = corpus::union_datasets({{a}, {b}});
    REQUIRE(u.size() == 2);
    CHECK(u[0].id != u[1].id);
    const auto again = corpus::union_datasets({{a}, {b}});
    CHECK(u == again);
}

TEST_CASE("build_mixed draws the floor fraction of each strategy set") {
    std::map<corpus::Strategy, std::vector<Sample>> per_strategy;
    int next_id = 0;
    for (int slot = 1; slot <= 5; ++slot) {
        auto strategy = corpus::strategy_for_slot(slot);
        std::vector<Sample> set;
        for (int i = 0; i < 100; ++i) {
            auto s = make_sample("m" + std::to_string(next_id), "q" + std::to_string(next_id),
                                 std::to_string(next_id));
            ++next_id;
            s.provenance.strategy = strategy;
            set.push_back(std::move(s));
        }
        per_strategy[strategy] = std::move(set);
    }

    const auto mixed = corpus::build_mixed(per_strategy, 0.2, 7);
    CHECK(mixed.size() == 100);
    std::map<corpus::Strategy, int> counts;
    for (const auto& s : mixed) counts[*s.provenance.strategy] += 1;
    for (const auto& [strategy, count] : counts) CHECK(count == 20);

    const auto full = corpus::build_mixed(per_strategy, 1.0, 7);
    CHECK(full.size() == 500);

    const auto again = corpus::build_mixed(per_strategy, 0.2, 7);
    CHECK(again == mixed);

    per_strategy[corpus::Strategy::introduce_unknown] = {};
    CHECK_THROWS_AS(corpus::build_mixed(per_strategy, 0.2, 7), Error);
    per_strategy.erase(corpus::Strategy::introduce_unknown);
    CHECK_THROWS_AS(corpus::build_mixed(per_strategy, 0.0, 7), Error);
    CHECK_THROWS_AS(corpus::build_mixed(per_strategy, 1.5, 7), Error);
}

TEST_CASE("sft export substitutes verbatim") {
    std::vector<Sample> samples = {make_sample("s1", "Q", "7")};
    samples[0].response = "R";
    samples[0].answer.reset();

    const auto records = corpus::export_sft(samples);
    REQUIRE(records.size() == 1);
    CHECK(records[0].find("### Instruction:\nQ") != std::string::npos);
    CHECK(records[0].find("### Response:\nR") != std::string::npos);
    CHECK(records[0].rfind("Below is an instruction that describes a task.", 0) == 0);

    CHECK(corpus::export_sft(std::span<const Sample>{}).empty());

    CHECK_THROWS_AS(corpus::export_sft(samples, "no placeholders"), Error);
    CHECK_THROWS_AS(corpus::export_sft(samples, "{query} only"), Error);

    // byte preservation: recover both fields from the rendered text
    std::mt19937_64 gen(23);
    const std::string alphabet = "ab{}#\\\"\n\t $%";
    for (int trial = 0; trial < 100; ++trial) {
        std::string q, r;
        for (int k = 0; k < 12; ++k) q.push_back(alphabet[gen() % alphabet.size()]);
        for (int k = 0; k < 12; ++k) r.push_back(alphabet[gen() % alphabet.size()]);
        Sample s = make_sample("x", q, "1");
        s.response = r;
        s.answer.reset();
        const auto out = corpus::export_sft({&s, 1}, "<q>{query}</q><r>{response}</r>");
        CHECK(out[0] == "<q>" + q + "</q><r>" + r + "</r>");
    }
}

TEST_CASE("a value substituted into the template is never rescanned") {
    Sample s = make_sample("x", "contains {response} literally", "1");
    s.response = "body";
    s.answer.reset();
    const auto out = corpus::export_sft({&s, 1}, "[{query}|{response}]");
    CHECK(out[0] == "[contains {response} literally|body]");
}

TEST_CASE("subset registry follows the published table") {
    corpus::SubsetRegistry registry;
    for (const auto& spec : corpus::builtin_subsets()) {
        registry.register_subset(spec);
    }
    const auto& d16 = registry.resolve("D_1^6");
    CHECK(d16.spec.query_source == "gpt-3.5");
    CHECK(d16.spec.response_source == "gpt-4");
    CHECK(d16.spec.temperature == 0.0);
    CHECK(d16.spec.target_size == 30000);

    const auto& dhat = registry.resolve("hat_D_2^1");
    CHECK(dhat.spec.target_size == 30000);
    CHECK(registry.resolve("D_2^1").spec.target_size == 35000);

    CHECK_THROWS_AS(registry.resolve("D_9^9"), Error);
    try {
        registry.resolve("D_9^9");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_subset);
    }

    CHECK_THROWS_AS(registry.register_subset({"D", "x", "y", 0.0, {}}), Error);

    // register then resolve returns an equal spec
    corpus::SubsetSpec custom{"local", "gpt-4", "gpt-4", 0.7, 1234};
    registry.register_subset(custom, "local.jsonl", 1234);
    CHECK(registry.resolve("local").spec == custom);

    const auto dir = temp_dir();
    const auto manifest = dir / "manifest.json";
    registry.seed = 99;
    registry.save(manifest);
    const auto loaded = corpus::SubsetRegistry::load(manifest);
    CHECK(loaded.seed == 99);
    CHECK(loaded.entries().size() == registry.entries().size());
    CHECK(loaded.resolve("local").spec == custom);
    CHECK(loaded.resolve("local").path == "local.jsonl");
}
