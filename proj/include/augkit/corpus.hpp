#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace augkit::corpus {

enum class Dataset { gsm8k, math };

enum class Strategy {
    change_numbers,
    fractions_percentages,
    combine_concepts,
    conditional_statement,
    increase_complexity,
    introduce_unknown,
};

const char* to_string(Dataset d) noexcept;
const char* to_string(Strategy s) noexcept;
Dataset dataset_from_string(std::string_view name);
Strategy strategy_from_string(std::string_view name);

// Strategies are addressed by the numbered slot they occupy in the
// augmentation prompt (1-based).
Strategy strategy_for_slot(int slot);
int slot_for_strategy(Strategy s) noexcept;

// A seed problem: query plus its gold reasoning path.
struct Problem {
    std::string id;
    Dataset dataset = Dataset::gsm8k;
    std::optional<std::string> subject; // present iff dataset == math
    std::string query;
    std::string gold_response;
    std::optional<std::string> gold_answer;

    bool operator==(const Problem&) const = default;
};

// A generated query tagged with its strategy, generator and parent seed.
struct AugmentedQuery {
    std::string id;
    std::string parent_id;
    Strategy strategy = Strategy::change_numbers;
    std::string query;
    std::string generator;
    double temperature = 1.0;

    bool operator==(const AugmentedQuery&) const = default;
};

struct Provenance {
    std::string subset;
    std::string query_source;
    std::string response_source;
    double temperature = 0.0;
    std::optional<Strategy> strategy;

    bool operator==(const Provenance&) const = default;
};

// One (query, response) training record.
struct Sample {
    std::string id;
    std::string query;
    std::string response;
    std::optional<std::string> answer;
    Provenance provenance;

    bool operator==(const Sample&) const = default;
};

struct SubsetSpec {
    std::string name; // e.g. "D", "D_1^1", "hat_D_2^1"
    std::string query_source;
    std::string response_source;
    double temperature = 0.0;
    std::optional<std::size_t> target_size; // in samples

    bool operator==(const SubsetSpec&) const = default;
};

struct ManifestEntry {
    SubsetSpec spec;
    std::string path;
    std::size_t size = 0;

    bool operator==(const ManifestEntry&) const = default;
};

// Registry of named subsets, persisted as one JSON manifest.
class SubsetRegistry {
public:
    void register_subset(const SubsetSpec& spec, std::string path = {}, std::size_t size = 0);
    const ManifestEntry& resolve(const std::string& name) const;
    bool contains(const std::string& name) const;
    void update_file(const std::string& name, std::string path, std::size_t size);

    const std::map<std::string, ManifestEntry>& entries() const { return entries_; }

    std::uint64_t seed = 0;

    void save(const std::filesystem::path& path) const;
    static SubsetRegistry load(const std::filesystem::path& path);

private:
    std::map<std::string, ManifestEntry> entries_;
};

// The published subset table for the augmented GSM8K release, ASCII names.
std::vector<SubsetSpec> builtin_subsets();

// ---- JSONL persistence -------------------------------------------------

std::vector<Problem> load_problems(const std::filesystem::path& path);
std::vector<AugmentedQuery> load_aug_queries(const std::filesystem::path& path);
std::vector<Sample> load_samples(const std::filesystem::path& path);

std::size_t write_jsonl(std::span<const Problem> records, const std::filesystem::path& path);
std::size_t write_jsonl(std::span<const AugmentedQuery> records, const std::filesystem::path& path);
std::size_t write_jsonl(std::span<const Sample> records, const std::filesystem::path& path);

// ---- dataset assembly ----------------------------------------------------

// Uniform sample without replacement; deterministic per seed; sorted by id.
std::vector<Sample> downsample(std::span<const Sample> samples, std::size_t target_size,
                               std::uint64_t seed);

// Union with exact-duplicate (query, response) pairs removed. Colliding ids
// on distinct content are regenerated deterministically. Sorted by id.
std::vector<Sample> union_datasets(const std::vector<std::vector<Sample>>& datasets);

// floor(fraction * |S|) samples from each strategy set, combined and
// deduplicated. Sorted by id.
std::vector<Sample> build_mixed(const std::map<Strategy, std::vector<Sample>>& per_strategy,
                                double fraction, std::uint64_t seed);

// ---- SFT export ----------------------------------------------------------

// Instruction-tuning template; {query} and {response} are the placeholders.
extern const std::string_view kDefaultSftTemplate;

std::vector<std::string> export_sft(std::span<const Sample> samples,
                                    std::string_view tmpl = kDefaultSftTemplate);

} // namespace augkit::corpus
