#pragma once

#include "augkit/errors.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace augkit::llm {

enum class BackendKind { live, replay, mock };

BackendKind backend_from_string(std::string_view name);
const char* to_string(BackendKind kind) noexcept;

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_backoff{250};
};

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::string base_url;                  // required for live
    std::string api_key_env = "LLM_API_KEY";
    std::string cache_dir;                 // replay source; live appends when set
    int max_concurrency = 4;
    RetryPolicy retry;
};

struct GenRequest {
    std::string prompt;
    std::string model;
    double temperature = 1.0;
    int max_tokens = 2048;
    int sample_index = 0; // distinguishes repeated samples of one prompt
};

struct GenResult {
    std::string text;
    bool cached = false;
    int attempts = 1;
};

// Per-request slot in a batch: either a result or a positional error.
struct GenOutcome {
    std::optional<GenResult> result;
    Errc error_code = Errc::transport;
    std::string error;

    bool ok() const noexcept { return result.has_value(); }
};

// Chat-completion client over three interchangeable backends.
//
//   live   - HTTP chat-completions endpoint with retry/backoff; successful
//            completions are appended to the replay cache.
//   replay - content-addressed cache hits only; misses are errors.
//   mock   - fixture lookup by prompt hash, with an optional synthesizer
//            fallback for scripted offline runs.
class Client {
public:
    explicit Client(BackendConfig cfg);

    GenResult generate(const GenRequest& req);

    // Bounded-concurrency fan-out; results are positional regardless of
    // completion order, and one failed request never aborts the batch.
    std::vector<GenOutcome> generate_batch(std::span<const GenRequest> reqs);

    void add_fixture(std::string_view prompt, std::string completion);
    void add_fixture(std::string_view prompt, int sample_index, std::string completion);
    void set_mock_synthesizer(std::function<std::string(const GenRequest&)> synth);

    // Hex SHA-256 of (model, temperature, prompt, sample_index).
    static std::string cache_key(const GenRequest& req);

    std::filesystem::path cache_path(const std::string& key) const;

    const BackendConfig& config() const noexcept { return cfg_; }

private:
    GenResult generate_live(const GenRequest& req);
    GenResult generate_replay(const GenRequest& req);
    GenResult generate_mock(const GenRequest& req);

    std::optional<std::string> cache_lookup(const std::string& key) const;
    void cache_store(const std::string& key, std::string_view text) const;

    BackendConfig cfg_;
    std::unordered_map<std::string, std::string> fixtures_;
    std::function<std::string(const GenRequest&)> synthesizer_;
};

std::string sha256_hex(std::string_view data);

} // namespace augkit::llm
