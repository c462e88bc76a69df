#include "augkit/llm_client.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

// httplib pulls in OpenSSL support only when requested; plain HTTP is enough
// for a configurable-base-url client (TLS termination is the proxy's job).
#include <httplib.h>

namespace augkit::llm {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// "http://host:port/v1" -> ("http://host:port", "/v1")
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) {
        return {base_url, ""};
    }
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

} // namespace

BackendKind backend_from_string(std::string_view name) {
    if (name == "live") return BackendKind::live;
    if (name == "replay") return BackendKind::replay;
    if (name == "mock") return BackendKind::mock;
    throw Error(Errc::config_error, "unknown backend kind: " + std::string(name));
}

const char* to_string(BackendKind kind) noexcept {
    switch (kind) {
    case BackendKind::live: return "live";
    case BackendKind::replay: return "replay";
    case BackendKind::mock: return "mock";
    }
    return "mock";
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

Client::Client(BackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.max_concurrency < 1) {
        throw Error(Errc::config_error, "max_concurrency must be >= 1");
    }
    if (cfg_.kind == BackendKind::live && cfg_.base_url.empty()) {
        throw Error(Errc::config_error, "live backend requires base_url");
    }
    if (cfg_.kind == BackendKind::replay && cfg_.cache_dir.empty()) {
        throw Error(Errc::config_error, "replay backend requires cache_dir");
    }
    if (cfg_.retry.max_attempts < 1) {
        throw Error(Errc::config_error, "retry.max_attempts must be >= 1");
    }
}

std::string Client::cache_key(const GenRequest& req) {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6f", req.temperature);
    std::string canonical;
    canonical.reserve(req.prompt.size() + req.model.size() + 48);
    canonical.append(req.model);
    canonical.push_back('\x1f');
    canonical.append(temp);
    canonical.push_back('\x1f');
    canonical.append(std::to_string(req.sample_index));
    canonical.push_back('\x1f');
    canonical.append(req.prompt);
    return sha256_hex(canonical);
}

std::filesystem::path Client::cache_path(const std::string& key) const {
    return std::filesystem::path(cfg_.cache_dir) / key.substr(0, 2) / (key + ".txt");
}

std::optional<std::string> Client::cache_lookup(const std::string& key) const {
    const auto path = cache_path(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        return std::nullopt;
    }
    return read_file(path);
}

void Client::cache_store(const std::string& key, std::string_view text) const {
    if (cfg_.cache_dir.empty()) return;
    const auto final_path = cache_path(key);
    std::error_code ec;
    std::filesystem::create_directories(final_path.parent_path(), ec);

    static std::atomic<unsigned> counter{0};
    std::ostringstream tmp_name;
    tmp_name << key << ".tmp." << std::this_thread::get_id() << '.'
             << counter.fetch_add(1, std::memory_order_relaxed);
    const auto tmp_path = final_path.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(Errc::io_failure, "cannot write cache file " + tmp_path.string());
        }
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
    std::filesystem::rename(tmp_path, final_path, ec);
    if (ec) {
        std::filesystem::remove(tmp_path, ec);
        throw Error(Errc::io_failure, "cache rename failed for " + final_path.string());
    }
}

void Client::add_fixture(std::string_view prompt, std::string completion) {
    fixtures_[sha256_hex("p\x1f" + std::string(prompt))] = std::move(completion);
}

void Client::add_fixture(std::string_view prompt, int sample_index, std::string completion) {
    fixtures_[sha256_hex("pi\x1f" + std::to_string(sample_index) + "\x1f" + std::string(prompt))] =
        std::move(completion);
}

void Client::set_mock_synthesizer(std::function<std::string(const GenRequest&)> synth) {
    synthesizer_ = std::move(synth);
}

GenResult Client::generate_mock(const GenRequest& req) {
    auto indexed = fixtures_.find(
        sha256_hex("pi\x1f" + std::to_string(req.sample_index) + "\x1f" + req.prompt));
    if (indexed != fixtures_.end()) {
        return {indexed->second, false, 1};
    }
    auto plain = fixtures_.find(sha256_hex("p\x1f" + req.prompt));
    if (plain != fixtures_.end()) {
        return {plain->second, false, 1};
    }
    if (synthesizer_) {
        return {synthesizer_(req), false, 1};
    }
    throw Error(Errc::fixture_missing,
                "no fixture for prompt (model=" + req.model +
                    ", sample_index=" + std::to_string(req.sample_index) + ")");
}

GenResult Client::generate_replay(const GenRequest& req) {
    const auto key = cache_key(req);
    if (auto hit = cache_lookup(key)) {
        return {std::move(*hit), true, 1};
    }
    throw Error(Errc::cache_miss, "replay cache miss for key " + key);
}

GenResult Client::generate_live(const GenRequest& req) {
    const char* api_key = std::getenv(cfg_.api_key_env.c_str());
    if (!api_key || !*api_key) {
        throw Error(Errc::config_error, "API key env var " + cfg_.api_key_env + " is not set");
    }

    const auto [host, prefix] = split_base_url(cfg_.base_url);
    json body;
    body["model"] = req.model;
    body["messages"] = json::array({json{{"role", "user"}, {"content", req.prompt}}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(cfg_.retry.base_backoff * (1 << (attempt - 2)));
        }
        httplib::Client http(host);
        http.set_read_timeout(120, 0);
        httplib::Headers headers{{"Authorization", std::string("Bearer ") + api_key}};
        auto res = http.Post(prefix + "/chat/completions", headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            if (retryable_status(res->status)) {
                continue;
            }
            throw Error(Errc::transport, last_error + ": " + res->body);
        }
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::parse_error& e) {
            last_error = std::string("bad JSON reply: ") + e.what();
            continue;
        }
        try {
            GenResult result;
            result.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            result.cached = false;
            result.attempts = attempt;
            cache_store(cache_key(req), result.text);
            return result;
        } catch (const json::exception& e) {
            throw Error(Errc::transport, std::string("unexpected reply shape: ") + e.what());
        }
    }
    throw Error(Errc::transport, "gave up after " + std::to_string(cfg_.retry.max_attempts) +
                                     " attempts: " + last_error);
}

GenResult Client::generate(const GenRequest& req) {
    if (req.prompt.empty()) {
        throw Error(Errc::invalid_argument, "prompt must be non-empty");
    }
    if (req.sample_index < 0) {
        throw Error(Errc::invalid_argument, "sample_index must be >= 0");
    }
    switch (cfg_.kind) {
    case BackendKind::mock: return generate_mock(req);
    case BackendKind::replay: return generate_replay(req);
    case BackendKind::live: return generate_live(req);
    }
    throw Error(Errc::config_error, "invalid backend kind");
}

std::vector<GenOutcome> Client::generate_batch(std::span<const GenRequest> reqs) {
    std::vector<GenOutcome> out(reqs.size());
    if (reqs.empty()) {
        return out;
    }
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_concurrency), reqs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= reqs.size()) break;
            try {
                out[i].result = generate(reqs[i]);
            } catch (const Error& e) {
                out[i].error_code = e.code();
                out[i].error = e.what();
            } catch (const std::exception& e) {
                out[i].error_code = Errc::transport;
                out[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) {
        workers.emplace_back(worker);
    }
    for (auto& w : workers) {
        w.join();
    }
    return out;
}

} // namespace augkit::llm
