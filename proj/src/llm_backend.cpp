#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "lasr/llm.hpp"

namespace lasr {

using json = nlohmann::json;

std::string prompt_digest(const std::string& prompt) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(prompt.data(), prompt.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

std::string LlmBackend::complete(const std::string& prompt) {
    ++calls_;
    try {
        return do_complete(prompt);
    } catch (...) {
        ++failures_;
        throw;
    }
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses) : queue_(responses.begin(), responses.end()) {}

ScriptedBackend::ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

void ScriptedBackend::push(std::string response) {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(response));
}

std::vector<std::string> ScriptedBackend::prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
}

std::string ScriptedBackend::do_complete(const std::string& prompt) {
    std::unique_lock lock(mutex_);
    prompts_.push_back(prompt);
    if (!queue_.empty()) {
        std::string r = std::move(queue_.front());
        queue_.pop_front();
        return r;
    }
    if (responder_) {
        lock.unlock();
        if (auto r = responder_(prompt)) return *r;
    }
    throw LlmUnavailable("scripted backend has no response");
}

// ---------------------------------------------------------------------------

std::unique_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open replay store '" + path.string() + "'");
    auto replay = std::make_unique<ReplayBackend>();
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            json j = json::parse(line);
            replay->add(j.at("digest").get<std::string>(), j.at("response").get<std::string>());
        } catch (const json::exception& e) {
            throw IoError("replay store line " + std::to_string(n) + ": " + e.what());
        }
    }
    return replay;
}

void ReplayBackend::add(const std::string& digest, std::string response) { records_[digest] = std::move(response); }

std::string ReplayBackend::do_complete(const std::string& prompt) {
    std::string digest = prompt_digest(prompt);
    auto it = records_.find(digest);
    if (it == records_.end()) throw ReplayMiss(digest);
    return it->second;
}

// ---------------------------------------------------------------------------

RecordingBackend::RecordingBackend(LlmBackend& inner, std::filesystem::path store)
    : inner_(inner), store_(std::move(store)) {}

std::string RecordingBackend::do_complete(const std::string& prompt) {
    std::string response = inner_.complete(prompt);
    std::lock_guard lock(mutex_);
    std::ofstream out(store_, std::ios::app);
    if (!out) throw IoError("cannot append to replay store '" + store_.string() + "'");
    out << json{{"digest", prompt_digest(prompt)}, {"response", response}}.dump() << '\n';
    return response;
}

// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(HttpSettings settings)
    : settings_(std::move(settings)), inflight_(std::clamp(settings_.max_inflight, 1, 1024)) {
    if (!settings_.api_key_env.empty())
        if (const char* key = std::getenv(settings_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpBackend::request_body(const std::string& prompt) const {
    json body = {
        {"model", settings_.model},
        {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", settings_.temperature},
        {"max_tokens", settings_.max_tokens},
    };
    return body.dump();
}

std::string HttpBackend::parse_response(const std::string& body) {
    try {
        json j = json::parse(body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw LlmUnavailable(std::string("malformed completion response: ") + e.what());
    }
}

std::string HttpBackend::do_complete(const std::string& prompt) {
    struct Slot {
        std::counting_semaphore<1024>& s;
        explicit Slot(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
        ~Slot() { s.release(); }
    } slot(inflight_);

    httplib::Client client(settings_.endpoint);
    auto timeout = std::chrono::duration<double>(settings_.timeout_seconds);
    auto secs = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const std::string body = request_body(prompt);
    std::string last_error;
    for (int attempt = 0; attempt <= settings_.max_retries; ++attempt) {
        auto res = client.Post(settings_.path, headers, body, "application/json");
        if (res && res->status == 200) return parse_response(res->body);
        bool retryable = !res || res->status == 429 || res->status >= 500;
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        if (!retryable) break;
        if (attempt < settings_.max_retries) {
            auto wait = std::chrono::duration<double>(settings_.backoff_seconds * std::pow(2.0, attempt));
            std::this_thread::sleep_for(wait);
        }
    }
    throw LlmUnavailable("completion request failed: " + last_error);
}

}  // namespace lasr
