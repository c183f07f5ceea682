#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasr/dataset.hpp"
#include "lasr/evolve.hpp"
#include "lasr/expr.hpp"
#include "lasr/library.hpp"

namespace lasr {

// ---------------------------------------------------------------------------
// Backends

class LlmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LlmUnavailable : public LlmError {
public:
    using LlmError::LlmError;
};

class ReplayMiss : public LlmError {
public:
    explicit ReplayMiss(std::string digest) : LlmError("no recorded response for prompt " + digest), digest_(std::move(digest)) {}
    const std::string& digest() const { return digest_; }

private:
    std::string digest_;
};

/// Hex SHA-256 of the exact prompt bytes.
std::string prompt_digest(const std::string& prompt);

/// A text-completion service. Safe for concurrent use; counters are atomic.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// Throws LlmError (LlmUnavailable, ReplayMiss) on failure.
    std::string complete(const std::string& prompt);

    std::uint64_t calls() const { return calls_.load(); }
    std::uint64_t failures() const { return failures_.load(); }
    std::uint64_t fallbacks() const { return fallbacks_.load(); }
    /// Recorded by the guided operators whenever they fall back to a symbolic one.
    void note_fallback() { ++fallbacks_; }

protected:
    virtual std::string do_complete(const std::string& prompt) = 0;

private:
    std::atomic<std::uint64_t> calls_{0};
    std::atomic<std::uint64_t> failures_{0};
    std::atomic<std::uint64_t> fallbacks_{0};
};

/// Always fails. Stands in for "no LLM configured" and records any attempt.
class OfflineBackend final : public LlmBackend {
protected:
    std::string do_complete(const std::string&) override { throw LlmUnavailable("LLM backend is disabled"); }
};

/// Deterministic test double: pops queued responses in order, or answers via
/// a responder function of the prompt once the queue is empty.
class ScriptedBackend final : public LlmBackend {
public:
    using Responder = std::function<std::optional<std::string>(const std::string& prompt)>;

    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<std::string> responses);
    explicit ScriptedBackend(Responder responder);

    void push(std::string response);
    std::vector<std::string> prompts() const;

protected:
    std::string do_complete(const std::string& prompt) override;

private:
    mutable std::mutex mutex_;
    std::deque<std::string> queue_;
    Responder responder_;
    std::vector<std::string> prompts_;
};

/// Looks responses up by prompt digest. Store format: one JSON object per
/// line, {"digest": hex, "response": string}.
class ReplayBackend final : public LlmBackend {
public:
    ReplayBackend() = default;
    static std::unique_ptr<ReplayBackend> from_file(const std::filesystem::path& path);

    void add(const std::string& digest, std::string response);
    void add_prompt(const std::string& prompt, std::string response) { add(prompt_digest(prompt), std::move(response)); }
    std::size_t size() const { return records_.size(); }

protected:
    std::string do_complete(const std::string& prompt) override;

private:
    std::map<std::string, std::string> records_;
};

/// Forwards to another backend and appends every successful exchange to a
/// replay store file.
class RecordingBackend final : public LlmBackend {
public:
    RecordingBackend(LlmBackend& inner, std::filesystem::path store);

protected:
    std::string do_complete(const std::string& prompt) override;

private:
    LlmBackend& inner_;
    std::filesystem::path store_;
    std::mutex mutex_;
};

struct HttpSettings {
    std::string endpoint = "http://localhost:8000";  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model = "llama3-8b";
    std::string api_key_env = "OPENAI_API_KEY";  // name of the variable, never the key
    double temperature = 1.0;
    int max_tokens = 1000;
    double timeout_seconds = 60.0;
    int max_retries = 3;
    double backoff_seconds = 0.5;
    int max_inflight = 8;
};

/// OpenAI-compatible chat-completions client with bounded concurrency and
/// exponential backoff on transport errors, 429 and 5xx.
class HttpBackend final : public LlmBackend {
public:
    explicit HttpBackend(HttpSettings settings);

    /// Request body for a single user message.
    std::string request_body(const std::string& prompt) const;
    static std::string parse_response(const std::string& body);

protected:
    std::string do_complete(const std::string& prompt) override;

private:
    HttpSettings settings_;
    std::string api_key_;
    std::counting_semaphore<1024> inflight_;
};

// ---------------------------------------------------------------------------
// Prompts

class MissingPlaceholderValue : public std::runtime_error {
public:
    explicit MissingPlaceholderValue(std::string name)
        : std::runtime_error("no value for placeholder {{" + name + "}}"), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

struct PromptBindings {
    std::vector<std::string> concepts;
    std::string variables;
    std::string operators;
    std::vector<std::string> expressions;
    std::optional<std::string> data;
};

/// Replaces {{concepts}}, {{variables}}, {{operators}}, {{expressions}} and
/// {{data}}. Concepts render as a numbered list, expressions one per line.
/// An empty expression list, absent data, or an unknown placeholder throws.
std::string render_prompt(const std::string& template_text, const PromptBindings& b);

struct PromptTemplates {
    std::string init;
    std::string mutate;
    std::string crossover;
    std::string abstraction;
    std::string evolution;

    static PromptTemplates defaults();
    /// Defaults overridden by any of init.txt, mutate.txt, crossover.txt,
    /// abstraction.txt, evolution.txt present in `dir`.
    static PromptTemplates load(const std::filesystem::path& dir);
};

/// Up to 10 rows as "x1=..., x2=... → y=..." lines.
std::string dataset_digest(const Dataset& d, std::size_t max_rows = 10);

// ---------------------------------------------------------------------------
// Guided operators

struct LlmConfig {
    std::size_t concepts_per_prompt = 5;
    std::size_t max_candidates = 10;
    bool include_data = false;
    PromptTemplates templates = PromptTemplates::defaults();
};

/// Everything a guided operator needs besides its inputs.
struct GuidedContext {
    const ConceptLibrary& library;
    const OperatorSet& ops;
    LlmBackend& backend;
    const LlmConfig& llm;
    const EvolveConfig& evolve;
    const Dataset* data = nullptr;  // bound to {{data}} when llm.include_data
};

/// Pulls candidate expressions out of free-form reply text, line by line.
std::vector<Expr> parse_candidates(const std::string& text, const OperatorSet& ops, std::size_t max_n);

PromptBindings make_bindings(const GuidedContext& ctx, std::vector<std::string> concepts,
                             std::vector<std::string> expressions);

/// n expressions: parsed LLM candidates first, random trees for the shortfall.
std::vector<Expr> llm_init(const GuidedContext& ctx, std::size_t n, Rng& rng);

/// First admissible candidate from the mutate prompt; on any failure the
/// symbolic mutation is applied with the generator state as it was on entry.
Expr llm_mutate(const Expr& e, const GuidedContext& ctx, Rng& rng);

/// As llm_mutate with two reference expressions; falls back to the first
/// offspring of symbolic crossover.
Expr llm_crossover(const Expr& a, const Expr& b, const GuidedContext& ctx, Rng& rng);

}  // namespace lasr
