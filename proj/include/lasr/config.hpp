#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lasr/llm.hpp"
#include "lasr/orchestrator.hpp"

namespace lasr {

/// Everything a CLI invocation can configure. Every field has a dotted key,
/// e.g. "iterations", "mutation_weights.mutate_constant", "http.model".
struct AppConfig {
    RunConfig run;
    HttpSettings http;
    std::string backend = "off";  // off | http | replay
    std::string replay_file;      // store read by the replay backend
    std::string record_file;      // if set, http responses are appended here
    std::string prompt_dir;       // optional template overrides
};

/// All accepted keys, in documentation order.
std::vector<std::string> config_keys();

/// Sets one key from a JSON value. Unknown keys and ill-typed values throw ConfigError.
void set_config_value(AppConfig& cfg, const std::string& key, const std::string& json_value);

/// "key=value". The value is read as JSON when it parses as JSON and as a
/// plain string otherwise, so both p=0.1 and http.model=llama3-8b work.
void apply_override(AppConfig& cfg, const std::string& assignment);

/// Reads a JSON object; nested objects are flattened into dotted keys.
void load_config_file(AppConfig& cfg, const std::filesystem::path& path);

/// Flat {"key": value} snapshot that load_config_file reads back unchanged.
std::string config_to_json(const AppConfig& cfg);

/// Loads prompt templates from prompt_dir (if any) into run.llm.templates.
void resolve_prompts(AppConfig& cfg);

}  // namespace lasr
