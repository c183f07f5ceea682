#include "lasr/config.hpp"

#include <fstream>
#include <functional>

#include <json.hpp>

namespace lasr {

using json = nlohmann::json;

namespace {

struct Entry {
    std::string key;
    std::function<void(AppConfig&, const json&)> set;
    std::function<json(const AppConfig&)> get;
};

template <typename T>
Entry field(std::string key, T AppConfig::*member) {
    return {std::move(key), [member](AppConfig& c, const json& v) { c.*member = v.get<T>(); },
            [member](const AppConfig& c) { return json(c.*member); }};
}

template <typename T>
Entry run_field(std::string key, T RunConfig::*member) {
    return {std::move(key), [member](AppConfig& c, const json& v) { c.run.*member = v.get<T>(); },
            [member](const AppConfig& c) { return json(c.run.*member); }};
}

template <typename T>
Entry evolve_field(std::string key, T EvolveConfig::*member) {
    return {std::move(key), [member](AppConfig& c, const json& v) { c.run.evolve.*member = v.get<T>(); },
            [member](const AppConfig& c) { return json(c.run.evolve.*member); }};
}

template <typename T>
Entry limit_field(std::string key, T TreeLimits::*member) {
    return {std::move(key), [member](AppConfig& c, const json& v) { c.run.evolve.limits.*member = v.get<T>(); },
            [member](const AppConfig& c) { return json(c.run.evolve.limits.*member); }};
}

template <typename T>
Entry llm_field(std::string key, T LlmConfig::*member) {
    return {std::move(key), [member](AppConfig& c, const json& v) { c.run.llm.*member = v.get<T>(); },
            [member](const AppConfig& c) { return json(c.run.llm.*member); }};
}

template <typename T>
Entry http_field(std::string key, T HttpSettings::*member) {
    return {std::move(key), [member](AppConfig& c, const json& v) { c.http.*member = v.get<T>(); },
            [member](const AppConfig& c) { return json(c.http.*member); }};
}

BinaryOp binary_from(const std::string& s) {
    for (BinaryOp op : kAllBinaryOps)
        if (symbol(op) == s) return op;
    throw ConfigError("unknown binary operator '" + s + "'");
}

UnaryOp unary_from(const std::string& s) {
    for (UnaryOp op : kAllUnaryOps)
        if (name(op) == s) return op;
    throw ConfigError("unknown unary operator '" + s + "'");
}

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = [] {
        std::vector<Entry> e = {
            run_field("iterations", &RunConfig::iterations),
            run_field("n_populations", &RunConfig::n_populations),
            run_field("evolution_steps", &RunConfig::evolution_steps),
            run_field("p", &RunConfig::p),
            run_field("hints", &RunConfig::hints),
            run_field("seed", &RunConfig::seed),
            Entry{"binary_ops",
                  [](AppConfig& c, const json& v) {
                      c.run.binary_ops.clear();
                      for (const auto& s : v.get<std::vector<std::string>>()) c.run.binary_ops.push_back(binary_from(s));
                  },
                  [](const AppConfig& c) {
                      json a = json::array();
                      for (BinaryOp op : c.run.binary_ops) a.push_back(std::string(symbol(op)));
                      return a;
                  }},
            Entry{"unary_ops",
                  [](AppConfig& c, const json& v) {
                      c.run.unary_ops.clear();
                      for (const auto& s : v.get<std::vector<std::string>>()) c.run.unary_ops.push_back(unary_from(s));
                  },
                  [](const AppConfig& c) {
                      json a = json::array();
                      for (UnaryOp op : c.run.unary_ops) a.push_back(std::string(name(op)));
                      return a;
                  }},
            run_field("allow_constants", &RunConfig::allow_constants),
            run_field("recency_window", &RunConfig::recency_window),
            run_field("n_worst", &RunConfig::n_worst),
            run_field("early_stop_mse", &RunConfig::early_stop_mse),
            run_field("wall_clock_seconds", &RunConfig::wall_clock_seconds),
            run_field("workers", &RunConfig::workers),
            Entry{"best_mode",
                  [](AppConfig& c, const json& v) {
                      auto s = v.get<std::string>();
                      if (s == "min_loss") c.run.best_mode = BestMode::min_loss;
                      else if (s == "min_score") c.run.best_mode = BestMode::min_score;
                      else throw ConfigError("best_mode must be min_loss or min_score");
                  },
                  [](const AppConfig& c) {
                      return json(c.run.best_mode == BestMode::min_loss ? "min_loss" : "min_score");
                  }},
            evolve_field("population_size", &EvolveConfig::population_size),
            evolve_field("cycles_per_iteration", &EvolveConfig::cycles_per_iteration),
            evolve_field("parsimony", &EvolveConfig::parsimony),
            evolve_field("tournament_size", &EvolveConfig::tournament_size),
            evolve_field("initial_temperature", &EvolveConfig::initial_temperature),
            evolve_field("anneal_decay", &EvolveConfig::anneal_decay),
            evolve_field("migrate_fraction", &EvolveConfig::migrate_fraction),
            evolve_field("crossover_probability", &EvolveConfig::crossover_probability),
            limit_field("max_complexity", &TreeLimits::max_complexity),
            limit_field("max_depth", &TreeLimits::max_depth),
            evolve_field("init_max_depth", &EvolveConfig::init_max_depth),
            evolve_field("constant_budget", &EvolveConfig::constant_budget),
            evolve_field("constant_restarts", &EvolveConfig::constant_restarts),
            evolve_field("elitism", &EvolveConfig::elitism),
        };
        for (std::size_t k = 0; k < kMutationKinds; ++k) {
            auto kind = static_cast<MutationKind>(k);
            e.push_back(Entry{"mutation_weights." + std::string(to_string(kind)),
                              [kind](AppConfig& c, const json& v) { c.run.evolve.mutation_weights[kind] = v.get<double>(); },
                              [kind](const AppConfig& c) { return json(c.run.evolve.mutation_weights[kind]); }});
        }
        std::vector<Entry> rest = {
            llm_field("llm.concepts_per_prompt", &LlmConfig::concepts_per_prompt),
            llm_field("llm.max_candidates", &LlmConfig::max_candidates),
            llm_field("llm.include_data", &LlmConfig::include_data),
            field("llm.backend", &AppConfig::backend),
            field("llm.replay_file", &AppConfig::replay_file),
            field("llm.record_file", &AppConfig::record_file),
            field("llm.prompt_dir", &AppConfig::prompt_dir),
            http_field("http.endpoint", &HttpSettings::endpoint),
            http_field("http.path", &HttpSettings::path),
            http_field("http.model", &HttpSettings::model),
            http_field("http.api_key_env", &HttpSettings::api_key_env),
            http_field("http.temperature", &HttpSettings::temperature),
            http_field("http.max_tokens", &HttpSettings::max_tokens),
            http_field("http.timeout_seconds", &HttpSettings::timeout_seconds),
            http_field("http.max_retries", &HttpSettings::max_retries),
            http_field("http.backoff_seconds", &HttpSettings::backoff_seconds),
            http_field("http.max_inflight", &HttpSettings::max_inflight),
        };
        e.insert(e.end(), rest.begin(), rest.end());
        return e;
    }();
    return entries;
}

const Entry& find(const std::string& key) {
    for (const Entry& e : registry())
        if (e.key == key) return e;
    throw ConfigError("unknown config key '" + key + "'");
}

void set_json(AppConfig& cfg, const std::string& key, const json& value) {
    const Entry& e = find(key);
    try {
        e.set(cfg, value);
    } catch (const json::exception& ex) {
        throw ConfigError("bad value for '" + key + "': " + ex.what());
    }
    if (key == "llm.backend" && cfg.backend != "off" && cfg.backend != "http" && cfg.backend != "replay")
        throw ConfigError("llm.backend must be off, http or replay");
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object()) flatten(*it, key, out);
        else out.emplace_back(key, *it);
    }
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const Entry& e : registry()) keys.push_back(e.key);
    return keys;
}

void set_config_value(AppConfig& cfg, const std::string& key, const std::string& json_value) {
    json v;
    try {
        v = json::parse(json_value);
    } catch (const json::exception& ex) {
        throw ConfigError("bad value for '" + key + "': " + ex.what());
    }
    set_json(cfg, key, v);
}

void apply_override(AppConfig& cfg, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    std::string key = assignment.substr(0, eq);
    std::string raw = assignment.substr(eq + 1);
    json v = json::parse(raw, nullptr, false);
    if (v.is_discarded()) v = raw;
    set_json(cfg, key, v);
}

void load_config_file(AppConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& ex) {
        throw ConfigError("config '" + path.string() + "': " + ex.what());
    }
    if (!j.is_object()) throw ConfigError("config '" + path.string() + "' must be a JSON object");
    std::vector<std::pair<std::string, json>> flat;
    flatten(j, "", flat);
    for (const auto& [key, value] : flat) set_json(cfg, key, value);
}

std::string config_to_json(const AppConfig& cfg) {
    json j = json::object();
    for (const Entry& e : registry()) j[e.key] = e.get(cfg);
    return j.dump(2);
}

void resolve_prompts(AppConfig& cfg) {
    if (!cfg.prompt_dir.empty()) cfg.run.llm.templates = PromptTemplates::load(cfg.prompt_dir);
}

}  // namespace lasr
