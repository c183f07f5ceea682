#include "lasr/library.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "lasr/dataset.hpp"

namespace lasr {

ConceptLibrary::ConceptLibrary(std::size_t recency_window) : window_(recency_window) {
    if (window_ == 0) throw std::invalid_argument("recency window must be >= 1");
}

const Concept& ConceptLibrary::add(std::string text, std::size_t iteration) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw std::invalid_argument("concept text is empty");
    concepts_.push_back(Concept{std::move(text), iteration, next_id_++});
    return concepts_.back();
}

std::span<const Concept> ConceptLibrary::recent() const {
    std::size_t n = std::min(window_, concepts_.size());
    return std::span<const Concept>(concepts_).last(n);
}

std::span<const Concept> ConceptLibrary::older() const {
    std::size_t n = concepts_.size() > window_ ? concepts_.size() - window_ : 0;
    return std::span<const Concept>(concepts_).first(n);
}

ConceptLibrary init_library(const std::vector<std::string>& hints, std::size_t recency_window) {
    ConceptLibrary lib(recency_window);
    for (const auto& h : hints) lib.add(h, 0);
    return lib;
}

std::vector<std::string> sample_texts(std::span<const Concept> pool, std::size_t l, Rng& rng) {
    if (l < 1) throw std::invalid_argument("sample size must be >= 1");
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t take = std::min(l, pool.size());
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<std::string> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(pool[idx[i]].text);
    return out;
}

std::vector<std::string> sample_concepts(const ConceptLibrary& lib, std::size_t l, Rng& rng) {
    return sample_texts(lib.recent(), l, rng);
}

void write_concept_log(const ConceptLibrary& lib, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const Concept& c : lib.concepts()) {
        nlohmann::json j = {{"iteration", c.created_iteration}, {"id", c.id}, {"text", c.text}};
        out << j.dump() << '\n';
    }
}

ConceptLibrary read_concept_log(const std::filesystem::path& path, std::size_t recency_window) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    ConceptLibrary lib(recency_window);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line);
        lib.add(j.at("text").get<std::string>(), j.at("iteration").get<std::size_t>());
    }
    return lib;
}

}  // namespace lasr
