#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lasr/expr.hpp"

namespace lasr {

struct Concept {
    std::string text;
    std::size_t created_iteration = 0;
    std::uint64_t id = 0;

    friend bool operator==(const Concept&, const Concept&) = default;
};

/// Append-only list of natural-language concepts, oldest first.
class ConceptLibrary {
public:
    explicit ConceptLibrary(std::size_t recency_window = 20);

    /// Appends a concept with the next id. Blank text is rejected.
    const Concept& add(std::string text, std::size_t iteration);

    const std::vector<Concept>& concepts() const { return concepts_; }
    std::size_t size() const { return concepts_.size(); }
    bool empty() const { return concepts_.empty(); }
    std::size_t recency_window() const { return window_; }

    /// The `recency_window` most recent concepts (fewer if the library is small).
    std::span<const Concept> recent() const;
    /// Everything older than the recency window.
    std::span<const Concept> older() const;

    friend bool operator==(const ConceptLibrary&, const ConceptLibrary&) = default;

private:
    std::vector<Concept> concepts_;
    std::size_t window_;
    std::uint64_t next_id_ = 1;
};

/// Seeds a library with user hints at iteration 0.
ConceptLibrary init_library(const std::vector<std::string>& hints, std::size_t recency_window = 20);

/// Uniform sample without replacement of min(l, available) texts from the
/// recency window.
std::vector<std::string> sample_concepts(const ConceptLibrary& lib, std::size_t l, Rng& rng);
std::vector<std::string> sample_texts(std::span<const Concept> pool, std::size_t l, Rng& rng);

/// One JSON object per line: {"iteration", "id", "text"}.
void write_concept_log(const ConceptLibrary& lib, const std::filesystem::path& path);
ConceptLibrary read_concept_log(const std::filesystem::path& path, std::size_t recency_window = 20);

}  // namespace lasr
