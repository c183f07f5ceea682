#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lasr/expr.hpp"

namespace lasr {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

class MissingTarget : public DataError {
public:
    explicit MissingTarget(const std::string& name) : DataError("target column '" + name + "' not found") {}
};

/// row: zero-based data row (header excluded); col: zero-based file column.
class NonNumericCell : public DataError {
public:
    NonNumericCell(std::size_t row, std::size_t col, const std::string& cell);
    std::size_t row() const { return row_; }
    std::size_t col() const { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class NameCollision : public DataError {
public:
    explicit NameCollision(const std::string& name) : DataError("variable name '" + name + "' already in use") {}
};

class GenerationExhausted : public DataError {
public:
    using DataError::DataError;
};

/// Feature columns plus a target vector. Immutable once constructed; all
/// values finite, at least one row.
class Dataset {
public:
    Dataset(std::vector<std::string> variable_names, std::vector<std::vector<double>> columns, std::vector<double> y,
            std::string target_name = "y");

    const std::vector<std::string>& variable_names() const { return names_; }
    const std::vector<std::vector<double>>& columns() const { return columns_; }
    const std::vector<double>& column(std::size_t i) const { return columns_.at(i); }
    const std::vector<double>& y() const { return y_; }
    const std::string& target_name() const { return target_; }
    std::size_t rows() const { return y_.size(); }
    std::size_t cols() const { return columns_.size(); }

    /// Index of a feature by name; throws DataError when absent.
    std::size_t index_of(const std::string& name) const;
    Dataset select_rows(const std::vector<std::size_t>& rows) const;
    Dataset with_target(std::vector<double> y) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::vector<double> y_;
    std::string target_;
};

std::vector<double> evaluate(const Expr& e, const Dataset& d);

Dataset load_csv(const std::filesystem::path& path, const std::string& target_name);
/// Features in order, target last; values written in shortest round-trip form.
void write_csv(const Dataset& d, const std::filesystem::path& path);

double rms(const std::vector<double>& v);

/// y + Normal(0, (level * RMS(y))^2); features untouched.
Dataset add_target_noise(const Dataset& d, double level, Rng& rng);

/// Appends k standard-normal feature columns named from `name_pool`.
Dataset add_distractors(const Dataset& d, std::size_t k, const std::vector<std::string>& name_pool, Rng& rng);
std::vector<std::string> default_distractor_names(std::size_t count);

/// Random row partition of sizes floor(f*N) and N - floor(f*N).
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, Rng& rng);

/// Samples `n` rows of a known formula over independent uniform ranges,
/// resampling rows whose target is non-finite.
Dataset sample_formula(const Expr& formula, const std::vector<std::string>& names,
                       const std::vector<std::pair<double, double>>& ranges, std::size_t n, Rng& rng,
                       std::size_t max_attempts_per_row = 1000);

struct SyntheticSpec {
    std::size_t n_vars = 3;
    std::size_t max_complexity = 19;
    std::size_t n_samples = 1000;
    std::map<std::string, double> operator_weights = {
        {"+", 1.0}, {"-", 1.0}, {"*", 1.0}, {"/", 1.0},
        {"exp", 0.6}, {"log", 0.6}, {"cos", 0.6}, {"sin", 0.4}, {"sqrt", 0.4}};
    double range_low = 0.1;
    double range_high = 5.0;
    std::uint64_t seed = 0;
    std::size_t max_candidates = 2000;

    void validate() const;
    OperatorSet operator_set() const;
};

struct SyntheticProblem {
    Expr ground_truth;
    Dataset data;
};

SyntheticProblem generate_synthetic(const SyntheticSpec& spec, Rng& rng);

}  // namespace lasr
