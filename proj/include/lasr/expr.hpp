#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lasr {

using Rng = std::mt19937_64;

enum class BinaryOp : std::uint8_t { add, sub, mul, div, pow };
enum class UnaryOp : std::uint8_t { neg, sin, cos, exp, log, sqrt };

inline constexpr BinaryOp kAllBinaryOps[] = {BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div,
                                             BinaryOp::pow};
inline constexpr UnaryOp kAllUnaryOps[] = {UnaryOp::neg, UnaryOp::sin, UnaryOp::cos,
                                           UnaryOp::exp, UnaryOp::log, UnaryOp::sqrt};

std::string_view symbol(BinaryOp op);
std::string_view name(UnaryOp op);

/// The operator grammar hypotheses are drawn from, plus the variable names
/// bound to dataset columns (by position).
struct OperatorSet {
    std::vector<BinaryOp> binary_ops;
    std::vector<UnaryOp> unary_ops;
    bool allow_constants = true;
    std::vector<std::string> variable_names;

    /// Binary {+,-,*,/}, unary {sin,cos,exp,log,sqrt}. Special functions such
    /// as arcsin/arctan are not part of the grammar.
    static OperatorSet standard(std::vector<std::string> variables);

    bool has(BinaryOp op) const;
    bool has(UnaryOp op) const;
    /// Sorts and deduplicates the operator lists, then checks invariants.
    /// Throws std::invalid_argument.
    void normalize();
    void validate() const;
};

class Expr {
public:
    enum class Kind : std::uint8_t { constant, variable, unary, binary };

    static Expr constant(double value);
    static Expr variable(std::size_t index);
    static Expr unary(UnaryOp op, Expr child);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

    Kind kind() const;
    bool is_leaf() const { return kind() == Kind::constant || kind() == Kind::variable; }
    double value() const;
    std::size_t var_index() const;
    UnaryOp unary_op() const;
    BinaryOp binary_op() const;
    std::size_t arity() const;
    Expr child(std::size_t i) const;

    /// Node count, cached at construction.
    std::size_t size() const;
    std::size_t depth() const;

    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position) : std::runtime_error(what), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class SyntaxError : public ParseError {
public:
    using ParseError::ParseError;
};

class UnknownSymbol : public ParseError {
public:
    UnknownSymbol(std::string symbol, std::size_t position);
    const std::string& symbol() const { return symbol_; }

private:
    std::string symbol_;
};

class DimensionMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Infix parser. Accepts `+ - * / ^` (`**` is read as `^`), calls such as
/// `sin(x)`, parentheses, decimal and scientific literals, and `pi`.
Expr parse(std::string_view text, const OperatorSet& ops);

/// Fully parenthesized infix; constants use the shortest representation that
/// reads back to the same double.
std::string format(const Expr& e, std::span<const std::string> variable_names);
std::string format_constant(double value);

std::size_t complexity(const Expr& e);

/// Preorder list of all subtrees; index 0 is the root.
std::vector<Expr> subtrees(const Expr& e);
/// Returns `e` with the subtree at preorder position `index` replaced.
Expr replace_subtree(const Expr& e, std::size_t index, const Expr& replacement);

/// Constant values in evaluation (postorder) order.
std::vector<double> constants(const Expr& e);
Expr with_constants(const Expr& e, std::span<const double> values);

/// Highest variable index used plus one (0 if none).
std::size_t variable_extent(const Expr& e);
std::vector<bool> variables_used(const Expr& e, std::size_t n_variables);

/// Throws std::invalid_argument if `e` uses an operator or variable outside `ops`.
void check_grammar(const Expr& e, const OperatorSet& ops);

/// Flattened postfix form used for fast column-wise evaluation. Constants can
/// be overridden per call without rebuilding the tree.
class CompiledExpr {
public:
    explicit CompiledExpr(const Expr& e);

    std::size_t n_constants() const { return n_constants_; }
    std::size_t variable_extent() const { return variable_extent_; }

    /// Writes one value per row into `out`. Domain errors produce non-finite
    /// values rather than exceptions.
    void eval(std::span<const std::vector<double>> columns, std::size_t n_rows, std::vector<double>& out) const;
    void eval(std::span<const std::vector<double>> columns, std::size_t n_rows, std::span<const double> constants,
              std::vector<double>& out) const;

private:
    struct Instr {
        Expr::Kind kind;
        std::uint8_t op;
        std::uint32_t slot;  // variable index or constant slot
    };
    std::vector<Instr> code_;
    std::vector<double> constants_;
    std::size_t n_constants_ = 0;
    std::size_t max_stack_ = 0;
    std::size_t variable_extent_ = 0;
};

std::vector<double> evaluate(const Expr& e, std::span<const std::vector<double>> columns, std::size_t n_rows);
double evaluate_point(const Expr& e, std::span<const double> point);

double apply(UnaryOp op, double x);
double apply(BinaryOp op, double a, double b);

/// Rewrites that never grow the tree: constant folding, additive and
/// multiplicative identities, x-x, x/x, double negation, and merging of
/// chained constant factors.
Expr simplify(const Expr& e);

/// Grow-method random tree with depth <= max_depth (max_depth >= 1).
Expr random_expr(const OperatorSet& ops, std::size_t max_depth, Rng& rng);
Expr random_leaf(const OperatorSet& ops, Rng& rng);

std::string operators_text(const OperatorSet& ops);
std::string variables_text(const OperatorSet& ops);
std::string describe_grammar(const OperatorSet& ops);

}  // namespace lasr
