#include "lasr/expr.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace lasr {

std::string_view symbol(BinaryOp op) {
    switch (op) {
        case BinaryOp::add: return "+";
        case BinaryOp::sub: return "-";
        case BinaryOp::mul: return "*";
        case BinaryOp::div: return "/";
        case BinaryOp::pow: return "^";
    }
    return "?";
}

std::string_view name(UnaryOp op) {
    switch (op) {
        case UnaryOp::neg: return "neg";
        case UnaryOp::sin: return "sin";
        case UnaryOp::cos: return "cos";
        case UnaryOp::exp: return "exp";
        case UnaryOp::log: return "log";
        case UnaryOp::sqrt: return "sqrt";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// OperatorSet

OperatorSet OperatorSet::standard(std::vector<std::string> variables) {
    OperatorSet ops;
    ops.binary_ops = {BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div};
    ops.unary_ops = {UnaryOp::sin, UnaryOp::cos, UnaryOp::exp, UnaryOp::log, UnaryOp::sqrt};
    ops.variable_names = std::move(variables);
    ops.validate();
    return ops;
}

bool OperatorSet::has(BinaryOp op) const {
    return std::find(binary_ops.begin(), binary_ops.end(), op) != binary_ops.end();
}

bool OperatorSet::has(UnaryOp op) const {
    return std::find(unary_ops.begin(), unary_ops.end(), op) != unary_ops.end();
}

void OperatorSet::normalize() {
    std::sort(binary_ops.begin(), binary_ops.end());
    binary_ops.erase(std::unique(binary_ops.begin(), binary_ops.end()), binary_ops.end());
    std::sort(unary_ops.begin(), unary_ops.end());
    unary_ops.erase(std::unique(unary_ops.begin(), unary_ops.end()), unary_ops.end());
    validate();
}

void OperatorSet::validate() const {
    if (binary_ops.empty()) throw std::invalid_argument("operator set needs at least one binary operator");
    if (variable_names.empty()) throw std::invalid_argument("operator set needs at least one variable");
    for (std::size_t i = 0; i < variable_names.size(); ++i) {
        const auto& v = variable_names[i];
        if (v.empty() || !(std::isalpha(static_cast<unsigned char>(v[0])) || v[0] == '_'))
            throw std::invalid_argument("invalid variable name '" + v + "'");
        for (char c : v)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
                throw std::invalid_argument("invalid variable name '" + v + "'");
        for (std::size_t j = 0; j < i; ++j)
            if (variable_names[j] == v) throw std::invalid_argument("duplicate variable name '" + v + "'");
    }
}

// ---------------------------------------------------------------------------
// Expr

struct Expr::Node {
    Kind kind;
    std::uint8_t op = 0;
    double value = 0.0;
    std::size_t index = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
    std::size_t size = 1;
    std::size_t depth = 1;
};

Expr Expr::constant(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("constants must be finite");
    auto n = std::make_shared<Node>();
    n->kind = Kind::constant;
    n->value = value;
    return Expr(std::move(n));
}

Expr Expr::variable(std::size_t index) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::variable;
    n->index = index;
    return Expr(std::move(n));
}

Expr Expr::unary(UnaryOp op, Expr child) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::unary;
    n->op = static_cast<std::uint8_t>(op);
    n->size = 1 + child.node_->size;
    n->depth = 1 + child.node_->depth;
    n->lhs = std::move(child.node_);
    return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::binary;
    n->op = static_cast<std::uint8_t>(op);
    n->size = 1 + lhs.node_->size + rhs.node_->size;
    n->depth = 1 + std::max(lhs.node_->depth, rhs.node_->depth);
    n->lhs = std::move(lhs.node_);
    n->rhs = std::move(rhs.node_);
    return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
std::size_t Expr::var_index() const { return node_->index; }
UnaryOp Expr::unary_op() const { return static_cast<UnaryOp>(node_->op); }
BinaryOp Expr::binary_op() const { return static_cast<BinaryOp>(node_->op); }
std::size_t Expr::size() const { return node_->size; }
std::size_t Expr::depth() const { return node_->depth; }

std::size_t Expr::arity() const {
    switch (node_->kind) {
        case Kind::unary: return 1;
        case Kind::binary: return 2;
        default: return 0;
    }
}

Expr Expr::child(std::size_t i) const {
    if (i >= arity()) throw std::out_of_range("Expr::child");
    return Expr(i == 0 ? node_->lhs : node_->rhs);
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind() || a.size() != b.size()) return false;
    switch (a.kind()) {
        case Expr::Kind::constant:
            return std::bit_cast<std::uint64_t>(a.value()) == std::bit_cast<std::uint64_t>(b.value());
        case Expr::Kind::variable: return a.var_index() == b.var_index();
        case Expr::Kind::unary: return a.unary_op() == b.unary_op() && a.child(0) == b.child(0);
        case Expr::Kind::binary:
            return a.binary_op() == b.binary_op() && a.child(0) == b.child(0) && a.child(1) == b.child(1);
    }
    return false;
}

UnknownSymbol::UnknownSymbol(std::string symbol, std::size_t position)
    : ParseError("unknown symbol '" + symbol + "' at position " + std::to_string(position), position),
      symbol_(std::move(symbol)) {}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
public:
    Parser(std::string_view text, const OperatorSet& ops) : text_(text), ops_(ops) {}

    Expr run() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw SyntaxError(msg + " at position " + std::to_string(pos_), pos_);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool peek_pow() {
        char c = peek();
        if (c == '^') return true;
        return c == '*' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*';
    }

    void require_binary(BinaryOp op, std::size_t at) const {
        if (!ops_.has(op)) throw UnknownSymbol(std::string(symbol(op)), at);
    }

    Expr parse_sum() {
        Expr lhs = parse_product();
        while (true) {
            char c = peek();
            if (c != '+' && c != '-') return lhs;
            BinaryOp op = c == '+' ? BinaryOp::add : BinaryOp::sub;
            require_binary(op, pos_);
            ++pos_;
            lhs = Expr::binary(op, lhs, parse_product());
        }
    }

    Expr parse_product() {
        Expr lhs = parse_signed();
        while (true) {
            char c = peek();
            if (c == '*' && !peek_pow()) {
                require_binary(BinaryOp::mul, pos_);
                ++pos_;
                lhs = Expr::binary(BinaryOp::mul, lhs, parse_signed());
            } else if (c == '/') {
                require_binary(BinaryOp::div, pos_);
                ++pos_;
                lhs = Expr::binary(BinaryOp::div, lhs, parse_signed());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_signed() {
        char c = peek();
        if (c == '+') {
            ++pos_;
            return parse_signed();
        }
        if (c != '-') return parse_power();
        std::size_t at = pos_;
        ++pos_;
        // "-2.5" is a negative literal unless an exponent binds tighter ("-2^2").
        if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            std::size_t save = pos_;
            double v = parse_number();
            if (!peek_pow()) return Expr::constant(-v);
            pos_ = save;
        }
        if (ops_.has(UnaryOp::neg)) return Expr::unary(UnaryOp::neg, parse_signed());
        if (ops_.allow_constants && ops_.has(BinaryOp::mul))
            return Expr::binary(BinaryOp::mul, Expr::constant(-1.0), parse_signed());
        throw UnknownSymbol("neg", at);
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (!peek_pow()) return base;
        std::size_t at = pos_;
        pos_ += text_[pos_] == '^' ? 1 : 2;
        require_binary(BinaryOp::pow, at);
        return Expr::binary(BinaryOp::pow, base, parse_signed());
    }

    double parse_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc() || ptr != text_.data() + pos_) {
            pos_ = start;
            fail("malformed number");
        }
        if (!std::isfinite(v)) {
            pos_ = start;
            fail("number out of range");
        }
        return v;
    }

    Expr parse_primary() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            Expr inner = parse_sum();
            if (peek() != ')') fail("expected ')'");
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            if (!ops_.allow_constants) throw UnknownSymbol("constant", pos_);
            return Expr::constant(parse_number());
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        if (c == '\0') fail("unexpected end of input");
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expr parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string ident(text_.substr(start, pos_ - start));
        for (std::size_t i = 0; i < ops_.variable_names.size(); ++i)
            if (ops_.variable_names[i] == ident) return Expr::variable(i);
        if (peek() == '(') {
            for (UnaryOp op : kAllUnaryOps) {
                if (name(op) != ident) continue;
                if (!ops_.has(op)) throw UnknownSymbol(ident, start);
                ++pos_;
                Expr arg = parse_sum();
                if (peek() != ')') fail("expected ')'");
                ++pos_;
                return Expr::unary(op, arg);
            }
            throw UnknownSymbol(ident, start);
        }
        if (ident == "pi" && ops_.allow_constants) return Expr::constant(std::numbers::pi);
        throw UnknownSymbol(ident, start);
    }

    std::string_view text_;
    const OperatorSet& ops_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, const OperatorSet& ops) { return Parser(text, ops).run(); }

// ---------------------------------------------------------------------------
// Formatting

std::string format_constant(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    std::string s(buf.data(), ptr);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

namespace {

void format_into(const Expr& e, std::span<const std::string> names, std::string& out) {
    switch (e.kind()) {
        case Expr::Kind::constant: {
            std::string s = format_constant(e.value());
            if (e.value() < 0 || std::signbit(e.value())) {
                out += '(';
                out += s;
                out += ')';
            } else {
                out += s;
            }
            return;
        }
        case Expr::Kind::variable:
            if (e.var_index() < names.size())
                out += names[e.var_index()];
            else
                out += "x" + std::to_string(e.var_index());
            return;
        case Expr::Kind::unary:
            if (e.unary_op() == UnaryOp::neg) {
                out += "(-";
                // A bare literal would read back as a negative constant.
                bool wrap = e.child(0).kind() == Expr::Kind::constant;
                if (wrap) out += '(';
                format_into(e.child(0), names, out);
                if (wrap) out += ')';
                out += ')';
            } else {
                out += name(e.unary_op());
                out += '(';
                format_into(e.child(0), names, out);
                out += ')';
            }
            return;
        case Expr::Kind::binary:
            out += '(';
            format_into(e.child(0), names, out);
            out += ' ';
            out += symbol(e.binary_op());
            out += ' ';
            format_into(e.child(1), names, out);
            out += ')';
            return;
    }
}

}  // namespace

std::string format(const Expr& e, std::span<const std::string> variable_names) {
    std::string out;
    format_into(e, variable_names, out);
    return out;
}

// ---------------------------------------------------------------------------
// Structure

std::size_t complexity(const Expr& e) { return e.size(); }

namespace {

void collect_subtrees(const Expr& e, std::vector<Expr>& out) {
    out.push_back(e);
    for (std::size_t i = 0; i < e.arity(); ++i) collect_subtrees(e.child(i), out);
}

Expr replace_at(const Expr& e, std::size_t& remaining, const Expr& replacement) {
    if (remaining == 0) return replacement;
    --remaining;
    if (e.arity() == 0) return e;
    Expr lhs = e.child(0);
    if (remaining < lhs.size()) {
        Expr new_lhs = replace_at(lhs, remaining, replacement);
        if (e.kind() == Expr::Kind::unary) return Expr::unary(e.unary_op(), new_lhs);
        return Expr::binary(e.binary_op(), new_lhs, e.child(1));
    }
    remaining -= lhs.size();
    return Expr::binary(e.binary_op(), lhs, replace_at(e.child(1), remaining, replacement));
}

void collect_constants(const Expr& e, std::vector<double>& out) {
    for (std::size_t i = 0; i < e.arity(); ++i) collect_constants(e.child(i), out);
    if (e.kind() == Expr::Kind::constant) out.push_back(e.value());
}

Expr substitute_constants(const Expr& e, std::span<const double> values, std::size_t& next) {
    switch (e.kind()) {
        case Expr::Kind::constant: return Expr::constant(values[next++]);
        case Expr::Kind::variable: return e;
        case Expr::Kind::unary: return Expr::unary(e.unary_op(), substitute_constants(e.child(0), values, next));
        case Expr::Kind::binary: {
            Expr lhs = substitute_constants(e.child(0), values, next);
            Expr rhs = substitute_constants(e.child(1), values, next);
            return Expr::binary(e.binary_op(), lhs, rhs);
        }
    }
    return e;
}

}  // namespace

std::vector<Expr> subtrees(const Expr& e) {
    std::vector<Expr> out;
    out.reserve(e.size());
    collect_subtrees(e, out);
    return out;
}

Expr replace_subtree(const Expr& e, std::size_t index, const Expr& replacement) {
    if (index >= e.size()) throw std::out_of_range("replace_subtree: index out of range");
    std::size_t remaining = index;
    return replace_at(e, remaining, replacement);
}

std::vector<double> constants(const Expr& e) {
    std::vector<double> out;
    collect_constants(e, out);
    return out;
}

Expr with_constants(const Expr& e, std::span<const double> values) {
    std::size_t next = 0;
    Expr out = substitute_constants(e, values, next);
    if (next != values.size()) throw std::invalid_argument("with_constants: wrong number of values");
    return out;
}

std::size_t variable_extent(const Expr& e) {
    if (e.kind() == Expr::Kind::variable) return e.var_index() + 1;
    std::size_t m = 0;
    for (std::size_t i = 0; i < e.arity(); ++i) m = std::max(m, variable_extent(e.child(i)));
    return m;
}

std::vector<bool> variables_used(const Expr& e, std::size_t n_variables) {
    std::vector<bool> used(n_variables, false);
    for (const Expr& s : subtrees(e))
        if (s.kind() == Expr::Kind::variable && s.var_index() < n_variables) used[s.var_index()] = true;
    return used;
}

void check_grammar(const Expr& e, const OperatorSet& ops) {
    for (const Expr& s : subtrees(e)) {
        switch (s.kind()) {
            case Expr::Kind::constant:
                if (!ops.allow_constants) throw std::invalid_argument("constants are not allowed");
                break;
            case Expr::Kind::variable:
                if (s.var_index() >= ops.variable_names.size())
                    throw std::invalid_argument("variable index out of range");
                break;
            case Expr::Kind::unary:
                if (!ops.has(s.unary_op())) throw std::invalid_argument("operator not in grammar");
                break;
            case Expr::Kind::binary:
                if (!ops.has(s.binary_op())) throw std::invalid_argument("operator not in grammar");
                break;
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

double apply(UnaryOp op, double x) {
    switch (op) {
        case UnaryOp::neg: return -x;
        case UnaryOp::sin: return std::sin(x);
        case UnaryOp::cos: return std::cos(x);
        case UnaryOp::exp: return std::exp(x);
        case UnaryOp::log: return x > 0 ? std::log(x) : std::numeric_limits<double>::quiet_NaN();
        case UnaryOp::sqrt: return x >= 0 ? std::sqrt(x) : std::numeric_limits<double>::quiet_NaN();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double apply(BinaryOp op, double a, double b) {
    switch (op) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div: return b != 0 ? a / b : std::numeric_limits<double>::quiet_NaN();
        case BinaryOp::pow:
            if (a == 0 && b < 0) return std::numeric_limits<double>::quiet_NaN();
            return std::pow(a, b);  // negative base with fractional exponent yields NaN
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

void emit(const Expr& e, auto& code, std::vector<double>& consts, std::size_t& depth, std::size_t& max_depth) {
    for (std::size_t i = 0; i < e.arity(); ++i) emit(e.child(i), code, consts, depth, max_depth);
    using Instr = std::remove_reference_t<decltype(code[0])>;
    switch (e.kind()) {
        case Expr::Kind::constant:
            code.push_back(Instr{e.kind(), 0, static_cast<std::uint32_t>(consts.size())});
            consts.push_back(e.value());
            ++depth;
            break;
        case Expr::Kind::variable:
            code.push_back(Instr{e.kind(), 0, static_cast<std::uint32_t>(e.var_index())});
            ++depth;
            break;
        case Expr::Kind::unary:
            code.push_back(Instr{e.kind(), static_cast<std::uint8_t>(e.unary_op()), 0});
            break;
        case Expr::Kind::binary:
            code.push_back(Instr{e.kind(), static_cast<std::uint8_t>(e.binary_op()), 0});
            --depth;
            break;
    }
    max_depth = std::max(max_depth, depth);
}

template <typename F>
void unary_loop(double* x, std::size_t n, F f) {
    for (std::size_t i = 0; i < n; ++i) x[i] = f(x[i]);
}

}  // namespace

CompiledExpr::CompiledExpr(const Expr& e) {
    std::size_t depth = 0;
    code_.reserve(e.size());
    emit(e, code_, constants_, depth, max_stack_);
    n_constants_ = constants_.size();
    variable_extent_ = lasr::variable_extent(e);
}

void CompiledExpr::eval(std::span<const std::vector<double>> columns, std::size_t n_rows,
                        std::vector<double>& out) const {
    eval(columns, n_rows, constants_, out);
}

void CompiledExpr::eval(std::span<const std::vector<double>> columns, std::size_t n_rows,
                        std::span<const double> consts, std::vector<double>& out) const {
    if (variable_extent_ > columns.size())
        throw DimensionMismatch("expression references column " + std::to_string(variable_extent_ - 1) +
                                " but data has " + std::to_string(columns.size()));
    if (consts.size() != n_constants_) throw std::invalid_argument("CompiledExpr::eval: wrong constant count");
    for (std::size_t c = 0; c < variable_extent_; ++c)
        if (columns[c].size() < n_rows) throw DimensionMismatch("column shorter than row count");

    thread_local std::vector<std::vector<double>> stack;
    if (stack.size() < max_stack_) stack.resize(max_stack_);
    for (std::size_t i = 0; i < max_stack_; ++i) stack[i].resize(n_rows);

    std::size_t top = 0;
    for (const Instr& ins : code_) {
        switch (ins.kind) {
            case Expr::Kind::constant: std::fill_n(stack[top++].data(), n_rows, consts[ins.slot]); break;
            case Expr::Kind::variable: std::copy_n(columns[ins.slot].data(), n_rows, stack[top++].data()); break;
            case Expr::Kind::unary: {
                double* x = stack[top - 1].data();
                switch (static_cast<UnaryOp>(ins.op)) {
                    case UnaryOp::neg: unary_loop(x, n_rows, [](double v) { return -v; }); break;
                    case UnaryOp::sin: unary_loop(x, n_rows, [](double v) { return std::sin(v); }); break;
                    case UnaryOp::cos: unary_loop(x, n_rows, [](double v) { return std::cos(v); }); break;
                    case UnaryOp::exp: unary_loop(x, n_rows, [](double v) { return std::exp(v); }); break;
                    case UnaryOp::log: unary_loop(x, n_rows, [](double v) { return apply(UnaryOp::log, v); }); break;
                    case UnaryOp::sqrt:
                        unary_loop(x, n_rows, [](double v) { return apply(UnaryOp::sqrt, v); });
                        break;
                }
                break;
            }
            case Expr::Kind::binary: {
                double* a = stack[top - 2].data();
                const double* b = stack[top - 1].data();
                switch (static_cast<BinaryOp>(ins.op)) {
                    case BinaryOp::add:
                        for (std::size_t i = 0; i < n_rows; ++i) a[i] += b[i];
                        break;
                    case BinaryOp::sub:
                        for (std::size_t i = 0; i < n_rows; ++i) a[i] -= b[i];
                        break;
                    case BinaryOp::mul:
                        for (std::size_t i = 0; i < n_rows; ++i) a[i] *= b[i];
                        break;
                    case BinaryOp::div:
                        for (std::size_t i = 0; i < n_rows; ++i) a[i] = apply(BinaryOp::div, a[i], b[i]);
                        break;
                    case BinaryOp::pow:
                        for (std::size_t i = 0; i < n_rows; ++i) a[i] = apply(BinaryOp::pow, a[i], b[i]);
                        break;
                }
                --top;
                break;
            }
        }
    }
    out.assign(stack[0].begin(), stack[0].begin() + static_cast<std::ptrdiff_t>(n_rows));
}

std::vector<double> evaluate(const Expr& e, std::span<const std::vector<double>> columns, std::size_t n_rows) {
    std::vector<double> out;
    CompiledExpr(e).eval(columns, n_rows, out);
    return out;
}

double evaluate_point(const Expr& e, std::span<const double> point) {
    switch (e.kind()) {
        case Expr::Kind::constant: return e.value();
        case Expr::Kind::variable:
            if (e.var_index() >= point.size()) throw DimensionMismatch("variable index out of range");
            return point[e.var_index()];
        case Expr::Kind::unary: return apply(e.unary_op(), evaluate_point(e.child(0), point));
        case Expr::Kind::binary:
            return apply(e.binary_op(), evaluate_point(e.child(0), point), evaluate_point(e.child(1), point));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Random generation

Expr random_leaf(const OperatorSet& ops, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (ops.allow_constants && u(rng) < 0.3) {
        std::normal_distribution<double> n(0.0, 2.0);
        return Expr::constant(n(rng));
    }
    std::uniform_int_distribution<std::size_t> pick(0, ops.variable_names.size() - 1);
    return Expr::variable(pick(rng));
}

namespace {

Expr grow(const OperatorSet& ops, std::size_t depth_left, bool root, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (depth_left <= 1 || (!root && u(rng) < 0.3)) return random_leaf(ops, rng);
    bool use_unary = !ops.unary_ops.empty() && u(rng) < 0.25;
    if (use_unary) {
        std::uniform_int_distribution<std::size_t> pick(0, ops.unary_ops.size() - 1);
        UnaryOp op = ops.unary_ops[pick(rng)];
        return Expr::unary(op, grow(ops, depth_left - 1, false, rng));
    }
    std::uniform_int_distribution<std::size_t> pick(0, ops.binary_ops.size() - 1);
    BinaryOp op = ops.binary_ops[pick(rng)];
    Expr lhs = grow(ops, depth_left - 1, false, rng);
    Expr rhs = grow(ops, depth_left - 1, false, rng);
    return Expr::binary(op, std::move(lhs), std::move(rhs));
}

}  // namespace

Expr random_expr(const OperatorSet& ops, std::size_t max_depth, Rng& rng) {
    if (max_depth < 1) throw std::invalid_argument("random_expr: max_depth must be >= 1");
    return grow(ops, max_depth, true, rng);
}

// ---------------------------------------------------------------------------
// Grammar description

std::string operators_text(const OperatorSet& ops) {
    std::string out;
    for (BinaryOp op : kAllBinaryOps) {
        if (!ops.has(op)) continue;
        if (!out.empty()) out += ", ";
        out += symbol(op);
    }
    for (UnaryOp op : kAllUnaryOps) {
        if (!ops.has(op)) continue;
        out += ", ";
        out += name(op);
    }
    return out;
}

std::string variables_text(const OperatorSet& ops) {
    std::string out;
    for (const auto& v : ops.variable_names) {
        if (!out.empty()) out += ", ";
        out += v;
    }
    return out;
}

std::string describe_grammar(const OperatorSet& ops) {
    std::string binary;
    for (BinaryOp op : kAllBinaryOps) {
        if (!ops.has(op)) continue;
        if (!binary.empty()) binary += ", ";
        binary += symbol(op);
    }
    std::string unary;
    for (UnaryOp op : kAllUnaryOps) {
        if (!ops.has(op)) continue;
        if (!unary.empty()) unary += ", ";
        unary += name(op);
    }
    if (unary.empty()) unary = "none";
    return "binary: " + binary + "; unary: " + unary + "; variables: " + variables_text(ops);
}

}  // namespace lasr
