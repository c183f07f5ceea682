#include "lasr/expr.hpp"

#include <cmath>
#include <optional>

namespace lasr {

namespace {

bool is_const(const Expr& e, double v) { return e.kind() == Expr::Kind::constant && e.value() == v; }
bool is_const(const Expr& e) { return e.kind() == Expr::Kind::constant; }

std::optional<Expr> folded(double v) {
    if (!std::isfinite(v)) return std::nullopt;
    return Expr::constant(v);
}

// (x * c1) * c2, (c1 * x) * c2 and the mirrored forms become x * (c1 * c2).
// Multiplication only: reassociating sums can lose precision to cancellation.
std::optional<Expr> merge_factors(const Expr& lhs, const Expr& rhs) {
    const Expr* outer_c = nullptr;
    const Expr* product = nullptr;
    if (is_const(rhs) && lhs.kind() == Expr::Kind::binary && lhs.binary_op() == BinaryOp::mul) {
        outer_c = &rhs;
        product = &lhs;
    } else if (is_const(lhs) && rhs.kind() == Expr::Kind::binary && rhs.binary_op() == BinaryOp::mul) {
        outer_c = &lhs;
        product = &rhs;
    } else {
        return std::nullopt;
    }
    Expr a = product->child(0);
    Expr b = product->child(1);
    if (is_const(b) && !is_const(a)) std::swap(a, b);
    if (!is_const(a) || is_const(b)) return std::nullopt;
    auto c = folded(a.value() * outer_c->value());
    if (!c) return std::nullopt;
    return Expr::binary(BinaryOp::mul, *c, b);
}

Expr simplify_unary(UnaryOp op, const Expr& x) {
    if (is_const(x)) {
        if (auto c = folded(apply(op, x.value()))) return *c;
    }
    if (op == UnaryOp::neg && x.kind() == Expr::Kind::unary && x.unary_op() == UnaryOp::neg) return x.child(0);
    return Expr::unary(op, x);
}

Expr simplify_binary(BinaryOp op, const Expr& lhs, const Expr& rhs) {
    if (is_const(lhs) && is_const(rhs)) {
        if (auto c = folded(apply(op, lhs.value(), rhs.value()))) return *c;
    }
    switch (op) {
        case BinaryOp::add:
            if (is_const(rhs, 0.0)) return lhs;
            if (is_const(lhs, 0.0)) return rhs;
            break;
        case BinaryOp::sub:
            if (is_const(rhs, 0.0)) return lhs;
            if (lhs == rhs) return Expr::constant(0.0);
            break;
        case BinaryOp::mul:
            if (is_const(rhs, 1.0)) return lhs;
            if (is_const(lhs, 1.0)) return rhs;
            if (is_const(rhs, 0.0) || is_const(lhs, 0.0)) return Expr::constant(0.0);
            if (auto m = merge_factors(lhs, rhs)) return *m;
            break;
        case BinaryOp::div:
            if (is_const(rhs, 1.0)) return lhs;
            // Only rows where lhs is finite and nonzero are evaluable, so x/x is 1 there.
            if (lhs == rhs) return Expr::constant(1.0);
            if (is_const(lhs, 0.0)) return Expr::constant(0.0);
            break;
        case BinaryOp::pow:
            if (is_const(rhs, 1.0)) return lhs;
            break;
    }
    return Expr::binary(op, lhs, rhs);
}

}  // namespace

Expr simplify(const Expr& e) {
    switch (e.kind()) {
        case Expr::Kind::constant:
        case Expr::Kind::variable: return e;
        case Expr::Kind::unary: return simplify_unary(e.unary_op(), simplify(e.child(0)));
        case Expr::Kind::binary:
            return simplify_binary(e.binary_op(), simplify(e.child(0)), simplify(e.child(1)));
    }
    return e;
}

}  // namespace lasr
