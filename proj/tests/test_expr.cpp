#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "helpers.hpp"
#include "lasr/expr.hpp"

using namespace lasr;
using lasr::test::full_ops;

namespace {

const char* kLasrCoulomb = "(q1 / ((r / q2) * ((r + (1.9181636e-5 / q2)) * epsilon))) * 0.07957782";
const char* kPysrCoulomb =
    "((((((((q2 * 3.3819845) / r) - (sin(0.017351102 / exp(B)) / exp(C))) / 0.71236086) * q1) * 0.08773846) / "
    "epsilon) * 0.191044) / r";

}  // namespace

TEST_SUITE("expr") {
    TEST_CASE("parse builds the expected tree") {
        OperatorSet ops = OperatorSet::standard({"m1", "m2", "r1", "r2"});
        Expr e = parse("(m1*r1 + m2*r2)/(m1+m2)", ops);
        auto v = [](std::size_t i) { return Expr::variable(i); };
        Expr expected = Expr::binary(
            BinaryOp::div,
            Expr::binary(BinaryOp::add, Expr::binary(BinaryOp::mul, v(0), v(2)), Expr::binary(BinaryOp::mul, v(1), v(3))),
            Expr::binary(BinaryOp::add, v(0), v(1)));
        CHECK(e == expected);

        CHECK(parse("x1", OperatorSet::standard({"x1"})) == Expr::variable(0));
    }

    TEST_CASE("undeclared identifiers and bad syntax are rejected") {
        OperatorSet ops = OperatorSet::standard({"x1"});
        try {
            parse("sin(q9)", ops);
            FAIL("expected UnknownSymbol");
        } catch (const UnknownSymbol& e) {
            CHECK(e.symbol() == "q9");
        }
        CHECK_THROWS_AS(parse("(x1 + ", ops), SyntaxError);
        CHECK_THROWS_AS(parse("x1 x1", ops), SyntaxError);
        CHECK_THROWS_AS(parse("", ops), SyntaxError);
        // pow is not in the standard grammar
        CHECK_THROWS_AS(parse("x1 ^ 2", ops), ParseError);
    }

    TEST_CASE("format renders fully parenthesized infix") {
        std::vector<std::string> names{"x1"};
        CHECK(format(Expr::binary(BinaryOp::add, Expr::variable(0), Expr::constant(2.0)), names) == "(x1 + 2.0)");
        CHECK(format(Expr::unary(UnaryOp::sin, Expr::variable(0)), names) == "sin(x1)");
        CHECK(format(Expr::constant(-2.5), names) == "(-2.5)");
    }

    TEST_CASE("parse and format round-trip on random trees") {
        std::vector<std::string> names{"x1", "x2", "x3"};
        OperatorSet ops = full_ops(names);
        Rng rng(7);
        for (int i = 0; i < 1000; ++i) {
            Expr e = random_expr(ops, 6, rng);
            std::string text = format(e, names);
            Expr back = parse(text, ops);
            INFO(text);
            REQUIRE(back == e);
        }
    }

    TEST_CASE("point evaluation") {
        OperatorSet ops = OperatorSet::standard({"x1", "x2"});
        double p0[] = {0.0, 1.0};
        CHECK(evaluate_point(parse("sin(x1) + 2", ops), p0) == 2.0);
        double p1[] = {1.0, 0.0};
        CHECK_FALSE(std::isfinite(evaluate_point(parse("x1 / x2", ops), p1)));
        double p2[] = {-1.0, 0.0};
        CHECK_FALSE(std::isfinite(evaluate_point(parse("log(x1)", ops), p2)));
        CHECK_FALSE(std::isfinite(evaluate_point(parse("sqrt(x1)", ops), p2)));
    }

    TEST_CASE("Coulomb formula reproduces its own generated target") {
        std::vector<std::string> vars{"q1", "q2", "epsilon", "r"};
        Dataset d = lasr::test::formula_data("q1*q2/(4*pi*epsilon*r*r)", vars, 500, 3);
        OperatorSet ops = full_ops(vars);
        Expr e = parse("(q1 * q2) / (4 * pi * epsilon * (r ^ 2))", ops);
        auto pred = evaluate(e, d.columns(), d.rows());
        for (std::size_t i = 0; i < d.rows(); ++i) CHECK(pred[i] == doctest::Approx(d.y()[i]).epsilon(1e-12));
    }

    TEST_CASE("column evaluation agrees with point evaluation") {
        std::vector<std::string> names{"x1", "x2"};
        OperatorSet ops = full_ops(names);
        Rng rng(11);
        auto cols = lasr::test::random_columns(2, 50, rng);
        for (int i = 0; i < 200; ++i) {
            Expr e = random_expr(ops, 5, rng);
            auto out = evaluate(e, cols, 50);
            for (std::size_t r = 0; r < 50; ++r) {
                double pt[] = {cols[0][r], cols[1][r]};
                double v = evaluate_point(e, pt);
                if (std::isnan(v)) CHECK(std::isnan(out[r]));
                else CHECK(out[r] == v);
            }
        }
        CompiledExpr c(parse("x1 + x2", ops));
        std::vector<double> out;
        std::vector<std::vector<double>> one{cols[0]};
        CHECK_THROWS_AS(c.eval(one, 50, out), DimensionMismatch);
    }

    TEST_CASE("complexity counts nodes") {
        OperatorSet ops = full_ops({"q1", "q2", "epsilon", "r", "B", "C"});
        CHECK(complexity(parse(kLasrCoulomb, ops)) == 15);
        CHECK(complexity(parse(kPysrCoulomb, ops)) == 26);
        CHECK(complexity(Expr::variable(0)) == 1);
    }

    TEST_CASE("simplify rewrites") {
        std::vector<std::string> names{"x1"};
        OperatorSet ops = OperatorSet::standard(names);
        CHECK(simplify(parse("(x1 + 0) * 1", ops)) == Expr::variable(0));
        CHECK(format(simplify(parse("(2 + 3) * x1", ops)), names) == "(5.0 * x1)");
        CHECK(simplify(parse("x1 - x1", ops)) == Expr::constant(0.0));
        CHECK(simplify(parse("x1 / x1", ops)) == Expr::constant(1.0));
        CHECK(format(simplify(parse("(2 * x1) * 3", ops)), names) == "(6.0 * x1)");
    }

    TEST_CASE("simplify preserves values and never grows the tree") {
        std::vector<std::string> names{"x1", "x2", "x3"};
        OperatorSet ops = full_ops(names);
        Rng rng(21);
        auto cols = lasr::test::random_columns(3, 64, rng);
        for (int i = 0; i < 1000; ++i) {
            Expr e = random_expr(ops, 6, rng);
            Expr s = simplify(e);
            CHECK(s.size() <= e.size());
            auto a = evaluate(e, cols, 64);
            auto b = evaluate(s, cols, 64);
            for (std::size_t r = 0; r < 64; ++r) {
                if (!std::isfinite(a[r])) continue;
                INFO(format(e, names), " -> ", format(s, names));
                REQUIRE(lasr::test::close(b[r], a[r], 1e-12));
            }
        }
    }

    TEST_CASE("random_expr respects depth and covers all variables") {
        std::vector<std::string> names{"x1", "x2", "x3", "x4"};
        OperatorSet ops = full_ops(names);
        Rng rng(5);
        for (int i = 0; i < 1000; ++i) CHECK(random_expr(ops, 1, rng).is_leaf());
        std::vector<bool> seen(names.size(), false);
        for (int i = 0; i < 10000; ++i) {
            Expr e = random_expr(ops, 4, rng);
            REQUIRE(e.depth() <= 4);
            REQUIRE(e.size() == complexity(e));
            check_grammar(e, ops);
            auto used = variables_used(e, names.size());
            for (std::size_t k = 0; k < names.size(); ++k) seen[k] = seen[k] || used[k];
        }
        for (bool s : seen) CHECK(s);
    }

    TEST_CASE("grammar description") {
        OperatorSet ops{{BinaryOp::add, BinaryOp::mul}, {UnaryOp::sin}, true, {"x1"}};
        std::string text = describe_grammar(ops);
        CHECK(text == "binary: +, *; unary: sin; variables: x1");
        CHECK(describe_grammar(ops) == text);

        OperatorSet all = full_ops({"x1"});
        std::string full = describe_grammar(all);
        for (BinaryOp op : kAllBinaryOps) {
            std::string s(symbol(op));
            std::size_t count = 0;
            // count as a separate list item
            for (std::size_t pos = full.find(" " + s); pos != std::string::npos; pos = full.find(" " + s, pos + 1))
                if (pos + 1 + s.size() < full.size() && (full[pos + 1 + s.size()] == ',' || full[pos + 1 + s.size()] == ';'))
                    ++count;
            CHECK(count == 1);
        }
        for (UnaryOp op : kAllUnaryOps) {
            std::string s(name(op));
            CHECK(full.find(s) != std::string::npos);
            CHECK(full.find(s) == full.rfind(s));
        }
    }

    TEST_CASE("constants in postorder and replacement") {
        OperatorSet ops = OperatorSet::standard({"x1"});
        Expr e = parse("(1.5 * x1) + (2.5 / x1)", ops);
        CHECK(constants(e) == std::vector<double>{1.5, 2.5});
        std::vector<double> repl{3.0, 4.0};
        CHECK(format(with_constants(e, repl), ops.variable_names) == "((3.0 * x1) + (4.0 / x1))");
        CHECK_THROWS(Expr::constant(std::numeric_limits<double>::infinity()));
        auto subs = subtrees(e);
        CHECK(subs.size() == e.size());
        CHECK(replace_subtree(e, 1, Expr::variable(0)) == parse("x1 + (2.5 / x1)", ops));
    }
}
