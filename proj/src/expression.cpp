#include "sturm/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "sturm/errors.hpp"

namespace sturm {

enum class Op { Num, X, U, P, Norm, Add, Sub, Mul, Div, Pow, Neg, Call };

using UnaryFn = double (*)(double);

struct ExprNode {
    Op op = Op::Num;
    double value = 0.0;
    UnaryFn fn = nullptr;
    std::shared_ptr<const ExprNode> lhs, rhs;
};

namespace {

struct Vars {
    double x, u, p, norm;
};

double eval(const ExprNode& n, const Vars& v) {
    switch (n.op) {
        case Op::Num: return n.value;
        case Op::X: return v.x;
        case Op::U: return v.u;
        case Op::P: return v.p;
        case Op::Norm: return v.norm;
        case Op::Add: return eval(*n.lhs, v) + eval(*n.rhs, v);
        case Op::Sub: return eval(*n.lhs, v) - eval(*n.rhs, v);
        case Op::Mul: return eval(*n.lhs, v) * eval(*n.rhs, v);
        case Op::Div: return eval(*n.lhs, v) / eval(*n.rhs, v);
        case Op::Pow: return std::pow(eval(*n.lhs, v), eval(*n.rhs, v));
        case Op::Neg: return -eval(*n.lhs, v);
        case Op::Call: return n.fn(eval(*n.lhs, v));
    }
    return 0.0;
}

struct Function {
    const char* name;
    UnaryFn fn;
};

const Function kFunctions[] = {
    {"sin", [](double a) { return std::sin(a); }},   {"cos", [](double a) { return std::cos(a); }},
    {"tan", [](double a) { return std::tan(a); }},   {"exp", [](double a) { return std::exp(a); }},
    {"log", [](double a) { return std::log(a); }},   {"sqrt", [](double a) { return std::sqrt(a); }},
    {"abs", [](double a) { return std::abs(a); }},   {"tanh", [](double a) { return std::tanh(a); }},
    {"atan", [](double a) { return std::atan(a); }}, {"sinh", [](double a) { return std::sinh(a); }},
    {"cosh", [](double a) { return std::cosh(a); }},
};

using NodePtr = std::shared_ptr<const ExprNode>;

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        auto n = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

    bool uses_norm = false;

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw PreconditionError("expression \"" + s_ + "\" at position " + std::to_string(pos_) + ": " + what);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
        auto n = std::make_shared<ExprNode>();
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    NodePtr sum() {
        auto n = product();
        for (;;) {
            if (eat('+')) n = make(Op::Add, n, product());
            else if (eat('-')) n = make(Op::Sub, n, product());
            else return n;
        }
    }

    NodePtr product() {
        auto n = unary();
        for (;;) {
            if (eat('*')) n = make(Op::Mul, n, unary());
            else if (eat('/')) n = make(Op::Div, n, unary());
            else return n;
        }
    }

    NodePtr unary() {
        if (eat('-')) return make(Op::Neg, unary());
        if (eat('+')) return unary();
        auto base = primary();
        if (eat('^')) return make(Op::Pow, base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto n = sum();
            if (!eat(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            auto n = std::make_shared<ExprNode>();
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            if (id == "x") return make(Op::X);
            if (id == "u") return make(Op::U);
            if (id == "p") return make(Op::P);
            if (id == "norm") {
                uses_norm = true;
                return make(Op::Norm);
            }
            if (id == "pi") {
                auto n = std::make_shared<ExprNode>();
                n->value = std::numbers::pi;
                return n;
            }
            for (const auto& f : kFunctions)
                if (id == f.name) {
                    if (!eat('(')) fail("expected '(' after " + id);
                    auto arg = sum();
                    if (!eat(')')) fail("expected ')'");
                    auto n = std::make_shared<ExprNode>();
                    n->op = Op::Call;
                    n->fn = f.fn;
                    n->lhs = std::move(arg);
                    return n;
                }
            pos_ = start;
            fail("unknown identifier '" + id + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

}  // namespace

Expression::Expression(const std::string& text) : text_(text) {
    Parser p(text_);
    root_ = p.parse();
    uses_norm_ = p.uses_norm;
}

double Expression::operator()(double x, double u, double p, double norm) const {
    return eval(*root_, Vars{x, u, p, norm});
}

}  // namespace sturm
