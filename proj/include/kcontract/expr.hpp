#pragma once

// Recursive-descent parser for closed-form drift expressions.
// Grammar: sum := prod (('+'|'-') prod)*, prod := unary (('*'|'/') unary)*,
// unary := '-' unary | power, power := atom ('^' unary)?,
// atom := number | name | name '(' sum ')' | '(' sum ')'.
// Variables: x (alias of x1), x1 .. xd. Constants: pi, e.

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kcontract/core.hpp"

namespace kcontract::expr {

struct Node {
    enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call } op = Op::Num;
    double value = 0.0;
    std::size_t var = 0;
    std::string fn;
    std::unique_ptr<Node> lhs, rhs;

    double eval(const Vec& x) const {
        switch (op) {
            case Op::Num: return value;
            case Op::Var: return x[var];
            case Op::Neg: return -lhs->eval(x);
            case Op::Add: return lhs->eval(x) + rhs->eval(x);
            case Op::Sub: return lhs->eval(x) - rhs->eval(x);
            case Op::Mul: return lhs->eval(x) * rhs->eval(x);
            case Op::Div: return lhs->eval(x) / rhs->eval(x);
            case Op::Pow: return std::pow(lhs->eval(x), rhs->eval(x));
            case Op::Call: {
                const double a = lhs->eval(x);
                if (fn == "sin") return std::sin(a);
                if (fn == "cos") return std::cos(a);
                if (fn == "tan") return std::tan(a);
                if (fn == "exp") return std::exp(a);
                if (fn == "log") return std::log(a);
                if (fn == "sqrt") return std::sqrt(a);
                if (fn == "tanh") return std::tanh(a);
                if (fn == "atan") return std::atan(a);
                return std::fabs(a);  // abs
            }
        }
        return 0.0;
    }
};

class Parser {
public:
    Parser(std::string src, std::size_t dim) : s_(std::move(src)), dim_(dim) {}

    std::unique_ptr<Node> parse() {
        auto n = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    std::string s_;
    std::size_t dim_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw Error("expression error at " + std::to_string(pos_) + ": " + what);
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
    static std::unique_ptr<Node> make(Node::Op op, std::unique_ptr<Node> l, std::unique_ptr<Node> r = nullptr) {
        auto n = std::make_unique<Node>();
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    std::unique_ptr<Node> sum() {
        auto n = prod();
        for (;;) {
            if (eat('+')) n = make(Node::Op::Add, std::move(n), prod());
            else if (eat('-')) n = make(Node::Op::Sub, std::move(n), prod());
            else return n;
        }
    }
    std::unique_ptr<Node> prod() {
        auto n = unary();
        for (;;) {
            if (eat('*')) n = make(Node::Op::Mul, std::move(n), unary());
            else if (eat('/')) n = make(Node::Op::Div, std::move(n), unary());
            else return n;
        }
    }
    std::unique_ptr<Node> unary() {
        if (eat('-')) return make(Node::Op::Neg, unary());
        if (eat('+')) return unary();
        return power();
    }
    std::unique_ptr<Node> power() {
        auto base = atom();
        if (eat('^')) return make(Node::Op::Pow, std::move(base), unary());
        return base;
    }
    std::unique_ptr<Node> atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        if (eat('(')) {
            auto n = sum();
            if (!eat(')')) fail("expected ')'");
            return n;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("bad number");
            }
            pos_ += used;
            auto n = std::make_unique<Node>();
            n->value = v;
            return n;
        }
        if (!std::isalpha(static_cast<unsigned char>(c))) fail("unexpected '" + std::string(1, c) + "'");
        std::string name;
        while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) name += s_[pos_++];
        static const std::vector<std::string> fns{"sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "atan", "abs"};
        for (const auto& f : fns) {
            if (name == f) {
                if (!eat('(')) fail("expected '(' after " + name);
                auto n = make(Node::Op::Call, sum());
                n->fn = name;
                if (!eat(')')) fail("expected ')'");
                return n;
            }
        }
        auto n = std::make_unique<Node>();
        if (name == "pi") {
            n->value = kPi;
            return n;
        }
        if (name == "e") {
            n->value = std::exp(1.0);
            return n;
        }
        n->op = Node::Op::Var;
        if (name == "x") {
            n->var = 0;
            return n;
        }
        if (name.size() > 1 && name[0] == 'x') {
            const std::string digits = name.substr(1);
            if (digits.find_first_not_of("0123456789") == std::string::npos) {
                const std::size_t k = std::stoul(digits);
                if (k >= 1 && k <= dim_) {
                    n->var = k - 1;
                    return n;
                }
            }
        }
        fail("unknown name '" + name + "'");
    }
};

// One expression per drift component, separated by ';'.
inline std::function<Vec(const Vec&)> compile_drift(const std::string& src, std::size_t dim) {
    std::vector<std::shared_ptr<Node>> parts;
    std::size_t start = 0;
    for (;;) {
        const std::size_t end = src.find(';', start);
        parts.push_back(Parser(src.substr(start, end - start), dim).parse());
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (parts.size() != dim)
        throw Error("expression has " + std::to_string(parts.size()) + " components, expected " + std::to_string(dim));
    return [parts](const Vec& x) {
        Vec out(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) out[i] = parts[i]->eval(x);
        return out;
    };
}

}  // namespace kcontract::expr
