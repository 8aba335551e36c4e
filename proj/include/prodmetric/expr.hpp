#ifndef PRODMETRIC_EXPR_HPP
#define PRODMETRIC_EXPR_HPP

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prodmetric/detail/format.hpp"
#include "prodmetric/errors.hpp"

namespace prodmetric::expr {

/// Which variable set an expression may reference.
///  - combiner(n): x1..xn
///  - generator:   a, b
///  - psi:         t
struct Context {
    enum class Kind { Combiner, Generator, Psi };
    Kind kind = Kind::Combiner;
    std::size_t arity = 1;

    static Context combiner(std::size_t n) { return {Kind::Combiner, n}; }
    static Context generator() { return {Kind::Generator, 2}; }
    static Context psi() { return {Kind::Psi, 1}; }

    friend bool operator==(const Context&, const Context&) = default;
};

enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class CmpOp { Lt, Le, Gt, Ge, Eq };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Kind { Number, Var, Neg, Binary, Call, If };

    Kind kind;
    std::size_t begin = 0;
    std::size_t end = 0;

    double number = 0.0;
    std::size_t var = 0;        // variable slot in the evaluation environment
    std::string name;           // variable or function name
    BinOp bin = BinOp::Add;
    CmpOp cmp = CmpOp::Lt;
    // Children. Neg: 1; Binary: 2; Call: arity; If: cmp-lhs, cmp-rhs, then, else.
    std::vector<NodePtr> args;
};

namespace detail_expr {

inline bool structurally_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Node::Kind::Number:
            return a.number == b.number;
        case Node::Kind::Var:
            return a.var == b.var;
        case Node::Kind::Binary:
            if (a.bin != b.bin) return false;
            break;
        case Node::Kind::Call:
            if (a.name != b.name) return false;
            break;
        case Node::Kind::If:
            if (a.cmp != b.cmp) return false;
            break;
        case Node::Kind::Neg:
            break;
    }
    if (a.args.size() != b.args.size()) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!structurally_equal(*a.args[i], *b.args[i])) return false;
    return true;
}

struct Token {
    enum class Kind { Number, Ident, Punct, End };
    Kind kind;
    std::size_t begin, end;
    double number = 0.0;
    std::string_view text;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        tok_.begin = pos_;
        if (pos_ >= src_.size()) {
            tok_ = {Token::Kind::End, pos_, pos_, 0.0, {}};
            return;
        }
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
                ++pos_;
            // exponent part
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t mark = pos_;
                ++pos_;
                if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
                if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                        ++pos_;
                } else {
                    pos_ = mark;
                }
            }
            std::string text(src_.substr(start, pos_ - start));
            try {
                tok_ = {Token::Kind::Number, start, pos_, std::stod(text), src_.substr(start, pos_ - start)};
            } catch (const std::exception&) {
                throw SyntaxError("malformed number '" + text + "'", start);
            }
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            tok_ = {Token::Kind::Ident, start, pos_, 0.0, src_.substr(start, pos_ - start)};
            return;
        }
        // punctuation, including two-char comparison operators
        std::size_t start = pos_;
        std::size_t len = 1;
        if ((c == '<' || c == '>' || c == '=' || c == '!') && pos_ + 1 < src_.size() &&
            src_[pos_ + 1] == '=')
            len = 2;
        pos_ += len;
        tok_ = {Token::Kind::Punct, start, pos_, 0.0, src_.substr(start, len)};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_{};
};

}  // namespace detail_expr

class Expression {
public:
    Expression() = default;

    static Expression parse(std::string_view text, Context ctx) {
        if (text.empty()) throw SyntaxError("empty expression", 0);
        Parser p{detail_expr::Lexer(text), ctx};
        NodePtr root = p.parse_expr();
        const auto& t = p.lex.peek();
        if (t.kind != detail_expr::Token::Kind::End)
            throw SyntaxError("unexpected trailing input '" + std::string(t.text) + "'", t.begin);
        Expression e;
        e.root_ = std::move(root);
        e.ctx_ = ctx;
        return e;
    }

    double eval(std::span<const double> env) const {
        if (env.size() != ctx_.arity)
            throw ArityError("expression expects " + std::to_string(ctx_.arity) +
                             " variables, got " + std::to_string(env.size()));
        return eval_node(*root_, env);
    }

    std::string print() const { return print_node(*root_, 0); }

    const Context& context() const { return ctx_; }
    const NodePtr& root() const { return root_; }
    bool empty() const { return root_ == nullptr; }

    friend bool operator==(const Expression& a, const Expression& b) {
        if (a.ctx_ != b.ctx_) return false;
        if (!a.root_ || !b.root_) return a.root_ == b.root_;
        return detail_expr::structurally_equal(*a.root_, *b.root_);
    }

private:
    struct Parser {
        detail_expr::Lexer lex;
        Context ctx;

        using Token = detail_expr::Token;

        [[noreturn]] static void fail(const std::string& msg, const Token& t) {
            throw SyntaxError(msg, t.begin);
        }

        bool at_punct(std::string_view s) const {
            return lex.peek().kind == Token::Kind::Punct && lex.peek().text == s;
        }

        void expect_punct(std::string_view s) {
            if (!at_punct(s)) fail("expected '" + std::string(s) + "'", lex.peek());
            lex.take();
        }

        NodePtr parse_expr() { return parse_addsub(); }

        NodePtr parse_addsub() {
            NodePtr lhs = parse_muldiv();
            while (at_punct("+") || at_punct("-")) {
                Token op = lex.take();
                NodePtr rhs = parse_muldiv();
                lhs = make_binary(op.text == "+" ? BinOp::Add : BinOp::Sub, lhs, rhs);
            }
            return lhs;
        }

        NodePtr parse_muldiv() {
            NodePtr lhs = parse_unary();
            while (at_punct("*") || at_punct("/")) {
                Token op = lex.take();
                NodePtr rhs = parse_unary();
                lhs = make_binary(op.text == "*" ? BinOp::Mul : BinOp::Div, lhs, rhs);
            }
            return lhs;
        }

        // '^' binds tighter than unary minus and is right-associative.
        NodePtr parse_unary() {
            if (at_punct("-")) {
                Token op = lex.take();
                NodePtr operand = parse_unary();
                auto n = std::make_shared<Node>();
                n->kind = Node::Kind::Neg;
                n->begin = op.begin;
                n->end = operand->end;
                n->args = {operand};
                return n;
            }
            return parse_power();
        }

        NodePtr parse_power() {
            NodePtr base = parse_primary();
            if (at_punct("^")) {
                lex.take();
                NodePtr exp = parse_unary();
                return make_binary(BinOp::Pow, base, exp);
            }
            return base;
        }

        NodePtr parse_primary() {
            const Token& t = lex.peek();
            if (t.kind == Token::Kind::Number) {
                Token num = lex.take();
                auto n = std::make_shared<Node>();
                n->kind = Node::Kind::Number;
                n->begin = num.begin;
                n->end = num.end;
                n->number = num.number;
                return n;
            }
            if (t.kind == Token::Kind::Ident) {
                Token id = lex.take();
                if (at_punct("(")) return parse_call(id);
                return make_var(id);
            }
            if (at_punct("(")) {
                lex.take();
                NodePtr inner = parse_expr();
                expect_punct(")");
                return inner;
            }
            fail("expected number, variable, function or '('", t);
        }

        NodePtr parse_call(const Token& id) {
            std::string name(id.text);
            expect_punct("(");
            if (name == "if") return parse_if(id);
            std::vector<NodePtr> args;
            args.push_back(parse_expr());
            while (at_punct(",")) {
                lex.take();
                args.push_back(parse_expr());
            }
            Token close = lex.peek();
            expect_punct(")");
            std::size_t nargs = args.size();
            if (name == "sqrt" || name == "exp" || name == "log" || name == "abs") {
                if (nargs != 1)
                    throw SyntaxError("'" + name + "' takes exactly one argument", id.begin);
            } else if (name == "min" || name == "max") {
                if (nargs < 2)
                    throw SyntaxError("'" + name + "' takes at least two arguments", id.begin);
            } else {
                throw SyntaxError("unknown function '" + name + "'", id.begin);
            }
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Call;
            n->begin = id.begin;
            n->end = close.end;
            n->name = std::move(name);
            n->args = std::move(args);
            return n;
        }

        NodePtr parse_if(const Token& id) {
            NodePtr lhs = parse_expr();
            const Token& op = lex.peek();
            CmpOp cmp;
            if (op.kind != Token::Kind::Punct) fail("expected comparison operator", op);
            if (op.text == "<") cmp = CmpOp::Lt;
            else if (op.text == "<=") cmp = CmpOp::Le;
            else if (op.text == ">") cmp = CmpOp::Gt;
            else if (op.text == ">=") cmp = CmpOp::Ge;
            else if (op.text == "=" || op.text == "==") cmp = CmpOp::Eq;
            else fail("expected comparison operator", op);
            lex.take();
            NodePtr rhs = parse_expr();
            expect_punct(",");
            NodePtr then_branch = parse_expr();
            expect_punct(",");
            NodePtr else_branch = parse_expr();
            Token close = lex.peek();
            expect_punct(")");
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::If;
            n->begin = id.begin;
            n->end = close.end;
            n->cmp = cmp;
            n->args = {lhs, rhs, then_branch, else_branch};
            return n;
        }

        NodePtr make_var(const Token& id) {
            std::string name(id.text);
            std::size_t slot;
            switch (ctx.kind) {
                case Context::Kind::Combiner: {
                    if (name.size() < 2 || name[0] != 'x')
                        throw SyntaxError("unknown identifier '" + name + "'", id.begin);
                    std::size_t idx = 0;
                    for (std::size_t i = 1; i < name.size(); ++i) {
                        if (!std::isdigit(static_cast<unsigned char>(name[i])))
                            throw SyntaxError("unknown identifier '" + name + "'", id.begin);
                        idx = idx * 10 + static_cast<std::size_t>(name[i] - '0');
                    }
                    if (idx < 1 || idx > ctx.arity)
                        throw SyntaxError("variable '" + name + "' out of range for arity " +
                                              std::to_string(ctx.arity),
                                          id.begin);
                    slot = idx - 1;
                    break;
                }
                case Context::Kind::Generator:
                    if (name == "a") slot = 0;
                    else if (name == "b") slot = 1;
                    else throw SyntaxError("unknown identifier '" + name + "' (expected a or b)", id.begin);
                    break;
                case Context::Kind::Psi:
                    if (name == "t") slot = 0;
                    else throw SyntaxError("unknown identifier '" + name + "' (expected t)", id.begin);
                    break;
                default:
                    throw SyntaxError("unknown identifier '" + name + "'", id.begin);
            }
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Var;
            n->begin = id.begin;
            n->end = id.end;
            n->var = slot;
            n->name = std::move(name);
            return n;
        }

        static NodePtr make_binary(BinOp op, NodePtr lhs, NodePtr rhs) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Binary;
            n->begin = lhs->begin;
            n->end = rhs->end;
            n->bin = op;
            n->args = {std::move(lhs), std::move(rhs)};
            return n;
        }
    };

    static double check_finite(double v, const Node& n) {
        if (!std::isfinite(v))
            throw EvaluationError("expression produced a non-finite value", n.begin, n.end);
        return v;
    }

    static double eval_node(const Node& n, std::span<const double> env) {
        switch (n.kind) {
            case Node::Kind::Number:
                return n.number;
            case Node::Kind::Var:
                return env[n.var];
            case Node::Kind::Neg:
                return -eval_node(*n.args[0], env);
            case Node::Kind::Binary: {
                double l = eval_node(*n.args[0], env);
                double r = eval_node(*n.args[1], env);
                switch (n.bin) {
                    case BinOp::Add: return check_finite(l + r, n);
                    case BinOp::Sub: return check_finite(l - r, n);
                    case BinOp::Mul: return check_finite(l * r, n);
                    case BinOp::Div:
                        if (r == 0.0)
                            throw EvaluationError("division by zero", n.begin, n.end);
                        return check_finite(l / r, n);
                    case BinOp::Pow:
                        return check_finite(std::pow(l, r), n);
                }
                break;
            }
            case Node::Kind::Call: {
                if (n.name == "sqrt") {
                    double v = eval_node(*n.args[0], env);
                    if (v < 0.0)
                        throw EvaluationError("sqrt of a negative value", n.begin, n.end);
                    return std::sqrt(v);
                }
                if (n.name == "exp")
                    return check_finite(std::exp(eval_node(*n.args[0], env)), n);
                if (n.name == "log") {
                    double v = eval_node(*n.args[0], env);
                    if (v <= 0.0)
                        throw EvaluationError("log of a nonpositive value", n.begin, n.end);
                    return std::log(v);
                }
                if (n.name == "abs")
                    return std::abs(eval_node(*n.args[0], env));
                if (n.name == "min" || n.name == "max") {
                    double acc = eval_node(*n.args[0], env);
                    for (std::size_t i = 1; i < n.args.size(); ++i) {
                        double v = eval_node(*n.args[i], env);
                        acc = n.name == "min" ? std::min(acc, v) : std::max(acc, v);
                    }
                    return acc;
                }
                throw EvaluationError("unknown function '" + n.name + "'", n.begin, n.end);
            }
            case Node::Kind::If: {
                double l = eval_node(*n.args[0], env);
                double r = eval_node(*n.args[1], env);
                bool cond = false;
                switch (n.cmp) {
                    case CmpOp::Lt: cond = l < r; break;
                    case CmpOp::Le: cond = l <= r; break;
                    case CmpOp::Gt: cond = l > r; break;
                    case CmpOp::Ge: cond = l >= r; break;
                    // exact by design: the step-function combiners branch on exact values
                    case CmpOp::Eq: cond = l == r; break;
                }
                return eval_node(*n.args[cond ? 2 : 3], env);
            }
        }
        throw EvaluationError("malformed expression node");
    }

    // parent_prec: minimal binding strength required to omit parentheses
    static std::string print_node(const Node& n, int parent_prec) {
        switch (n.kind) {
            case Node::Kind::Number:
                return prodmetric::detail::fmt_double(n.number);
            case Node::Kind::Var:
                return n.name;
            case Node::Kind::Neg: {
                std::string s = "-" + print_node(*n.args[0], 3);
                return parent_prec > 2 ? "(" + s + ")" : s;
            }
            case Node::Kind::Binary: {
                int prec;
                const char* op;
                switch (n.bin) {
                    case BinOp::Add: prec = 1; op = " + "; break;
                    case BinOp::Sub: prec = 1; op = " - "; break;
                    case BinOp::Mul: prec = 2; op = "*"; break;
                    case BinOp::Div: prec = 2; op = "/"; break;
                    case BinOp::Pow: prec = 4; op = "^"; break;
                }
                std::string lhs = print_node(*n.args[0], n.bin == BinOp::Pow ? prec + 1 : prec);
                std::string rhs = print_node(*n.args[1], n.bin == BinOp::Pow ? prec : prec + 1);
                std::string s = lhs + op + rhs;
                return parent_prec > prec ? "(" + s + ")" : s;
            }
            case Node::Kind::Call: {
                std::string s = n.name + "(";
                for (std::size_t i = 0; i < n.args.size(); ++i) {
                    if (i) s += ", ";
                    s += print_node(*n.args[i], 0);
                }
                return s + ")";
            }
            case Node::Kind::If: {
                const char* op;
                switch (n.cmp) {
                    case CmpOp::Lt: op = " < "; break;
                    case CmpOp::Le: op = " <= "; break;
                    case CmpOp::Gt: op = " > "; break;
                    case CmpOp::Ge: op = " >= "; break;
                    case CmpOp::Eq: op = " = "; break;
                }
                return "if(" + print_node(*n.args[0], 0) + op + print_node(*n.args[1], 0) +
                       ", " + print_node(*n.args[2], 0) + ", " + print_node(*n.args[3], 0) + ")";
            }
        }
        return {};
    }

    NodePtr root_;
    Context ctx_;
};

}  // namespace prodmetric::expr

#endif  // PRODMETRIC_EXPR_HPP
