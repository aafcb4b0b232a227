/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/rfl.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <utility>

namespace codecap::rfl {

namespace {

constexpr int kMaxParseDepth = 200;

bool is_reserved_name(std::string_view name) {
    return name == "heritage" || name == "idx" || name == "request" || name == "now" ||
           name == "state" || name == "isLast" || name == "len" || name == "int" ||
           name == "str" || name == "startsWith";
}

int builtin_arity(std::string_view name) {
    if (name == "len" || name == "int" || name == "str") return 1;
    if (name == "startsWith") return 2;
    if (name == "isLast") return 0;
    return -1;
}

enum class Tok {
    eof,
    int_lit,
    string_lit,
    ident,
    kw_var,
    kw_if,
    kw_else,
    kw_true,
    kw_false,
    kw_null,
    question,
    colon,
    or_or,
    and_and,
    eq_eq,
    bang_eq,
    lt,
    le,
    gt,
    ge,
    plus,
    minus,
    star,
    slash,
    percent,
    bang,
    dot,
    lbracket,
    rbracket,
    lparen,
    rparen,
    assign,
    semicolon,
    comma,
};

struct Token {
    Tok kind = Tok::eof;
    std::string text;
    std::int64_t int_value = 0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> tokens;
        for (;;) {
            skip_space();
            Token t = next();
            bool done = t.kind == Tok::eof;
            tokens.push_back(std::move(t));
            if (done) return tokens;
        }
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(line_, col_, message);
    }

    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }

    char take() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space() {
        while (!eof()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                take();
            } else {
                return;
            }
        }
    }

    Token make(Tok kind, int line, int col) {
        Token t;
        t.kind = kind;
        t.line = line;
        t.col = col;
        return t;
    }

    Token next() {
        int line = line_;
        int col = col_;
        if (eof()) return make(Tok::eof, line, col);
        char c = take();
        switch (c) {
            case '?': return make(Tok::question, line, col);
            case ':': return make(Tok::colon, line, col);
            case '+': return make(Tok::plus, line, col);
            case '-': return make(Tok::minus, line, col);
            case '*': return make(Tok::star, line, col);
            case '/': return make(Tok::slash, line, col);
            case '%': return make(Tok::percent, line, col);
            case '.': return make(Tok::dot, line, col);
            case '[': return make(Tok::lbracket, line, col);
            case ']': return make(Tok::rbracket, line, col);
            case '(': return make(Tok::lparen, line, col);
            case ')': return make(Tok::rparen, line, col);
            case ';': return make(Tok::semicolon, line, col);
            case ',': return make(Tok::comma, line, col);
            case '|':
                if (!eof() && peek() == '|') {
                    take();
                    return make(Tok::or_or, line, col);
                }
                fail("expected '||'");
            case '&':
                if (!eof() && peek() == '&') {
                    take();
                    return make(Tok::and_and, line, col);
                }
                fail("expected '&&'");
            case '=':
                if (!eof() && peek() == '=') {
                    take();
                    return make(Tok::eq_eq, line, col);
                }
                return make(Tok::assign, line, col);
            case '!':
                if (!eof() && peek() == '=') {
                    take();
                    return make(Tok::bang_eq, line, col);
                }
                return make(Tok::bang, line, col);
            case '<':
                if (!eof() && peek() == '=') {
                    take();
                    return make(Tok::le, line, col);
                }
                return make(Tok::lt, line, col);
            case '>':
                if (!eof() && peek() == '=') {
                    take();
                    return make(Tok::ge, line, col);
                }
                return make(Tok::gt, line, col);
            case '"': return string_token(line, col);
            default: break;
        }
        if (c >= '0' && c <= '9') return int_token(c, line, col);
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
            return ident_token(c, line, col);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Token string_token(int line, int col) {
        Token t = make(Tok::string_lit, line, col);
        for (;;) {
            if (eof()) fail("unterminated string literal");
            char c = take();
            if (c == '"') return t;
            if (c == '\n') fail("newline in string literal");
            if (c == '\\') {
                if (eof()) fail("unterminated string literal");
                char e = take();
                if (e == '"') {
                    t.text.push_back('"');
                } else if (e == '\\') {
                    t.text.push_back('\\');
                } else if (e == 'n') {
                    t.text.push_back('\n');
                } else {
                    fail(std::string("unknown escape '\\") + e + "'");
                }
            } else {
                t.text.push_back(c);
            }
        }
    }

    Token int_token(char first, int line, int col) {
        Token t = make(Tok::int_lit, line, col);
        t.text.push_back(first);
        while (!eof() && peek() >= '0' && peek() <= '9') t.text.push_back(take());
        auto [ptr, ec] =
            std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.int_value);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
            throw ParseError(line, col, "integer literal out of range");
        }
        return t;
    }

    Token ident_token(char first, int line, int col) {
        Token t = make(Tok::ident, line, col);
        t.text.push_back(first);
        while (!eof()) {
            char c = peek();
            if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                c == '_') {
                t.text.push_back(take());
            } else {
                break;
            }
        }
        if (t.text == "var") t.kind = Tok::kw_var;
        else if (t.text == "if") t.kind = Tok::kw_if;
        else if (t.text == "else") t.kind = Tok::kw_else;
        else if (t.text == "true") t.kind = Tok::kw_true;
        else if (t.text == "false") t.kind = Tok::kw_false;
        else if (t.text == "null") t.kind = Tok::kw_null;
        return t;
    }
};

} // namespace

namespace detail {

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind { literal, ident, unary, binary, logical, ternary, field, index, call };
    Kind kind = Kind::literal;
    Value literal;
    std::string name;
    Tok op = Tok::eof;
    std::vector<ExprPtr> kids;
    int line = 1;
    int col = 1;
};

struct Program {
    std::vector<std::pair<std::string, ExprPtr>> bindings;
    ExprPtr body;
};

} // namespace detail

namespace {

using detail::Expr;
using detail::ExprPtr;
using detail::Program;

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    std::shared_ptr<Program> parse() {
        auto program = std::make_shared<Program>();
        while (at(Tok::kw_var)) {
            advance();
            Token name = expect(Tok::ident, "binding name");
            if (is_reserved_name(name.text)) {
                throw ParseError(name.line, name.col,
                                 "'" + name.text + "' is a reserved name");
            }
            for (const auto& [existing, _] : program->bindings) {
                if (existing == name.text) {
                    throw ParseError(name.line, name.col,
                                     "duplicate binding '" + name.text + "'");
                }
            }
            expect(Tok::assign, "'='");
            ExprPtr value = expression();
            expect(Tok::semicolon, "';'");
            program->bindings.emplace_back(name.text, std::move(value));
        }
        if (at(Tok::kw_if)) {
            Token kw = advance();
            expect(Tok::lparen, "'('");
            ExprPtr cond = expression();
            expect(Tok::rparen, "')'");
            ExprPtr then_branch = expression();
            expect(Tok::semicolon, "';'");
            expect(Tok::kw_else, "'else'");
            ExprPtr else_branch = expression();
            expect(Tok::semicolon, "';'");
            auto node = make_node(Expr::Kind::ternary, kw);
            node->kids.push_back(std::move(cond));
            node->kids.push_back(std::move(then_branch));
            node->kids.push_back(std::move(else_branch));
            program->body = std::move(node);
        } else {
            program->body = expression();
            if (at(Tok::semicolon)) advance();
        }
        expect(Tok::eof, "end of program");
        return program;
    }

    ExprPtr parse_lone_expression() {
        ExprPtr e = expression();
        expect(Tok::eof, "end of expression");
        return e;
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int depth_ = 0;

    const Token& current() const { return tokens_[pos_]; }
    bool at(Tok kind) const { return current().kind == kind; }

    Token advance() { return tokens_[pos_++]; }

    Token expect(Tok kind, std::string_view what) {
        if (!at(kind)) {
            throw ParseError(current().line, current().col,
                             "expected " + std::string(what) + " before '" +
                                 describe(current()) + "'");
        }
        return advance();
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case Tok::eof: return "end of input";
            case Tok::int_lit: return t.text;
            case Tok::string_lit: return "string literal";
            case Tok::ident: return t.text;
            default: return t.text.empty() ? "operator" : t.text;
        }
    }

    ExprPtr make_node(Expr::Kind kind, const Token& t) {
        auto node = std::make_unique<Expr>();
        node->kind = kind;
        node->line = t.line;
        node->col = t.col;
        return node;
    }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxParseDepth) {
                throw ParseError(p.current().line, p.current().col,
                                 "expression nests too deeply");
            }
        }
        ~DepthGuard() { --p.depth_; }
    };

    ExprPtr expression() { return ternary(); }

    ExprPtr ternary() {
        DepthGuard guard(*this);
        ExprPtr cond = logical_or();
        if (!at(Tok::question)) return cond;
        Token q = advance();
        ExprPtr then_branch = expression();
        expect(Tok::colon, "':'");
        ExprPtr else_branch = ternary();
        auto node = make_node(Expr::Kind::ternary, q);
        node->kids.push_back(std::move(cond));
        node->kids.push_back(std::move(then_branch));
        node->kids.push_back(std::move(else_branch));
        return node;
    }

    ExprPtr logical_or() { return binary_chain(Expr::Kind::logical, {Tok::or_or}, [this] { return logical_and(); }); }
    ExprPtr logical_and() { return binary_chain(Expr::Kind::logical, {Tok::and_and}, [this] { return equality(); }); }
    ExprPtr equality() {
        return binary_chain(Expr::Kind::binary, {Tok::eq_eq, Tok::bang_eq},
                            [this] { return relational(); });
    }
    ExprPtr relational() {
        return binary_chain(Expr::Kind::binary, {Tok::lt, Tok::le, Tok::gt, Tok::ge},
                            [this] { return additive(); });
    }
    ExprPtr additive() {
        return binary_chain(Expr::Kind::binary, {Tok::plus, Tok::minus},
                            [this] { return multiplicative(); });
    }
    ExprPtr multiplicative() {
        return binary_chain(Expr::Kind::binary, {Tok::star, Tok::slash, Tok::percent},
                            [this] { return unary(); });
    }

    template <typename Next>
    ExprPtr binary_chain(Expr::Kind kind, std::initializer_list<Tok> ops, Next next) {
        DepthGuard guard(*this);
        ExprPtr left = next();
        for (;;) {
            bool matched = false;
            for (Tok op : ops) {
                if (at(op)) {
                    matched = true;
                    break;
                }
            }
            if (!matched) return left;
            Token op = advance();
            ExprPtr right = next();
            auto node = make_node(kind, op);
            node->op = op.kind;
            node->kids.push_back(std::move(left));
            node->kids.push_back(std::move(right));
            left = std::move(node);
        }
    }

    ExprPtr unary() {
        DepthGuard guard(*this);
        if (at(Tok::bang) || at(Tok::minus)) {
            Token op = advance();
            auto node = make_node(Expr::Kind::unary, op);
            node->op = op.kind;
            node->kids.push_back(unary());
            return node;
        }
        return postfix();
    }

    ExprPtr postfix() {
        DepthGuard guard(*this);
        ExprPtr base = primary();
        for (;;) {
            if (at(Tok::dot)) {
                Token dot = advance();
                Token name = expect(Tok::ident, "field name");
                auto node = make_node(Expr::Kind::field, dot);
                node->name = name.text;
                node->kids.push_back(std::move(base));
                base = std::move(node);
            } else if (at(Tok::lbracket)) {
                Token bracket = advance();
                ExprPtr index = expression();
                expect(Tok::rbracket, "']'");
                auto node = make_node(Expr::Kind::index, bracket);
                node->kids.push_back(std::move(base));
                node->kids.push_back(std::move(index));
                base = std::move(node);
            } else {
                return base;
            }
        }
    }

    ExprPtr primary() {
        DepthGuard guard(*this);
        const Token& t = current();
        switch (t.kind) {
            case Tok::int_lit: {
                Token lit = advance();
                auto node = make_node(Expr::Kind::literal, lit);
                node->literal = Value(lit.int_value);
                return node;
            }
            case Tok::string_lit: {
                Token lit = advance();
                auto node = make_node(Expr::Kind::literal, lit);
                node->literal = Value(lit.text);
                return node;
            }
            case Tok::kw_true:
            case Tok::kw_false: {
                Token lit = advance();
                auto node = make_node(Expr::Kind::literal, lit);
                node->literal = Value(lit.kind == Tok::kw_true);
                return node;
            }
            case Tok::kw_null: {
                Token lit = advance();
                auto node = make_node(Expr::Kind::literal, lit);
                node->literal = Value();
                return node;
            }
            case Tok::ident: {
                Token name = advance();
                if (at(Tok::lparen)) return call(name);
                auto node = make_node(Expr::Kind::ident, name);
                node->name = name.text;
                return node;
            }
            case Tok::lparen: {
                advance();
                ExprPtr inner = expression();
                expect(Tok::rparen, "')'");
                return inner;
            }
            default:
                throw ParseError(t.line, t.col,
                                 "expected an expression before '" + describe(t) + "'");
        }
    }

    ExprPtr call(const Token& name) {
        int arity = builtin_arity(name.text);
        if (arity < 0) {
            throw ParseError(name.line, name.col, "unknown function '" + name.text + "'");
        }
        advance();
        auto node = make_node(Expr::Kind::call, name);
        node->name = name.text;
        if (!at(Tok::rparen)) {
            for (;;) {
                node->kids.push_back(expression());
                if (!at(Tok::comma)) break;
                advance();
            }
        }
        expect(Tok::rparen, "')'");
        if (static_cast<int>(node->kids.size()) != arity) {
            throw ParseError(name.line, name.col,
                             "'" + name.text + "' takes " + std::to_string(arity) +
                                 " argument(s)");
        }
        return node;
    }
};

struct RuntimeFault {
    std::string message;
};

struct BudgetFault {};

class Evaluator {
public:
    Evaluator(const EvalContext& ctx, std::int64_t budget) : ctx_(ctx), budget_(budget) {}

    EvalOutcome run(const Program& program) {
        EvalOutcome out;
        try {
            for (const auto& [name, expr] : program.bindings) {
                vars_.insert_or_assign(name, eval(*expr));
            }
            Value result = eval(*program.body);
            out.allowed = result.truthy();
            out.cause = Cause::normal;
        } catch (const RuntimeFault& fault) {
            out.allowed = false;
            out.cause = Cause::runtime_error;
            out.detail = fault.message;
        } catch (const BudgetFault&) {
            out.allowed = false;
            out.cause = Cause::step_budget_exceeded;
        }
        out.steps_used = steps_;
        return out;
    }

private:
    const EvalContext& ctx_;
    std::int64_t budget_;
    std::int64_t steps_ = 0;
    std::map<std::string, Value, std::less<>> vars_;

    [[noreturn]] static void fault(const std::string& message) { throw RuntimeFault{message}; }

    void charge(std::int64_t cost) {
        steps_ += cost;
        if (steps_ > budget_) {
            steps_ = budget_;
            throw BudgetFault{};
        }
    }

    // String results count against the budget in proportion to their size so
    // repeated concatenation cannot outrun the step limit.
    void charge_bytes(std::size_t bytes) {
        charge(1 + static_cast<std::int64_t>(bytes / 16));
        if (bytes > kMaxStringBytes) fault("string exceeds size limit");
    }

    Value eval(const Expr& e) {
        charge(1);
        switch (e.kind) {
            case Expr::Kind::literal: return e.literal;
            case Expr::Kind::ident: return lookup(e.name);
            case Expr::Kind::unary: return unary(e);
            case Expr::Kind::binary: return binary(e);
            case Expr::Kind::logical: return logical(e);
            case Expr::Kind::ternary: return eval(*e.kids[0]).truthy() ? eval(*e.kids[1]) : eval(*e.kids[2]);
            case Expr::Kind::field: return field(e);
            case Expr::Kind::index: return index(e);
            case Expr::Kind::call: return call(e);
        }
        fault("internal: unknown expression kind");
    }

    Value lookup(const std::string& name) {
        if (auto it = vars_.find(name); it != vars_.end()) return it->second;
        if (name == "heritage") return ctx_.heritage;
        if (name == "idx") return Value(ctx_.idx);
        if (name == "request") return ctx_.request;
        if (name == "now") return Value(ctx_.now);
        if (name == "state") return ctx_.state;
        if (name == "isLast") return is_last();
        if (builtin_arity(name) >= 0) fault("'" + name + "' is a function, not a value");
        fault("unknown identifier '" + name + "'");
    }

    Value is_last() {
        if (!ctx_.heritage.is_list()) fault("heritage is not a list");
        auto size = static_cast<std::int64_t>(ctx_.heritage.as_list().size());
        return Value(ctx_.idx == size - 1);
    }

    Value unary(const Expr& e) {
        Value operand = eval(*e.kids[0]);
        if (e.op == Tok::bang) return Value(!operand.truthy());
        if (!operand.is_int()) fault("unary '-' needs an integer");
        std::int64_t out = 0;
        if (__builtin_sub_overflow(std::int64_t{0}, operand.as_int(), &out)) {
            fault("integer overflow");
        }
        return Value(out);
    }

    Value logical(const Expr& e) {
        bool left = eval(*e.kids[0]).truthy();
        if (e.op == Tok::and_and) {
            return Value(left && eval(*e.kids[1]).truthy());
        }
        return Value(left || eval(*e.kids[1]).truthy());
    }

    Value binary(const Expr& e) {
        Value a = eval(*e.kids[0]);
        Value b = eval(*e.kids[1]);
        switch (e.op) {
            case Tok::eq_eq: return Value(equals(a, b));
            case Tok::bang_eq: return Value(!equals(a, b));
            case Tok::lt: return Value(compare(a, b) < 0);
            case Tok::le: return Value(compare(a, b) <= 0);
            case Tok::gt: return Value(compare(a, b) > 0);
            case Tok::ge: return Value(compare(a, b) >= 0);
            case Tok::plus: return add(a, b);
            case Tok::minus: return arith(a, b, e.op);
            case Tok::star: return arith(a, b, e.op);
            case Tok::slash: return arith(a, b, e.op);
            case Tok::percent: return arith(a, b, e.op);
            default: fault("internal: unknown binary operator");
        }
    }

    bool equals(const Value& a, const Value& b) {
        if (a.is_list() || a.is_record() || b.is_list() || b.is_record()) {
            fault("'==' is not defined for lists or records");
        }
        if (a.is_string() && b.is_string()) {
            charge_bytes(std::min(a.as_string().size(), b.as_string().size()));
        }
        // Scalars of different kinds are simply unequal.
        return a == b;
    }

    int compare(const Value& a, const Value& b) {
        if (a.is_int() && b.is_int()) {
            return a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
        }
        if (a.is_string() && b.is_string()) {
            charge_bytes(std::min(a.as_string().size(), b.as_string().size()));
            int c = a.as_string().compare(b.as_string());
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        fault("ordering needs two integers or two strings");
    }

    Value add(const Value& a, const Value& b) {
        if (a.is_int() && b.is_int()) {
            std::int64_t out = 0;
            if (__builtin_add_overflow(a.as_int(), b.as_int(), &out)) fault("integer overflow");
            return Value(out);
        }
        if (a.is_string() && b.is_string()) {
            charge_bytes(a.as_string().size() + b.as_string().size());
            return Value(a.as_string() + b.as_string());
        }
        fault("'+' needs two integers or two strings");
    }

    Value arith(const Value& a, const Value& b, Tok op) {
        if (!a.is_int() || !b.is_int()) fault("arithmetic needs two integers");
        std::int64_t x = a.as_int();
        std::int64_t y = b.as_int();
        std::int64_t out = 0;
        switch (op) {
            case Tok::minus:
                if (__builtin_sub_overflow(x, y, &out)) fault("integer overflow");
                return Value(out);
            case Tok::star:
                if (__builtin_mul_overflow(x, y, &out)) fault("integer overflow");
                return Value(out);
            case Tok::slash:
                if (y == 0) fault("division by zero");
                if (x == std::numeric_limits<std::int64_t>::min() && y == -1) {
                    fault("integer overflow");
                }
                return Value(x / y);
            case Tok::percent:
                if (y == 0) fault("modulo by zero");
                if (x == std::numeric_limits<std::int64_t>::min() && y == -1) {
                    fault("integer overflow");
                }
                return Value(x % y);
            default: fault("internal: unknown arithmetic operator");
        }
    }

    Value field(const Expr& e) {
        Value base = eval(*e.kids[0]);
        if (!base.is_record()) fault("'." + e.name + "' applied to a non-record");
        const auto& rec = base.as_record();
        auto it = rec.find(e.name);
        if (it == rec.end()) fault("no field '" + e.name + "'");
        return it->second;
    }

    Value index(const Expr& e) {
        Value base = eval(*e.kids[0]);
        Value key = eval(*e.kids[1]);
        if (base.is_list()) {
            if (!key.is_int()) fault("list index must be an integer");
            const auto& list = base.as_list();
            std::int64_t i = key.as_int();
            if (i < 0 || i >= static_cast<std::int64_t>(list.size())) {
                fault("list index out of range");
            }
            return list[static_cast<std::size_t>(i)];
        }
        if (base.is_record()) {
            if (!key.is_string()) fault("record index must be a string");
            const auto& rec = base.as_record();
            auto it = rec.find(key.as_string());
            if (it == rec.end()) fault("no field '" + key.as_string() + "'");
            return it->second;
        }
        fault("indexing needs a list or record");
    }

    Value call(const Expr& e) {
        if (e.name == "isLast") return is_last();
        if (e.name == "len") {
            Value v = eval(*e.kids[0]);
            if (v.is_string()) return Value(static_cast<std::int64_t>(v.as_string().size()));
            if (v.is_list()) return Value(static_cast<std::int64_t>(v.as_list().size()));
            if (v.is_record()) return Value(static_cast<std::int64_t>(v.as_record().size()));
            fault("len() needs a string, list, or record");
        }
        if (e.name == "int") {
            Value v = eval(*e.kids[0]);
            if (v.is_int()) return v;
            if (v.is_string()) return parse_int(v.as_string());
            fault("int() needs a string or integer");
        }
        if (e.name == "str") {
            Value v = eval(*e.kids[0]);
            if (v.is_string()) return v;
            if (v.is_int()) {
                std::string s = std::to_string(v.as_int());
                charge_bytes(s.size());
                return Value(std::move(s));
            }
            if (v.is_bool()) return Value(v.as_bool() ? std::string("true") : std::string("false"));
            fault("str() needs a string, integer, or boolean");
        }
        if (e.name == "startsWith") {
            Value s = eval(*e.kids[0]);
            Value p = eval(*e.kids[1]);
            if (!s.is_string() || !p.is_string()) fault("startsWith() needs two strings");
            charge_bytes(p.as_string().size());
            const auto& str = s.as_string();
            const auto& prefix = p.as_string();
            return Value(str.size() >= prefix.size() &&
                         str.compare(0, prefix.size(), prefix) == 0);
        }
        fault("internal: unknown builtin '" + e.name + "'");
    }

    static Value parse_int(const std::string& text) {
        std::int64_t out = 0;
        const char* begin = text.data();
        const char* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(begin, end, out);
        if (ec != std::errc() || ptr != end || text.empty()) {
            fault("int() argument is not numeric");
        }
        return Value(out);
    }
};

std::shared_ptr<Program> parse_to_ast(std::string_view source) {
    if (source.size() > kMaxSourceBytes) {
        throw ParseError(1, 1, "source exceeds the 64 KiB limit");
    }
    Parser parser(Lexer(source).run());
    return parser.parse();
}

void append_value(std::string& out, const Value& v) {
    if (v.is_null()) {
        out += "null";
    } else if (v.is_bool()) {
        out += v.as_bool() ? "true" : "false";
    } else if (v.is_int()) {
        out += std::to_string(v.as_int());
    } else if (v.is_string()) {
        out.push_back('"');
        for (char c : v.as_string()) {
            if (c == '"' || c == '\\') {
                out.push_back('\\');
                out.push_back(c);
            } else if (c == '\n') {
                out += "\\n";
            } else {
                out.push_back(c);
            }
        }
        out.push_back('"');
    } else if (v.is_list()) {
        out.push_back('[');
        bool first = true;
        for (const auto& item : v.as_list()) {
            if (!first) out += ", ";
            first = false;
            append_value(out, item);
        }
        out.push_back(']');
    } else {
        out.push_back('{');
        bool first = true;
        for (const auto& [name, item] : v.as_record()) {
            if (!first) out += ", ";
            first = false;
            out += name;
            out += ": ";
            append_value(out, item);
        }
        out.push_back('}');
    }
}

} // namespace

Value Value::list(List items) {
    Value v;
    v.v_ = std::make_shared<const List>(std::move(items));
    return v;
}

Value Value::record(Record fields) {
    Value v;
    v.v_ = std::make_shared<const Record>(std::move(fields));
    return v;
}

bool Value::is_list() const { return std::holds_alternative<ListPtr>(v_); }
bool Value::is_record() const { return std::holds_alternative<RecordPtr>(v_); }

const Value::List& Value::as_list() const { return *std::get<ListPtr>(v_); }
const Value::Record& Value::as_record() const { return *std::get<RecordPtr>(v_); }

bool Value::truthy() const {
    if (is_null()) return false;
    if (is_bool()) return as_bool();
    if (is_int()) return as_int() != 0;
    if (is_string()) return !as_string().empty();
    return true;
}

bool Value::operator==(const Value& other) const {
    if (v_.index() != other.v_.index()) return false;
    if (is_list()) return as_list() == other.as_list();
    if (is_record()) return as_record() == other.as_record();
    return v_ == other.v_;
}

std::string to_string(const Value& value) {
    std::string out;
    append_value(out, value);
    return out;
}

std::string_view cause_name(Cause cause) {
    switch (cause) {
        case Cause::normal: return "normal";
        case Cause::parse_error: return "parse_error";
        case Cause::runtime_error: return "runtime_error";
        case Cause::step_budget_exceeded: return "step_budget_exceeded";
    }
    return "unknown";
}

ParseError::ParseError(int line, int col, const std::string& message)
    : Error("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + message),
      line_(line),
      col_(col) {}

RightsProgram parse_program(std::string_view source) {
    RightsProgram program;
    program.source = std::string(source);
    program.ast = parse_to_ast(source);
    return program;
}

bool parses_as_expression(std::string_view source) {
    if (source.size() > kMaxSourceBytes) return false;
    try {
        Parser parser(Lexer(source).run());
        parser.parse_lone_expression();
        return true;
    } catch (const ParseError&) {
        return false;
    }
}

EvalOutcome evaluate(const RightsProgram& program, const EvalContext& ctx, std::int64_t budget) {
    if (budget < 1) throw Error("evaluation budget must be at least 1");
    if (!program.ast) {
        EvalOutcome out;
        out.cause = Cause::parse_error;
        out.detail = "program has no parsed form";
        return out;
    }
    return Evaluator(ctx, budget).run(*program.ast);
}

EvalOutcome evaluate_source(std::string_view source, const EvalContext& ctx,
                            std::int64_t budget) {
    RightsProgram program;
    try {
        program = parse_program(source);
    } catch (const ParseError& e) {
        if (budget < 1) throw Error("evaluation budget must be at least 1");
        EvalOutcome out;
        out.cause = Cause::parse_error;
        out.detail = e.what();
        return out;
    }
    return evaluate(program, ctx, budget);
}

std::vector<BuiltinInfo> builtin_table() {
    return {
        {"len", 1, "length of a string, list, or record"},
        {"int", 1, "string to integer; faults on non-numeric input"},
        {"str", 1, "integer or boolean to string"},
        {"startsWith", 2, "true when the first string begins with the second"},
        {"isLast", 0, "true when idx is the last heritage position"},
    };
}

} // namespace codecap::rfl
