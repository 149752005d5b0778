// fatesim/guard.hpp - guard / assignment expression language
//
// Grammar (tightest to loosest): primary, unary (not, -), + -, comparisons,
// and, or. Comparisons do not chain. Identifiers resolve against the model's
// variable declarations at parse time, and comparisons are type-checked
// (int vs int, text vs text) before any expression is evaluated.
#pragma once

#include <cctype>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fatesim/value.hpp"

namespace fatesim {

class ExprError : public std::runtime_error {
public:
    ExprError(std::string message, std::size_t position)
        : std::runtime_error(message + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class ArithOp { Add, Sub };
enum class LogicOp { And, Or };

struct GuardExpr;
using ExprPtr = std::shared_ptr<const GuardExpr>;

struct IntLiteral { std::int64_t value = 0; };
struct TextLiteral { std::string value; };
struct VarRef { std::string name; ValueType type = ValueType::Integer; };
struct Arith { ArithOp op; ExprPtr lhs, rhs; };
struct Negate { ExprPtr operand; };
struct Compare { CompareOp op; ExprPtr lhs, rhs; };
struct Logic { LogicOp op; ExprPtr lhs, rhs; };
struct Not { ExprPtr operand; };

// Immutable after parsing; safe to share across concurrent runs.
struct GuardExpr {
    std::variant<IntLiteral, TextLiteral, VarRef, Arith, Negate, Compare, Logic, Not> node;
    ValueType type = ValueType::Boolean;
};

struct Assignment {
    std::string target;
    ValueType target_type = ValueType::Integer;
    ExprPtr expr;
    std::string source_text;  // original "target = expr" string
};

namespace detail {

enum class TokenKind {
    Integer, Text, Ident,
    Eq, Ne, Lt, Le, Gt, Ge,
    Plus, Minus, Assign,
    LParen, RParen,
    KwAnd, KwOr, KwNot,
    End
};

struct Token {
    TokenKind kind;
    std::size_t pos = 0;
    std::int64_t int_value = 0;
    std::string text;
};

inline std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = src.size();
    auto push = [&](TokenKind k, std::size_t pos) { out.push_back({k, pos, 0, {}}); };
    while (i < n) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::int64_t v = 0;
            while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) {
                v = v * 10 + (src[i] - '0');
                ++i;
            }
            out.push_back({TokenKind::Integer, start, v, {}});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string ident;
            while (i < n && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
                ident += src[i++];
            }
            if (ident == "and") push(TokenKind::KwAnd, start);
            else if (ident == "or") push(TokenKind::KwOr, start);
            else if (ident == "not") push(TokenKind::KwNot, start);
            else out.push_back({TokenKind::Ident, start, 0, std::move(ident)});
            continue;
        }
        if (c == '"') {
            ++i;
            std::string text;
            while (i < n && src[i] != '"') {
                if (src[i] == '\\' && i + 1 < n) ++i;  // \" and \\ escapes
                text += src[i++];
            }
            if (i >= n) throw ExprError("unterminated string literal", start);
            ++i;
            out.push_back({TokenKind::Text, start, 0, std::move(text)});
            continue;
        }
        switch (c) {
            case '=':
                if (i + 1 < n && src[i + 1] == '=') { push(TokenKind::Eq, start); i += 2; }
                else { push(TokenKind::Assign, start); ++i; }
                break;
            case '!':
                if (i + 1 < n && src[i + 1] == '=') { push(TokenKind::Ne, start); i += 2; }
                else throw ExprError("unexpected '!'", start);
                break;
            case '<':
                if (i + 1 < n && src[i + 1] == '=') { push(TokenKind::Le, start); i += 2; }
                else { push(TokenKind::Lt, start); ++i; }
                break;
            case '>':
                if (i + 1 < n && src[i + 1] == '=') { push(TokenKind::Ge, start); i += 2; }
                else { push(TokenKind::Gt, start); ++i; }
                break;
            case '+': push(TokenKind::Plus, start); ++i; break;
            case '-': push(TokenKind::Minus, start); ++i; break;
            case '(': push(TokenKind::LParen, start); ++i; break;
            case ')': push(TokenKind::RParen, start); ++i; break;
            default:
                throw ExprError(std::string("unexpected character '") + c + "'", start);
        }
    }
    push(TokenKind::End, n);
    return out;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, const Declarations& decls, bool allow_input)
        : tokens_(std::move(tokens)), decls_(decls), allow_input_(allow_input) {}

    ExprPtr parse_expression() {
        ExprPtr e = parse_or();
        expect(TokenKind::End, "trailing input after expression");
        return e;
    }

    // target = expr
    Assignment parse_assignment(const std::string& source) {
        const Token& name = peek();
        if (name.kind != TokenKind::Ident)
            throw ExprError("expected variable name on left of '='", name.pos);
        advance();
        auto decl = decls_.find(name.text);
        if (decl == decls_.end())
            throw ExprError("assignment to undeclared variable '" + name.text + "'", name.pos);
        expect(TokenKind::Assign, "expected '=' in assignment");
        ExprPtr value = parse_or();
        expect(TokenKind::End, "trailing input after assignment");
        if (value->type != decl->second) {
            throw ExprError("cannot assign " + std::string(to_string(value->type)) + " to " +
                                std::string(to_string(decl->second)) + " variable '" + name.text + "'",
                            name.pos);
        }
        return Assignment{name.text, decl->second, value, source};
    }

private:
    const Token& peek() const { return tokens_[index_]; }
    void advance() { ++index_; }

    bool accept(TokenKind k) {
        if (peek().kind == k) { advance(); return true; }
        return false;
    }

    void expect(TokenKind k, const char* message) {
        if (!accept(k)) throw ExprError(message, peek().pos);
    }

    static ExprPtr make(GuardExpr e) { return std::make_shared<const GuardExpr>(std::move(e)); }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (peek().kind == TokenKind::KwOr) {
            std::size_t pos = peek().pos;
            advance();
            ExprPtr rhs = parse_and();
            require_bool(lhs, pos, "or");
            require_bool(rhs, pos, "or");
            lhs = make({Logic{LogicOp::Or, lhs, rhs}, ValueType::Boolean});
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_comparison();
        while (peek().kind == TokenKind::KwAnd) {
            std::size_t pos = peek().pos;
            advance();
            ExprPtr rhs = parse_comparison();
            require_bool(lhs, pos, "and");
            require_bool(rhs, pos, "and");
            lhs = make({Logic{LogicOp::And, lhs, rhs}, ValueType::Boolean});
        }
        return lhs;
    }

    ExprPtr parse_comparison() {
        ExprPtr lhs = parse_additive();
        std::optional<CompareOp> op;
        switch (peek().kind) {
            case TokenKind::Eq: op = CompareOp::Eq; break;
            case TokenKind::Ne: op = CompareOp::Ne; break;
            case TokenKind::Lt: op = CompareOp::Lt; break;
            case TokenKind::Le: op = CompareOp::Le; break;
            case TokenKind::Gt: op = CompareOp::Gt; break;
            case TokenKind::Ge: op = CompareOp::Ge; break;
            default: return lhs;
        }
        std::size_t pos = peek().pos;
        advance();
        ExprPtr rhs = parse_additive();
        if (lhs->type != rhs->type || lhs->type == ValueType::Boolean) {
            throw ExprError("type mismatch: cannot compare " + std::string(to_string(lhs->type)) +
                                " with " + std::string(to_string(rhs->type)),
                            pos);
        }
        if (lhs->type == ValueType::Text && *op != CompareOp::Eq && *op != CompareOp::Ne)
            throw ExprError("text values support only == and !=", pos);
        return make({Compare{*op, lhs, rhs}, ValueType::Boolean});
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_unary();
        while (peek().kind == TokenKind::Plus || peek().kind == TokenKind::Minus) {
            ArithOp op = peek().kind == TokenKind::Plus ? ArithOp::Add : ArithOp::Sub;
            std::size_t pos = peek().pos;
            advance();
            ExprPtr rhs = parse_unary();
            require_int(lhs, pos);
            require_int(rhs, pos);
            lhs = make({Arith{op, lhs, rhs}, ValueType::Integer});
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (peek().kind == TokenKind::KwNot) {
            std::size_t pos = peek().pos;
            advance();
            ExprPtr operand = parse_unary();
            require_bool(operand, pos, "not");
            return make({Not{operand}, ValueType::Boolean});
        }
        if (peek().kind == TokenKind::Minus) {
            std::size_t pos = peek().pos;
            advance();
            ExprPtr operand = parse_unary();
            require_int(operand, pos);
            return make({Negate{operand}, ValueType::Integer});
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
            case TokenKind::Integer:
                advance();
                return make({IntLiteral{t.int_value}, ValueType::Integer});
            case TokenKind::Text:
                advance();
                return make({TextLiteral{t.text}, ValueType::Text});
            case TokenKind::Ident: {
                advance();
                if (t.text == kInputSymbol) {
                    if (!allow_input_)
                        throw ExprError("'__input__' is only valid in text_field assignments", t.pos);
                    return make({VarRef{t.text, ValueType::Text}, ValueType::Text});
                }
                auto decl = decls_.find(t.text);
                if (decl == decls_.end())
                    throw ExprError("unbound identifier '" + t.text + "'", t.pos);
                return make({VarRef{t.text, decl->second}, decl->second});
            }
            case TokenKind::LParen: {
                advance();
                ExprPtr inner = parse_or();
                expect(TokenKind::RParen, "expected ')'");
                return inner;
            }
            default:
                throw ExprError("expected literal, identifier or '('", t.pos);
        }
    }

    void require_bool(const ExprPtr& e, std::size_t pos, const char* op) {
        if (e->type != ValueType::Boolean)
            throw ExprError("operand of '" + std::string(op) + "' must be boolean, got " +
                                std::string(to_string(e->type)),
                            pos);
    }

    void require_int(const ExprPtr& e, std::size_t pos) {
        if (e->type != ValueType::Integer)
            throw ExprError("arithmetic requires integers, got " + std::string(to_string(e->type)),
                            pos);
    }

    std::vector<Token> tokens_;
    std::size_t index_ = 0;
    const Declarations& decls_;
    bool allow_input_;
};

}  // namespace detail

inline ExprPtr parse_expr(const std::string& text, const Declarations& decls,
                          bool allow_input = false) {
    detail::Parser parser(detail::lex(text), decls, allow_input);
    return parser.parse_expression();
}

inline Assignment parse_assignment(const std::string& text, const Declarations& decls,
                                   bool allow_input = true) {
    detail::Parser parser(detail::lex(text), decls, allow_input);
    return parser.parse_assignment(text);
}

// Total for type-checked ASTs: every identifier must be bound in vars and
// input must be supplied iff the expression references __input__.
inline Value eval_expr(const GuardExpr& expr, const VarStore& vars,
                       const std::optional<std::string>& input = std::nullopt) {
    struct Visitor {
        const VarStore& vars;
        const std::optional<std::string>& input;

        Value operator()(const IntLiteral& e) const { return e.value; }
        Value operator()(const TextLiteral& e) const { return e.value; }
        Value operator()(const VarRef& e) const {
            if (e.name == kInputSymbol) {
                if (!input) throw std::runtime_error("expression references __input__ but no input string was supplied");
                return *input;
            }
            auto it = vars.find(e.name);
            if (it == vars.end()) throw std::runtime_error("unbound variable '" + e.name + "'");
            return it->second;
        }
        Value operator()(const Arith& e) const {
            std::int64_t l = as_int(eval(*e.lhs));
            std::int64_t r = as_int(eval(*e.rhs));
            return e.op == ArithOp::Add ? l + r : l - r;
        }
        Value operator()(const Negate& e) const { return -as_int(eval(*e.operand)); }
        Value operator()(const Compare& e) const {
            Value l = eval(*e.lhs);
            Value r = eval(*e.rhs);
            if (type_of(l) == ValueType::Text) {
                const std::string& a = as_text(l);
                const std::string& b = as_text(r);
                return e.op == CompareOp::Eq ? a == b : a != b;
            }
            std::int64_t a = as_int(l);
            std::int64_t b = as_int(r);
            switch (e.op) {
                case CompareOp::Eq: return a == b;
                case CompareOp::Ne: return a != b;
                case CompareOp::Lt: return a < b;
                case CompareOp::Le: return a <= b;
                case CompareOp::Gt: return a > b;
                case CompareOp::Ge: return a >= b;
            }
            return false;
        }
        Value operator()(const Logic& e) const {
            bool l = as_bool(eval(*e.lhs));
            if (e.op == LogicOp::And) return l && as_bool(eval(*e.rhs));
            return l || as_bool(eval(*e.rhs));
        }
        Value operator()(const Not& e) const { return !as_bool(eval(*e.operand)); }

        Value eval(const GuardExpr& e) const { return std::visit(*this, e.node); }
    };
    return Visitor{vars, input}.eval(expr);
}

inline bool eval_guard(const GuardExpr& expr, const VarStore& vars) {
    return as_bool(eval_expr(expr, vars));
}

// Applies assignments in list order, each seeing prior updates; the input
// store is left untouched.
inline VarStore exec_set(const std::vector<Assignment>& assignments, const VarStore& vars,
                         const std::optional<std::string>& input = std::nullopt) {
    VarStore out = vars;
    for (const Assignment& a : assignments) {
        out[a.target] = eval_expr(*a.expr, out, input);
    }
    return out;
}

// Pretty printer; output reparses to a structurally equal AST.
inline std::string to_string(const GuardExpr& expr) {
    struct Printer {
        static int precedence(const GuardExpr& e) {
            if (std::holds_alternative<Logic>(e.node))
                return std::get<Logic>(e.node).op == LogicOp::Or ? 0 : 1;
            if (std::holds_alternative<Compare>(e.node)) return 2;
            if (std::holds_alternative<Arith>(e.node)) return 3;
            if (std::holds_alternative<Not>(e.node) || std::holds_alternative<Negate>(e.node)) return 4;
            return 5;
        }

        static std::string escape(const std::string& s) {
            std::string out;
            for (char c : s) {
                if (c == '"' || c == '\\') out += '\\';
                out += c;
            }
            return out;
        }

        static std::string child(const GuardExpr& parent, const GuardExpr& c, bool right_side) {
            std::string s = print(c);
            int pp = precedence(parent);
            int cp = precedence(c);
            // Binary operators here are left-associative; parenthesize a
            // right child of equal precedence and any child of lower one.
            if (cp < pp || (right_side && cp == pp)) return "(" + s + ")";
            return s;
        }

        static std::string print(const GuardExpr& e) {
            struct V {
                const GuardExpr& self;
                std::string operator()(const IntLiteral& n) const { return std::to_string(n.value); }
                std::string operator()(const TextLiteral& n) const { return "\"" + escape(n.value) + "\""; }
                std::string operator()(const VarRef& n) const { return n.name; }
                std::string operator()(const Arith& n) const {
                    return child(self, *n.lhs, false) + (n.op == ArithOp::Add ? " + " : " - ") +
                           child(self, *n.rhs, true);
                }
                std::string operator()(const Negate& n) const { return "-" + child(self, *n.operand, true); }
                std::string operator()(const Compare& n) const {
                    const char* op = "==";
                    switch (n.op) {
                        case CompareOp::Eq: op = "=="; break;
                        case CompareOp::Ne: op = "!="; break;
                        case CompareOp::Lt: op = "<"; break;
                        case CompareOp::Le: op = "<="; break;
                        case CompareOp::Gt: op = ">"; break;
                        case CompareOp::Ge: op = ">="; break;
                    }
                    return child(self, *n.lhs, false) + " " + op + " " + child(self, *n.rhs, true);
                }
                std::string operator()(const Logic& n) const {
                    const char* op = n.op == LogicOp::And ? " and " : " or ";
                    return child(self, *n.lhs, false) + op + child(self, *n.rhs, true);
                }
                std::string operator()(const Not& n) const { return "not " + child(self, *n.operand, true); }
            };
            return std::visit(V{e}, e.node);
        }
    };
    return Printer::print(expr);
}

inline bool expr_equal(const GuardExpr& a, const GuardExpr& b) {
    if (a.node.index() != b.node.index() || a.type != b.type) return false;
    struct V {
        const GuardExpr& other;
        bool operator()(const IntLiteral& n) const { return std::get<IntLiteral>(other.node).value == n.value; }
        bool operator()(const TextLiteral& n) const { return std::get<TextLiteral>(other.node).value == n.value; }
        bool operator()(const VarRef& n) const {
            const auto& o = std::get<VarRef>(other.node);
            return o.name == n.name && o.type == n.type;
        }
        bool operator()(const Arith& n) const {
            const auto& o = std::get<Arith>(other.node);
            return o.op == n.op && expr_equal(*n.lhs, *o.lhs) && expr_equal(*n.rhs, *o.rhs);
        }
        bool operator()(const Negate& n) const {
            return expr_equal(*n.operand, *std::get<Negate>(other.node).operand);
        }
        bool operator()(const Compare& n) const {
            const auto& o = std::get<Compare>(other.node);
            return o.op == n.op && expr_equal(*n.lhs, *o.lhs) && expr_equal(*n.rhs, *o.rhs);
        }
        bool operator()(const Logic& n) const {
            const auto& o = std::get<Logic>(other.node);
            return o.op == n.op && expr_equal(*n.lhs, *o.lhs) && expr_equal(*n.rhs, *o.rhs);
        }
        bool operator()(const Not& n) const {
            return expr_equal(*n.operand, *std::get<Not>(other.node).operand);
        }
    };
    return std::visit(V{b}, a.node);
}

// True if any node in the expression references __input__.
inline bool references_input(const GuardExpr& expr) {
    struct V {
        bool operator()(const IntLiteral&) const { return false; }
        bool operator()(const TextLiteral&) const { return false; }
        bool operator()(const VarRef& n) const { return n.name == kInputSymbol; }
        bool operator()(const Arith& n) const { return references_input(*n.lhs) || references_input(*n.rhs); }
        bool operator()(const Negate& n) const { return references_input(*n.operand); }
        bool operator()(const Compare& n) const { return references_input(*n.lhs) || references_input(*n.rhs); }
        bool operator()(const Logic& n) const { return references_input(*n.lhs) || references_input(*n.rhs); }
        bool operator()(const Not& n) const { return references_input(*n.operand); }
    };
    return std::visit(V{}, expr.node);
}

}  // namespace fatesim
