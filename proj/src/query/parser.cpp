#include "iscm/query/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <optional>

namespace iscm::query {

ParseError::ParseError(std::size_t l, std::size_t c, const std::string &message)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + message), line(l), column(c) {}

namespace {

struct Token {
    enum class Kind { Word, QuotedIdent, Number, String, Symbol, End };
    Kind kind = Kind::End;
    std::string text;
    bool decimal = false;  // Number
    std::size_t line = 1;
    std::size_t column = 1;
};

constexpr std::array kReserved{"SELECT", "DISTINCT", "FROM", "WHERE", "GROUP", "BY",   "HAVING", "UNION",
                               "ALL",    "AS",       "JOIN", "INNER", "ON",    "AND", "OR",     "NOT",
                               "EXISTS", "IN",       "TRUE", "FALSE", "NULL",  "ORDER", "LIMIT"};

std::string upper(std::string_view s) {
    std::string out(s);
    for (char &c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

bool is_reserved(std::string_view word) {
    const std::string u = upper(word);
    return std::find(kReserved.begin(), kReserved.end(), u) != kReserved.end();
}

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0, line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            t.kind = Token::Kind::Word;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j < src.size() && src[j] == '.') {
                t.decimal = true;
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    t.decimal = true;
                    j = k;
                    while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
                }
            }
            t.kind = Token::Kind::Number;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else if (c == '\'' || c == '"') {
            const char quote = c;
            std::string text;
            std::size_t j = i + 1;
            bool closed = false;
            while (j < src.size()) {
                if (src[j] == quote) {
                    if (j + 1 < src.size() && src[j + 1] == quote) {
                        text += quote;
                        j += 2;
                        continue;
                    }
                    closed = true;
                    ++j;
                    break;
                }
                text += src[j++];
            }
            if (!closed) throw ParseError(line, col, "unterminated quoted text");
            t.kind = quote == '\'' ? Token::Kind::String : Token::Kind::QuotedIdent;
            t.text = std::move(text);
            advance(j - i);
        } else {
            static constexpr std::array two{"<>", "!=", "<=", ">="};
            std::string sym(1, c);
            if (i + 1 < src.size()) {
                const std::string pair = std::string(src.substr(i, 2));
                if (std::find(two.begin(), two.end(), pair) != two.end()) sym = pair;
            }
            static constexpr std::string_view singles = "=<>+-*/(),.;";
            if (sym.size() == 1 && singles.find(c) == std::string_view::npos)
                throw ParseError(line, col, std::string("unexpected character '") + c + "'");
            t.kind = Token::Kind::Symbol;
            t.text = sym == "!=" ? "<>" : sym;
            advance(sym.size());
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::Kind::End;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

bool contains_aggregate(const Expr &e) {
    bool found = false;
    visit_expr(e, [&](const Expr &x) { found = found || x.type == Expr::Type::Aggregate; });
    return found;
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

    QueryPtr parse_query_text() {
        auto q = parse_query();
        accept_symbol(";");
        if (peek().kind != Token::Kind::End) fail(peek(), "expected end of query, found " + describe(peek()));
        return q;
    }

    ExprPtr parse_expression_text() {
        auto e = parse_expr();
        if (peek().kind != Token::Kind::End) fail(peek(), "expected end of expression, found " + describe(peek()));
        return e;
    }

private:
    const Token &peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    const Token &next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    [[noreturn]] static void fail(const Token &t, const std::string &msg) { throw ParseError(t.line, t.column, msg); }

    static std::string describe(const Token &t) {
        switch (t.kind) {
            case Token::Kind::End: return "end of input";
            case Token::Kind::String: return "'" + t.text + "'";
            case Token::Kind::QuotedIdent: return "\"" + t.text + "\"";
            default: return "'" + t.text + "'";
        }
    }

    bool is_keyword(const Token &t, std::string_view kw) const {
        return t.kind == Token::Kind::Word && upper(t.text) == kw;
    }
    bool accept_keyword(std::string_view kw) {
        if (is_keyword(peek(), kw)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect_keyword(std::string_view kw) {
        if (!accept_keyword(kw)) fail(peek(), "expected " + std::string(kw) + ", found " + describe(peek()));
    }
    bool is_symbol(const Token &t, std::string_view s) const { return t.kind == Token::Kind::Symbol && t.text == s; }
    bool accept_symbol(std::string_view s) {
        if (is_symbol(peek(), s)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect_symbol(std::string_view s) {
        if (!accept_symbol(s)) fail(peek(), "expected '" + std::string(s) + "', found " + describe(peek()));
    }

    bool at_identifier() const {
        const Token &t = peek();
        return t.kind == Token::Kind::QuotedIdent || (t.kind == Token::Kind::Word && !is_reserved(t.text));
    }
    std::string expect_identifier(const char *what) {
        if (!at_identifier()) fail(peek(), std::string("expected ") + what + ", found " + describe(peek()));
        return next().text;
    }

    QueryPtr parse_query() {
        auto q = parse_select();
        while (accept_keyword("UNION")) {
            const bool all = accept_keyword("ALL");
            auto rhs = parse_select();
            q = Query::make(Query::Op::Union, std::move(q), std::move(rhs));
            if (!all) q = Query::make(Query::Op::Distinct, std::move(q));
        }
        return q;
    }

    QueryPtr parse_select() {
        expect_keyword("SELECT");
        const bool distinct = accept_keyword("DISTINCT");
        bool star = false;
        std::vector<ExprPtr> items;
        std::vector<std::string> names;
        if (accept_symbol("*")) {
            star = true;
        } else {
            do {
                items.push_back(parse_expr());
                if (accept_keyword("AS")) names.push_back(expect_identifier("column alias"));
                else if (at_identifier()) names.push_back(next().text);
                else names.emplace_back();
            } while (accept_symbol(","));
        }
        expect_keyword("FROM");
        QueryPtr node = parse_from();

        if (accept_keyword("WHERE")) {
            const Token &at = peek();
            auto where = parse_expr();
            if (contains_aggregate(*where)) fail(at, "aggregate functions are not allowed in WHERE");
            node = Query::make(Query::Op::Filter, std::move(node));
            node->condition = std::move(where);
        }
        std::vector<ExprPtr> group;
        if (accept_keyword("GROUP")) {
            expect_keyword("BY");
            do {
                const Token &at = peek();
                group.push_back(parse_expr());
                if (contains_aggregate(*group.back())) fail(at, "aggregate functions are not allowed in GROUP BY");
            } while (accept_symbol(","));
        }
        ExprPtr having;
        if (accept_keyword("HAVING")) having = parse_expr();
        if (is_keyword(peek(), "ORDER") || is_keyword(peek(), "LIMIT"))
            fail(peek(), "ORDER BY and LIMIT are not supported");

        bool aggregated = !group.empty() || having;
        for (const auto &it : items) aggregated = aggregated || contains_aggregate(*it);
        if (aggregated) {
            if (star) fail(peek(), "SELECT * cannot be combined with aggregation");
            auto g = Query::make(Query::Op::GroupAggregate, std::move(node));
            g->keys = std::move(group);
            for (auto &it : items) it = lower(std::move(it), *g);
            if (having) g->having = lower(std::move(having), *g);
            node = std::move(g);
        }
        auto proj = Query::make(Query::Op::Project, std::move(node));
        proj->exprs = std::move(items);
        proj->names = std::move(names);
        proj->star = star;
        if (distinct) return Query::make(Query::Op::Distinct, std::move(proj));
        return proj;
    }

    // Rewrites group keys and aggregate calls into slot references.
    ExprPtr lower(ExprPtr e, Query &group) {
        for (std::size_t i = 0; i < group.keys.size(); ++i)
            if (structurally_equal(*e, *group.keys[i])) return Expr::make_slot(Expr::Type::GroupKey, i);
        if (e->type == Expr::Type::Aggregate) {
            for (const auto &a : e->args)
                if (contains_aggregate(*a)) throw ParseError(0, 0, "nested aggregate functions are not supported");
            for (std::size_t j = 0; j < group.aggregates.size(); ++j)
                if (structurally_equal(*e, *group.aggregates[j])) return Expr::make_slot(Expr::Type::AggRef, j);
            group.aggregates.push_back(std::move(e));
            return Expr::make_slot(Expr::Type::AggRef, group.aggregates.size() - 1);
        }
        for (auto &a : e->args) a = lower(std::move(a), group);
        return e;
    }

    QueryPtr parse_from() {
        QueryPtr node = parse_source();
        for (;;) {
            if (accept_symbol(",")) {
                node = Query::make(Query::Op::Join, std::move(node), parse_source());
            } else if (is_keyword(peek(), "JOIN") || is_keyword(peek(), "INNER")) {
                accept_keyword("INNER");
                expect_keyword("JOIN");
                auto right = parse_source();
                expect_keyword("ON");
                const Token &at = peek();
                auto cond = parse_expr();
                if (contains_aggregate(*cond)) fail(at, "aggregate functions are not allowed in ON");
                node = Query::make(Query::Op::Join, std::move(node), std::move(right));
                node->condition = std::move(cond);
            } else {
                return node;
            }
        }
    }

    QueryPtr parse_source() {
        if (accept_symbol("(")) {
            auto sub = parse_query();
            expect_symbol(")");
            accept_keyword("AS");
            auto r = Query::make(Query::Op::Rename, std::move(sub));
            r->alias = expect_identifier("alias for derived table");
            return r;
        }
        std::string name = expect_identifier("relation name");
        std::string alias;
        if (accept_keyword("AS")) alias = expect_identifier("alias");
        else if (at_identifier()) alias = next().text;
        return Query::make_scan(std::move(name), std::move(alias));
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        auto lhs = parse_and();
        while (accept_keyword("OR")) lhs = Expr::make_binary(BinaryOp::Or, std::move(lhs), parse_and());
        return lhs;
    }

    ExprPtr parse_and() {
        auto lhs = parse_not();
        while (accept_keyword("AND")) lhs = Expr::make_binary(BinaryOp::And, std::move(lhs), parse_not());
        return lhs;
    }

    ExprPtr parse_not() {
        if (is_keyword(peek(), "NOT")) {
            if (is_keyword(peek(1), "EXISTS")) {
                pos_ += 2;
                return parse_exists_body(true);
            }
            ++pos_;
            return Expr::make_unary(UnaryOp::Not, parse_not());
        }
        return parse_predicate();
    }

    ExprPtr parse_exists_body(bool negated) {
        expect_symbol("(");
        auto sub = parse_query();
        expect_symbol(")");
        return Expr::make_exists(std::move(sub), negated);
    }

    ExprPtr parse_predicate() {
        auto lhs = parse_additive();
        static constexpr std::array<std::pair<std::string_view, BinaryOp>, 6> ops{{{"=", BinaryOp::Eq},
                                                                                   {"<>", BinaryOp::Ne},
                                                                                   {"<=", BinaryOp::Le},
                                                                                   {">=", BinaryOp::Ge},
                                                                                   {"<", BinaryOp::Lt},
                                                                                   {">", BinaryOp::Gt}}};
        for (const auto &[sym, op] : ops) {
            if (accept_symbol(sym)) {
                auto rhs = parse_additive();
                for (const auto &[sym2, op2] : ops)
                    if (is_symbol(peek(), sym2)) fail(peek(), "comparison operators do not chain; add parentheses");
                return Expr::make_binary(op, std::move(lhs), std::move(rhs));
            }
        }
        bool negated = false;
        if (is_keyword(peek(), "NOT") && is_keyword(peek(1), "IN")) {
            negated = true;
            ++pos_;
        }
        if (accept_keyword("IN")) {
            expect_symbol("(");
            if (!is_keyword(peek(), "SELECT")) fail(peek(), "IN requires a subquery; value lists are not supported");
            auto sub = parse_query();
            expect_symbol(")");
            return Expr::make_in(std::move(lhs), std::move(sub), negated);
        }
        return lhs;
    }

    ExprPtr parse_additive() {
        auto lhs = parse_multiplicative();
        for (;;) {
            if (accept_symbol("+")) lhs = Expr::make_binary(BinaryOp::Add, std::move(lhs), parse_multiplicative());
            else if (accept_symbol("-")) lhs = Expr::make_binary(BinaryOp::Sub, std::move(lhs), parse_multiplicative());
            else return lhs;
        }
    }

    ExprPtr parse_multiplicative() {
        auto lhs = parse_unary();
        for (;;) {
            if (accept_symbol("*")) lhs = Expr::make_binary(BinaryOp::Mul, std::move(lhs), parse_unary());
            else if (accept_symbol("/")) lhs = Expr::make_binary(BinaryOp::Div, std::move(lhs), parse_unary());
            else return lhs;
        }
    }

    ExprPtr parse_unary() {
        if (accept_symbol("-")) {
            auto arg = parse_unary();
            if (arg->type == Expr::Type::Literal) {
                if (arg->literal.kind() == iscm::Kind::Int) return Expr::make_literal(Value::integer(-arg->literal.as_int()));
                if (arg->literal.kind() == iscm::Kind::Decimal)
                    return Expr::make_literal(Value::decimal(-arg->literal.as_decimal()));
            }
            return Expr::make_unary(UnaryOp::Neg, std::move(arg));
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        const Token &t = peek();
        switch (t.kind) {
            case Token::Kind::Number: {
                ++pos_;
                if (t.decimal) {
                    double v = 0;
                    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                    if (res.ec != std::errc()) fail(t, "invalid decimal literal " + t.text);
                    return Expr::make_literal(Value::decimal(v));
                }
                std::int64_t v = 0;
                auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                if (res.ec != std::errc()) fail(t, "integer literal out of range " + t.text);
                return Expr::make_literal(Value::integer(v));
            }
            case Token::Kind::String: ++pos_; return Expr::make_literal(Value::text(t.text));
            case Token::Kind::Symbol:
                if (t.text == "(") {
                    ++pos_;
                    if (is_keyword(peek(), "SELECT")) fail(peek(), "scalar subqueries are not supported");
                    auto e = parse_expr();
                    expect_symbol(")");
                    return e;
                }
                fail(t, "expected expression, found " + describe(t));
            case Token::Kind::End: fail(t, "expected expression, found end of input");
            case Token::Kind::QuotedIdent: return parse_column();
            case Token::Kind::Word: break;
        }
        const std::string u = upper(t.text);
        if (u == "TRUE" || u == "FALSE") {
            ++pos_;
            return Expr::make_literal(Value::boolean(u == "TRUE"));
        }
        if (u == "NULL") {
            ++pos_;
            return Expr::make_literal(Value::null());
        }
        if (u == "EXISTS") {
            ++pos_;
            return parse_exists_body(false);
        }
        if (u == "TIMESTAMP" && peek(1).kind == Token::Kind::String) {
            const Token &lit = peek(1);
            pos_ += 2;
            auto ts = parse_timestamp(lit.text);
            if (!ts) fail(lit, "invalid timestamp literal '" + lit.text + "'");
            return Expr::make_literal(Value::timestamp(*ts));
        }
        if (u == "EXTRACT" && is_symbol(peek(1), "(")) {
            pos_ += 2;
            const Token &pt = peek();
            if (pt.kind != Token::Kind::Word) fail(pt, "expected date part, found " + describe(pt));
            auto part = date_part_from_name(pt.text);
            if (!part) fail(pt, "unknown date part '" + pt.text + "' (YEAR, MONTH, DAY, HOUR, MINUTE)");
            ++pos_;
            expect_keyword("FROM");
            auto arg = parse_expr();
            expect_symbol(")");
            return Expr::make_extract(*part, std::move(arg));
        }
        if (is_symbol(peek(1), "(")) {
            std::optional<AggFn> fn;
            if (u == "COUNT") fn = AggFn::Count;
            else if (u == "SUM") fn = AggFn::Sum;
            else if (u == "AVG") fn = AggFn::Avg;
            else if (u == "MIN") fn = AggFn::Min;
            else if (u == "MAX") fn = AggFn::Max;
            if (!fn) fail(t, "unknown function '" + t.text + "'");
            pos_ += 2;
            if (*fn == AggFn::Count && accept_symbol("*")) {
                expect_symbol(")");
                return Expr::make_aggregate(AggFn::CountStar, nullptr, false);
            }
            const bool distinct = accept_keyword("DISTINCT");
            if (distinct && *fn != AggFn::Count) fail(t, "DISTINCT is only supported inside COUNT");
            auto arg = parse_expr();
            expect_symbol(")");
            return Expr::make_aggregate(*fn, std::move(arg), distinct);
        }
        if (is_reserved(t.text)) fail(t, "expected expression, found keyword " + t.text);
        return parse_column();
    }

    ExprPtr parse_column() {
        std::string first = next().text;
        if (accept_symbol(".")) {
            const Token &t = peek();
            if (t.kind != Token::Kind::Word && t.kind != Token::Kind::QuotedIdent)
                fail(t, "expected column name after '.', found " + describe(t));
            ++pos_;
            return Expr::make_column(std::move(first), t.text);
        }
        return Expr::make_column("", std::move(first));
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace

QueryPtr parse(std::string_view text) { return Parser(text).parse_query_text(); }

ExprPtr parse_expression(std::string_view text) { return Parser(text).parse_expression_text(); }

}  // namespace iscm::query
