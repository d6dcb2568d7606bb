#include "iscm/query/printer.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace iscm::query {

namespace {

constexpr std::array kReservedWords{"SELECT", "DISTINCT", "FROM", "WHERE", "GROUP", "BY",   "HAVING", "UNION",
                                    "ALL",    "AS",       "JOIN", "INNER", "ON",    "AND", "OR",     "NOT",
                                    "EXISTS", "IN",       "TRUE", "FALSE", "NULL",  "ORDER", "LIMIT"};

bool reserved(const std::string &name) {
    std::string u = name;
    for (char &c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const char *w : kReservedWords)
        if (u == w) return true;
    return false;
}

enum Prec : int { kOr = 1, kAnd = 2, kNot = 3, kCmp = 4, kAdd = 5, kMul = 6, kUnary = 7 };

int binary_prec(BinaryOp op) {
    switch (op) {
        case BinaryOp::Or: return kOr;
        case BinaryOp::And: return kAnd;
        case BinaryOp::Add:
        case BinaryOp::Sub: return kAdd;
        case BinaryOp::Mul:
        case BinaryOp::Div: return kMul;
        default: return kCmp;
    }
}

int prec_of(const Expr &e) {
    switch (e.type) {
        case Expr::Type::Binary: return binary_prec(e.binary);
        case Expr::Type::Unary: return e.unary == UnaryOp::Not ? kNot : kUnary;
        case Expr::Type::Exists: return e.negated ? kNot : kUnary;
        case Expr::Type::InSubquery: return kCmp;
        default: return kUnary;
    }
}

std::string literal_text(const Value &v) {
    switch (v.kind()) {
        case Kind::Null: return "NULL";
        case Kind::Bool: return v.as_bool() ? "TRUE" : "FALSE";
        case Kind::Int: return std::to_string(v.as_int());
        case Kind::Decimal: {
            const double d = v.as_decimal();
            if (!std::isfinite(d)) throw std::invalid_argument("non-finite decimal literal cannot be printed");
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof buf, d);
            std::string s(buf, res.ptr);
            if (s.find_first_of(".e") == std::string::npos) s += ".0";
            return s;
        }
        case Kind::Text: {
            std::string out = "'";
            for (char c : v.as_text()) {
                if (c == '\'') out += '\'';
                out += c;
            }
            return out + "'";
        }
        case Kind::Timestamp: return "TIMESTAMP '" + format_timestamp(v.as_timestamp()) + "'";
        case Kind::Any: break;
    }
    throw std::invalid_argument("unprintable literal");
}

class Printer {
public:
    std::string query(const Query &q) {
        if (q.op == Query::Op::Distinct && q.input().op == Query::Op::Union) return union_chain(q.input(), false);
        if (q.op == Query::Op::Union) return union_chain(q, true);
        return block(q);
    }

private:
    std::string union_chain(const Query &u, bool all) {
        return query(u.input(0)) + (all ? " UNION ALL " : " UNION ") + block(u.input(1));
    }

    std::string block(const Query &top) {
        const Query *q = &top;
        bool distinct = false;
        if (q->op == Query::Op::Distinct) {
            distinct = true;
            q = &q->input();
        }
        if (q->op != Query::Op::Project) throw std::invalid_argument("query is not a SELECT block");
        const Query &proj = *q;
        q = &q->input();
        const Query *group = nullptr;
        if (q->op == Query::Op::GroupAggregate) {
            group = q;
            q = &q->input();
        }
        const Query *filter = nullptr;
        if (q->op == Query::Op::Filter) {
            filter = q;
            q = &q->input();
        }
        const Query *saved = group_;
        group_ = group;

        std::string out = distinct ? "SELECT DISTINCT " : "SELECT ";
        if (proj.star) {
            out += '*';
        } else {
            for (std::size_t i = 0; i < proj.exprs.size(); ++i) {
                if (i) out += ", ";
                out += expr(*proj.exprs[i], 0);
                if (i < proj.names.size() && !proj.names[i].empty()) out += " AS " + quote_identifier(proj.names[i]);
            }
        }
        group_ = saved;
        out += " FROM " + from(*q);
        if (filter) out += " WHERE " + expr(*filter->condition, 0);
        if (group) {
            if (!group->keys.empty()) {
                out += " GROUP BY ";
                for (std::size_t i = 0; i < group->keys.size(); ++i) {
                    if (i) out += ", ";
                    out += expr(*group->keys[i], 0);
                }
            }
            if (group->having) {
                group_ = group;
                out += " HAVING " + expr(*group->having, 0);
                group_ = saved;
            }
        }
        return out;
    }

    std::string from(const Query &q) {
        switch (q.op) {
            case Query::Op::Scan:
                return quote_identifier(q.relation) + (q.alias.empty() ? "" : " " + quote_identifier(q.alias));
            case Query::Op::Rename: return "(" + query(q.input()) + ") AS " + quote_identifier(q.alias);
            case Query::Op::Join: {
                std::string out = from(q.input(0));
                if (!q.condition) return out + ", " + from(q.input(1));
                return out + " JOIN " + from(q.input(1)) + " ON " + expr(*q.condition, 0);
            }
            default: throw std::invalid_argument("unsupported FROM item");
        }
    }

public:
    std::string expr(const Expr &e, int min_prec) {
        std::string s = bare(e);
        return prec_of(e) < min_prec ? "(" + s + ")" : s;
    }

private:
    std::string bare(const Expr &e) {
        switch (e.type) {
            case Expr::Type::Literal: return literal_text(e.literal);
            case Expr::Type::Column:
                return (e.qualifier.empty() ? "" : quote_identifier(e.qualifier) + ".") + quote_identifier(e.name);
            case Expr::Type::GroupKey:
                if (group_) return expr(*group_->keys.at(e.slot), kUnary);
                return "key" + std::to_string(e.slot);
            case Expr::Type::AggRef:
                if (group_) return expr(*group_->aggregates.at(e.slot), kUnary);
                return "agg" + std::to_string(e.slot);
            case Expr::Type::Unary:
                if (e.unary == UnaryOp::Not) return "NOT " + expr(*e.args[0], kNot);
                {
                    std::string arg = expr(*e.args[0], kUnary);
                    if (!arg.empty() && arg[0] == '-') arg = "(" + arg + ")";
                    return "-" + arg;
                }
            case Expr::Type::Binary: {
                const int p = binary_prec(e.binary);
                const bool cmp = p == kCmp;
                const std::string lhs = expr(*e.args[0], cmp ? kCmp + 1 : p);
                std::string rhs = expr(*e.args[1], p + 1);
                return lhs + " " + std::string(binary_op_symbol(e.binary)) + " " + rhs;
            }
            case Expr::Type::Extract:
                return "EXTRACT(" + std::string(date_part_name(e.part)) + " FROM " + expr(*e.args[0], 0) + ")";
            case Expr::Type::Aggregate:
                if (e.agg == AggFn::CountStar) return "COUNT(*)";
                return std::string(agg_fn_name(e.agg)) + "(" + (e.distinct ? "DISTINCT " : "") + expr(*e.args[0], 0) +
                       ")";
            case Expr::Type::Exists: {
                const Query *saved = group_;
                group_ = nullptr;
                std::string out = std::string(e.negated ? "NOT " : "") + "EXISTS (" + query(*e.subquery) + ")";
                group_ = saved;
                return out;
            }
            case Expr::Type::InSubquery: {
                std::string out = expr(*e.args[0], kAdd) + (e.negated ? " NOT IN (" : " IN (");
                const Query *saved = group_;
                group_ = nullptr;
                out += query(*e.subquery) + ")";
                group_ = saved;
                return out;
            }
        }
        throw std::invalid_argument("unprintable expression");
    }

    const Query *group_ = nullptr;
};

}  // namespace

std::string quote_identifier(const std::string &name) {
    bool plain = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
    for (char c : name) plain = plain && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
    if (plain && !reserved(name)) return name;
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string print(const Query &q) { return Printer().query(q); }

std::string print(const Expr &e) { return Printer().expr(e, 0); }

}  // namespace iscm::query
