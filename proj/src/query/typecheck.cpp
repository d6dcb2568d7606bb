#include "iscm/query/typecheck.hpp"

#include <algorithm>
#include <cctype>

#include "iscm/query/parser.hpp"

namespace iscm::query {

const std::string_view kEventsViewSource =
    "SELECT l.CaseId, l.EventId, l.ActivityLabel, l.Timestamp, l.Lifecycle, d.Attribute, d.Value "
    "FROM Log l JOIN EventData d ON l.EventId = d.EventId AND l.Lifecycle = d.Lifecycle";

Catalog Catalog::standard() {
    Catalog c;
    c.add_relation(std::string(relations::kLog), log_schema());
    c.add_relation(std::string(relations::kEventData), event_data_schema());
    c.add_relation(std::string(relations::kNow), now_schema());
    c.add_view("Events", kEventsViewSource);
    return c;
}

Catalog Catalog::for_database(const Database &db) {
    Catalog c = standard();
    for (const auto &name : db.relation_names())
        if (!c.relation(name)) c.add_relation(name, db.scan(name).schema());
    return c;
}

void Catalog::add_relation(const std::string &name, Schema schema) {
    if (views_.count(name)) throw TypeCheckError("'" + name + "' is already defined as a view");
    relations_[name] = std::move(schema);
}

void Catalog::add_view(const std::string &name, std::string_view source) {
    if (relations_.count(name)) throw TypeCheckError("'" + name + "' is already defined as a relation");
    auto body = parse(source);
    typecheck(*body, *this);
    views_[name] = std::move(body);
}

const Schema *Catalog::relation(std::string_view name) const {
    auto it = relations_.find(name);
    return it == relations_.end() ? nullptr : &it->second;
}

const Query *Catalog::view(std::string_view name) const {
    auto it = views_.find(name);
    return it == views_.end() ? nullptr : it->second.get();
}

std::vector<std::string> Catalog::names() const {
    std::vector<std::string> out;
    for (const auto &[n, s] : relations_) out.push_back(n);
    for (const auto &[n, v] : views_) out.push_back(n);
    return out;
}

bool comparable(Kind a, Kind b) {
    if (a == b || a == Kind::Null || b == Kind::Null || a == Kind::Any || b == Kind::Any) return true;
    const bool na = a == Kind::Int || a == Kind::Decimal;
    const bool nb = b == Kind::Int || b == Kind::Decimal;
    return na && nb;
}

bool same_shape(const Schema &a, const Schema &b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].kind != b[i].kind) return false;
    return true;
}

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            const bool same = std::tolower(static_cast<unsigned char>(a[i - 1])) ==
                              std::tolower(static_cast<unsigned char>(b[j - 1]));
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (same ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

std::string nearest(std::string_view word, const std::vector<std::string> &candidates) {
    std::string best;
    std::size_t best_d = std::max<std::size_t>(2, word.size() / 3) + 1;
    for (const auto &c : candidates) {
        const std::size_t d = edit_distance(word, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::string column_label(const std::string &qualifier, const std::string &name) {
    return qualifier.empty() ? name : qualifier + "." + name;
}

bool is_numeric(Kind k) { return k == Kind::Int || k == Kind::Decimal; }
bool is_boolish(Kind k) { return k == Kind::Bool || k == Kind::Null || k == Kind::Any; }

std::string kname(Kind k) { return std::string(kind_name(k)); }

Schema make_schema(std::vector<Column> cols, const char *context) {
    try {
        return Schema(std::move(cols));
    } catch (const SchemaError &e) {
        throw TypeCheckError(std::string(e.what()) + " (" + context + ")");
    }
}

struct Frame {
    const Schema *schema = nullptr;
    const Query *group = nullptr;  ///< set when the row is a GroupAggregate output
};
using Frames = std::vector<Frame>;

class Checker {
public:
    explicit Checker(const Catalog &catalog) : catalog_(catalog) {}

    void query(Query &q, const Frames &outer) {
        switch (q.op) {
            case Query::Op::Scan: scan(q, outer); return;
            case Query::Op::Rename:
                query(*q.inputs[0], outer);
                q.schema = q.input().schema.with_qualifier(q.alias);
                return;
            case Query::Op::Filter: {
                query(*q.inputs[0], outer);
                q.schema = q.input().schema;
                Frames f = with_front(Frame{&q.schema}, outer);
                expr(*q.condition, f);
                require_boolean(*q.condition, "WHERE");
                return;
            }
            case Query::Op::Join:
            case Query::Op::SemiJoin:
            case Query::Op::AntiJoin: {
                query(*q.inputs[0], outer);
                query(*q.inputs[1], outer);
                Schema both = make_joined(q.input(0).schema, q.input(1).schema);
                if (q.condition) {
                    Frames f = with_front(Frame{&both}, outer);
                    expr(*q.condition, f);
                    require_boolean(*q.condition, "join condition");
                }
                q.schema = q.op == Query::Op::Join ? std::move(both) : q.input(0).schema;
                return;
            }
            case Query::Op::GroupAggregate: group(q, outer); return;
            case Query::Op::Project: project(q, outer); return;
            case Query::Op::Distinct:
                query(*q.inputs[0], outer);
                q.schema = q.input().schema;
                return;
            case Query::Op::Union: {
                query(*q.inputs[0], outer);
                query(*q.inputs[1], outer);
                const Schema &l = q.input(0).schema;
                const Schema &r = q.input(1).schema;
                if (l.size() != r.size())
                    throw TypeCheckError("UNION operands have " + std::to_string(l.size()) + " and " +
                                         std::to_string(r.size()) + " columns");
                std::vector<Column> cols;
                for (std::size_t i = 0; i < l.size(); ++i) {
                    if (!comparable(l[i].kind, r[i].kind))
                        throw TypeCheckError("UNION column " + std::to_string(i + 1) + " mixes " + kname(l[i].kind) +
                                             " and " + kname(r[i].kind));
                    cols.push_back(Column{"", l[i].name, unify(l[i].kind, r[i].kind)});
                }
                q.schema = make_schema(std::move(cols), "UNION output");
                return;
            }
        }
    }

private:
    static Frames with_front(Frame f, const Frames &outer) {
        Frames out;
        out.reserve(outer.size() + 1);
        out.push_back(f);
        out.insert(out.end(), outer.begin(), outer.end());
        return out;
    }

    static Kind unify(Kind a, Kind b) {
        if (a == b) return a;
        if (a == Kind::Null) return b;
        if (b == Kind::Null) return a;
        if (a == Kind::Any || b == Kind::Any) return Kind::Any;
        return Kind::Decimal;
    }

    static Schema make_joined(const Schema &l, const Schema &r) {
        std::vector<Column> cols = l.columns();
        cols.insert(cols.end(), r.columns().begin(), r.columns().end());
        for (std::size_t i = 0; i < cols.size(); ++i)
            for (std::size_t j = i + 1; j < cols.size(); ++j)
                if (cols[i].qualifier == cols[j].qualifier && cols[i].name == cols[j].name)
                    throw TypeCheckError("relation alias '" + cols[i].qualifier +
                                         "' is used more than once in FROM; give each occurrence its own alias");
        return Schema(std::move(cols));
    }

    void scan(Query &q, const Frames &outer) {
        if (const Query *view = catalog_.view(q.relation)) {
            auto body = view->clone();
            const std::string alias = q.alias.empty() ? q.relation : q.alias;
            q.op = Query::Op::Rename;
            q.relation.clear();
            q.alias = alias;
            q.inputs.clear();
            q.inputs.push_back(std::move(body));
            query(*q.inputs[0], {});
            q.schema = q.input().schema.with_qualifier(alias);
            (void)outer;
            return;
        }
        const Schema *s = catalog_.relation(q.relation);
        if (!s) {
            std::string msg = "unknown relation '" + q.relation + "'";
            const std::string guess = nearest(q.relation, catalog_.names());
            if (!guess.empty()) msg += " (did you mean '" + guess + "'?)";
            throw TypeCheckError(msg);
        }
        q.schema = s->with_qualifier(q.alias.empty() ? q.relation : q.alias);
    }

    void group(Query &q, const Frames &outer) {
        query(*q.inputs[0], outer);
        const Schema &in = q.input().schema;
        Frames f = with_front(Frame{&in}, outer);
        std::vector<Column> cols;
        for (std::size_t i = 0; i < q.keys.size(); ++i) {
            Expr &k = *q.keys[i];
            if (contains_subquery(k)) throw TypeCheckError("subqueries are not allowed in GROUP BY");
            expr(k, f);
            Column c{"", "key" + std::to_string(i), k.kind};
            if (k.type == Expr::Type::Column) {
                c.qualifier = k.qualifier.empty() ? in[static_cast<std::size_t>(k.index)].qualifier : k.qualifier;
                c.name = k.name;
            }
            for (const auto &prev : cols)
                if (prev.qualifier == c.qualifier && prev.name == c.name) {
                    c.qualifier.clear();
                    c.name = "key" + std::to_string(i);
                }
            cols.push_back(std::move(c));
        }
        for (std::size_t j = 0; j < q.aggregates.size(); ++j) {
            Expr &a = *q.aggregates[j];
            if (a.type != Expr::Type::Aggregate) throw TypeCheckError("malformed aggregate list");
            for (auto &arg : a.args) {
                if (contains_subquery(*arg)) throw TypeCheckError("subqueries are not allowed inside aggregates");
                expr(*arg, f);
            }
            a.kind = aggregate_kind(a);
            cols.push_back(Column{"", "agg" + std::to_string(j), a.kind});
        }
        q.schema = make_schema(std::move(cols), "GROUP BY output");
        if (q.having) {
            Frames hf = with_front(Frame{&q.schema, &q}, outer);
            expr(*q.having, hf);
            require_boolean(*q.having, "HAVING");
        }
    }

    void project(Query &q, const Frames &outer) {
        query(*q.inputs[0], outer);
        const Query &in = q.input();
        if (q.star) {
            if (in.op == Query::Op::GroupAggregate) throw TypeCheckError("SELECT * cannot be used with GROUP BY");
            q.schema = in.schema;
            return;
        }
        const bool grouped = in.op == Query::Op::GroupAggregate;
        Frames f = with_front(Frame{&in.schema, grouped ? &in : nullptr}, outer);
        std::vector<Column> cols;
        for (std::size_t i = 0; i < q.exprs.size(); ++i) {
            Expr &e = *q.exprs[i];
            if (contains_subquery(e)) throw TypeCheckError("subqueries are not supported in the SELECT list");
            expr(e, f);
            std::string name = i < q.names.size() ? q.names[i] : "";
            if (name.empty()) {
                if (e.type == Expr::Type::Column) name = e.name;
                else if (e.type == Expr::Type::GroupKey && in.keys[e.slot]->type == Expr::Type::Column)
                    name = in.keys[e.slot]->name;
                else name = "col" + std::to_string(i + 1);
            }
            for (const auto &prev : cols)
                if (prev.name == name)
                    throw TypeCheckError("duplicate output column '" + name + "' in SELECT list; add an alias");
            cols.push_back(Column{"", name, e.kind});
        }
        q.schema = Schema(std::move(cols));
    }

    static bool contains_subquery(const Expr &e) {
        bool found = false;
        visit_expr(e, [&](const Expr &x) {
            found = found || x.type == Expr::Type::Exists || x.type == Expr::Type::InSubquery;
        });
        return found;
    }

    static Kind aggregate_kind(const Expr &a) {
        if (a.agg == AggFn::CountStar || a.agg == AggFn::Count) return Kind::Int;
        const Kind k = a.args.at(0)->kind;
        const std::string fn(agg_fn_name(a.agg));
        switch (a.agg) {
            case AggFn::Sum:
                if (k == Kind::Int || k == Kind::Null) return Kind::Int;
                if (k == Kind::Decimal) return Kind::Decimal;
                break;
            case AggFn::Avg:
                if (is_numeric(k) || k == Kind::Null) return Kind::Decimal;
                break;
            case AggFn::Min:
            case AggFn::Max:
                if (k != Kind::Any) return k;
                break;
            default: break;
        }
        throw TypeCheckError(fn + " requires a numeric argument, got " + kname(k));
    }

    static void require_boolean(const Expr &e, const char *where) {
        if (!is_boolish(e.kind)) throw TypeCheckError(std::string(where) + " must be a boolean condition, got " + kname(e.kind));
    }

    void resolve(Expr &e, const Frames &frames) {
        for (std::size_t d = 0; d < frames.size(); ++d) {
            const Frame &f = frames[d];
            if (f.group) {
                if (!find(f.group->input().schema, e).empty())
                    throw TypeCheckError("column '" + column_label(e.qualifier, e.name) +
                                         "' must appear in GROUP BY or inside an aggregate function");
                continue;
            }
            const auto hits = find(*f.schema, e);
            if (hits.size() > 1) {
                std::string msg = "ambiguous column '" + e.name + "' (candidates:";
                for (std::size_t h : hits) msg += " " + column_label((*f.schema)[h].qualifier, e.name);
                throw TypeCheckError(msg + ")");
            }
            if (hits.size() == 1) {
                e.depth = static_cast<int>(d);
                e.index = static_cast<int>(hits[0]);
                e.kind = (*f.schema)[hits[0]].kind;
                return;
            }
        }
        std::vector<std::string> candidates;
        bool qualifier_known = e.qualifier.empty();
        for (const Frame &f : frames) {
            const Schema &s = f.group ? f.group->input().schema : *f.schema;
            for (const Column &c : s) {
                if (c.qualifier == e.qualifier) qualifier_known = true;
                if (e.qualifier.empty() || c.qualifier == e.qualifier) candidates.push_back(c.name);
            }
        }
        if (!qualifier_known) throw TypeCheckError("unknown table or alias '" + e.qualifier + "'");
        std::string msg = "unknown column '" + column_label(e.qualifier, e.name) + "'";
        const std::string guess = nearest(e.name, candidates);
        if (!guess.empty()) msg += " (did you mean '" + column_label(e.qualifier, guess) + "'?)";
        throw TypeCheckError(msg);
    }

    static std::vector<std::size_t> find(const Schema &s, const Expr &e) {
        std::vector<std::size_t> hits;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i].name == e.name && (e.qualifier.empty() || s[i].qualifier == e.qualifier)) hits.push_back(i);
        return hits;
    }

    void expr(Expr &e, const Frames &frames) {
        switch (e.type) {
            case Expr::Type::Literal: e.kind = e.literal.kind(); return;
            case Expr::Type::Column: resolve(e, frames); return;
            case Expr::Type::GroupKey:
            case Expr::Type::AggRef: {
                const Frame &f = frames.front();
                if (!f.group) throw TypeCheckError("group reference outside an aggregated query");
                const std::size_t nk = f.group->keys.size();
                const std::size_t idx = e.type == Expr::Type::GroupKey ? e.slot : nk + e.slot;
                if ((e.type == Expr::Type::GroupKey && e.slot >= nk) || idx >= f.schema->size())
                    throw TypeCheckError("group reference out of range");
                e.depth = 0;
                e.index = static_cast<int>(idx);
                e.kind = (*f.schema)[idx].kind;
                return;
            }
            case Expr::Type::Unary: {
                expr(*e.args[0], frames);
                const Kind k = e.args[0]->kind;
                if (e.unary == UnaryOp::Not) {
                    if (!is_boolish(k)) throw TypeCheckError("NOT expects a boolean operand, got " + kname(k));
                    e.kind = Kind::Bool;
                } else {
                    if (!is_numeric(k) && k != Kind::Null)
                        throw TypeCheckError("unary minus expects a number, got " + kname(k));
                    e.kind = k;
                }
                return;
            }
            case Expr::Type::Binary: binary(e, frames); return;
            case Expr::Type::Extract: {
                expr(*e.args[0], frames);
                const Kind k = e.args[0]->kind;
                if (k != Kind::Timestamp && k != Kind::Null && k != Kind::Any)
                    throw TypeCheckError("EXTRACT expects a timestamp, got " + kname(k));
                e.dynamic = k == Kind::Any;
                e.kind = Kind::Int;
                return;
            }
            case Expr::Type::Aggregate:
                throw TypeCheckError("aggregate function " + std::string(agg_fn_name(e.agg)) +
                                     " used outside an aggregated SELECT or HAVING");
            case Expr::Type::Exists:
                query(*e.subquery, frames);
                e.kind = Kind::Bool;
                return;
            case Expr::Type::InSubquery: {
                expr(*e.args[0], frames);
                query(*e.subquery, frames);
                const Schema &s = e.subquery->schema;
                if (s.size() != 1)
                    throw TypeCheckError("IN subquery must return exactly one column, got " + std::to_string(s.size()));
                if (!comparable(e.args[0]->kind, s[0].kind))
                    throw TypeCheckError("IN compares " + kname(e.args[0]->kind) + " with " + kname(s[0].kind));
                e.dynamic = e.args[0]->kind == Kind::Any || s[0].kind == Kind::Any;
                e.kind = Kind::Bool;
                return;
            }
        }
    }

    void binary(Expr &e, const Frames &frames) {
        expr(*e.args[0], frames);
        expr(*e.args[1], frames);
        const Kind a = e.args[0]->kind;
        const Kind b = e.args[1]->kind;
        const std::string op(binary_op_symbol(e.binary));
        if (e.binary == BinaryOp::And || e.binary == BinaryOp::Or) {
            if (!is_boolish(a) || !is_boolish(b))
                throw TypeCheckError(op + " expects boolean operands, got " + kname(a) + " and " + kname(b));
            e.kind = Kind::Bool;
            return;
        }
        if (is_comparison(e.binary)) {
            if (!comparable(a, b)) throw TypeCheckError("cannot compare " + kname(a) + " with " + kname(b));
            e.dynamic = a == Kind::Any || b == Kind::Any;
            e.kind = Kind::Bool;
            return;
        }
        if (a == Kind::Any || b == Kind::Any)
            throw TypeCheckError("arithmetic '" + op + "' on an untyped attribute value is not supported");
        if (e.binary == BinaryOp::Sub && (a == Kind::Timestamp || b == Kind::Timestamp) &&
            (a == Kind::Timestamp || a == Kind::Null) && (b == Kind::Timestamp || b == Kind::Null)) {
            e.kind = Kind::Decimal;  // minutes
            return;
        }
        const bool na = is_numeric(a) || a == Kind::Null;
        const bool nb = is_numeric(b) || b == Kind::Null;
        if (!na || !nb) throw TypeCheckError("operator " + op + " is not defined for " + kname(a) + " and " + kname(b));
        if (e.binary == BinaryOp::Div || a == Kind::Decimal || b == Kind::Decimal) e.kind = Kind::Decimal;
        else if (a == Kind::Int || b == Kind::Int) e.kind = Kind::Int;
        else e.kind = Kind::Null;
    }

    const Catalog &catalog_;
};

}  // namespace

QueryPtr typecheck(const Query &q, const Catalog &catalog) {
    auto out = q.clone();
    Checker(catalog).query(*out, {});
    return out;
}

}  // namespace iscm::query
