#include "weave/sql/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace weave::sql {

namespace {

enum class Tok { Ident, Int, String, Symbol, Annotation, End };

struct Token {
    Tok kind;
    std::string text;
    SourcePos pos;
};

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

const std::set<std::string> &reserved_words()
{
    static const std::set<std::string> words = {
        "select", "from", "join",  "inner", "on",      "where",  "group", "by",    "having", "and",
        "or",     "not",  "in",    "as",    "create",  "table",  "view",  "true",  "false",  "primary",
        "key",    "null", "limit", "order", "distinct", "left",  "right", "outer", "full",   "union",
        "cross",  "case", "when",  "like",  "between", "exists", "is",
    };
    return words;
}

const std::set<std::string> &unsupported_words()
{
    static const std::set<std::string> words = {"limit", "order",  "distinct", "left", "right", "outer", "full",
                                                "union", "cross", "case",     "like", "between", "exists", "is"};
    return words;
}

class Lexer {
public:
    Lexer(std::string_view text, const std::string &file) : text_(text), file_(file) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        while (true) {
            skip_space();
            if (at_end()) {
                out.push_back({Tok::End, "", here()});
                return out;
            }
            char c = peek();
            SourcePos pos = here();
            if (c == '-' && peek(1) == '-') {
                lex_line_comment(out, pos);
            } else if (c == '/' && peek(1) == '*') {
                advance(2);
                while (!at_end() && !(peek() == '*' && peek(1) == '/'))
                    advance();
                if (at_end())
                    throw ParseError(file_, pos, "unterminated block comment");
                advance(2);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::string s;
                while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
                    s += advance();
                out.push_back({Tok::Ident, s, pos});
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                std::string s;
                while (!at_end() && std::isdigit(static_cast<unsigned char>(peek())))
                    s += advance();
                out.push_back({Tok::Int, s, pos});
            } else if (c == '\'') {
                advance();
                std::string s;
                while (true) {
                    if (at_end())
                        throw ParseError(file_, pos, "unterminated string literal");
                    char d = advance();
                    if (d == '\'') {
                        if (peek() == '\'') {
                            s += advance();
                            continue;
                        }
                        break;
                    }
                    s += d;
                }
                out.push_back({Tok::String, s, pos});
            } else {
                static const char *two[] = {"<=", ">=", "!=", "<>"};
                std::string sym;
                for (const char *t : two)
                    if (c == t[0] && peek(1) == t[1])
                        sym = t;
                if (sym.empty()) {
                    if (std::string_view("(),;.*=<>+-").find(c) == std::string_view::npos)
                        throw ParseError(file_, pos, std::string("unexpected character '") + c + "'");
                    sym = std::string(1, c);
                }
                advance(sym.size());
                if (sym == "<>")
                    sym = "!=";
                out.push_back({Tok::Symbol, sym, pos});
            }
        }
    }

private:
    void lex_line_comment(std::vector<Token> &out, SourcePos pos)
    {
        advance(2);
        std::string body;
        while (!at_end() && peek() != '\n')
            body += advance();
        auto first = body.find_first_not_of(" \t");
        if (first != std::string::npos && body[first] == '@')
            out.push_back({Tok::Annotation, body.substr(first + 1), SourcePos{pos.line, pos.col}});
    }

    void skip_space()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek())))
            advance();
    }

    bool at_end() const { return i_ >= text_.size(); }
    char peek(std::size_t k = 0) const { return i_ + k < text_.size() ? text_[i_ + k] : '\0'; }
    SourcePos here() const { return {line_, col_}; }

    char advance()
    {
        char c = text_[i_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void advance(std::size_t n)
    {
        for (std::size_t k = 0; k < n; ++k)
            advance();
    }

    std::string_view text_;
    const std::string &file_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    Parser(std::vector<Token> toks, const std::string &file) : toks_(std::move(toks)), file_(file) {}

    Program program()
    {
        Program prog;
        while (true) {
            std::vector<Annotation> annotations;
            while (cur().kind == Tok::Annotation)
                annotations.push_back(annotation(next()));
            // Stray annotations inside statements are plain comments.
            if (cur().kind == Tok::End) {
                if (!annotations.empty())
                    fail(annotations.back().pos, "annotation is not followed by a statement");
                return prog;
            }
            if (accept_symbol(";"))
                continue;
            statement(prog, annotations);
        }
    }

private:
    Annotation annotation(const Token &t)
    {
        std::string body = t.text;
        std::size_t i = 0;
        while (i < body.size() && (std::isalnum(static_cast<unsigned char>(body[i])) || body[i] == '_'))
            ++i;
        std::string name = body.substr(0, i);
        std::string rest = body.substr(i);
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        rest = trim(rest);
        Annotation a{AnnotationKind::HardConstraint, {}, t.pos};
        if (name == "hard_constraint" || name == "soft_constraint") {
            a.kind = name == "hard_constraint" ? AnnotationKind::HardConstraint : AnnotationKind::SoftConstraint;
            if (!rest.empty())
                fail(t.pos, "@" + name + " takes no arguments");
        } else if (name == "variable_columns") {
            a.kind = AnnotationKind::VariableColumns;
            if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')')
                fail(t.pos, "@variable_columns expects a parenthesized column list");
            std::stringstream ss(rest.substr(1, rest.size() - 2));
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (item.empty())
                    fail(t.pos, "@variable_columns has an empty column name");
                a.columns.push_back(item);
            }
            if (a.columns.empty())
                fail(t.pos, "@variable_columns lists no columns");
        } else {
            fail(t.pos, "unknown annotation @" + name);
        }
        return a;
    }

    void statement(Program &prog, const std::vector<Annotation> &annotations)
    {
        SourcePos start = cur().pos;
        expect_keyword("create");
        if (accept_keyword("table")) {
            for (const auto &a : annotations)
                if (a.kind != AnnotationKind::VariableColumns)
                    fail(a.pos, "constraint annotation on a create table statement");
            if (annotations.size() > 1)
                fail(annotations[1].pos, "more than one @variable_columns annotation for one table");
            TableDef def = create_table();
            if (!annotations.empty()) {
                for (const auto &col : annotations[0].columns) {
                    auto idx = def.column_index(col);
                    if (!idx)
                        fail(annotations[0].pos, "@variable_columns names unknown column " + col);
                    def.columns[*idx].is_variable = true;
                }
            }
            try {
                validate(def);
            } catch (const SchemaError &e) {
                fail(start, e.what());
            }
            for (const auto &t : prog.tables)
                if (t.name == def.name)
                    fail(start, "duplicate table " + def.name);
            prog.tables.push_back(std::move(def));
        } else if (accept_keyword("view")) {
            ViewDef view;
            view.pos = start;
            for (const auto &a : annotations) {
                if (a.kind == AnnotationKind::VariableColumns)
                    fail(a.pos, "@variable_columns on a create view statement");
                ViewClass c = a.kind == AnnotationKind::HardConstraint ? ViewClass::Hard : ViewClass::Soft;
                if (view.cls != ViewClass::Unclassified && view.cls != c)
                    fail(a.pos, "view annotated both hard and soft");
                view.cls = c;
            }
            view.name = identifier();
            expect_keyword("as");
            view.query = query();
            for (const auto &v : prog.views)
                if (v.name == view.name)
                    fail(start, "duplicate view " + view.name);
            prog.views.push_back(std::move(view));
        } else {
            fail(cur().pos, "expected 'table' or 'view' after 'create'");
        }
        if (cur().kind != Tok::End)
            expect_symbol(";");
    }

    TableDef create_table()
    {
        TableDef def;
        def.name = identifier();
        expect_symbol("(");
        do {
            if (accept_keyword("primary")) {
                expect_keyword("key");
                expect_symbol("(");
                std::string col = identifier();
                expect_symbol(")");
                if (def.primary_key)
                    fail(cur().pos, "more than one primary key");
                def.primary_key = col;
                continue;
            }
            ColumnDef col;
            col.name = identifier();
            col.dtype = column_type();
            while (true) {
                if (accept_keyword("not")) {
                    expect_keyword("null");
                } else if (accept_keyword("null")) {
                } else if (accept_keyword("primary")) {
                    expect_keyword("key");
                    if (def.primary_key)
                        fail(cur().pos, "more than one primary key");
                    def.primary_key = col.name;
                } else {
                    break;
                }
            }
            def.columns.push_back(col);
        } while (accept_symbol(","));
        expect_symbol(")");
        return def;
    }

    DType column_type()
    {
        const Token &t = cur();
        if (t.kind != Tok::Ident)
            fail(t.pos, "expected a column type");
        std::string name = lower(t.text);
        next();
        if (name == "varchar" || name == "char") {
            expect_symbol("(");
            if (cur().kind != Tok::Int)
                fail(cur().pos, "expected a length");
            next();
            expect_symbol(")");
            return DType::Text;
        }
        if (name == "text")
            return DType::Text;
        if (name == "integer" || name == "int" || name == "bigint")
            return DType::Integer;
        if (name == "boolean" || name == "bool")
            return DType::Boolean;
        fail(t.pos, "unsupported column type " + t.text);
    }

    QueryPtr query()
    {
        auto q = std::make_shared<Query>();
        expect_keyword("select");
        if (accept_symbol("*")) {
            q->star = true;
        } else {
            do {
                SelectItem item;
                item.expr = expr();
                if (accept_keyword("as"))
                    item.alias = identifier();
                else if (cur().kind == Tok::Ident && !is_reserved(cur().text))
                    item.alias = identifier();
                q->items.push_back(std::move(item));
            } while (accept_symbol(","));
        }
        expect_keyword("from");
        q->from = table_ref();
        while (true) {
            if (accept_keyword("inner")) {
                expect_keyword("join");
            } else if (!accept_keyword("join")) {
                break;
            }
            Join j;
            j.table = table_ref();
            expect_keyword("on");
            j.on = expr();
            q->joins.push_back(std::move(j));
        }
        if (accept_keyword("where"))
            q->where = expr();
        if (accept_keyword("group")) {
            expect_keyword("by");
            do {
                q->group_by.push_back(expr());
            } while (accept_symbol(","));
        }
        if (accept_keyword("having"))
            q->having = expr();
        if (cur().kind == Tok::Ident && unsupported_words().count(lower(cur().text)))
            fail(cur().pos, "unsupported clause '" + cur().text + "'");
        return q;
    }

    TableRef table_ref()
    {
        TableRef r;
        if (cur().kind == Tok::Ident && unsupported_words().count(lower(cur().text)))
            fail(cur().pos, "unsupported construct '" + cur().text + "'");
        r.table = identifier();
        if (accept_keyword("as"))
            r.alias = identifier();
        else if (cur().kind == Tok::Ident && !is_reserved(cur().text))
            r.alias = identifier();
        return r;
    }

    ExprPtr expr() { return or_expr(); }

    ExprPtr or_expr()
    {
        auto lhs = and_expr();
        while (cur_is_keyword("or")) {
            SourcePos p = next().pos;
            lhs = make_expr(Binary{BinOp::Or, lhs, and_expr()}, p);
        }
        return lhs;
    }

    ExprPtr and_expr()
    {
        auto lhs = not_expr();
        while (cur_is_keyword("and")) {
            SourcePos p = next().pos;
            lhs = make_expr(Binary{BinOp::And, lhs, not_expr()}, p);
        }
        return lhs;
    }

    ExprPtr not_expr()
    {
        if (cur_is_keyword("not")) {
            SourcePos p = next().pos;
            return make_expr(Unary{UnOp::Not, not_expr()}, p);
        }
        return comparison();
    }

    ExprPtr comparison()
    {
        auto lhs = additive();
        SourcePos p = cur().pos;
        if (cur_is_keyword("not") && peek_is_keyword(1, "in")) {
            next();
            next();
            return in_tail(lhs, true, p);
        }
        if (accept_keyword("in"))
            return in_tail(lhs, false, p);
        static const std::pair<const char *, BinOp> ops[] = {{"=", BinOp::Eq},  {"!=", BinOp::Ne}, {"<=", BinOp::Le},
                                                             {">=", BinOp::Ge}, {"<", BinOp::Lt},  {">", BinOp::Gt}};
        for (const auto &[sym, op] : ops) {
            if (accept_symbol(sym))
                return make_expr(Binary{op, lhs, additive()}, p);
        }
        return lhs;
    }

    ExprPtr in_tail(ExprPtr lhs, bool negated, SourcePos p)
    {
        expect_symbol("(");
        if (!cur_is_keyword("select"))
            fail(cur().pos, "IN requires a subquery");
        auto q = query();
        expect_symbol(")");
        return make_expr(InSubquery{std::move(lhs), std::move(q), negated}, p);
    }

    ExprPtr additive()
    {
        auto lhs = multiplicative();
        while (true) {
            SourcePos p = cur().pos;
            if (accept_symbol("+"))
                lhs = make_expr(Binary{BinOp::Add, lhs, multiplicative()}, p);
            else if (accept_symbol("-"))
                lhs = make_expr(Binary{BinOp::Sub, lhs, multiplicative()}, p);
            else
                return lhs;
        }
    }

    ExprPtr multiplicative()
    {
        auto lhs = unary();
        while (true) {
            SourcePos p = cur().pos;
            if (accept_symbol("*"))
                lhs = make_expr(Binary{BinOp::Mul, lhs, unary()}, p);
            else if (cur().kind == Tok::Symbol && cur().text == "/")
                fail(p, "division is not supported");
            else
                return lhs;
        }
    }

    ExprPtr unary()
    {
        SourcePos p = cur().pos;
        if (accept_symbol("-")) {
            if (cur().kind == Tok::Int)
                return integer_literal(true);
            return make_expr(Unary{UnOp::Neg, unary()}, p);
        }
        return primary();
    }

    ExprPtr integer_literal(bool negative)
    {
        const Token &t = next();
        std::int64_t v = 0;
        std::string digits = (negative ? "-" : "") + t.text;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (ec != std::errc() || ptr != digits.data() + digits.size())
            fail(t.pos, "integer literal out of range");
        return make_expr(Literal{Value{v}}, t.pos);
    }

    ExprPtr primary()
    {
        const Token &t = cur();
        switch (t.kind) {
        case Tok::Int: return integer_literal(false);
        case Tok::String: next(); return make_expr(Literal{Value{t.text}}, t.pos);
        case Tok::Symbol:
            if (t.text == "(") {
                next();
                if (cur_is_keyword("select")) {
                    auto q = query();
                    expect_symbol(")");
                    return make_expr(ScalarSubquery{std::move(q)}, t.pos);
                }
                auto e = expr();
                expect_symbol(")");
                return e;
            }
            fail(t.pos, "unexpected '" + t.text + "'");
        case Tok::Ident: break;
        default: fail(t.pos, "unexpected end of input");
        }
        std::string word = lower(t.text);
        if (word == "true" || word == "false") {
            next();
            return make_expr(Literal{Value{word == "true"}}, t.pos);
        }
        if (word == "null")
            fail(t.pos, "NULL is not supported");
        if (is_reserved(t.text))
            fail(t.pos, "unexpected keyword '" + t.text + "'");
        if (peek_is_symbol(1, "(")) {
            static const std::pair<const char *, AggFn> aggs[] = {{"sum", AggFn::Sum},
                                                                 {"count", AggFn::Count},
                                                                 {"min", AggFn::Min},
                                                                 {"max", AggFn::Max},
                                                                 {"all_different", AggFn::AllDifferent}};
            for (const auto &[name, fn] : aggs) {
                if (word == name) {
                    next();
                    next();
                    ExprPtr arg;
                    if (fn == AggFn::Count && accept_symbol("*")) {
                    } else {
                        arg = expr();
                    }
                    expect_symbol(")");
                    return make_expr(Aggregate{fn, arg}, t.pos);
                }
            }
            fail(t.pos, "unknown function " + t.text);
        }
        next();
        if (accept_symbol(".")) {
            std::string col = identifier();
            return make_expr(ColumnRef{t.text, col}, t.pos);
        }
        return make_expr(ColumnRef{"", t.text}, t.pos);
    }

    // token helpers

    const Token &cur() const { return toks_[pos_]; }
    const Token &next()
    {
        const Token &t = toks_[pos_];
        if (pos_ + 1 < toks_.size())
            ++pos_;
        return t;
    }

    // Annotation comments that are not at a statement boundary are ignored.
    void skip_inner_annotations()
    {
        while (toks_[pos_].kind == Tok::Annotation)
            ++pos_;
    }

    bool is_reserved(const std::string &s) const { return reserved_words().count(lower(s)) > 0; }

    bool cur_is_keyword(const char *kw)
    {
        skip_inner_annotations();
        return cur().kind == Tok::Ident && lower(cur().text) == kw;
    }
    bool peek_is_keyword(std::size_t k, const char *kw) const
    {
        std::size_t i = std::min(pos_ + k, toks_.size() - 1);
        return toks_[i].kind == Tok::Ident && lower(toks_[i].text) == kw;
    }
    bool peek_is_symbol(std::size_t k, const char *sym) const
    {
        std::size_t i = std::min(pos_ + k, toks_.size() - 1);
        return toks_[i].kind == Tok::Symbol && toks_[i].text == sym;
    }

    bool accept_keyword(const char *kw)
    {
        if (cur_is_keyword(kw)) {
            next();
            return true;
        }
        return false;
    }
    void expect_keyword(const char *kw)
    {
        if (!accept_keyword(kw))
            fail(cur().pos, std::string("expected '") + kw + "' but found " + describe(cur()));
    }
    bool accept_symbol(const char *sym)
    {
        skip_inner_annotations();
        if (cur().kind == Tok::Symbol && cur().text == sym) {
            next();
            return true;
        }
        return false;
    }
    void expect_symbol(const char *sym)
    {
        if (!accept_symbol(sym)) {
            if (cur().kind == Tok::Ident && unsupported_words().count(lower(cur().text)))
                fail(cur().pos, "unsupported clause '" + cur().text + "'");
            fail(cur().pos, std::string("expected '") + sym + "' but found " + describe(cur()));
        }
    }
    std::string identifier()
    {
        skip_inner_annotations();
        const Token &t = cur();
        if (t.kind != Tok::Ident || is_reserved(t.text))
            fail(t.pos, "expected an identifier but found " + describe(t));
        next();
        return t.text;
    }

    static std::string describe(const Token &t)
    {
        switch (t.kind) {
        case Tok::End: return "end of input";
        case Tok::String: return "string '" + t.text + "'";
        default: return "'" + t.text + "'";
        }
    }

    [[noreturn]] void fail(SourcePos p, const std::string &msg) const { throw ParseError(file_, p, msg); }

    std::vector<Token> toks_;
    const std::string &file_;
    std::size_t pos_ = 0;
};

std::string quote(const std::string &s)
{
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += '\'';
        out += c;
    }
    return out + "'";
}

int precedence(const Expr &e)
{
    if (const auto *b = std::get_if<Binary>(&e.node)) {
        switch (b->op) {
        case BinOp::Or: return 1;
        case BinOp::And: return 2;
        case BinOp::Add:
        case BinOp::Sub: return 5;
        case BinOp::Mul: return 6;
        default: return 4;
        }
    }
    if (const auto *u = std::get_if<Unary>(&e.node))
        return u->op == UnOp::Not ? 3 : 7;
    if (std::holds_alternative<InSubquery>(e.node))
        return 4;
    return 8;
}

std::string wrap(const Expr &child, int parent_prec, bool right_assoc_guard)
{
    int p = precedence(child);
    bool paren = p < parent_prec || (right_assoc_guard && p == parent_prec);
    std::string s = to_sql(child);
    return paren ? "(" + s + ")" : s;
}

} // namespace

Program parse_program(std::string_view text, const std::string &file)
{
    Lexer lexer(text, file);
    Parser parser(lexer.run(), file);
    return parser.program();
}

std::string to_sql(const Expr &e)
{
    struct Visitor {
        const Expr &self;
        std::string operator()(const ColumnRef &c) const
        {
            return c.qualifier.empty() ? c.column : c.qualifier + "." + c.column;
        }
        std::string operator()(const Literal &l) const
        {
            if (const auto *s = std::get_if<std::string>(&l.value))
                return quote(*s);
            return to_string(l.value);
        }
        std::string operator()(const Unary &u) const
        {
            int p = precedence(self);
            return (u.op == UnOp::Not ? "not " : "-") + wrap(*u.operand, p, false);
        }
        std::string operator()(const Binary &b) const
        {
            int p = precedence(self);
            // Comparisons do not chain; parenthesize a comparison operand.
            bool cmp = is_comparison(b.op);
            std::string l = wrap(*b.lhs, cmp ? p + 1 : p, false);
            std::string r = wrap(*b.rhs, cmp ? p + 1 : p, true);
            return l + " " + std::string(op_text(b.op)) + " " + r;
        }
        std::string operator()(const Aggregate &a) const
        {
            return std::string(agg_name(a.fn)) + "(" + (a.arg ? to_sql(*a.arg) : "*") + ")";
        }
        std::string operator()(const InSubquery &in) const
        {
            return wrap(*in.lhs, 5, false) + (in.negated ? " not in (" : " in (") + to_sql(*in.query) + ")";
        }
        std::string operator()(const ScalarSubquery &s) const { return "(" + to_sql(*s.query) + ")"; }
    };
    return std::visit(Visitor{e}, e.node);
}

std::string to_sql(const Query &q)
{
    std::string out = "select ";
    if (q.star) {
        out += "*";
    } else {
        for (std::size_t i = 0; i < q.items.size(); ++i) {
            if (i)
                out += ", ";
            out += to_sql(*q.items[i].expr);
            if (!q.items[i].alias.empty())
                out += " as " + q.items[i].alias;
        }
    }
    auto ref = [](const TableRef &r) { return r.alias.empty() ? r.table : r.table + " as " + r.alias; };
    out += " from " + ref(q.from);
    for (const auto &j : q.joins)
        out += " join " + ref(j.table) + " on " + to_sql(*j.on);
    if (q.where)
        out += " where " + to_sql(*q.where);
    if (!q.group_by.empty()) {
        out += " group by ";
        for (std::size_t i = 0; i < q.group_by.size(); ++i)
            out += (i ? ", " : "") + to_sql(*q.group_by[i]);
    }
    if (q.having)
        out += " having " + to_sql(*q.having);
    return out;
}

std::string to_sql(const Program &p)
{
    std::string out;
    for (const auto &t : p.tables) {
        std::vector<std::string> vars;
        for (const auto &c : t.columns)
            if (c.is_variable)
                vars.push_back(c.name);
        if (!vars.empty()) {
            out += "-- @variable_columns (";
            for (std::size_t i = 0; i < vars.size(); ++i)
                out += (i ? ", " : "") + vars[i];
            out += ")\n";
        }
        out += "create table " + t.name + " (\n";
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            const auto &c = t.columns[i];
            out += "  " + c.name + " ";
            out += c.dtype == DType::Text ? "varchar(100)" : c.dtype == DType::Integer ? "integer" : "boolean";
            if (t.primary_key == c.name)
                out += " primary key";
            out += i + 1 < t.columns.size() ? ",\n" : "\n";
        }
        out += ");\n\n";
    }
    for (const auto &v : p.views) {
        if (v.cls == ViewClass::Hard)
            out += "-- @hard_constraint\n";
        else if (v.cls == ViewClass::Soft)
            out += "-- @soft_constraint\n";
        out += "create view " + v.name + " as\n" + to_sql(*v.query) + ";\n\n";
    }
    return out;
}

} // namespace weave::sql
