#include "fixtures.hpp"
#include "weave/sql/classify.hpp"
#include "weave/sql/parser.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace weave::sql {
namespace {

using weave::testing::kLoadBalancing;
using weave::testing::kNodeAffinity;
using weave::testing::kNodePredicates;
using weave::testing::kPodSchema;

std::string program_text(std::initializer_list<const char *> parts)
{
    std::string s;
    for (const char *p : parts)
        s += p;
    return s;
}

TEST(Parser, PodSchemaAnnotation)
{
    Program p = parse_program(kPodSchema);
    ASSERT_EQ(p.tables.size(), 4u);
    const TableDef &pod = p.tables[0];
    EXPECT_EQ(pod.name, "pending_pod");
    EXPECT_EQ(pod.primary_key, "pod_name");
    EXPECT_TRUE(pod.column("node_name").is_variable);
    EXPECT_FALSE(pod.column("cpu_request").is_variable);
    EXPECT_EQ(pod.column("cpu_request").dtype, DType::Integer);
    EXPECT_EQ(pod.column("has_requested_node_affinity").dtype, DType::Boolean);
    EXPECT_FALSE(p.tables[1].has_variable_columns());
}

TEST(Parser, HardConstraintFigure)
{
    Program p = parse_program(program_text({kPodSchema, kNodePredicates}));
    ASSERT_EQ(p.views.size(), 1u);
    const ViewDef &v = p.views[0];
    EXPECT_EQ(v.name, "constraint_node_predicates");
    EXPECT_EQ(v.cls, ViewClass::Hard);
    EXPECT_TRUE(v.query->star);
    EXPECT_EQ(v.query->joins.size(), 1u);
    EXPECT_EQ(conjuncts(v.query->where).size(), 4u);
}

TEST(Parser, LoadBalancingFigure)
{
    ClassifiedProgram c = classify_views(parse_program(program_text({kPodSchema, kLoadBalancing})));
    ASSERT_EQ(c.views.size(), 2u);
    EXPECT_EQ(c.find_view("spare_capacity_per_node")->cls, ViewClass::Auxiliary);
    EXPECT_EQ(c.find_view("constraint_load_balance_cpu")->cls, ViewClass::Soft);
    // Dependencies come first.
    EXPECT_EQ(c.views[c.order[0]].name, "spare_capacity_per_node");
}

TEST(Parser, RejectsLimit)
{
    try {
        parse_program("create table t (a integer);\ncreate view v as select * from t limit 5;", "policy.sql");
        FAIL() << "expected a syntax error";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.pos().line, 2);
        EXPECT_EQ(std::string(e.what()).rfind("policy.sql:2:", 0), 0u) << e.what();
        EXPECT_NE(std::string(e.what()).find("limit"), std::string::npos);
    }
}

TEST(Parser, AnnotationErrors)
{
    EXPECT_THROW(parse_program("-- @frobnicate\ncreate table t (a integer);"), ParseError);
    EXPECT_THROW(parse_program("-- @hard_constraint\ncreate table t (a integer);"), ParseError);
    EXPECT_THROW(parse_program("create table t (a integer);\n-- @variable_columns (a)\ncreate view v as select a from t;"),
                 ParseError);
    EXPECT_THROW(parse_program("-- @variable_columns (zzz)\ncreate table t (a integer);"), ParseError);
    EXPECT_THROW(parse_program("-- @variable_columns (b)\ncreate table t (a integer, b boolean);"), ParseError);
    EXPECT_THROW(parse_program("-- @variable_columns (a)\n-- @variable_columns (a)\ncreate table t (a integer);"),
                 ParseError);
}

TEST(Parser, OrdinaryCommentsIgnored)
{
    Program p = parse_program("-- a table\ncreate table t (a integer); -- trailing\n/* block */");
    EXPECT_EQ(p.tables.size(), 1u);
}

TEST(Parser, KeywordsCaseInsensitive)
{
    Program p = parse_program("CREATE TABLE T (A INTEGER);\nCREATE VIEW V AS SELECT T.A FROM T WHERE T.A > 1;");
    EXPECT_EQ(p.tables[0].name, "T");
    EXPECT_EQ(p.views[0].name, "V");
}

TEST(Parser, UnsupportedSyntax)
{
    const char *table = "create table t (a integer, b integer);\n";
    for (const char *q : {"create view v as select distinct a from t;", "create view v as select a from t order by a;",
                          "create view v as select a from t left join t as u on t.a = u.a;",
                          "create view v as select a / 2 from t;", "create view v as select a from t where a is null;"}) {
        EXPECT_THROW(parse_program(std::string(table) + q), ParseError) << q;
    }
}

// Random expression/query generator for the print/parse fixpoint property.
class RandomSql {
public:
    explicit RandomSql(unsigned seed) : rng_(seed) {}

    ExprPtr boolean(int depth)
    {
        int k = pick(depth > 0 ? 6 : 2);
        switch (k) {
        case 0: return make_expr(Binary{cmp(), integer(depth - 1), integer(depth - 1)});
        case 1: return make_expr(Binary{BinOp::Eq, make_expr(ColumnRef{"t", "s"}), make_expr(Literal{Value{word()}})});
        case 2: return make_expr(Binary{BinOp::And, boolean(depth - 1), boolean(depth - 1)});
        case 3: return make_expr(Binary{BinOp::Or, boolean(depth - 1), boolean(depth - 1)});
        case 4: return make_expr(Unary{UnOp::Not, boolean(depth - 1)});
        default: {
            auto sub = std::make_shared<Query>();
            sub->items.push_back({make_expr(ColumnRef{"u", "a"}), ""});
            sub->from = {"t", "u"};
            if (pick(2))
                sub->where = make_expr(Binary{BinOp::Eq, make_expr(ColumnRef{"u", "b"}), make_expr(ColumnRef{"t", "b"})});
            return make_expr(InSubquery{integer(0), sub, pick(2) == 1});
        }
        }
    }

    ExprPtr integer(int depth)
    {
        int k = pick(depth > 0 ? 5 : 2);
        switch (k) {
        case 0: return make_expr(ColumnRef{"t", pick(2) ? "a" : "b"});
        case 1: return make_expr(Literal{Value{static_cast<std::int64_t>(pick(41)) - 20}});
        case 2: return make_expr(Binary{BinOp::Add, integer(depth - 1), integer(depth - 1)});
        case 3: return make_expr(Binary{BinOp::Sub, integer(depth - 1), integer(depth - 1)});
        default: return make_expr(Binary{BinOp::Mul, integer(depth - 1), integer(depth - 1)});
        }
    }

    Program program()
    {
        Program p = parse_program("create table t (a integer, b integer, s varchar(10));");
        auto q = std::make_shared<Query>();
        q->from = {"t", ""};
        if (pick(2)) {
            q->star = true;
        } else {
            q->items.push_back({make_expr(ColumnRef{"t", "a"}), pick(2) ? "x" : ""});
            q->items.push_back({integer(2), "y"});
        }
        q->where = boolean(3);
        p.views.push_back(ViewDef{"v", q, pick(2) ? ViewClass::Hard : ViewClass::Unclassified, {}});
        return p;
    }

private:
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
    BinOp cmp()
    {
        static const BinOp ops[] = {BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge};
        return ops[pick(6)];
    }
    std::string word() { return std::string(1, static_cast<char>('a' + pick(3))) + (pick(2) ? "'q" : ""); }

    std::mt19937 rng_;
};

TEST(Parser, PrintParseFixpoint)
{
    for (unsigned seed = 0; seed < 300; ++seed) {
        RandomSql gen(seed);
        Program original = gen.program();
        std::string text = to_sql(original);
        Program reparsed = parse_program(text);
        ASSERT_TRUE(equal(original, reparsed)) << "seed " << seed << "\n" << text << "\n" << to_sql(reparsed);
        ASSERT_EQ(to_sql(reparsed), text);
    }
}

TEST(Parser, FigureRoundTrip)
{
    Program p = parse_program(program_text({kPodSchema, kNodePredicates, kLoadBalancing, kNodeAffinity}));
    Program again = parse_program(to_sql(p));
    EXPECT_TRUE(equal(p, again));
}

TEST(Classify, InputAndHardViews)
{
    auto c = classify_views(parse_program(program_text({kPodSchema, kNodeAffinity, kNodePredicates})));
    EXPECT_EQ(c.find_view("candidate_nodes_for_pods")->cls, ViewClass::Input);
    EXPECT_EQ(c.find_view("constraint_node_affinity")->cls, ViewClass::Hard);
    EXPECT_EQ(c.find_view("constraint_node_predicates")->cls, ViewClass::Hard);
}

TEST(Classify, CycleRejected)
{
    const char *src = "create table t (a integer);\n"
                      "create view v1 as select v2.a from v2;\n"
                      "create view v2 as select v1.a from v1;";
    try {
        classify_views(parse_program(src));
        FAIL();
    } catch (const SchemaError &e) {
        EXPECT_NE(std::string(e.what()).find("cycle"), std::string::npos);
    }
}

TEST(Classify, UnannotatedVariableViewRejected)
{
    std::string src = std::string(kPodSchema) +
                      "create view dead as select pending_pod.pod_name from pending_pod "
                      "where pending_pod.node_name = 'n1';";
    EXPECT_THROW(classify_views(parse_program(src)), SchemaError);
}

TEST(Classify, SoftViewMustBeScalar)
{
    std::string src = std::string(kPodSchema) +
                      "-- @soft_constraint\ncreate view s as select pending_pod.cpu_request from pending_pod;";
    EXPECT_THROW(classify_views(parse_program(src)), SchemaError);
    src = std::string(kPodSchema) + "-- @soft_constraint\ncreate view s as select count(*) from pending_pod "
                                    "group by pending_pod.status;";
    EXPECT_THROW(classify_views(parse_program(src)), SchemaError);
}

TEST(Classify, SoftViewsDoNotNest)
{
    std::string src = std::string(kPodSchema) +
                      "-- @soft_constraint\ncreate view s1 as select count(*) from pending_pod;\n"
                      "-- @soft_constraint\ncreate view s2 as select sum(s1.expr0) from s1;";
    EXPECT_THROW(classify_views(parse_program(src)), SchemaError);
}

TEST(Classify, AmbiguousAndUnknownReferences)
{
    const char *tables = "create table t (a integer, b integer);\ncreate table u (a integer, c integer);\n";
    EXPECT_THROW(classify_views(parse_program(std::string(tables) + "create view v as select a from t join u on t.b = u.c;")),
                 SchemaError);
    EXPECT_NO_THROW(
        classify_views(parse_program(std::string(tables) + "create view v as select t.a from t join u on b = c;")));
    EXPECT_THROW(classify_views(parse_program(std::string(tables) + "create view v as select t.zz from t;")),
                 SchemaError);
    EXPECT_THROW(classify_views(parse_program(std::string(tables) + "create view v as select t.a from t join t on t.a = t.b;")),
                 SchemaError);
}

TEST(Classify, TypeErrors)
{
    const char *table = "create table t (a integer, s varchar(5), f boolean);\n";
    for (const char *q : {"create view v as select t.a from t where t.a = t.s;",
                          "create view v as select t.a + t.f as z from t;", "create view v as select t.a from t where t.a;",
                          "create view v as select t.a from t where t.s < 'x';",
                          "create view v as select t.a from t where sum(t.a) > 1;"}) {
        EXPECT_THROW(classify_views(parse_program(std::string(table) + q)), SchemaError) << q;
    }
}

TEST(Classify, InvariantUnderReordering)
{
    Program p = parse_program(program_text({kPodSchema, kLoadBalancing, kNodeAffinity, kNodePredicates}));
    auto reference = classify_views(p);
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Program shuffled = p;
        std::shuffle(shuffled.views.begin(), shuffled.views.end(), rng);
        auto c = classify_views(shuffled);
        for (const auto &v : reference.views)
            EXPECT_EQ(c.find_view(v.name)->cls, v.cls) << v.name;
        // Dependency order is a valid topological order and name-stable.
        std::vector<std::string> a, b;
        for (auto i : reference.order)
            a.push_back(reference.views[i].name);
        for (auto i : c.order)
            b.push_back(c.views[i].name);
        EXPECT_EQ(a, b);
    }
}

} // namespace
} // namespace weave::sql
