#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "ndd/errors.hpp"
#include "ndd/rng.hpp"
#include "ndd/tree.hpp"

using namespace ndd;

namespace {

Matrix single_row(std::initializer_list<double> vals) {
    Matrix m(1, vals.size());
    std::size_t j = 0;
    for (double v : vals) m(0, j++) = v;
    return m;
}

// Random strictly-interior composition matrix.
Matrix random_simplex(Rng& rng, std::size_t n, std::size_t p) {
    Matrix m(n, p);
    std::vector<double> alpha(p, 1.0);
    for (std::size_t i = 0; i < n; ++i) rng.dirichlet(alpha, m.row(i));
    return m;
}

} // namespace

TEST_CASE("parse flat and nested shapes") {
    Tree dd = parse_tree("(X1,X2,X3,X4)").tree;
    CHECK(dd.n_terminals() == 4);
    CHECK(dd.interior().empty());
    CHECK(dd.node(dd.root()).children.size() == 4);
    CHECK(serialize_tree(dd) == "(X1,X2,X3,X4)");

    Tree nested = parse_tree("((X1,X2),(X3,X4))").tree;
    CHECK(nested.n_terminals() == 4);
    CHECK(nested.interior().size() == 2);
    CHECK(serialize_tree(nested) == "((X1,X2),(X3,X4))");

    Tree cascade = parse_tree("(X1,(X2,(X3,X4)))").tree;
    CHECK(cascade.interior().size() == 2);
    CHECK(serialize_tree(cascade) == "(X1,(X2,(X3,X4)))");

    Tree spaced = parse_tree("  ( X1 ,\t( X2 , ( X3 , X4 ) ) )\n").tree;
    CHECK(serialize_tree(spaced) == "(X1,(X2,(X3,X4)))");
}

TEST_CASE("interior names are synthesized in pre-order") {
    Tree t = parse_tree("((X1,X2,X3),(X4,X5))").tree;
    CHECK(t.node(t.root()).label == "R");
    REQUIRE(t.interior().size() == 2);
    CHECK(t.node(t.interior()[0]).label == "N1");
    CHECK(t.node(t.interior()[1]).label == "N2");
    const auto& cols1 = t.subtree_columns(t.interior()[0]);
    CHECK(cols1 == std::vector<int>{0, 1, 2});
    CHECK(t.subtree_columns(t.interior()[1]) == std::vector<int>{3, 4});
}

TEST_CASE("parse with parameter annotations") {
    ParsedTree pt = parse_tree("((X1:2,X2:1):8,(X3:10,X4:20):3)");
    REQUIRE(pt.params.has_value());
    const Tree& t = pt.tree;
    const ParamVector& a = *pt.params;
    CHECK(a[t.terminal_id(0)] == 2.0);
    CHECK(a[t.terminal_id(3)] == 20.0);
    CHECK(a[t.interior()[0]] == 8.0);
    CHECK(a[t.interior()[1]] == 3.0);
    CHECK(serialize_tree(t, a) == "((X1:2,X2:1):8,(X3:10,X4:20):3)");
    // Round trip through text again.
    ParsedTree again = parse_tree(serialize_tree(t, a));
    CHECK(serialize_tree(again.tree, *again.params) == serialize_tree(t, a));
}

TEST_CASE("parse errors carry byte offsets") {
    CHECK_THROWS_WITH_AS(parse_tree("(X1,X2"), doctest::Contains("byte 6"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_tree("(X1)"), doctest::Contains("2 children"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_tree("(X1,X1)"), doctest::Contains("duplicate"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_tree("(X1,X2):5"), doctest::Contains("root"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_tree("(X1:2,X2)"), doctest::Contains("every non-root"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_tree("(X1,X2) junk"), doctest::Contains("trailing"),
                         ValidationError);
    CHECK_THROWS_AS(parse_tree("(X1,X2:)"), ValidationError);
    CHECK_THROWS_AS(parse_tree(""), ValidationError);
    CHECK_THROWS_AS(parse_tree("X1"), ValidationError);     // fewer than 2 terminals
    CHECK_THROWS_AS(parse_tree("(X1,X%2)"), ValidationError);
    CHECK_THROWS_AS(parse_tree("(X1:-1,X2:2)"), ValidationError); // alpha <= 0
}

TEST_CASE("delta on the synthetic five-component model") {
    ParsedTree pt = parse_tree("((X1:0.5,X2:1.5,X3:2):8,(X4:10,X5:10):2)");
    const Tree& t = pt.tree;
    const ParamVector& a = *pt.params;
    const int n1 = t.interior()[0], n2 = t.interior()[1];
    CHECK(delta(t, a, n1) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(delta(t, a, n2) == doctest::Approx(-18.0).epsilon(1e-15));
    CHECK(phi(t, a, t.root()) == doctest::Approx(10.0));
    CHECK_THROWS_AS(delta(t, a, t.root()), ValidationError);
    CHECK_THROWS_AS(delta(t, a, t.terminal_id(0)), ValidationError);
    // Any node whose alpha equals its children's sum has delta 0.
    ParamVector b = a;
    b[n1] = 4.0;
    CHECK(delta(t, b, n1) == 0.0);
}

TEST_CASE("path_to matches the worked example") {
    Tree t = parse_tree("((X1,X2,X3),(X4,X5))").tree;
    const auto& p2 = t.path_to_column(1); // X2
    REQUIRE(p2.size() == 2);
    CHECK(p2[0].node == t.root());
    CHECK(p2[0].child_id == t.interior()[0]);
    CHECK(p2[1].node == t.interior()[0]);
    CHECK(p2[1].child_id == t.terminal_id(1));

    Tree flat = parse_tree("(A,B)").tree;
    REQUIRE(flat.path_to_column(0).size() == 1);
    CHECK(flat.path_to_column(0)[0].node == flat.root());

    // Cascading shape: X4 sits three levels down.
    Tree gdd = parse_tree("((X1,X2),(X3,(X4,X5)))").tree;
    int x4 = -1;
    for (int c = 0; c < gdd.n_terminals(); ++c)
        if (gdd.terminal_labels()[c] == "X4") x4 = c;
    CHECK(gdd.path_to_column(x4).size() == 3);
}

TEST_CASE("to_branches on the worked five-component example") {
    Tree t = parse_tree("((X1,X2,X3),(X4,X5))").tree;
    BranchData b = to_branches(t, single_row({0.1, 0.2, 0.3, 0.15, 0.25}));
    REQUIRE(b.per_node.size() == 3); // R, N1, N2 in pre-order
    CHECK(b.per_node[0](0, 0) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(b.per_node[0](0, 1) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(b.per_node[1](0, 0) == doctest::Approx(1.0 / 6).epsilon(1e-14));
    CHECK(b.per_node[1](0, 1) == doctest::Approx(2.0 / 6).epsilon(1e-14));
    CHECK(b.per_node[1](0, 2) == doctest::Approx(3.0 / 6).epsilon(1e-14));
    CHECK(b.per_node[2](0, 0) == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(b.per_node[2](0, 1) == doctest::Approx(0.625).epsilon(1e-14));

    // Inverse recovers x; X2 = 0.6 * (2/6) = 0.2 along its path.
    Matrix x = from_branches(t, b);
    CHECK(x(0, 1) == doctest::Approx(0.2).epsilon(1e-14));

    // Flat tree: branch data is the data itself.
    Tree dd = parse_tree("(X1,X2,X3)").tree;
    BranchData bd = to_branches(dd, single_row({0.2, 0.3, 0.5}));
    REQUIRE(bd.per_node.size() == 1);
    CHECK(bd.per_node[0](0, 2) == 0.5);
}

TEST_CASE("to_branches validation") {
    Tree t = parse_tree("((X1,X2),(X3,X4))").tree;
    CHECK_THROWS_AS(to_branches(t, single_row({0.2, 0.3, 0.5})), ValidationError);
    CHECK_THROWS_AS(to_branches(t, single_row({0.0, 0.3, 0.3, 0.4})), ValidationError);
    CHECK_THROWS_AS(to_branches(t, single_row({0.2, 0.2, 0.2, 0.2})), ValidationError);
}

TEST_CASE("branch transform round trip on random trees and data") {
    Rng rng(20240817);
    const char* shapes[] = {
        "(X1,X2)",
        "((X1,X2),(X3,X4))",
        "((X1,X2,X3),(X4,X5))",
        "(X1,(X2,(X3,X4)))",
        "((A,B),(C,D,E),F)",
        "(((L1,L2),(L3,L4)),((L5,L6),L7),L8)",
    };
    for (const char* shape : shapes) {
        Tree t = parse_tree(shape).tree;
        Matrix x = random_simplex(rng, 20, t.n_terminals());
        Matrix back = from_branches(t, to_branches(t, x));
        for (std::size_t i = 0; i < x.rows; ++i) {
            double rowsum = 0.0;
            for (std::size_t j = 0; j < x.cols; ++j) {
                CHECK(std::fabs(back(i, j) - x(i, j)) <= 1e-12);
                rowsum += back(i, j);
            }
            CHECK(std::fabs(rowsum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("subtree columns partition each node's terminal set") {
    Tree t = parse_tree("(((L1,L2),(L3,L4)),((L5,L6),L7),L8)").tree;
    for (int k : t.nonterminals()) {
        std::vector<int> merged;
        for (int c : t.node(k).children) {
            const auto& part = t.subtree_columns(c);
            merged.insert(merged.end(), part.begin(), part.end());
        }
        std::sort(merged.begin(), merged.end());
        CHECK(merged == t.subtree_columns(k));
    }
    // Fully binary tree on p leaves has p - 1 nonterminal nodes.
    Tree bin = parse_tree("(((X1,X2),(X3,X4)),((X5,X6),(X7,X8)))").tree;
    CHECK(bin.nonterminals().size() == 7);
}
