#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ndd/errors.hpp"
#include "ndd/tree_search.hpp"
#include "test_helpers.hpp"

using namespace ndd;

namespace {

const char* kSyntheticModel = "((X1:0.5,X2:1.5,X3:2):8,(X4:10,X5:10):2)";

Matrix sample_model(const std::string& text, std::size_t n, std::uint64_t seed) {
    ParsedTree pt = parse_tree(text);
    REQUIRE(pt.params.has_value());
    Rng rng(seed);
    return ndd_sample(NddModel{pt.tree, *pt.params}, n, rng);
}

// Sorted labels of the terminals under every nonterminal node.
std::set<std::string> nonterminal_blocks(const Tree& tree) {
    std::set<std::string> out;
    for (int k : tree.nonterminals()) {
        std::vector<std::string> names;
        for (int col : tree.subtree_columns(k)) names.push_back(tree.terminal_labels()[col]);
        std::sort(names.begin(), names.end());
        std::string desc;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i > 0) desc += ',';
            desc += names[i];
        }
        out.insert(desc);
    }
    return out;
}

double pick(const FitResult& fr, SearchCriterion kind) {
    if (kind == SearchCriterion::loglik) return fr.loglik;
    return kind == SearchCriterion::aic ? fr.aic : fr.bic;
}

} // namespace

TEST_CASE("enumerate_splits matches a brute-force bipartition oracle") {
    for (int p = 2; p <= 8; ++p) {
        // Oracle: every proper nonempty subset not containing position 0 is
        // the second block of exactly one unordered bipartition.
        int oracle_total = 0, oracle_single = 0;
        for (std::uint32_t mask = 1; mask < (1u << p); ++mask) {
            if (mask & 1u) continue;
            const int nb = __builtin_popcount(mask);
            if (nb == 0 || nb == p) continue;
            const int na = p - nb;
            if (na < 2 && nb < 2) continue; // a 1|1 split has no interior node
            ++oracle_total;
            if (na == 1 || nb == 1) ++oracle_single;
        }

        const auto cands = enumerate_splits(p);
        CHECK(static_cast<int>(cands.size()) == oracle_total);

        int singles = 0;
        std::set<std::string> seen;
        for (const auto& c : cands) {
            std::vector<int> all = c.block_a;
            all.insert(all.end(), c.block_b.begin(), c.block_b.end());
            std::sort(all.begin(), all.end());
            REQUIRE(static_cast<int>(all.size()) == p);
            for (int t = 0; t < p; ++t) REQUIRE(all[t] == t);
            REQUIRE(std::is_sorted(c.block_a.begin(), c.block_a.end()));
            REQUIRE(std::is_sorted(c.block_b.begin(), c.block_b.end()));
            REQUIRE(c.block_a.front() == 0);

            const std::size_t lo = std::min(c.block_a.size(), c.block_b.size());
            if (c.kind == SplitCandidate::Kind::singleton) {
                CHECK(lo == 1);
                ++singles;
            } else {
                CHECK(lo >= 2);
            }
            std::string key;
            for (int t : c.block_b) key += std::to_string(t) + ".";
            CHECK(seen.insert(key).second);
        }
        CHECK(singles == oracle_single);
    }

    CHECK(enumerate_splits(2).empty());
    CHECK(enumerate_splits(3).size() == 3);
    CHECK(enumerate_splits(4).size() == 7);
    CHECK(enumerate_splits(5).size() == 15);
    CHECK(enumerate_splits(6).size() == 31);
    CHECK(enumerate_splits(7).size() == 63);
    CHECK_THROWS_AS(enumerate_splits(1), ValidationError);
}

TEST_CASE("candidate fits match a from-scratch fit of the same shape") {
    const Matrix x = sample_model(kSyntheticModel, 60, 501);
    const std::vector<std::string> labels = {"X1", "X2", "X3", "X4", "X5"};
    SearchEngine engine(x, labels);

    struct Case {
        std::vector<int> block;
        SplitCandidate cand;
        int expect_q;
    };
    std::vector<Case> cases;
    cases.push_back({{0, 1, 2, 3, 4},
                     {SplitCandidate::Kind::two_group, {0, 2}, {1, 3, 4}},
                     2 + 2 + 3});
    cases.push_back({{0, 1, 2, 3, 4},
                     {SplitCandidate::Kind::singleton, {0, 1, 2, 4}, {3}},
                     2 + 4});
    cases.push_back({{1, 2, 3},
                     {SplitCandidate::Kind::singleton, {0}, {1, 2}},
                     2 + 2});

    for (const Case& tc : cases) {
        FitResult fr = engine.fit_candidate(tc.block, tc.cand);
        CHECK(fr.q == tc.expect_q);
        CHECK(fr.n == x.rows);
        CHECK(fr.converged);

        // Rebuild the local composition the long way: restrict, renormalize,
        // and reorder to the candidate tree's own column order.
        Matrix local(x.rows, tc.block.size());
        for (std::size_t i = 0; i < x.rows; ++i) {
            double s = 0.0;
            for (int j : tc.block) s += x(i, j);
            for (std::size_t t = 0; t < tc.block.size(); ++t)
                local(i, t) = x(i, tc.block[t]) / s;
        }
        std::vector<std::string> local_labels;
        for (int j : tc.block) local_labels.push_back(labels[j]);
        const Matrix ordered =
            reorder_columns(local, local_labels, fr.model.tree.terminal_labels());
        const FitResult oracle = ndd_mle(fr.model.tree, ordered);

        CHECK(std::fabs(fr.loglik - oracle.loglik) <= 1e-8 * std::max(1.0, std::fabs(oracle.loglik)));
        CHECK(std::fabs(fr.aic - oracle.aic) <= 1e-7 * std::max(1.0, std::fabs(oracle.aic)));
        CHECK(std::fabs(fr.bic - oracle.bic) <= 1e-7 * std::max(1.0, std::fabs(oracle.bic)));
        REQUIRE(fr.model.params.size() == oracle.model.params.size());
        for (std::size_t id = 1; id < fr.model.params.size(); ++id)
            CHECK(fr.model.params[id] ==
                  doctest::Approx(oracle.model.params[id]).epsilon(1e-6));
    }
}

TEST_CASE("node fits are cached across candidates, levels, and repeats") {
    const Matrix x = sample_model("((X1:1,X2:2):3,(X3:4,X4:1):2)", 80, 502);
    SearchEngine engine(x, {"X1", "X2", "X3", "X4"});
    const std::vector<int> all = {0, 1, 2, 3};

    const SplitCandidate two{SplitCandidate::Kind::two_group, {0, 1}, {2, 3}};
    const FitResult first = engine.fit_candidate(all, two);
    CHECK(engine.fits_performed() == 3); // root pair + two flat pairs

    const FitResult again = engine.fit_candidate(all, two);
    CHECK(engine.fits_performed() == 3);
    CHECK(engine.cache_hits() >= 3);
    CHECK(again.loglik == first.loglik);
    CHECK(again.model.params == first.model.params);

    engine.fit_flat({0, 1}); // already fit as a candidate block
    CHECK(engine.fits_performed() == 3);

    const SplitCandidate single{SplitCandidate::Kind::singleton, {0}, {1, 2, 3}};
    engine.fit_candidate(all, single);
    CHECK(engine.fits_performed() == 5); // new root pair + flat (X2,X3,X4)
}

TEST_CASE("search is deterministic") {
    const Matrix x = sample_model(kSyntheticModel, 300, 503);
    SearchOptions opts;
    opts.criterion = SearchCriterion::aic;
    const SearchResult a = search(x, {}, opts);
    const SearchResult b = search(x, {}, opts);
    CHECK(serialize_trace(a.trace) == serialize_trace(b.trace));
    CHECK(serialize_tree(a.fit.model.tree, a.fit.model.params) ==
          serialize_tree(b.fit.model.tree, b.fit.model.params));
    CHECK(a.fit.loglik == b.fit.loglik);
    CHECK(a.trace.fits_performed == b.trace.fits_performed);
}

TEST_CASE("greedy decisions improve the criterion and match a full refit") {
    const char* generators[] = {
        "((X1:1.5,X2:2.5):4,(X3:3,X4:1):2)",
        "((X1:0.5,X2:1.5,X3:2):8,(X4:10,X5:10):2)",
        "(X1:2,(X2:1,(X3:10,X4:20):3):8,X5:1,X6:4)",
    };
    std::uint64_t seed = 504;
    for (const char* gen : generators) {
        for (std::size_t n : {std::size_t(30), std::size_t(200)}) {
            const Matrix x = sample_model(gen, n, seed++);
            for (SearchCriterion kind :
                 {SearchCriterion::loglik, SearchCriterion::aic, SearchCriterion::bic}) {
                SearchOptions opts;
                opts.criterion = kind;
                const SearchResult res = search(x, {}, opts);

                // Every adoption beats the stop baseline and every rival.
                for (const auto& dec : res.trace.decisions) {
                    if (!dec.adopted) continue;
                    double chosen = 0.0;
                    bool found = false;
                    for (const auto& c : dec.candidates) {
                        if (c.desc == dec.chosen) {
                            chosen = c.value;
                            found = true;
                        }
                    }
                    REQUIRE(found);
                    if (kind == SearchCriterion::loglik) {
                        CHECK(chosen > dec.baseline);
                        for (const auto& c : dec.candidates) CHECK(chosen >= c.value);
                    } else {
                        CHECK(chosen < dec.baseline);
                        for (const auto& c : dec.candidates) CHECK(chosen <= c.value);
                    }
                }

                // The final model never loses to the root Dirichlet baseline.
                REQUIRE(!res.trace.decisions.empty());
                const double base0 = res.trace.decisions.front().baseline;
                if (kind == SearchCriterion::loglik) CHECK(pick(res.fit, kind) >= base0 - 1e-9);
                else CHECK(pick(res.fit, kind) <= base0 + 1e-9);

                // Termination bound: at most p - 1 nonterminals in total.
                const Tree& tree = res.fit.model.tree;
                CHECK(static_cast<int>(tree.nonterminals().size()) <= tree.n_terminals() - 1);
                CHECK(res.fit.q == tree.node_count() - 1);

                // Cache-assembled result equals a from-scratch fit of the
                // adopted tree on the same data.
                const Matrix ordered = reorder_columns(
                    x, SearchEngine(x, {}, opts).labels(), tree.terminal_labels());
                const FitResult oracle = ndd_mle(tree, ordered);
                CHECK(std::fabs(res.fit.loglik - oracle.loglik) <= 1e-8);
                for (std::size_t id = 1; id < oracle.model.params.size(); ++id)
                    CHECK(res.fit.model.params[id] ==
                          doctest::Approx(oracle.model.params[id]).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("log-likelihood search recovers the planted two-block structure") {
    const Matrix x = sample_model(kSyntheticModel, 1000, 505);
    const SearchResult res = search(x);
    const Tree& tree = res.fit.model.tree;

    const auto blocks = nonterminal_blocks(tree);
    CHECK(blocks.count("X1,X2,X3") == 1);
    CHECK(blocks.count("X4,X5") == 1);

    // Pure likelihood always refines to a fully binary tree.
    for (int k : tree.nonterminals()) CHECK(tree.node(k).children.size() == 2);

    // Nodes beyond the generator's own are spurious binary refinements; their
    // split parameter must sit near zero.
    for (int s : tree.interior()) {
        std::vector<std::string> names;
        for (int col : tree.subtree_columns(s)) names.push_back(tree.terminal_labels()[col]);
        std::sort(names.begin(), names.end());
        std::string desc;
        for (std::size_t i = 0; i < names.size(); ++i) desc += (i ? "," : "") + names[i];
        if (desc == "X1,X2,X3" || desc == "X4,X5") continue;
        CHECK(std::fabs(delta(tree, res.fit.model.params, s)) <= 0.2);
    }
}

TEST_CASE("trace values are reproducible by refitting") {
    const Matrix x = sample_model(kSyntheticModel, 400, 506);
    SearchOptions opts;
    opts.criterion = SearchCriterion::bic;
    const SearchResult res = search(x, {}, opts);

    REQUIRE(!res.trace.decisions.empty());
    const auto& dec = res.trace.decisions.front();
    CHECK(dec.node == "X1,X2,X3,X4,X5");
    CHECK(dec.candidates.size() == 15);

    // Stop baseline: the flat Dirichlet over all five components.
    {
        const FitResult flat = ndd_mle(Tree::flat({"X1", "X2", "X3", "X4", "X5"}), x);
        CHECK(dec.baseline == doctest::Approx(flat.bic).epsilon(1e-10));
    }

    // One two-group and one singleton candidate, refit from their tree text.
    struct Probe {
        const char* desc;
        const char* text;
        std::vector<std::string> order;
    };
    for (const Probe& pr : {
             Probe{"X1,X2|X3,X4,X5", "((X1,X2),(X3,X4,X5))",
                   {"X1", "X2", "X3", "X4", "X5"}},
             Probe{"X1,X2,X4,X5|X3", "((X1,X2,X4,X5),X3)",
                   {"X1", "X2", "X4", "X5", "X3"}},
         }) {
        double traced = 0.0;
        bool found = false;
        for (const auto& c : dec.candidates) {
            if (c.desc == pr.desc) {
                traced = c.value;
                found = true;
            }
        }
        REQUIRE(found);
        const Matrix ordered =
            reorder_columns(x, {"X1", "X2", "X3", "X4", "X5"}, pr.order);
        const FitResult refit = ndd_mle(parse_tree(pr.text).tree, ordered);
        CHECK(traced == doctest::Approx(refit.bic).epsilon(1e-10));
    }

    const std::string text = serialize_trace(res.trace);
    CHECK(text.find("DECIDE X1,X2,X3,X4,X5 DD bic ") == 0);
    CHECK(text.find("\nADOPT ") != std::string::npos);
    const SearchResult rerun = search(x, {}, opts);
    CHECK(serialize_trace(rerun.trace) == text);
}

TEST_CASE("penalized criteria stop at the Dirichlet for Dirichlet data") {
    Rng rng(507);
    const Matrix x = dd_sample(DirichletParams{{2.0, 3.5, 1.2, 5.0}}, 200, rng);
    for (SearchCriterion kind : {SearchCriterion::aic, SearchCriterion::bic}) {
        SearchOptions opts;
        opts.criterion = kind;
        const SearchResult res = search(x, {}, opts);
        CHECK(res.fit.model.tree.interior().empty());
        REQUIRE(res.trace.decisions.size() == 1);
        CHECK(res.trace.decisions[0].chosen == "DD");
        CHECK(!res.trace.decisions[0].adopted);

        const ExhaustiveResult ex = exhaustive_search(x, {}, opts);
        CHECK(ex.fit.model.tree.interior().empty());
    }
}

TEST_CASE("exhaustive mode enumerates every shape and bounds the greedy fit") {
    {
        const Matrix x = sample_model("((X1:1,X2:2):3,(X3:4,X4:1):2)", 120, 508);
        const ExhaustiveResult ex = exhaustive_search(x);
        CHECK(ex.trees_considered == 26);
        const SearchResult greedy = search(x);
        CHECK(ex.fit.loglik >= greedy.fit.loglik - 1e-9);
    }
    {
        const Matrix x = sample_model(kSyntheticModel, 500, 509);
        const ExhaustiveResult ex = exhaustive_search(x);
        CHECK(ex.trees_considered == 236);
        const SearchResult greedy = search(x);
        CHECK(ex.fit.loglik >= greedy.fit.loglik - 1e-9);
        const auto blocks = nonterminal_blocks(ex.fit.model.tree);
        CHECK(blocks.count("X1,X2,X3") + blocks.count("X4,X5") >= 1);
    }
    {
        const Matrix x = sample_model("(X1:2,(X2:1,(X3:10,X4:20):3):8,X5:1,X6:4)", 50, 510);
        CHECK_THROWS_AS(exhaustive_search(x), ValidationError);
    }
}

TEST_CASE("two-component search degenerates to the flat pair") {
    Rng rng(511);
    const Matrix x = dd_sample(DirichletParams{{2.0, 5.0}}, 40, rng);
    const SearchResult res = search(x);
    CHECK(res.trace.decisions.empty());
    CHECK(res.fit.model.tree.n_terminals() == 2);
    CHECK(res.fit.model.tree.interior().empty());
    CHECK(res.fit.q == 2);

    const FitResult oracle = ndd_mle(Tree::flat({"X1", "X2"}), x);
    CHECK(res.fit.loglik == doctest::Approx(oracle.loglik).epsilon(1e-10));
}

TEST_CASE("input validation and error context") {
    const Matrix x = sample_model(kSyntheticModel, 40, 512);

    CHECK_THROWS_AS(SearchEngine(x, {"A", "B"}), ValidationError);
    CHECK_THROWS_AS(SearchEngine(x, {"A", "B", "C", "D", "A"}), ValidationError);
    CHECK_THROWS_AS(SearchEngine(x, {"A", "B", "C", "D", "bad label"}), ValidationError);

    SearchEngine engine(x, {});
    CHECK_THROWS_AS(engine.fit_flat({0}), ValidationError);
    CHECK_THROWS_AS(engine.fit_flat({0, 0, 1}), ValidationError);
    CHECK_THROWS_AS(engine.fit_flat({0, 99}), ValidationError);
    CHECK_THROWS_AS(
        engine.fit_candidate({0, 1}, SplitCandidate{SplitCandidate::Kind::singleton, {0}, {1}}),
        ValidationError);
    CHECK_THROWS_AS(
        engine.fit_candidate({0, 1, 2},
                             SplitCandidate{SplitCandidate::Kind::singleton, {0, 1}, {1, 2}}),
        ValidationError);
    CHECK_THROWS_AS(
        engine.fit_candidate({0, 1, 2},
                             SplitCandidate{SplitCandidate::Kind::two_group, {0}, {1, 2}}),
        ValidationError);

    // A starved solver fails with the offending node named.
    SearchOptions opts;
    opts.solver.max_iter = 1;
    try {
        search(x, {}, opts);
        FAIL("expected a numeric error from the starved solver");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("search: node over [") != std::string::npos);
    }
}

TEST_CASE("reorder_columns permutes and validates") {
    Matrix x(2, 3);
    x(0, 0) = 1;
    x(0, 1) = 2;
    x(0, 2) = 3;
    x(1, 0) = 4;
    x(1, 1) = 5;
    x(1, 2) = 6;
    const std::vector<std::string> from = {"a", "b", "c"};
    const Matrix y = reorder_columns(x, from, {"c", "a", "b"});
    CHECK(y(0, 0) == 3);
    CHECK(y(0, 1) == 1);
    CHECK(y(0, 2) == 2);
    CHECK(y(1, 0) == 6);

    const Matrix back = reorder_columns(y, {"c", "a", "b"}, from);
    CHECK(back.a == x.a);

    CHECK_THROWS_AS(reorder_columns(x, from, {"a", "b", "z"}), ValidationError);
    CHECK_THROWS_AS(reorder_columns(x, from, {"a", "b", "b"}), ValidationError);
    CHECK_THROWS_AS(reorder_columns(x, {"a", "a", "c"}, from), ValidationError);
    CHECK_THROWS_AS(reorder_columns(x, {"a", "b"}, from), ValidationError);
}
