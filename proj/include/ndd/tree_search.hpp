#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "ndd/dirichlet.hpp"
#include "ndd/matrix.hpp"
#include "ndd/ndd_model.hpp"
#include "ndd/tree.hpp"

namespace ndd {

enum class SearchCriterion { loglik, aic, bic };

const char* criterion_name(SearchCriterion kind);
SearchCriterion criterion_from_name(const std::string& name);

// One single-binary-split candidate over a composition of arity p. Blocks
// hold component positions 0..p-1, ascending; block_a contains position 0.
// A singleton candidate isolates one component against all others; a
// two-group candidate needs both blocks of size >= 2.
struct SplitCandidate {
    enum class Kind { two_group, singleton };
    Kind kind = Kind::singleton;
    std::vector<int> block_a;
    std::vector<int> block_b;
};

// Every unordered bipartition of p components that yields a valid candidate:
// none for p = 2, otherwise 2^(p-1) - 1 of them (p singletons, the rest
// two-group). Order is deterministic but unspecified; the search sorts by
// block description before comparing.
std::vector<SplitCandidate> enumerate_splits(int p);

struct SearchOptions {
    SearchCriterion criterion = SearchCriterion::loglik;
    SolverOptions solver{};
};

// One greedy decision point: the Dirichlet baseline over the current block
// against every candidate split, all under the same criterion.
struct SearchTrace {
    struct CandidateValue {
        std::string desc; // "X1,X2|X3,X4,X5", blocks and labels sorted
        double value = 0.0;
    };
    struct Decision {
        std::string node; // sorted labels of the block under evaluation
        double baseline = 0.0;
        std::vector<CandidateValue> candidates;
        std::string chosen; // winning candidate desc, or "DD" on stop
        bool adopted = false;
    };

    SearchCriterion criterion = SearchCriterion::loglik;
    std::vector<Decision> decisions;
    int fits_performed = 0;
    int cache_hits = 0;
};

// Line-oriented form: one DECIDE line per evaluated model (baseline first),
// then ADOPT or STOP per decision.
std::string serialize_trace(const SearchTrace& trace);

struct SearchResult {
    FitResult fit;
    SearchTrace trace;
};

// Greedy top-down structure search with a node-fit cache. Blocks are given
// as ascending original column indices of x; candidate positions index into
// the block. The cache key of a Dirichlet node is the partition of original
// columns it aggregates, so fits are shared across candidates, decision
// levels, and exhaustive enumeration.
class SearchEngine {
public:
    // Labels name the columns of x; empty means X1..Xp.
    SearchEngine(const Matrix& x, std::vector<std::string> labels,
                 SearchOptions opts = {});

    // Flat Dirichlet over the sub-composition spanned by block (the stop
    // baseline at a decision point).
    FitResult fit_flat(const std::vector<int>& block);

    // The two-level model a candidate implies: root pair plus a flat node
    // per non-singleton block. Only uncached nodes are fit.
    FitResult fit_candidate(const std::vector<int>& block,
                            const SplitCandidate& cand);

    // Full greedy search from the root composition.
    SearchResult run();

    // Model assembled from cached node fits for an explicit shape over all
    // columns (used by the exhaustive mode; fits whatever is missing).
    FitResult fit_shape(const TreeSpec& spec);

    int fits_performed() const { return fits_; }
    int cache_hits() const { return hits_; }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    struct NodeFit {
        DirichletParams params; // group order of the cache key
        double adjusted = 0.0;
        int iterations = 0;
        bool converged = true;
    };

    const NodeFit& fit_node(const std::vector<std::vector<int>>& groups);
    double local_constant(const std::vector<int>& block);
    FitResult assemble(const TreeSpec& spec, const std::vector<int>& block);
    TreeSpec decide(const std::vector<int>& block, SearchTrace& trace);
    TreeSpec flat_spec(const std::vector<int>& block) const;
    std::string block_desc(const std::vector<int>& block) const;

    const Matrix& x_;
    std::vector<std::string> labels_;
    SearchOptions opts_;
    std::unordered_map<std::string, NodeFit> cache_;
    std::unordered_map<std::string, double> constants_;
    int fits_ = 0;
    int hits_ = 0;
};

SearchResult search(const Matrix& x, std::vector<std::string> labels = {},
                    const SearchOptions& opts = {});

struct ExhaustiveResult {
    FitResult fit;
    std::size_t trees_considered = 0;
};

// Every multifurcating rooted shape over the full label set, best by the
// same criterion. Guarded to p <= 5 (236 shapes); cross-validates the greedy
// result on small problems.
ExhaustiveResult exhaustive_search(const Matrix& x,
                                   std::vector<std::string> labels = {},
                                   const SearchOptions& opts = {});

// Columns of x permuted from one label order to another (both must be
// permutations of each other). Search output trees order terminals by their
// own pre-order; downstream column-keyed work uses this to follow.
Matrix reorder_columns(const Matrix& x, const std::vector<std::string>& from,
                       const std::vector<std::string>& to);

} // namespace ndd
