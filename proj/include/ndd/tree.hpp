#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ndd/matrix.hpp"

namespace ndd {

struct Node {
    std::string label;         // terminal label, or synthesized interior name
    int parent = -1;           // -1 for the root
    std::vector<int> children; // node ids, order significant and preserved

    bool is_terminal() const { return children.empty(); }
};

// Recursive construction spec: a terminal (label set, no children) or an
// interior node (>= 2 children). Used by the parser and by the tree search.
struct TreeSpec {
    std::string label;
    std::vector<TreeSpec> children;

    static TreeSpec leaf(std::string name) { return TreeSpec{std::move(name), {}}; }
};

// Edge parameters indexed by node id; the root slot is unused and kept at 0.
using ParamVector = std::vector<double>;

// Rooted tree over p terminal components. Node ids are assigned in
// depth-first pre-order (root = 0, parents before children), so id order is
// deterministic given the text form. Immutable after construction.
class Tree {
public:
    static Tree build(const TreeSpec& spec);

    // Root with the given terminals as direct children (the DD shape).
    static Tree flat(const std::vector<std::string>& labels);

    int root() const { return 0; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int id) const { return nodes_[id]; }

    int n_terminals() const { return static_cast<int>(terminals_.size()); }
    // Terminal node ids in pre-order; position in this list is the data
    // column the terminal maps to.
    const std::vector<int>& terminals() const { return terminals_; }
    const std::vector<std::string>& terminal_labels() const { return labels_; }

    // Root plus interior nodes, pre-order (root first).
    const std::vector<int>& nonterminals() const { return nonterminals_; }
    // Interior nodes only (non-root, non-terminal), pre-order.
    const std::vector<int>& interior() const { return interior_; }

    // Column indices of the terminals under node id, ascending.
    const std::vector<int>& subtree_columns(int id) const { return subtree_cols_[id]; }

    // One step of P_j: the path node k and the child of k the path exits
    // through (C_j(k)), both as id and as position within k's child list.
    struct PathStep {
        int node;
        int child_id;
        int child_pos;
    };
    // P_j for the terminal at data column j: root down to j's parent.
    const std::vector<PathStep>& path_to_column(int col) const { return paths_[col]; }

    int terminal_id(int col) const { return terminals_[col]; }

private:
    std::vector<Node> nodes_;
    std::vector<int> terminals_;
    std::vector<int> nonterminals_;
    std::vector<int> interior_;
    std::vector<std::string> labels_;
    std::vector<std::vector<int>> subtree_cols_;
    std::vector<std::vector<PathStep>> paths_;
};

// Sum of child parameters of a nonterminal node (the precision phi_k).
double phi(const Tree& tree, const ParamVector& params, int node);

// alpha_s minus the sum of the children's parameters; s must be interior.
double delta(const Tree& tree, const ParamVector& params, int s);

// All non-root entries strictly positive and finite; size matches the tree.
void validate_params(const Tree& tree, const ParamVector& params);

// Branch proportions: one n x |C(k)| matrix per nonterminal node, stored in
// Tree::nonterminals() order. Every row of every matrix sums to 1.
struct BranchData {
    std::vector<Matrix> per_node;
};

// Forward transform: b_{k,A} = sum of x over T(A) / sum of x over T(k).
// Requires x strictly inside the simplex, columns in terminal order.
BranchData to_branches(const Tree& tree, const Matrix& x);

// Inverse transform: x_j = product of branch proportions along P_j.
Matrix from_branches(const Tree& tree, const BranchData& b);

struct ParsedTree {
    Tree tree;
    // Present only when every non-root node carries a ":value" annotation.
    std::optional<ParamVector> params;
};

// Text grammar: node := label | '(' node (',' node)+ ')', either form
// optionally followed by ':' float (the parameter of the edge entering the
// node; the root cannot carry one). Labels are [A-Za-z0-9_]+, whitespace is
// insignificant. Errors carry the byte offset.
ParsedTree parse_tree(const std::string& text);

std::string serialize_tree(const Tree& tree);
std::string serialize_tree(const Tree& tree, const ParamVector& params);

} // namespace ndd
