#include "ndd/tree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>

#include "ndd/errors.hpp"
#include "ndd/num_format.hpp"

namespace ndd {

namespace {

bool valid_label(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

} // namespace

Tree Tree::build(const TreeSpec& spec) {
    Tree t;
    std::function<void(const TreeSpec&, int)> add = [&](const TreeSpec& s, int parent) {
        const int id = static_cast<int>(t.nodes_.size());
        t.nodes_.push_back(Node{s.label, parent, {}});
        if (parent >= 0) t.nodes_[parent].children.push_back(id);
        if (s.children.empty()) {
            if (!valid_label(s.label))
                throw ValidationError("tree: terminal label '" + s.label +
                                      "' must match [A-Za-z0-9_]+");
        } else {
            if (!s.label.empty())
                throw ValidationError("tree: interior labels are synthesized, found '" +
                                      s.label + "'");
            if (s.children.size() < 2)
                throw ValidationError("tree: interior node needs at least 2 children");
            for (const TreeSpec& c : s.children) add(c, id);
        }
    };
    add(spec, -1);

    if (t.nodes_[0].is_terminal())
        throw ValidationError("tree: must have at least 2 terminals");

    std::set<std::string> taken;
    for (const Node& nd : t.nodes_)
        if (nd.is_terminal() && !taken.insert(nd.label).second)
            throw ValidationError("tree: duplicate terminal label '" + nd.label + "'");

    // Synthesized nonterminal names: R for the root, N1, N2, ... in pre-order.
    // A rare clash with a terminal label gets underscores appended.
    int interior_seq = 0;
    for (int id = 0; id < t.node_count(); ++id) {
        Node& nd = t.nodes_[id];
        if (nd.is_terminal()) {
            t.terminals_.push_back(id);
            t.labels_.push_back(nd.label);
            continue;
        }
        std::string name = (id == 0) ? "R" : "N" + std::to_string(++interior_seq);
        while (!taken.insert(name).second) name += "_";
        nd.label = name;
        t.nonterminals_.push_back(id);
        if (id != 0) t.interior_.push_back(id);
    }

    // Pre-order puts parents before children, so a reverse sweep sees every
    // child list before the parent that concatenates it.
    t.subtree_cols_.resize(t.nodes_.size());
    std::vector<int> col_of_node(t.nodes_.size(), -1);
    for (int c = 0; c < t.n_terminals(); ++c) col_of_node[t.terminals_[c]] = c;
    for (int id = t.node_count() - 1; id >= 0; --id) {
        const Node& nd = t.nodes_[id];
        if (nd.is_terminal()) {
            t.subtree_cols_[id] = {col_of_node[id]};
            continue;
        }
        for (int c : nd.children)
            t.subtree_cols_[id].insert(t.subtree_cols_[id].end(),
                                       t.subtree_cols_[c].begin(),
                                       t.subtree_cols_[c].end());
        std::sort(t.subtree_cols_[id].begin(), t.subtree_cols_[id].end());
    }

    t.paths_.resize(t.n_terminals());
    for (int c = 0; c < t.n_terminals(); ++c) {
        int id = t.terminals_[c];
        std::vector<PathStep> path;
        while (id != 0) {
            const int parent = t.nodes_[id].parent;
            const auto& sib = t.nodes_[parent].children;
            const int pos = static_cast<int>(
                std::find(sib.begin(), sib.end(), id) - sib.begin());
            path.push_back(PathStep{parent, id, pos});
            id = parent;
        }
        std::reverse(path.begin(), path.end());
        t.paths_[c] = std::move(path);
    }
    return t;
}

Tree Tree::flat(const std::vector<std::string>& labels) {
    TreeSpec spec;
    for (const std::string& l : labels) spec.children.push_back(TreeSpec::leaf(l));
    return build(spec);
}

double phi(const Tree& tree, const ParamVector& params, int node) {
    const Node& nd = tree.node(node);
    if (nd.is_terminal())
        throw ValidationError("phi: node '" + nd.label + "' is terminal");
    double sum = 0.0;
    for (int c : nd.children) sum += params[c];
    return sum;
}

double delta(const Tree& tree, const ParamVector& params, int s) {
    if (s <= 0 || s >= tree.node_count())
        throw ValidationError("delta: unknown node id " + std::to_string(s));
    if (tree.node(s).is_terminal())
        throw ValidationError("delta: node '" + tree.node(s).label +
                              "' is terminal, not interior");
    return params[s] - phi(tree, params, s);
}

void validate_params(const Tree& tree, const ParamVector& params) {
    if (params.size() != static_cast<std::size_t>(tree.node_count()))
        throw ValidationError("params: size does not match tree");
    for (int id = 1; id < tree.node_count(); ++id)
        if (!(params[id] > 0.0) || !std::isfinite(params[id]))
            throw ValidationError("params: alpha for node '" + tree.node(id).label +
                                  "' must be positive and finite");
}

BranchData to_branches(const Tree& tree, const Matrix& x) {
    const int p = tree.n_terminals();
    if (x.cols != static_cast<std::size_t>(p))
        throw ValidationError("to_branches: data has " + std::to_string(x.cols) +
                              " columns, tree has " + std::to_string(p) +
                              " terminals");
    const auto& nts = tree.nonterminals();
    BranchData b;
    b.per_node.reserve(nts.size());
    for (int k : nts)
        b.per_node.emplace_back(x.rows, tree.node(k).children.size());

    std::vector<double> node_sum(tree.node_count());
    std::vector<int> col_of_node(tree.node_count(), -1);
    for (int c = 0; c < p; ++c) col_of_node[tree.terminal_id(c)] = c;

    for (std::size_t i = 0; i < x.rows; ++i) {
        double total = 0.0;
        for (int j = 0; j < p; ++j) {
            const double v = x(i, j);
            if (!(v > 0.0) || !(v < 1.0))
                throw ValidationError("to_branches: row " + std::to_string(i) +
                                      " column " + std::to_string(j) +
                                      " not strictly inside (0,1)");
            total += v;
        }
        if (std::fabs(total - 1.0) > 1e-8)
            throw ValidationError("to_branches: row " + std::to_string(i) +
                                  " sums to " + format_double(total));
        for (int id = tree.node_count() - 1; id >= 0; --id) {
            const Node& nd = tree.node(id);
            if (nd.is_terminal()) {
                node_sum[id] = x(i, col_of_node[id]);
            } else {
                double s = 0.0;
                for (int c : nd.children) s += node_sum[c];
                node_sum[id] = s;
            }
        }
        for (std::size_t ki = 0; ki < nts.size(); ++ki) {
            const int k = nts[ki];
            const double denom = node_sum[k];
            if (!(denom > 0.0))
                throw NumericError("to_branches: zero subtree sum at node '" +
                                   tree.node(k).label + "', row " + std::to_string(i));
            const auto& ch = tree.node(k).children;
            for (std::size_t c = 0; c < ch.size(); ++c)
                b.per_node[ki](i, c) = node_sum[ch[c]] / denom;
        }
    }
    return b;
}

Matrix from_branches(const Tree& tree, const BranchData& b) {
    const auto& nts = tree.nonterminals();
    if (b.per_node.size() != nts.size())
        throw ValidationError("from_branches: branch data does not match tree");
    const std::size_t n = b.per_node.empty() ? 0 : b.per_node[0].rows;
    std::vector<int> nt_index(tree.node_count(), -1);
    for (std::size_t ki = 0; ki < nts.size(); ++ki) {
        const Matrix& m = b.per_node[ki];
        if (m.rows != n || m.cols != tree.node(nts[ki]).children.size())
            throw ValidationError("from_branches: branch matrix shape mismatch at node '" +
                                  tree.node(nts[ki]).label + "'");
        nt_index[nts[ki]] = static_cast<int>(ki);
        for (std::size_t i = 0; i < m.rows; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < m.cols; ++c) {
                if (!(m(i, c) > 0.0) || !(m(i, c) < 1.0))
                    throw ValidationError("from_branches: entries must lie in (0,1)");
                s += m(i, c);
            }
            if (std::fabs(s - 1.0) > 1e-8)
                throw ValidationError("from_branches: row " + std::to_string(i) +
                                      " of node '" + tree.node(nts[ki]).label +
                                      "' sums to " + format_double(s));
        }
    }
    Matrix x(n, tree.n_terminals());
    for (int j = 0; j < tree.n_terminals(); ++j) {
        const auto& path = tree.path_to_column(j);
        for (std::size_t i = 0; i < n; ++i) {
            double v = 1.0;
            for (const auto& step : path)
                v *= b.per_node[nt_index[step.node]](i, step.child_pos);
            x(i, j) = v;
        }
    }
    return x;
}

namespace {

// Recursive-descent parser for the parenthesized tree grammar.
struct TreeParser {
    const std::string& s;
    std::size_t pos = 0;

    struct PNode {
        TreeSpec spec;
        std::vector<double> annotations; // pre-order; NaN = absent
    };

    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError("tree parse error at byte " + std::to_string(pos) +
                              ": " + msg);
    }

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    // Appends this node's annotation (NaN if absent) and its subtree's, in
    // pre-order, to out; returns the node's spec.
    TreeSpec parse_node(std::vector<double>& out) {
        skip_ws();
        if (pos >= s.size()) fail("unexpected end of input");
        TreeSpec spec;
        const std::size_t self = out.size();
        out.push_back(std::numeric_limits<double>::quiet_NaN());
        if (s[pos] == '(') {
            ++pos;
            std::vector<double> kids;
            std::vector<TreeSpec> children;
            children.push_back(parse_node(kids));
            while (eat(',')) children.push_back(parse_node(kids));
            if (!eat(')')) fail("expected ',' or ')'");
            if (children.size() < 2) fail("interior node needs at least 2 children");
            spec.children = std::move(children);
            out.insert(out.end(), kids.begin(), kids.end());
        } else {
            std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            if (pos == start) fail("expected label or '('");
            spec.label = s.substr(start, pos - start);
        }
        if (eat(':')) {
            skip_ws();
            double v = 0.0;
            const char* begin = s.data() + pos;
            const auto res = std::from_chars(begin, s.data() + s.size(), v);
            if (res.ec != std::errc())
                fail("expected a number after ':'");
            pos += static_cast<std::size_t>(res.ptr - begin);
            out[self] = v;
        }
        return spec;
    }
};

} // namespace

ParsedTree parse_tree(const std::string& text) {
    TreeParser parser{text};
    std::vector<double> annotations;
    const TreeSpec spec = parser.parse_node(annotations);
    parser.skip_ws();
    if (parser.pos != text.size()) parser.fail("unexpected trailing text");

    ParsedTree result{Tree::build(spec), std::nullopt};
    // Annotation order is pre-order, matching node id assignment in build().
    if (!std::isnan(annotations[0]))
        throw ValidationError("tree: the root cannot carry a parameter");
    std::size_t annotated = 0;
    for (std::size_t id = 1; id < annotations.size(); ++id)
        if (!std::isnan(annotations[id])) ++annotated;
    if (annotated == annotations.size() - 1) {
        ParamVector params(annotations.size(), 0.0);
        for (std::size_t id = 1; id < annotations.size(); ++id) params[id] = annotations[id];
        validate_params(result.tree, params);
        result.params = std::move(params);
    } else if (annotated != 0) {
        throw ValidationError(
            "tree: annotate every non-root node with ':value' or none of them");
    }
    return result;
}

namespace {

void emit_node(const Tree& tree, int id, const ParamVector* params, std::string& out) {
    const Node& nd = tree.node(id);
    if (nd.is_terminal()) {
        out += nd.label;
    } else {
        out += '(';
        for (std::size_t c = 0; c < nd.children.size(); ++c) {
            if (c) out += ',';
            emit_node(tree, nd.children[c], params, out);
        }
        out += ')';
    }
    if (params && id != 0) {
        out += ':';
        out += format_double((*params)[id]);
    }
}

} // namespace

std::string serialize_tree(const Tree& tree) {
    std::string out;
    emit_node(tree, 0, nullptr, out);
    return out;
}

std::string serialize_tree(const Tree& tree, const ParamVector& params) {
    validate_params(tree, params);
    std::string out;
    emit_node(tree, 0, &params, out);
    return out;
}

} // namespace ndd
