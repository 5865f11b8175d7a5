#include "ndd/tree_search.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ndd/errors.hpp"
#include "ndd/num_format.hpp"

namespace ndd {

namespace {

bool valid_label(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

std::vector<std::string> default_labels(std::size_t p) {
    std::vector<std::string> out;
    out.reserve(p);
    for (std::size_t j = 0; j < p; ++j) out.push_back("X" + std::to_string(j + 1));
    return out;
}

// Higher log-likelihood wins; lower penalized criterion wins. Ties never
// win, so the baseline and lexicographic candidate order break them.
bool strictly_better(double v, double best, SearchCriterion kind) {
    return kind == SearchCriterion::loglik ? v > best : v < best;
}

double criterion_value(const FitResult& fr, SearchCriterion kind) {
    switch (kind) {
        case SearchCriterion::loglik: return fr.loglik;
        case SearchCriterion::aic: return fr.aic;
        default: return fr.bic;
    }
}

std::string join_sorted(std::vector<std::string> parts, char sep) {
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::string groups_key(const std::vector<std::vector<int>>& groups) {
    std::string key;
    for (std::size_t t = 0; t < groups.size(); ++t) {
        if (t > 0) key += '|';
        for (std::size_t i = 0; i < groups[t].size(); ++i) {
            if (i > 0) key += ',';
            key += std::to_string(groups[t][i]);
        }
    }
    return key;
}

void validate_block(const std::vector<int>& block, std::size_t p) {
    if (block.size() < 2) throw ValidationError("search: block needs at least 2 components");
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (block[i] < 0 || block[i] >= static_cast<int>(p))
            throw ValidationError("search: block column out of range");
        if (i > 0 && block[i] <= block[i - 1])
            throw ValidationError("search: block columns must be ascending and distinct");
    }
}

} // namespace

const char* criterion_name(SearchCriterion kind) {
    switch (kind) {
        case SearchCriterion::loglik: return "loglik";
        case SearchCriterion::aic: return "aic";
        default: return "bic";
    }
}

SearchCriterion criterion_from_name(const std::string& name) {
    if (name == "loglik") return SearchCriterion::loglik;
    if (name == "aic") return SearchCriterion::aic;
    if (name == "bic") return SearchCriterion::bic;
    throw ValidationError("unknown criterion '" + name + "' (expected loglik, aic, or bic)");
}

std::vector<SplitCandidate> enumerate_splits(int p) {
    if (p < 2) throw ValidationError("enumerate_splits: arity must be at least 2");
    std::vector<SplitCandidate> out;
    if (p == 2) return out;
    // Position 0 always lands in block_a, so each unordered bipartition
    // appears exactly once as the mask of positions 1..p-1 sent to block_b.
    const std::uint64_t top = std::uint64_t{1} << (p - 1);
    for (std::uint64_t mask = 1; mask + 1 <= top; ++mask) {
        SplitCandidate c;
        c.block_a.push_back(0);
        for (int j = 1; j < p; ++j) {
            if (mask >> (j - 1) & 1) c.block_b.push_back(j);
            else c.block_a.push_back(j);
        }
        const std::size_t lo = std::min(c.block_a.size(), c.block_b.size());
        c.kind = lo == 1 ? SplitCandidate::Kind::singleton : SplitCandidate::Kind::two_group;
        out.push_back(std::move(c));
    }
    return out;
}

std::string serialize_trace(const SearchTrace& trace) {
    const char* crit = criterion_name(trace.criterion);
    std::string out;
    for (const auto& d : trace.decisions) {
        out += "DECIDE " + d.node + " DD " + crit + " " + format_double(d.baseline) + "\n";
        for (const auto& c : d.candidates)
            out += "DECIDE " + d.node + " " + c.desc + " " + crit + " " +
                   format_double(c.value) + "\n";
        if (d.adopted) out += "ADOPT " + d.node + " " + d.chosen + "\n";
        else out += "STOP " + d.node + " DD\n";
    }
    return out;
}

SearchEngine::SearchEngine(const Matrix& x, std::vector<std::string> labels,
                           SearchOptions opts)
    : x_(x), labels_(std::move(labels)), opts_(opts) {
    if (x_.rows < 2) throw ValidationError("search: need at least 2 observations");
    if (x_.cols < 2) throw ValidationError("search: need at least 2 components");
    if (labels_.empty()) labels_ = default_labels(x_.cols);
    if (labels_.size() != x_.cols)
        throw ValidationError("search: label count does not match column count");
    for (const auto& s : labels_) {
        if (!valid_label(s))
            throw ValidationError("search: label '" + s + "' is not [A-Za-z0-9_]+");
    }
    auto sorted = labels_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("search: component labels must be distinct");
}

std::string SearchEngine::block_desc(const std::vector<int>& block) const {
    std::vector<std::string> names;
    names.reserve(block.size());
    for (int j : block) names.push_back(labels_[j]);
    return join_sorted(std::move(names), ',');
}

const SearchEngine::NodeFit& SearchEngine::fit_node(
    const std::vector<std::vector<int>>& groups) {
    const std::string key = groups_key(groups);
    if (auto it = cache_.find(key); it != cache_.end()) {
        ++hits_;
        return it->second;
    }
    const std::size_t k = groups.size();
    Matrix data(x_.rows, k);
    for (std::size_t i = 0; i < x_.rows; ++i) {
        double denom = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            double g = 0.0;
            for (int j : groups[t]) g += x_(i, j);
            data(i, t) = g;
            denom += g;
        }
        for (std::size_t t = 0; t < k; ++t) data(i, t) /= denom;
    }
    NodeFit nf;
    try {
        const SufficientStats stats = compute_stats(data);
        DdFit fit = dd_mle(stats, opts_.solver);
        nf.params = std::move(fit.params);
        nf.adjusted = dd_adjusted_loglik(nf.params, stats);
        nf.iterations = fit.report.iterations;
        nf.converged = fit.report.converged;
    } catch (const ValidationError& e) {
        throw ValidationError("search: node over [" + key + "]: " + e.what());
    } catch (const NumericError& e) {
        throw NumericError("search: node over [" + key + "]: " + e.what());
    }
    ++fits_;
    return cache_.emplace(key, std::move(nf)).first->second;
}

double SearchEngine::local_constant(const std::vector<int>& block) {
    std::string key;
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (i > 0) key += ',';
        key += std::to_string(block[i]);
    }
    if (auto it = constants_.find(key); it != constants_.end()) return it->second;
    double c = 0.0;
    for (std::size_t i = 0; i < x_.rows; ++i) {
        double s = 0.0;
        for (int j : block) s += x_(i, j);
        const double log_s = std::log(s);
        for (int j : block) c -= std::log(x_(i, j)) - log_s;
    }
    constants_.emplace(std::move(key), c);
    return c;
}

FitResult SearchEngine::assemble(const TreeSpec& spec, const std::vector<int>& block) {
    FitResult fr;
    fr.model.tree = Tree::build(spec);
    const Tree& tree = fr.model.tree;

    std::unordered_map<std::string, int> col_of;
    for (std::size_t j = 0; j < labels_.size(); ++j) col_of.emplace(labels_[j], j);
    std::vector<int> orig_col(tree.n_terminals());
    for (int t = 0; t < tree.n_terminals(); ++t) {
        auto it = col_of.find(tree.terminal_labels()[t]);
        if (it == col_of.end())
            throw ValidationError("search: unknown component '" +
                                  tree.terminal_labels()[t] + "'");
        orig_col[t] = it->second;
    }
    {
        std::vector<int> covered = orig_col;
        std::sort(covered.begin(), covered.end());
        if (covered != block)
            throw ValidationError("search: shape terminals do not match the block");
    }

    fr.model.params.assign(tree.node_count(), 0.0);
    double adjusted_sum = 0.0;
    for (int k : tree.nonterminals()) {
        const auto& children = tree.node(k).children;
        std::vector<std::vector<int>> groups;
        groups.reserve(children.size());
        for (int c : children) {
            std::vector<int> cols;
            for (int t : tree.subtree_columns(c)) cols.push_back(orig_col[t]);
            std::sort(cols.begin(), cols.end());
            groups.push_back(std::move(cols));
        }
        std::vector<std::size_t> order(groups.size());
        for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
        std::sort(order.begin(), order.end(), [&groups](std::size_t a, std::size_t b) {
            return groups[a].front() < groups[b].front();
        });
        std::vector<std::vector<int>> canonical;
        canonical.reserve(groups.size());
        for (std::size_t t : order) canonical.push_back(groups[t]);

        const NodeFit& nf = fit_node(canonical);
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            fr.model.params[children[order[pos]]] = nf.params.alpha[pos];
        adjusted_sum += nf.adjusted;
        fr.iterations += nf.iterations;
        fr.converged = fr.converged && nf.converged;
    }

    fr.n = x_.rows;
    fr.q = tree.node_count() - 1;
    fr.loglik = adjusted_sum + local_constant(block);
    fr.aic = -2.0 * fr.loglik + 2.0 * fr.q;
    fr.bic = -2.0 * fr.loglik + fr.q * std::log(static_cast<double>(fr.n));
    return fr;
}

TreeSpec SearchEngine::flat_spec(const std::vector<int>& block) const {
    TreeSpec spec;
    for (int j : block) spec.children.push_back(TreeSpec::leaf(labels_[j]));
    return spec;
}

FitResult SearchEngine::fit_flat(const std::vector<int>& block) {
    validate_block(block, x_.cols);
    return assemble(flat_spec(block), block);
}

FitResult SearchEngine::fit_candidate(const std::vector<int>& block,
                                      const SplitCandidate& cand) {
    validate_block(block, x_.cols);
    const int m = static_cast<int>(block.size());
    if (m < 3) throw ValidationError("search: no candidate splits below arity 3");
    {
        std::vector<int> all = cand.block_a;
        all.insert(all.end(), cand.block_b.begin(), cand.block_b.end());
        std::sort(all.begin(), all.end());
        bool ok = static_cast<int>(all.size()) == m;
        for (int t = 0; ok && t < m; ++t) ok = all[t] == t;
        if (!ok) throw ValidationError("search: candidate blocks must partition the arity");
        const std::size_t lo = std::min(cand.block_a.size(), cand.block_b.size());
        if (lo == 0) throw ValidationError("search: candidate block is empty");
        const bool singleton = lo == 1;
        if (singleton != (cand.kind == SplitCandidate::Kind::singleton))
            throw ValidationError("search: candidate kind does not match block sizes");
    }

    auto to_cols = [&block](const std::vector<int>& pos) {
        std::vector<int> cols;
        cols.reserve(pos.size());
        for (int t : pos) cols.push_back(block[t]);
        std::sort(cols.begin(), cols.end());
        return cols;
    };
    const std::vector<int> a = to_cols(cand.block_a);
    const std::vector<int> b = to_cols(cand.block_b);

    auto side_spec = [this](const std::vector<int>& cols) {
        return cols.size() == 1 ? TreeSpec::leaf(labels_[cols[0]]) : flat_spec(cols);
    };
    TreeSpec first = side_spec(a);
    TreeSpec second = side_spec(b);
    if (block_desc(b) < block_desc(a)) std::swap(first, second);
    TreeSpec spec;
    spec.children.push_back(std::move(first));
    spec.children.push_back(std::move(second));
    return assemble(spec, block);
}

TreeSpec SearchEngine::decide(const std::vector<int>& block, SearchTrace& trace) {
    if (block.size() == 2) return flat_spec(block);

    SearchTrace::Decision dec;
    dec.node = block_desc(block);
    dec.baseline = criterion_value(fit_flat(block), opts_.criterion);

    std::vector<SplitCandidate> cands = enumerate_splits(static_cast<int>(block.size()));
    std::vector<std::pair<std::string, std::size_t>> order;
    order.reserve(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const std::string da = block_desc(
            [&] { std::vector<int> c; for (int t : cands[i].block_a) c.push_back(block[t]); return c; }());
        const std::string db = block_desc(
            [&] { std::vector<int> c; for (int t : cands[i].block_b) c.push_back(block[t]); return c; }());
        order.emplace_back(db < da ? db + "|" + da : da + "|" + db, i);
    }
    std::sort(order.begin(), order.end());

    double best_v = dec.baseline;
    std::size_t best = cands.size();
    for (const auto& [desc, i] : order) {
        const double v = criterion_value(fit_candidate(block, cands[i]), opts_.criterion);
        dec.candidates.push_back({desc, v});
        if (strictly_better(v, best_v, opts_.criterion)) {
            best_v = v;
            best = i;
            dec.chosen = desc;
        }
    }

    if (best == cands.size()) {
        dec.chosen = "DD";
        dec.adopted = false;
        trace.decisions.push_back(std::move(dec));
        return flat_spec(block);
    }
    dec.adopted = true;
    trace.decisions.push_back(std::move(dec));

    std::vector<int> a, b;
    for (int t : cands[best].block_a) a.push_back(block[t]);
    for (int t : cands[best].block_b) b.push_back(block[t]);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (block_desc(b) < block_desc(a)) std::swap(a, b);

    auto descend = [this, &trace](const std::vector<int>& cols) {
        if (cols.size() == 1) return TreeSpec::leaf(labels_[cols[0]]);
        return decide(cols, trace);
    };
    TreeSpec spec;
    spec.children.push_back(descend(a));
    spec.children.push_back(descend(b));
    return spec;
}

SearchResult SearchEngine::run() {
    std::vector<int> all(x_.cols);
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
    SearchResult res;
    res.trace.criterion = opts_.criterion;
    const TreeSpec spec = decide(all, res.trace);
    res.fit = assemble(spec, all);
    res.trace.fits_performed = fits_;
    res.trace.cache_hits = hits_;
    return res;
}

FitResult SearchEngine::fit_shape(const TreeSpec& spec) {
    std::vector<int> all(x_.cols);
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
    return assemble(spec, all);
}

SearchResult search(const Matrix& x, std::vector<std::string> labels,
                    const SearchOptions& opts) {
    return SearchEngine(x, std::move(labels), opts).run();
}

namespace {

// All rooted multifurcating shapes over cols: pick the root's child
// partition, then every shape per multi-column part. Singleton root
// partitions are not partitions, so recursion terminates.
void all_shapes(const std::vector<int>& cols, const std::vector<std::string>& labels,
                std::vector<TreeSpec>& out) {
    const std::size_t m = cols.size();
    std::vector<int> assign(m, 0);
    const auto emit_partition = [&](int k) {
        if (k < 2) return;
        std::vector<std::vector<int>> parts(k);
        for (std::size_t i = 0; i < m; ++i) parts[assign[i]].push_back(cols[i]);

        std::vector<std::vector<TreeSpec>> options(parts.size());
        for (std::size_t t = 0; t < parts.size(); ++t) {
            if (parts[t].size() == 1) {
                options[t].push_back(TreeSpec::leaf(labels[parts[t][0]]));
            } else {
                all_shapes(parts[t], labels, options[t]);
            }
        }
        std::vector<std::size_t> pick(parts.size(), 0);
        for (;;) {
            TreeSpec spec;
            for (std::size_t t = 0; t < parts.size(); ++t)
                spec.children.push_back(options[t][pick[t]]);
            out.push_back(std::move(spec));
            std::size_t t = 0;
            while (t < parts.size() && ++pick[t] == options[t].size()) pick[t++] = 0;
            if (t == parts.size()) break;
        }
    };
    // Restricted growth strings enumerate set partitions once each.
    const auto walk = [&](auto&& self, std::size_t i, int k) -> void {
        if (i == m) {
            emit_partition(k);
            return;
        }
        for (int v = 0; v <= k; ++v) {
            assign[i] = v;
            self(self, i + 1, std::max(k, v + 1));
        }
    };
    walk(walk, 1, 1);
}

} // namespace

ExhaustiveResult exhaustive_search(const Matrix& x, std::vector<std::string> labels,
                                   const SearchOptions& opts) {
    SearchEngine engine(x, std::move(labels), opts);
    if (x.cols > 5)
        throw ValidationError("exhaustive search supports at most 5 components");
    std::vector<int> all(x.cols);
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
    std::vector<TreeSpec> shapes;
    all_shapes(all, engine.labels(), shapes);

    ExhaustiveResult res;
    res.trees_considered = shapes.size();
    bool have = false;
    double best_v = 0.0;
    for (const TreeSpec& spec : shapes) {
        FitResult fr = engine.fit_shape(spec);
        const double v = criterion_value(fr, opts.criterion);
        if (!have || strictly_better(v, best_v, opts.criterion)) {
            have = true;
            best_v = v;
            res.fit = std::move(fr);
        }
    }
    return res;
}

Matrix reorder_columns(const Matrix& x, const std::vector<std::string>& from,
                       const std::vector<std::string>& to) {
    if (from.size() != x.cols)
        throw ValidationError("reorder_columns: label count does not match columns");
    if (to.size() != from.size())
        throw ValidationError("reorder_columns: label sets differ in size");
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t j = 0; j < from.size(); ++j) {
        if (!idx.emplace(from[j], j).second)
            throw ValidationError("reorder_columns: duplicate label '" + from[j] + "'");
    }
    std::vector<std::size_t> src(to.size());
    for (std::size_t j = 0; j < to.size(); ++j) {
        auto it = idx.find(to[j]);
        if (it == idx.end())
            throw ValidationError("reorder_columns: label '" + to[j] + "' not present");
        src[j] = it->second;
        idx.erase(it);
    }
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = x(i, src[j]);
    return out;
}

} // namespace ndd
