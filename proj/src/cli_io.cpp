#include "ndd/cli_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ndd/diagnostics.hpp"
#include "ndd/errors.hpp"
#include "ndd/ndd_model.hpp"
#include "ndd/num_format.hpp"
#include "ndd/rng.hpp"
#include "ndd/special_functions.hpp"
#include "ndd/version.hpp"

namespace ndd {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

bool skippable(const std::string& line) {
    std::string_view t = trim(line);
    return t.empty() || t.front() == '#';
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::size_t end = (comma == std::string::npos) ? line.size() : comma;
        out.emplace_back(trim(std::string_view(line).substr(start, end - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += v[i];
    }
    return out;
}

double parse_cell(std::string_view tok, const std::string& where) {
    std::string_view t = tok;
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    double v = 0.0;
    const char* last = t.data() + t.size();
    auto [p, ec] = std::from_chars(t.data(), last, v);
    if (t.empty() || ec != std::errc{} || p != last)
        throw ValidationError(where + ": cannot parse '" + std::string(tok) +
                              "' as a number");
    if (!std::isfinite(v))
        throw ValidationError(where + ": non-finite value '" + std::string(tok) + "'");
    return v;
}

} // namespace

Dataset ingest_stream(std::istream& in, const std::string& source,
                      const IngestOptions& opts) {
    if (opts.zero_replace) {
        double eps = *opts.zero_replace;
        if (!std::isfinite(eps) || eps <= 0.0 || eps >= 1.0)
            throw ValidationError("zero-replace epsilon must be in (0, 1), got " +
                                  format_double(eps));
    }

    Dataset ds;
    ds.source = source;

    std::string line;
    std::vector<std::vector<double>> rows;
    std::size_t zero_cells = 0;
    std::size_t zero_rows = 0;
    std::size_t row_index = 0; // 1-based, skipped lines not counted

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (skippable(line)) continue;
        std::vector<std::string> fields = split_fields(line);

        if (ds.columns.empty()) {
            if (fields.size() < 2)
                throw ValidationError(source + ": header needs at least two columns, got " +
                                      std::to_string(fields.size()));
            std::set<std::string> seen;
            for (std::size_t j = 0; j < fields.size(); ++j) {
                if (fields[j].empty())
                    throw ValidationError(source + ": header column " +
                                          std::to_string(j + 1) + " is empty");
                if (!seen.insert(fields[j]).second)
                    throw ValidationError(source + ": duplicate column '" + fields[j] + "'");
            }
            ds.columns = std::move(fields);
            continue;
        }

        ++row_index;
        if (fields.size() != ds.columns.size())
            throw ValidationError(source + ": row " + std::to_string(row_index) +
                                  ": expected " + std::to_string(ds.columns.size()) +
                                  " fields, got " + std::to_string(fields.size()));

        std::vector<double> vals(ds.columns.size());
        bool row_zero = false;
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const std::string where = source + ": row " + std::to_string(row_index) +
                                      ", column '" + ds.columns[j] + "'";
            double v = parse_cell(fields[j], where);
            if (v < 0.0)
                throw ValidationError(where + ": negative component " + format_double(v));
            if (v == 0.0) {
                if (!opts.zero_replace)
                    throw ValidationError(where + ": zero component (use --zero-replace)");
                v = *opts.zero_replace;
                ++zero_cells;
                row_zero = true;
            }
            vals[j] = v;
        }
        if (row_zero) {
            ++zero_rows;
            double s = 0.0;
            for (double v : vals) s += v;
            for (double& v : vals) v /= s;
        }
        rows.push_back(std::move(vals));
    }

    if (ds.columns.empty()) throw ValidationError(source + ": no header row");
    if (rows.empty()) throw ValidationError(source + ": no data rows");

    if (zero_cells > 0)
        ds.actions.push_back("replaced " + std::to_string(zero_cells) +
                             " zero cell(s) in " + std::to_string(zero_rows) +
                             " row(s) with eps=" + format_double(*opts.zero_replace) +
                             " and re-closed those rows");

    const std::size_t n = rows.size();
    const std::size_t p = ds.columns.size();
    ds.x = Matrix(n, p);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : rows[i]) s += v;
        max_dev = std::max(max_dev, std::fabs(s - 1.0));
        if (opts.close) {
            for (std::size_t j = 0; j < p; ++j) ds.x(i, j) = rows[i][j] / s;
        } else {
            if (std::fabs(s - 1.0) > 1e-8)
                throw ValidationError(source + ": row " + std::to_string(i + 1) +
                                      ": sum " + format_double(s) +
                                      " is not 1 within 1e-08 (use --close)");
            for (std::size_t j = 0; j < p; ++j) ds.x(i, j) = rows[i][j];
        }
    }
    if (opts.close)
        ds.actions.push_back("closed all rows to unit sum (max |sum-1| = " +
                             format_double(max_dev) + ")");
    return ds;
}

Dataset ingest(const std::string& path, const IngestOptions& opts) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open data file '" + path + "'");
    return ingest_stream(f, path, opts);
}

namespace {

std::string resolve_tree_arg(const std::string& arg) {
    if (arg.empty() || arg.front() != '@') return arg;
    const std::string path = arg.substr(1);
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open tree file '" + path + "'");
    std::string line, text;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (skippable(line)) continue;
        if (!text.empty()) text += ' ';
        text += std::string(trim(line));
    }
    if (text.empty())
        throw ValidationError("tree file '" + path + "' holds no tree text");
    return text;
}

std::string csv_banner(const RunConfig& cfg, const Dataset* ds,
                       const std::vector<std::string>& extra = {}) {
    std::ostringstream b;
    b << "# " << kToolName << " " << kVersion << "\n"
      << "# command: " << cfg.command << "\n"
      << "# seed: " << cfg.seed << "\n"
      << "# criterion: " << criterion_name(cfg.criterion) << "\n"
      << "# grad_tol: " << format_double(cfg.grad_tol) << "\n"
      << "# max_iter: " << cfg.max_iter << "\n"
      << "# sp_tol: " << format_double(cfg.sp_tol) << "\n"
      << "# close: " << (cfg.close ? "true" : "false") << "\n"
      << "# zero_replace: "
      << (cfg.zero_replace ? format_double(*cfg.zero_replace) : std::string("none")) << "\n"
      << "# threads: " << cfg.threads << "\n"
      << "# n_draws: " << cfg.n_draws << "\n"
      << "# data: " << (cfg.data_path.empty() ? "-" : cfg.data_path) << "\n"
      << "# data_actions: "
      << ((ds && !ds->actions.empty()) ? join(ds->actions, "; ") : std::string("-")) << "\n"
      << "# tree: " << (cfg.tree_text.empty() ? "-" : cfg.tree_text) << "\n"
      << "# out: " << cfg.out_dir << "\n";
    for (const std::string& e : extra) b << "# " << e << "\n";
    return b.str();
}

ordered_json config_json(const RunConfig& cfg, const Dataset* ds) {
    ordered_json j;
    j["command"] = cfg.command;
    j["seed"] = cfg.seed;
    j["criterion"] = criterion_name(cfg.criterion);
    j["grad_tol"] = cfg.grad_tol;
    j["max_iter"] = cfg.max_iter;
    j["sp_tol"] = cfg.sp_tol;
    j["close"] = cfg.close;
    if (cfg.zero_replace)
        j["zero_replace"] = *cfg.zero_replace;
    else
        j["zero_replace"] = nullptr;
    j["threads"] = cfg.threads;
    j["n_draws"] = cfg.n_draws;
    if (cfg.data_path.empty())
        j["data"] = nullptr;
    else
        j["data"] = cfg.data_path;
    j["data_actions"] = ds ? ordered_json(ds->actions) : ordered_json::array();
    if (cfg.tree_text.empty())
        j["tree"] = nullptr;
    else
        j["tree"] = cfg.tree_text;
    j["out"] = cfg.out_dir;
    return j;
}

ordered_json fit_json(const FitResult& fr, const RunConfig& cfg, const Dataset* ds,
                      const SearchResult* sr) {
    ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kVersion;
    j["config"] = config_json(cfg, ds);
    j["tree"] = serialize_tree(fr.model.tree, fr.model.params);
    ordered_json alpha = ordered_json::object();
    for (int id = 1; id < fr.model.tree.node_count(); ++id)
        alpha[fr.model.tree.node(id).label] = fr.model.params[id];
    j["alpha"] = std::move(alpha);
    j["loglik"] = fr.loglik;
    j["aic"] = fr.aic;
    j["bic"] = fr.bic;
    j["q"] = fr.q;
    j["n"] = fr.n;
    j["criterion"] = criterion_name(cfg.criterion);
    j["converged"] = fr.converged;
    j["iterations"] = fr.iterations;
    if (sr) {
        ordered_json s;
        s["fits_performed"] = sr->trace.fits_performed;
        s["cache_hits"] = sr->trace.cache_hits;
        s["decisions"] = sr->trace.decisions.size();
        j["search"] = std::move(s);
    }
    return j;
}

fs::path prepare_out(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ValidationError("cannot create output directory '" + cfg.out_dir +
                              "': " + ec.message());
    return dir;
}

void write_artifact(const fs::path& dir, const std::string& name,
                    const std::string& content, std::ostream& out) {
    fs::path p = dir / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + p.generic_string() + "'");
    f << content;
    f.flush();
    if (!f) throw ValidationError("write failed for '" + p.generic_string() + "'");
    out << "wrote: " << p.generic_string() << "\n";
}

void print_fit_summary(std::ostream& out, const FitResult& fr) {
    out << "tree: " << serialize_tree(fr.model.tree, fr.model.params) << "\n"
        << "loglik: " << format_double(fr.loglik) << "\n"
        << "aic: " << format_double(fr.aic) << "\n"
        << "bic: " << format_double(fr.bic) << "\n"
        << "q: " << fr.q << "\n"
        << "n: " << fr.n << "\n"
        << "converged: " << (fr.converged ? "true" : "false") << "\n"
        << "iterations: " << fr.iterations << "\n";
}

void write_fit_artifacts(const fs::path& dir, const FitResult& fr,
                         const RunConfig& cfg, const Dataset* ds,
                         const SearchResult* sr, std::ostream& out) {
    write_artifact(dir, "fit.json", fit_json(fr, cfg, ds, sr).dump(2) + "\n", out);
    write_artifact(dir, "fitted_tree.txt",
                   csv_banner(cfg, ds) +
                       serialize_tree(fr.model.tree, fr.model.params) + "\n",
                   out);
    if (sr)
        write_artifact(dir, "trace.txt", csv_banner(cfg, ds) + serialize_trace(sr->trace),
                       out);
}

// Tree text for model-consuming commands; parameter annotations are required
// only when `need_params` (simulate, moments estimate nothing).
ParsedTree parse_tree_arg(const RunConfig& cfg, bool need_params) {
    ParsedTree pt = parse_tree(cfg.tree_text);
    if (need_params && !pt.params)
        throw ValidationError(cfg.command +
                              ": --tree must carry a ':value' parameter on every "
                              "non-root node");
    if (need_params) validate_params(pt.tree, *pt.params);
    return pt;
}

Matrix data_in_tree_order(const Dataset& ds, const Tree& tree) {
    try {
        return reorder_columns(ds.x, ds.columns, tree.terminal_labels());
    } catch (const ValidationError& e) {
        throw ValidationError("--tree terminals vs data columns: " + std::string(e.what()));
    }
}

void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    ParsedTree pt = parse_tree_arg(cfg, true);
    NddModel model{pt.tree, *pt.params};
    Rng rng(cfg.seed);
    Matrix draws = ndd_sample(model, cfg.n_draws, rng);

    std::ostringstream s;
    s << csv_banner(cfg, nullptr);
    s << join(pt.tree.terminal_labels(), ",") << "\n";
    for (std::size_t i = 0; i < draws.rows; ++i) {
        for (std::size_t j = 0; j < draws.cols; ++j) {
            if (j) s << ',';
            s << format_double(draws(i, j));
        }
        s << '\n';
    }
    out << "simulate: n=" << cfg.n_draws << " p=" << draws.cols
        << " seed=" << cfg.seed << "\n";
    write_artifact(prepare_out(cfg), "draws.csv", s.str(), out);
}

void cmd_moments(const RunConfig& cfg, std::ostream& out) {
    ParsedTree pt = parse_tree_arg(cfg, true);
    NddModel model{pt.tree, *pt.params};
    MomentSummary ms = ndd_moments(model);
    const std::vector<std::string>& labels = pt.tree.terminal_labels();
    const std::size_t p = labels.size();

    std::ostringstream mo;
    mo << csv_banner(cfg, nullptr) << "component,mean,sd\n";
    for (std::size_t j = 0; j < p; ++j)
        mo << labels[j] << ',' << format_double(ms.mean[j]) << ','
           << format_double(ms.sd[j]) << '\n';

    std::ostringstream co;
    co << csv_banner(cfg, nullptr) << "component," << join(labels, ",") << "\n";
    for (std::size_t i = 0; i < p; ++i) {
        co << labels[i];
        for (std::size_t j = 0; j < p; ++j) co << ',' << format_double(ms.corr(i, j));
        co << '\n';
    }

    out << "component mean sd\n";
    for (std::size_t j = 0; j < p; ++j)
        out << labels[j] << ' ' << format_double(ms.mean[j]) << ' '
            << format_double(ms.sd[j]) << "\n";
    fs::path dir = prepare_out(cfg);
    write_artifact(dir, "moments.csv", mo.str(), out);
    write_artifact(dir, "corr.csv", co.str(), out);
}

void cmd_fit(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = ingest(cfg.data_path, {cfg.close, cfg.zero_replace});
    ParsedTree pt = parse_tree_arg(cfg, false); // any ':value' is re-estimated
    Matrix xr = data_in_tree_order(ds, pt.tree);
    SolverOptions sopts{cfg.grad_tol, cfg.max_iter};
    FitResult fr = ndd_mle(pt.tree, xr, sopts);
    print_fit_summary(out, fr);
    write_fit_artifacts(prepare_out(cfg), fr, cfg, &ds, nullptr, out);
}

void cmd_search(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = ingest(cfg.data_path, {cfg.close, cfg.zero_replace});
    SearchOptions sopts{cfg.criterion, SolverOptions{cfg.grad_tol, cfg.max_iter}};
    SearchResult sr = search(ds.x, ds.columns, sopts);
    out << "criterion: " << criterion_name(cfg.criterion) << "\n";
    print_fit_summary(out, sr.fit);
    out << "fits: " << sr.trace.fits_performed << "\n"
        << "cache_hits: " << sr.trace.cache_hits << "\n";
    write_fit_artifacts(prepare_out(cfg), sr.fit, cfg, &ds, &sr, out);
}

void cmd_diagnose(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = ingest(cfg.data_path, {cfg.close, cfg.zero_replace});
    SolverOptions sopts{cfg.grad_tol, cfg.max_iter};

    FitResult fr;
    SearchResult sr;
    bool searched = false;
    Matrix xr;
    if (!cfg.tree_text.empty()) {
        ParsedTree pt = parse_tree_arg(cfg, false);
        xr = data_in_tree_order(ds, pt.tree);
        fr = ndd_mle(pt.tree, xr, sopts);
    } else {
        sr = search(ds.x, ds.columns, SearchOptions{cfg.criterion, sopts});
        fr = sr.fit;
        searched = true;
        xr = data_in_tree_order(ds, fr.model.tree);
    }
    const Tree& tree = fr.model.tree;
    const std::vector<std::string>& labels = tree.terminal_labels();
    const std::size_t n = xr.rows;
    const std::size_t p = xr.cols;

    ResidualMatrix rm = pseudo_residuals(fr.model, xr);
    InfluenceReport ir = influence_report(tree, xr, InfluenceOptions{sopts, cfg.threads});

    print_fit_summary(out, fr);
    out << "clamped_cells: " << rm.clamp_count << "\n";
    std::size_t ld_at = 0, ai_at = 0;
    bool ld_any = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(ir.ld[i]) && (!ld_any || ir.ld[i] > ir.ld[ld_at])) {
            ld_at = i;
            ld_any = true;
        }
        if (ir.aitch[i] > ir.aitch[ai_at]) ai_at = i;
    }
    if (ld_any)
        out << "max_ld: row " << (ld_at + 1) << " value " << format_double(ir.ld[ld_at])
            << "\n";
    out << "max_aitchison: row " << (ai_at + 1) << " value "
        << format_double(ir.aitch[ai_at]) << "\n";

    fs::path dir = prepare_out(cfg);
    write_fit_artifacts(dir, fr, cfg, &ds, searched ? &sr : nullptr, out);

    std::ostringstream rs;
    rs << csv_banner(cfg, &ds, {"clamped_cells: " + std::to_string(rm.clamp_count)});
    rs << "row," << join(labels, ",") << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        rs << (i + 1);
        for (std::size_t j = 0; j < p; ++j) rs << ',' << format_double(rm.r(i, j));
        rs << '\n';
    }
    write_artifact(dir, "residuals.csv", rs.str(), out);

    std::ostringstream qq;
    qq << csv_banner(cfg, &ds) << "component,rank,theoretical,residual\n";
    std::vector<double> col(n);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = rm.r(i, j);
        std::sort(col.begin(), col.end());
        for (std::size_t i = 0; i < n; ++i) {
            double q = norm_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
            qq << labels[j] << ',' << (i + 1) << ',' << format_double(q) << ','
               << format_double(col[i]) << '\n';
        }
    }
    write_artifact(dir, "qq.csv", qq.str(), out);

    std::ostringstream inf;
    inf << csv_banner(cfg, &ds) << "row,ld,aitchison,refit_iterations,refit_failed\n";
    for (std::size_t i = 0; i < n; ++i)
        inf << (i + 1) << ',' << format_double(ir.ld[i]) << ','
            << format_double(ir.aitch[i]) << ',' << ir.refit_iterations[i] << ','
            << static_cast<int>(ir.refit_failed[i]) << '\n';
    write_artifact(dir, "influence.csv", inf.str(), out);

    std::vector<double> grid;
    grid.reserve(199);
    for (int g = 1; g < 200; ++g) grid.push_back(static_cast<double>(g) / 200.0);
    for (std::size_t j = 0; j < p; ++j) {
        MarginalTable mt = marginal_fit_table(fr.model, static_cast<int>(j), grid);
        std::ostringstream mg;
        mg << csv_banner(cfg, &ds) << "x,pdf,cdf\n";
        for (std::size_t g = 0; g < mt.x.size(); ++g)
            mg << format_double(mt.x[g]) << ',' << format_double(mt.pdf[g]) << ','
               << format_double(mt.cdf[g]) << '\n';
        write_artifact(dir, "marginal_" + labels[j] + ".csv", mg.str(), out);
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Nested Dirichlet models for compositional data", kToolName};
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
    app.require_subcommand(1);

    RunConfig cfg;
    std::string tree_arg;
    std::string criterion_str = "aic";

    auto add_out = [&](CLI::App* c) {
        c->add_option("--out", cfg.out_dir, "output directory, created if missing")
            ->capture_default_str();
    };
    auto add_data = [&](CLI::App* c) {
        c->add_option("--data", cfg.data_path,
                      "composition CSV: comma separator, header row, '#' comments")
            ->required();
        c->add_flag("--close", cfg.close, "renormalize every row to sum 1");
        c->add_option("--zero-replace", cfg.zero_replace,
                      "replace zero cells with EPS and re-close those rows");
    };
    auto add_tree = [&](CLI::App* c, bool required) {
        auto* o = c->add_option("--tree", tree_arg,
                                "tree text, or @FILE to read it ('#' lines skipped)");
        if (required) o->required();
    };
    auto add_solver = [&](CLI::App* c) {
        c->add_option("--criterion", criterion_str, "model choice: loglik|aic|bic")
            ->check(CLI::IsMember({"loglik", "aic", "bic"}))
            ->capture_default_str();
        c->add_option("--grad-tol", cfg.grad_tol,
                      "per-node gradient sup-norm target")
            ->capture_default_str();
        c->add_option("--max-iter", cfg.max_iter, "per-node iteration cap")
            ->capture_default_str();
    };

    CLI::App* c_search =
        app.add_subcommand("search", "greedy tree-structure search, then fit");
    add_data(c_search);
    add_solver(c_search);
    add_out(c_search);

    CLI::App* c_fit = app.add_subcommand("fit", "maximum likelihood for a fixed tree");
    add_data(c_fit);
    add_tree(c_fit, true);
    add_solver(c_fit);
    add_out(c_fit);

    CLI::App* c_sim =
        app.add_subcommand("simulate", "seeded draws from a parameterized tree");
    add_tree(c_sim, true);
    c_sim->add_option("--n", cfg.n_draws, "number of draws")->required();
    c_sim->add_option("--seed", cfg.seed, "64-bit seed of the SplitMix64 stream")
        ->capture_default_str();
    add_out(c_sim);

    CLI::App* c_mom = app.add_subcommand(
        "moments", "exact mean, sd, and correlation for a parameterized tree");
    add_tree(c_mom, true);
    add_out(c_mom);

    CLI::App* c_diag = app.add_subcommand(
        "diagnose", "residual, influence, and marginal diagnostics");
    add_data(c_diag);
    add_tree(c_diag, false); // searched under --criterion when absent
    add_solver(c_diag);
    c_diag->add_option("--threads", cfg.threads,
                       "worker threads for leave-one-out refits")
        ->capture_default_str();
    add_out(c_diag);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(std::move(rev));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        cfg.criterion = criterion_from_name(criterion_str);
        cfg.tree_text = resolve_tree_arg(tree_arg);
        if (cfg.threads < 1) throw ValidationError("--threads must be >= 1");
        if (cfg.max_iter < 1) throw ValidationError("--max-iter must be >= 1");
        if (!(cfg.grad_tol > 0.0) || !std::isfinite(cfg.grad_tol))
            throw ValidationError("--grad-tol must be positive");

        if (c_search->parsed()) {
            cfg.command = "search";
            cmd_search(cfg, out);
        } else if (c_fit->parsed()) {
            cfg.command = "fit";
            cmd_fit(cfg, out);
        } else if (c_sim->parsed()) {
            cfg.command = "simulate";
            if (cfg.n_draws < 1) throw ValidationError("simulate: --n must be >= 1");
            cmd_simulate(cfg, out);
        } else if (c_mom->parsed()) {
            cfg.command = "moments";
            cmd_moments(cfg, out);
        } else if (c_diag->parsed()) {
            cfg.command = "diagnose";
            cmd_diagnose(cfg, out);
        }
        return 0;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace ndd
