#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ndd/matrix.hpp"
#include "ndd/tree_search.hpp"

namespace ndd {

struct IngestOptions {
    bool close = false;                 // renormalize every row to sum 1
    std::optional<double> zero_replace; // zeros <- eps, affected rows re-closed
};

// A validated composition table: strictly positive entries, rows summing to
// 1 within 1e-8 after whatever transformations the options requested.
struct Dataset {
    std::vector<std::string> columns;
    Matrix x;
    std::string source;               // path or stream name, for messages
    std::vector<std::string> actions; // transformations applied, in order

    std::size_t n() const { return x.rows; }
    std::size_t p() const { return x.cols; }
};

// CSV dialect: comma separator, '.' decimal, mandatory header row. Lines
// that are blank or start with '#' are skipped, so artifacts written by the
// tool (which carry a '#' config banner) read back unchanged. No quoting.
// Errors name the data row (1-based, skipped lines not counted) and column.
Dataset ingest(const std::string& path, const IngestOptions& opts = {});
Dataset ingest_stream(std::istream& in, const std::string& source,
                      const IngestOptions& opts = {});

// Everything a run needs to be reproduced. Echoed into every artifact: as a
// '#' banner in CSVs, as a "config" object in JSON.
struct RunConfig {
    std::string command;
    std::uint64_t seed = 0;
    SearchCriterion criterion = SearchCriterion::aic;
    double grad_tol = 1e-9;  // per-node gradient sup-norm target
    int max_iter = 500;      // per-node iteration cap
    double sp_tol = 1e-14;   // saddlepoint root residual scale (fixed)
    bool close = false;
    std::optional<double> zero_replace;
    int threads = 1;         // leave-one-out refits only
    std::size_t n_draws = 0; // simulate only
    std::string data_path;   // empty when the command takes no data
    std::string tree_text;   // resolved text (after @FILE), empty if absent
    std::string out_dir = ".";
};

// Parse argv (program name excluded) and run one subcommand, writing
// artifacts under --out and a summary to `out`. Returns the process exit
// code: 0 success, 1 invalid input, 2 numeric failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

} // namespace ndd
