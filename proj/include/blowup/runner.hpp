#pragma once

#include <string>
#include <vector>

#include "blowup/config.hpp"
#include "blowup/report.hpp"

namespace blowup {

struct RunOptions {
    std::string out_dir;  // empty: config.output_dir
    int threads = 0;      // <= 0: current default
};

struct RunOutcome {
    std::string out_dir;
    std::vector<Check> checks;
    bool partial = false;
    std::string note;
    bool pass() const;
};

// Dispatches the command and writes into out_dir:
//   manifest.json   resolved config (re-runnable)
//   *.tsv           result tables
//   checks.tsv      verdict per acceptance check
//   summary.txt     human-readable digest
//   run_info.txt    threads and wall time (not a result)
//   fields/         snapshots (vp, solve, rates)
//   plot/           emit_plotdata output
RunOutcome run(RunConfig config, const RunOptions& opt = {});

// Per-figure columnar files under out_dir (default run_dir/plot) from the
// tables of a finished run.
void emit_plotdata(const std::string& run_dir, const std::string& out_dir = "");

// Exit status: 0 all checks pass, 1 some check failed or run partial.
int exit_status(const RunOutcome& r);

}  // namespace blowup
