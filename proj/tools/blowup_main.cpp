#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "blowup/config.hpp"
#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/report.hpp"
#include "blowup/runner.hpp"

// exit status: 0 all checks pass, 1 a check failed or the run is partial,
// 2 invalid configuration, 3 runtime failure
int main(int argc, char** argv) {
    CLI::App app{"Blow-up toolkit: closed forms, V_p, reduced energy, continuation runs"};
    app.require_subcommand(1);

    std::string config_path, out_dir, run_dir;
    int threads = 0;
    const char* commands[] = {"verify-closed-forms", "vp", "reduce", "solve", "rates"};
    for (const char* name : commands) {
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " suite");
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("--threads", threads, "worker threads (default: BLOWUP_THREADS or all cores)");
    }
    CLI::App* plot = app.add_subcommand("emit_plotdata", "write plot files from a finished run");
    plot->alias("plotdata");
    plot->add_option("--run", run_dir, "run directory")->required();
    plot->add_option("--out", out_dir, "destination (default: <run>/plot)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plot->parsed()) {
            blowup::emit_plotdata(run_dir, out_dir);
            return 0;
        }
        std::string cmd = app.get_subcommands().front()->get_name();
        blowup::RunConfig cfg = blowup::load_config(config_path);
        if (blowup::to_string(cfg.command) != cmd)
            throw blowup::ConfigError("command", "the config is for '" +
                                                     blowup::to_string(cfg.command) +
                                                     "', not '" + cmd + "'");
        blowup::set_threads(threads > 0 ? threads : blowup::default_threads());
        blowup::RunOutcome r = blowup::run(cfg, {out_dir, 0});
        std::cout << blowup::read_file(r.out_dir + "/summary.txt");
        return blowup::exit_status(r);
    } catch (const blowup::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
