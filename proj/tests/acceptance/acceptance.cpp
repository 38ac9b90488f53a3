// Runs the shipped sample suites and prints one verdict line per criterion.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "blowup/config.hpp"
#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/report.hpp"
#include "blowup/runner.hpp"

namespace fs = std::filesystem;
using namespace blowup;

namespace {

struct Suite {
    RunOutcome out;
    double seconds = 0.0;
    std::string error;
};

std::map<std::string, Suite> suites;
std::string samples, work, log_text;

// stdout plus the report file
void say(const char* fmt, ...) {
    char buf[4096];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    std::fputs(buf, stdout);
    std::fflush(stdout);
    log_text += buf;
}

Suite& run_sample(const std::string& name, int threads) {
    Suite s;
    auto t0 = std::chrono::steady_clock::now();
    try {
        RunConfig c = load_config(samples + "/" + name + ".json");
        s.out = run(c, {work + "/" + name, threads});
    } catch (const std::exception& e) {
        s.error = e.what();
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    say("  [%s] %.1f s%s%s\n", name.c_str(), s.seconds, s.error.empty() ? "" : " error: ",
        s.error.c_str());
    return suites[name] = s;
}

struct Verdict {
    bool pass = true;
    std::string detail;

    void need(const std::string& suite, const std::vector<std::string>& names) {
        const Suite& s = suites.at(suite);
        if (!s.error.empty()) {
            pass = false;
            detail += " " + suite + ":error";
            return;
        }
        if (s.out.partial) {
            pass = false;
            detail += " " + suite + ":partial";
        }
        for (const auto& n : names) {
            const Check* c = nullptr;
            for (const auto& k : s.out.checks)
                if (k.name == n) c = &k;
            if (!c) {
                pass = false;
                detail += " " + n + "=missing";
                continue;
            }
            pass = pass && c->pass;
            detail += " " + n + "=" + num_str(c->value) + (c->pass ? "" : "(fail)");
        }
    }
    void budget(const std::string& suite, double limit_s) {
        double t = suites.at(suite).seconds;
        if (t > limit_s) pass = false;
        detail += " " + suite + "_time=" + num_str(t) + "s/" + num_str(limit_s) + "s";
    }
};

int failures = 0;

void report(int k, const char* what, const Verdict& v) {
    say("criterion %d %s: %s |%s\n", k, v.pass ? "PASS" : "FAIL", what, v.detail.c_str());
    if (!v.pass) ++failures;
}

std::vector<std::string> tables(const fs::path& dir) {
    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".tsv") out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    app.add_option("--samples", samples, "sample config directory")->required();
    app.add_option("--work", work, "scratch directory for runs")->required();
    CLI11_PARSE(app, argc, argv);
    fs::remove_all(work);
    fs::create_directories(work);

    const int t1 = default_threads();
    const std::vector<std::string> names{"verify_n5", "vp_n5",    "reduce_n5", "reduce_n4",
                                         "solve_n5",  "rates_n5", "rates_n4"};
    say("runs (threads %d)\n", t1);
    for (const auto& n : names) run_sample(n, t1);

    Verdict v1, v2, v3, v4, v5, v6, v7, v8;
    v1.need("verify_n5", {"bubble_residual_order", "bubble_residual_finest"});
    v1.budget("verify_n5", 60.0);
    report(1, "bubble exactness", v1);

    v2.need("verify_n5", {"kernel_residual_order", "kernel_residual_finest"});
    report(2, "kernel exactness", v2);

    v3.need("verify_n5", {"beta_vs_quadrature", "beta_identity", "bubble_energy_vs_quadrature"});
    v3.budget("verify_n5", 300.0);
    report(3, "closed-form cross-checks", v3);

    v4.need("vp_n5", {"vp_orthogonality", "vp_identity_gap_finest", "vp_identity_gap_increases",
                      "vp_quadratic_form_min", "vp_decay_slope_offset"});
    v4.budget("vp_n5", 900.0);
    report(4, "V_p certificate", v4);

    v5.need("reduce_n5", {"reduce_failed_cells", "expansion_A_gap", "expansion_C_gap", "expansion_argmax_gap"});
    v5.budget("reduce_n5", 1800.0);
    report(5, "expansion recovery", v5);

    v6.need("reduce_n5", {"phi_exponent_min"});
    v6.need("reduce_n4", {"reduce_failed_cells", "phi_over_rho_growth"});
    report(6, "remainder rate", v6);

    v7.need("rates_n5", {"run_complete", "max_certified_residual", "min_solution_value",
                         "rate_constant_gap", "rate_ratio_converging", "p_fit_monotone",
                         "amplitude_spread"});
    v7.budget("rates_n5", 3600.0);
    v7.need("rates_n4", {"run_complete", "max_certified_residual", "min_solution_value",
                         "rho_fit_minus_eps_fit_residual"});
    v7.budget("rates_n4", 3600.0);
    report(7, "blow-up law", v7);

    // re-run every suite from its manifest at another thread count
    const int t2 = t1 == 1 ? 2 : 1;
    say("reruns from manifests (threads %d)\n", t2);
    for (const auto& n : names) {
        fs::path a = fs::path(work) / n, b = fs::path(work) / (n + "_rerun");
        try {
            auto t0 = std::chrono::steady_clock::now();
            RunConfig c = load_config((a / "manifest.json").string());
            run(c, {b.string(), t2});
            double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            say("  [%s_rerun] %.1f s\n", n.c_str(), s);
            auto ta = tables(a), tb = tables(b);
            if (ta.empty() || ta != tb) {
                v8.pass = false;
                v8.detail += " " + n + ":table-set";
                continue;
            }
            int diff = 0;
            for (const auto& f : ta)
                if (read_file((a / f).string()) != read_file((b / f).string())) {
                    ++diff;
                    v8.detail += " " + n + "/" + f + ":differs";
                }
            if (diff) v8.pass = false;
            else v8.detail += " " + n + ":" + std::to_string(ta.size()) + "-identical";
        } catch (const std::exception& e) {
            v8.pass = false;
            v8.detail += " " + n + ":error(" + e.what() + ")";
        }
    }
    report(8, "determinism", v8);

    say("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    write_atomic(work + "/acceptance_report.txt", log_text);
    return failures ? 1 : 0;
}
