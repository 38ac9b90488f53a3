#include <doctest.h>

#include <filesystem>
#include <string>

#include "blowup/config.hpp"
#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/report.hpp"
#include "blowup/runner.hpp"

using namespace blowup;
namespace fs = std::filesystem;

namespace {

const char* kVerify = R"({
  "schema_version": 1,
  "command": "verify-closed-forms",
  "curvature": {"n": 5, "K": -1, "D": 2},
  "closed_forms": {"dims": [5], "D": [2],
                   "residual_h_bubble": [0.02, 0.01, 0.005], "residual_extent_bubble": 4}
})";

std::string field_of(const std::string& json) {
    try {
        parse_config(json);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("blowup_cli_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
    CHECK(field_of(R"({"schema_version":1,"command":"verify-closed-forms","curvature":{"n":5,"K":1,"D":2}})") ==
          "curvature.K");
    CHECK(field_of(R"({"schema_version":1,"command":"verify-closed-forms","curvature":{"n":5,"K":0,"D":2}})") ==
          "curvature.K");
    CHECK(field_of(R"({"schema_version":1,"command":"verify-closed-forms","curvature":{"n":5,"K":-1,"D":2},"bogus":1})") ==
          "bogus");
    CHECK(field_of(R"({"schema_version":1,"command":"fly","curvature":{"n":5,"K":-1,"D":2}})") == "command");
    CHECK(field_of(R"({"schema_version":7,"command":"vp","curvature":{"n":5,"K":-1,"D":2}})") == "schema_version");
    CHECK(field_of(R"({"schema_version":1,"command":"solve","curvature":{"n":5,"K":-1,"D":2}})") != "");
    CHECK(field_of(R"({"schema_version":1,"command":"verify-closed-forms","curvature":{"n":5,"K":-1,"D":2},
                      "closed_forms":{},"tolerances":{"rate_gap":-0.1}})") == "tolerances.rate_gap");
    CHECK(field_of(R"({"schema_version":1,"command":"verify-closed-forms","curvature":{"n":5,"K":-1,"D":2}})") ==
          "closed_forms");
    CHECK(field_of("{not json") == "config");
    CHECK(field_of(kVerify) == "");
}

TEST_CASE("resolved config round trip") {
    RunConfig c = parse_config(kVerify);
    std::string j = to_json(c);
    CHECK(to_json(parse_config(j)) == j);
    CHECK(j.find("\"tolerances\"") != std::string::npos);
    CHECK(command_from_string(to_string(Command::Rates)) == Command::Rates);
}

TEST_CASE("table round trip") {
    Table t("demo", {"a", "b", "c"});
    t.add_row({0.1, 3LL, std::string("x")});
    t.add_row({1.0 / 3.0, -7LL, std::string("y")});
    Table back = Table::parse(t.render());
    CHECK(back.render() == t.render());
    CHECK(back.num(1, "a") == 1.0 / 3.0);
    CHECK(back.str(0, "c") == "x");
    CHECK_THROWS(back.column("missing"));
}

TEST_CASE("verify run: exit status and determinism across thread counts") {
    RunConfig c = parse_config(kVerify);
    fs::path a = scratch("a"), b = scratch("b");
    RunOutcome r1 = run(c, {a.string(), 1});
    CHECK(exit_status(r1) == 0);
    CHECK(r1.pass());
    for (const char* f : {"manifest.json", "checks.tsv", "summary.txt", "plot/plot_residuals.tsv"})
        CHECK(fs::exists(a / f));

    RunConfig again = load_config((a / "manifest.json").string());
    RunOutcome r2 = run(again, {b.string(), 2});
    CHECK(exit_status(r2) == 0);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a))
        if (e.path().extension() == ".tsv") {
            CHECK(read_file(e.path().string()) == read_file((b / e.path().filename()).string()));
            ++compared;
        }
    CHECK(compared >= 3);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("a failing check gives a nonzero exit status") {
    RunConfig c = parse_config(kVerify);
    c.tolerances.residual_finest = 1e-30;
    fs::path a = scratch("fail");
    RunOutcome r = run(c, {a.string(), 1});
    CHECK(exit_status(r) == 1);
    fs::remove_all(a);
}

TEST_CASE("plot data") {
    CHECK_THROWS(emit_plotdata(scratch("missing").string()));
    // a solve run without rate tables: header-only file
    RunConfig c = parse_config(R"({"schema_version":1,"command":"solve","curvature":{"n":5,"K":-1,"D":2},
                                   "grid":{},"solve":{"eps_path":[0.05]}})");
    fs::path d = scratch("plot");
    fs::create_directories(d);
    write_atomic((d / "manifest.json").string(), to_json(c));
    emit_plotdata(d.string());
    Table t = Table::read((d / "plot" / "plot_delta.tsv").string());
    CHECK(t.rows() == 0);
    CHECK(t.columns().size() == 4);
    fs::remove_all(d);
}
