#pragma once

#include <string>
#include <variant>
#include <vector>

namespace blowup {

// Columnar text table:
//   # blowup-table 1
//   # name <name>
//   # columns c1 c2 ...
//   v11 v12 ...
// Numbers are written with 17 significant digits, so a reread is exact.
class Table {
public:
    using Cell = std::variant<double, long long, std::string>;

    Table() = default;
    Table(std::string name, std::vector<std::string> columns);

    const std::string& name() const { return name_; }
    const std::vector<std::string>& columns() const { return columns_; }
    size_t rows() const { return rows_.size(); }

    void add_row(std::vector<Cell> row);
    size_t column(const std::string& c) const;  // throws if absent
    double num(size_t row, const std::string& col) const;
    std::string str(size_t row, const std::string& col) const;
    std::vector<double> column_values(const std::string& col) const;

    std::string render() const;
    static Table parse(const std::string& text);
    static Table read(const std::string& path);
    void write(const std::string& path) const;

private:
    std::string name_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;  // stored rendered
};

std::string format_number(double v);

// tmp file + rename in the same directory
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// One acceptance check of a suite.
struct Check {
    std::string name;
    double value = 0.0;
    std::string relation;  // "<", "<=", ">=", ...
    double threshold = 0.0;
    bool pass = false;
    std::string note;
};

Check make_check(std::string name, double value, std::string relation, double threshold,
                 std::string note = "");
Table checks_table(const std::vector<Check>& checks);

}  // namespace blowup
