#include "blowup/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "blowup/errors.hpp"

namespace blowup {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Table::Table(std::string name, std::vector<std::string> columns)
    : name_(std::move(name)), columns_(std::move(columns)) {
    for (const auto& c : columns_)
        if (c.empty() || c.find_first_of(" \t\n") != std::string::npos)
            throw DomainError("Table: column names must be single tokens");
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size())
        throw DomainError("Table " + name_ + ": row has " + std::to_string(row.size()) +
                          " cells, expected " + std::to_string(columns_.size()));
    std::vector<std::string> out;
    out.reserve(row.size());
    for (const auto& c : row) {
        if (auto d = std::get_if<double>(&c)) out.push_back(format_number(*d));
        else if (auto i = std::get_if<long long>(&c)) out.push_back(std::to_string(*i));
        else {
            const std::string& s = std::get<std::string>(c);
            if (s.empty() || s.find_first_of(" \t\n") != std::string::npos)
                throw DomainError("Table " + name_ + ": string cells must be single tokens");
            out.push_back(s);
        }
    }
    rows_.push_back(std::move(out));
}

size_t Table::column(const std::string& c) const {
    for (size_t k = 0; k < columns_.size(); ++k)
        if (columns_[k] == c) return k;
    throw DomainError("Table " + name_ + ": no column '" + c + "'");
}

double Table::num(size_t row, const std::string& col) const {
    const std::string& s = rows_.at(row)[column(col)];
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw DomainError("Table " + name_ + ": '" + s + "' is not a number");
    return v;
}

std::string Table::str(size_t row, const std::string& col) const { return rows_.at(row)[column(col)]; }

std::vector<double> Table::column_values(const std::string& col) const {
    std::vector<double> v;
    for (size_t r = 0; r < rows_.size(); ++r) v.push_back(num(r, col));
    return v;
}

std::string Table::render() const {
    std::ostringstream os;
    os << "# blowup-table 1\n# name " << name_ << "\n# columns";
    for (const auto& c : columns_) os << ' ' << c;
    os << '\n';
    for (const auto& r : rows_) {
        for (size_t k = 0; k < r.size(); ++k) os << (k ? " " : "") << r[k];
        os << '\n';
    }
    return os.str();
}

Table Table::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Table t;
    bool have_cols = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "name") ls >> t.name_;
            else if (key == "columns") {
                std::string c;
                while (ls >> c) t.columns_.push_back(c);
                have_cols = true;
            }
            continue;
        }
        if (!have_cols) throw std::runtime_error("Table::parse: data before the columns line");
        std::vector<std::string> row;
        std::string c;
        while (ls >> c) row.push_back(c);
        if (row.size() != t.columns_.size())
            throw std::runtime_error("Table::parse: ragged row in table " + t.name_);
        t.rows_.push_back(std::move(row));
    }
    if (!have_cols) throw std::runtime_error("Table::parse: missing columns line");
    return t;
}

Table Table::read(const std::string& path) { return parse(read_file(path)); }

void Table::write(const std::string& path) const { write_atomic(path, render()); }

void write_atomic(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Check make_check(std::string name, double value, std::string relation, double threshold,
                 std::string note) {
    Check c{std::move(name), value, std::move(relation), threshold, false, std::move(note)};
    if (c.relation == "<") c.pass = value < threshold;
    else if (c.relation == "<=") c.pass = value <= threshold;
    else if (c.relation == ">") c.pass = value > threshold;
    else if (c.relation == ">=") c.pass = value >= threshold;
    else if (c.relation == "==") c.pass = value == threshold;
    else throw DomainError("make_check: unknown relation " + c.relation);
    return c;
}

Table checks_table(const std::vector<Check>& checks) {
    Table t("checks", {"check", "value", "relation", "threshold", "verdict"});
    for (const auto& c : checks)
        t.add_row({c.name, c.value, c.relation, c.threshold, std::string(c.pass ? "PASS" : "FAIL")});
    return t;
}

}  // namespace blowup
