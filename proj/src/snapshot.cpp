#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "blowup/errors.hpp"
#include "blowup/pde_field.hpp"

namespace blowup {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_snapshot(const std::string& path, const AxiField& f,
                    const std::vector<std::pair<std::string, std::string>>& meta) {
    f.validate();
    const AxiGrid& g = *f.grid;
    std::ostringstream os;
    os << "# blowup-field 1\n";
    os << "# n " << g.n << "\n";
    os << "# kind " << to_string(g.kind) << "\n";
    os << "# radius " << fmt17(g.radius) << "\n";
    os << "# nr " << g.nr() << "\n";
    os << "# nz " << g.nz() << "\n";
    const Harmonic& h = f.harmonic;
    os << "# harmonic_c0 " << fmt17(h.c0) << "\n";
    os << "# harmonic_c1";
    for (Eigen::Index k = 0; k < h.c1.size(); ++k) os << ' ' << fmt17(h.c1(k));
    os << "\n# harmonic_c2";
    for (Eigen::Index a = 0; a < h.c2.rows(); ++a)
        for (Eigen::Index b = 0; b < h.c2.cols(); ++b) os << ' ' << fmt17(h.c2(a, b));
    os << "\n";
    for (const auto& [k, v] : meta) {
        if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw DomainError("write_snapshot: meta entries must be single tokens/lines");
        os << "# meta " << k << ' ' << v << "\n";
    }
    os << "# columns r z mode value\n";
    const int mode = f.mode();
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i)
            os << fmt17(g.r[i]) << ' ' << fmt17(g.z[j]) << ' ' << mode << ' '
               << fmt17(f.values[g.index(i, j)]) << "\n";

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("write_snapshot: cannot open " + tmp);
        out << os.str();
        if (!out) throw std::runtime_error("write_snapshot: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

AxiField read_snapshot(const std::string& path,
                       std::vector<std::pair<std::string, std::string>>* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
    AxiGrid g;
    size_t nr = 0, nz = 0;
    Harmonic h;
    std::vector<double> c1, c2;
    bool have_c0 = false;
    std::vector<double> rs, zs, vals;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "n") ls >> g.n;
            else if (key == "kind") {
                std::string k;
                ls >> k;
                g.kind = domain_kind_from_string(k);
            } else if (key == "radius") {
                std::string t;
                ls >> t;
                g.radius = std::stod(t);
            } else if (key == "nr") ls >> nr;
            else if (key == "nz") ls >> nz;
            else if (key == "harmonic_c0") {
                std::string t;
                ls >> t;
                h.c0 = std::stod(t);
                have_c0 = true;
            } else if (key == "harmonic_c1" || key == "harmonic_c2") {
                std::string t;
                auto& dst = key == "harmonic_c1" ? c1 : c2;
                while (ls >> t) dst.push_back(std::stod(t));
            } else if (key == "meta" && meta) {
                std::string k, v;
                ls >> k;
                std::getline(ls >> std::ws, v);
                meta->emplace_back(k, v);
            }
            continue;
        }
        std::string r, z, v;
        int mode = 0;
        if (!(ls >> r >> z >> mode >> v)) throw std::runtime_error("read_snapshot: bad row in " + path);
        rs.push_back(std::stod(r));
        zs.push_back(std::stod(z));
        vals.push_back(std::stod(v));
    }
    if (nr == 0 || nz == 0 || !have_c0 || vals.size() != nr * nz)
        throw std::runtime_error("read_snapshot: incomplete file " + path);
    g.r.assign(rs.begin(), rs.begin() + nr);
    for (size_t j = 0; j < nz; ++j) g.z.push_back(zs[j * nr]);
    g.validate();
    const int dim = g.n - 1;
    if (c1.size() != static_cast<size_t>(dim) || c2.size() != static_cast<size_t>(dim * dim))
        throw std::runtime_error("read_snapshot: harmonic block has the wrong size in " + path);
    h.dim = dim;
    h.c1 = Eigen::Map<Eigen::VectorXd>(c1.data(), dim);
    h.c2 = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        c2.data(), dim, dim);
    AxiField f(std::make_shared<const AxiGrid>(std::move(g)), h, std::move(vals));
    f.validate();
    return f;
}

}  // namespace blowup
