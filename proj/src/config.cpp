#include "blowup/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "blowup/errors.hpp"

namespace blowup {

using json = nlohmann::ordered_json;

std::string to_string(Command c) {
    switch (c) {
        case Command::VerifyClosedForms: return "verify-closed-forms";
        case Command::Vp: return "vp";
        case Command::Reduce: return "reduce";
        case Command::Solve: return "solve";
        case Command::Rates: return "rates";
    }
    return "?";
}

Command command_from_string(const std::string& s) {
    for (Command c : {Command::VerifyClosedForms, Command::Vp, Command::Reduce, Command::Solve,
                      Command::Rates})
        if (to_string(c) == s) return c;
    throw ConfigError("command", "unknown command '" + s +
                                     "' (verify-closed-forms, vp, reduce, solve, rates)");
}

namespace {

// Reads fields of one object, remembers which keys were consumed, and
// rejects leftovers so a misspelt key cannot silently fall back to a default.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "must be an object");
    }
    ~Reader() = default;

    std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }
    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!j_.contains(key)) return;
        used_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(field(key), "has the wrong type");
        }
    }
    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }
    Reader sub(const std::string& key) {
        used_.insert(key);
        return Reader(j_.at(key), field(key));
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Eigen::MatrixXd read_matrix(const json& j, long dim, const std::string& name) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "identity") return Eigen::MatrixXd::Identity(dim, dim);
        if (s == "zero") return Eigen::MatrixXd::Zero(dim, dim);
        if (s == "unit_tracefree") {
            if (dim < 2) throw ConfigError(name, "unit_tracefree needs dimension >= 2");
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
            m(0, 0) = 1.0 / std::sqrt(2.0);
            m(1, 1) = -1.0 / std::sqrt(2.0);
            return m;
        }
        throw ConfigError(name, "unknown preset '" + s + "' (identity, zero, unit_tracefree)");
    }
    if (j.is_number()) return j.get<double>() * Eigen::MatrixXd::Identity(dim, dim);
    if (!j.is_array() || static_cast<long>(j.size()) != dim)
        throw ConfigError(name, "expected a preset, a number or a " + std::to_string(dim) + "x" +
                                    std::to_string(dim) + " array");
    Eigen::MatrixXd m(dim, dim);
    for (long a = 0; a < dim; ++a) {
        if (!j[a].is_array() || static_cast<long>(j[a].size()) != dim)
            throw ConfigError(name, "row " + std::to_string(a) + " has the wrong length");
        for (long b = 0; b < dim; ++b) {
            if (!j[a][b].is_number()) throw ConfigError(name, "entries must be numbers");
            m(a, b) = j[a][b].get<double>();
        }
    }
    return m;
}

json write_matrix(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
        json row = json::array();
        for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
        rows.push_back(row);
    }
    return rows;
}

CurvaturePointData read_curvature(Reader r) {
    CurvaturePointData d;
    if (!r.has("n")) throw ConfigError("curvature.n", "required");
    r.get("n", d.n);
    if (d.n < 4 || d.n > 7) throw ConfigError("curvature.n", "supported dimensions are 4..7");
    if (!r.has("K")) throw ConfigError("curvature.K", "required");
    r.get("K", d.K);
    if (!(d.K < 0.0)) throw ConfigError("curvature.K", "scalar curvature K(p) must be negative");
    if (r.has("H") == r.has("D"))
        throw ConfigError("curvature.H", "give exactly one of H and D");
    if (r.has("H")) {
        r.get("H", d.H);
    } else {
        double D = 0.0;
        r.get("D", D);
        d.H = D * std::sqrt(-d.K) / std::sqrt(d.n * (d.n - 1.0));
    }
    d.hessK = Eigen::MatrixXd::Identity(d.n, d.n);
    d.hessH = Eigen::MatrixXd::Identity(d.n - 1, d.n - 1);
    d.h_ij = Eigen::MatrixXd::Zero(d.n - 1, d.n - 1);
    if (r.has("hessK")) d.hessK = read_matrix(r.raw("hessK"), d.n, r.field("hessK"));
    if (r.has("hessH")) d.hessH = read_matrix(r.raw("hessH"), d.n - 1, r.field("hessH"));
    if (r.has("h_ij")) d.h_ij = read_matrix(r.raw("h_ij"), d.n - 1, r.field("h_ij"));
    r.get("pi_norm_sq", d.pi_norm_sq);
    r.get("ric_nu", d.ric_nu);
    r.get("rbar", d.rbar);
    r.get("s_g", d.s_g);
    r.finish();
    try {
        d.validate();
    } catch (const ConfigError& e) {
        throw ConfigError("curvature." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
    return d;
}

void require_positive(double v, const std::string& name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name, "must be positive");
}

void require_path(const std::vector<double>& eps, const std::string& name, size_t min_len) {
    if (eps.size() < min_len)
        throw ConfigError(name, "needs at least " + std::to_string(min_len) + " values");
    for (size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0)) throw ConfigError(name, "values must be positive");
        if (k > 0 && !(eps[k] < eps[k - 1])) throw ConfigError(name, "must be strictly decreasing");
    }
}

}  // namespace

void RunConfig::validate() const {
    if (schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(schema_version));
    curvature.validate();
    const int n = curvature.n;
    auto need = [](bool present, const char* block) {
        if (!present) throw ConfigError(block, "block required by this command");
    };
    switch (command) {
        case Command::VerifyClosedForms: need(has_closed_forms, "closed_forms"); break;
        case Command::Vp: need(has_vp, "vp"); break;
        case Command::Reduce:
            need(has_grid, "grid");
            need(has_reduce, "reduce");
            break;
        case Command::Solve:
            need(has_grid, "grid");
            need(has_solve, "solve");
            break;
        case Command::Rates:
            need(has_rates, "rates");
            if (rates.run_dir.empty()) {
                need(has_grid, "grid");
                need(has_solve, "solve");
            }
            break;
    }
    if (has_grid) {
        require_positive(grid.h0_scaled, "grid.h0_scaled");
        if (!(grid.ratio > 1.0 && grid.ratio <= 1.5))
            throw ConfigError("grid.ratio", "must lie in (1, 1.5]");
        require_positive(grid.domain_radius_phys, "grid.domain_radius_phys");
        require_positive(grid.cutoff_radius_phys, "grid.cutoff_radius_phys");
        try {
            domain_kind_from_string(grid.kind);
        } catch (const std::exception&) {
            throw ConfigError("grid.kind", "unknown domain kind '" + grid.kind + "'");
        }
        try {
            flat_model().validate();
        } catch (const ConfigError& e) {
            std::string f = e.field();
            if (f.rfind("model.", 0) == 0) f = "grid." + f.substr(6);
            else if (f.rfind("grid.", 0) != 0) f = "curvature." + f;
            throw ConfigError(f, std::string(e.what()).substr(e.field().size() + 2));
        }
    }
    if (has_closed_forms) {
        const auto& b = closed_forms;
        if (b.dims.empty()) throw ConfigError("closed_forms.dims", "must not be empty");
        for (int d : b.dims)
            if (d < 4 || d > 7) throw ConfigError("closed_forms.dims", "supported dimensions are 4..7");
        if (b.D.empty()) throw ConfigError("closed_forms.D", "must not be empty");
        for (double D : b.D)
            if (!(D > 1.0)) throw ConfigError("closed_forms.D", "values must exceed 1");
        require_positive(b.quad_rel_tol, "closed_forms.quad_rel_tol");
        if (b.residual_h_bubble.size() < 3)
            throw ConfigError("closed_forms.residual_h_bubble", "needs at least 3 spacings");
        for (size_t k = 0; k < b.residual_h_bubble.size(); ++k) {
            require_positive(b.residual_h_bubble[k], "closed_forms.residual_h_bubble");
            if (k && !(b.residual_h_bubble[k] < b.residual_h_bubble[k - 1]))
                throw ConfigError("closed_forms.residual_h_bubble", "must be strictly decreasing");
        }
        require_positive(b.residual_extent_bubble, "closed_forms.residual_extent_bubble");
        if (b.residual_scheme != "high_order" && b.residual_scheme != "high_order6" &&
            b.residual_scheme != "variational")
            throw ConfigError("closed_forms.residual_scheme",
                              "one of variational, high_order, high_order6");
    }
    if (has_vp) {
        if (vp.h0_bubble.size() < 2) throw ConfigError("vp.h0_bubble", "needs at least 2 grids");
        for (size_t k = 0; k < vp.h0_bubble.size(); ++k) {
            require_positive(vp.h0_bubble[k], "vp.h0_bubble");
            if (k && !(vp.h0_bubble[k] < vp.h0_bubble[k - 1]))
                throw ConfigError("vp.h0_bubble", "must be strictly decreasing");
        }
        if (!(vp.ratio >= 1.0 && vp.ratio <= 1.5)) throw ConfigError("vp.ratio", "must lie in [1, 1.5]");
        require_positive(vp.radius_bubble, "vp.radius_bubble");
        require_positive(vp.cg_tol, "vp.cg_tol");
        if (curvature.h_ij.isZero(0.0))
            throw ConfigError("curvature.h_ij", "the vp suite needs a nonzero trace-free h_ij");
    }
    if (has_reduce) {
        if (reduce.d_grid.size() < 3) throw ConfigError("reduce.d_grid", "needs at least 3 values");
        for (double d : reduce.d_grid) require_positive(d, "reduce.d_grid");
        require_path(reduce.eps_path, "reduce.eps_path", 3);
        if (reduce.extrapolation_order < 0 ||
            reduce.extrapolation_order + 1 > static_cast<int>(reduce.eps_path.size()))
            throw ConfigError("reduce.extrapolation_order", "needs order + 1 <= number of eps values");
        require_positive(reduce.aux_tol, "reduce.aux_tol");
        if (reduce.aux_max_iter < 1) throw ConfigError("reduce.aux_max_iter", "must be >= 1");
        const auto& m = reduce.maximize;
        if (m.enabled) {
            require_path(m.eps, "reduce.maximize.eps", 1);
            if (!(m.s_lo_phys < m.s_hi_phys)) throw ConfigError("reduce.maximize.s_lo_phys", "need s_lo < s_hi");
            if (!(m.d_lo > 0.0 && m.d_lo < m.d_hi)) throw ConfigError("reduce.maximize.d_lo", "need 0 < d_lo < d_hi");
            if (m.ns < 5 || m.nd < 5) throw ConfigError("reduce.maximize.ns", "need at least 5 points per axis");
            if (m.refinements < 0) throw ConfigError("reduce.maximize.refinements", "must be >= 0");
        }
    }
    if (has_solve) {
        require_path(solve.eps_path, "solve.eps_path", 1);
        if (!(solve.d_init >= 0.0)) throw ConfigError("solve.d_init", "must be nonnegative");
        require_positive(solve.newton_tol, "solve.newton_tol");
        if (solve.newton_max_iter < 1) throw ConfigError("solve.newton_max_iter", "must be >= 1");
        require_positive(solve.negative_tol, "solve.negative_tol");
        require_positive(solve.aux_tol, "solve.aux_tol");
        if (!(solve.min_step_ratio > 0.0 && solve.min_step_ratio < 1.0))
            throw ConfigError("solve.min_step_ratio", "must lie in (0, 1)");
        if (n == 4 && solve.eps_path.front() > std::exp(-1.0))
            throw ConfigError("solve.eps_path", "n = 4 needs eps <= 1/e");
    }
    if (command == Command::Rates && rates.run_dir.empty() && solve.eps_path.size() < 3)
        throw ConfigError("solve.eps_path", "rates need at least 3 eps values");
    const Tolerances& t = tolerances;
    for (auto [v, name] : {std::pair{t.beta_vs_quadrature, "beta_vs_quadrature"},
                           {t.beta_identity, "beta_identity"},
                           {t.bubble_energy, "bubble_energy"},
                           {t.residual_order, "residual_order"},
                           {t.residual_finest, "residual_finest"},
                           {t.vp_orthogonality, "vp_orthogonality"},
                           {t.vp_identity, "vp_identity"},
                           {t.vp_slope, "vp_slope"},
                           {t.expansion_rel, "expansion_rel"},
                           {t.phi_exponent, "phi_exponent"},
                           {t.phi_ratio_growth, "phi_ratio_growth"},
                           {t.solve_residual, "solve_residual"},
                           {t.rate_gap, "rate_gap"},
                           {t.amplitude_spread, "amplitude_spread"},
                           {t.certificate_rel, "certificate_rel"}})
        require_positive(v, std::string("tolerances.") + name);
}

FlatModelSpec RunConfig::flat_model() const {
    FlatModelSpec m;
    m.data = curvature;
    m.domain_radius = grid.domain_radius_phys;
    m.cutoff_radius = grid.cutoff_radius_phys;
    m.k_cap = grid.k_cap;
    m.h_cap = grid.h_cap;
    m.s_model = grid.s_model;
    m.h0 = grid.h0_scaled;
    m.ratio = grid.ratio;
    m.kind = domain_kind_from_string(grid.kind);
    return m;
}

ContinuationSpec RunConfig::continuation_spec() const {
    ContinuationSpec s;
    s.model = flat_model();
    s.eps_path = solve.eps_path;
    s.d_init = solve.d_init;
    s.newton.tol = solve.newton_tol;
    s.newton.max_iter = solve.newton_max_iter;
    s.newton.negative_tol = solve.negative_tol;
    s.aux.tol = solve.aux_tol;
    s.min_step_ratio = solve.min_step_ratio;
    s.shooting_fallback = solve.shooting_fallback;
    return s;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("not valid JSON: ") + e.what());
    }
    Reader top(j, "");
    RunConfig c;
    if (!top.has("schema_version")) throw ConfigError("schema_version", "required");
    top.get("schema_version", c.schema_version);
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version));
    if (!top.has("command")) throw ConfigError("command", "required");
    std::string cmd;
    top.get("command", cmd);
    c.command = command_from_string(cmd);
    if (!top.has("curvature")) throw ConfigError("curvature", "required");
    c.curvature = read_curvature(top.sub("curvature"));
    top.get("output_dir", c.output_dir);

    if (top.has("grid")) {
        c.has_grid = true;
        Reader r = top.sub("grid");
        auto& g = c.grid;
        r.get("h0_scaled", g.h0_scaled);
        r.get("ratio", g.ratio);
        r.get("domain_radius_phys", g.domain_radius_phys);
        r.get("cutoff_radius_phys", g.cutoff_radius_phys);
        r.get("kind", g.kind);
        r.get("k_cap", g.k_cap);
        r.get("h_cap", g.h_cap);
        r.get("s_model", g.s_model);
        r.finish();
    }
    if (top.has("closed_forms")) {
        c.has_closed_forms = true;
        Reader r = top.sub("closed_forms");
        auto& b = c.closed_forms;
        r.get("dims", b.dims);
        r.get("D", b.D);
        r.get("quad_rel_tol", b.quad_rel_tol);
        r.get("residual_h_bubble", b.residual_h_bubble);
        r.get("residual_extent_bubble", b.residual_extent_bubble);
        r.get("residual_scheme", b.residual_scheme);
        r.finish();
    }
    if (top.has("vp")) {
        c.has_vp = true;
        Reader r = top.sub("vp");
        r.get("h0_bubble", c.vp.h0_bubble);
        r.get("ratio", c.vp.ratio);
        r.get("radius_bubble", c.vp.radius_bubble);
        r.get("cg_tol", c.vp.cg_tol);
        r.finish();
    }
    if (top.has("reduce")) {
        c.has_reduce = true;
        Reader r = top.sub("reduce");
        auto& b = c.reduce;
        r.get("d_grid", b.d_grid);
        r.get("eps_path", b.eps_path);
        r.get("extrapolation_order", b.extrapolation_order);
        r.get("aux_tol", b.aux_tol);
        r.get("aux_max_iter", b.aux_max_iter);
        if (r.has("maximize")) {
            Reader m = r.sub("maximize");
            auto& x = b.maximize;
            m.get("enabled", x.enabled);
            m.get("eps", x.eps);
            m.get("s_lo_phys", x.s_lo_phys);
            m.get("s_hi_phys", x.s_hi_phys);
            m.get("d_lo", x.d_lo);
            m.get("d_hi", x.d_hi);
            m.get("ns", x.ns);
            m.get("nd", x.nd);
            m.get("refinements", x.refinements);
            m.finish();
        }
        r.finish();
    }
    if (top.has("solve")) {
        c.has_solve = true;
        Reader r = top.sub("solve");
        auto& b = c.solve;
        r.get("eps_path", b.eps_path);
        r.get("d_init", b.d_init);
        r.get("newton_tol", b.newton_tol);
        r.get("newton_max_iter", b.newton_max_iter);
        r.get("negative_tol", b.negative_tol);
        r.get("aux_tol", b.aux_tol);
        r.get("min_step_ratio", b.min_step_ratio);
        r.get("shooting_fallback", b.shooting_fallback);
        r.finish();
    }
    if (top.has("rates")) {
        c.has_rates = true;
        Reader r = top.sub("rates");
        r.get("run_dir", c.rates.run_dir);
        r.get("f_term", c.rates.f_term);
        r.finish();
    }
    if (top.has("tolerances")) {
        Reader r = top.sub("tolerances");
        auto& t = c.tolerances;
        r.get("beta_vs_quadrature", t.beta_vs_quadrature);
        r.get("beta_identity", t.beta_identity);
        r.get("bubble_energy", t.bubble_energy);
        r.get("residual_order", t.residual_order);
        r.get("residual_finest", t.residual_finest);
        r.get("vp_orthogonality", t.vp_orthogonality);
        r.get("vp_identity", t.vp_identity);
        r.get("vp_slope", t.vp_slope);
        r.get("expansion_rel", t.expansion_rel);
        r.get("phi_exponent", t.phi_exponent);
        r.get("phi_ratio_growth", t.phi_ratio_growth);
        r.get("solve_residual", t.solve_residual);
        r.get("rate_gap", t.rate_gap);
        r.get("amplitude_spread", t.amplitude_spread);
        r.get("certificate_rel", t.certificate_rel);
        r.finish();
    }
    top.finish();
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const RunConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["command"] = to_string(c.command);
    const auto& d = c.curvature;
    json cv;
    cv["n"] = d.n;
    cv["K"] = d.K;
    cv["H"] = d.H;
    cv["hessK"] = write_matrix(d.hessK);
    cv["hessH"] = write_matrix(d.hessH);
    cv["h_ij"] = write_matrix(d.h_ij);
    cv["pi_norm_sq"] = d.pi_norm_sq;
    cv["ric_nu"] = d.ric_nu;
    cv["rbar"] = d.rbar;
    cv["s_g"] = d.s_g;
    j["curvature"] = cv;
    j["output_dir"] = c.output_dir;
    if (c.has_grid) {
        const auto& g = c.grid;
        j["grid"] = {{"h0_scaled", g.h0_scaled},
                     {"ratio", g.ratio},
                     {"domain_radius_phys", g.domain_radius_phys},
                     {"cutoff_radius_phys", g.cutoff_radius_phys},
                     {"kind", g.kind},
                     {"k_cap", g.k_cap},
                     {"h_cap", g.h_cap},
                     {"s_model", g.s_model}};
    }
    if (c.has_closed_forms) {
        const auto& b = c.closed_forms;
        j["closed_forms"] = {{"dims", b.dims},
                             {"D", b.D},
                             {"quad_rel_tol", b.quad_rel_tol},
                             {"residual_h_bubble", b.residual_h_bubble},
                             {"residual_extent_bubble", b.residual_extent_bubble},
                             {"residual_scheme", b.residual_scheme}};
    }
    if (c.has_vp)
        j["vp"] = {{"h0_bubble", c.vp.h0_bubble},
                   {"ratio", c.vp.ratio},
                   {"radius_bubble", c.vp.radius_bubble},
                   {"cg_tol", c.vp.cg_tol}};
    if (c.has_reduce) {
        const auto& b = c.reduce;
        const auto& m = b.maximize;
        j["reduce"] = {{"d_grid", b.d_grid},
                       {"eps_path", b.eps_path},
                       {"extrapolation_order", b.extrapolation_order},
                       {"aux_tol", b.aux_tol},
                       {"aux_max_iter", b.aux_max_iter},
                       {"maximize",
                        {{"enabled", m.enabled},
                         {"eps", m.eps},
                         {"s_lo_phys", m.s_lo_phys},
                         {"s_hi_phys", m.s_hi_phys},
                         {"d_lo", m.d_lo},
                         {"d_hi", m.d_hi},
                         {"ns", m.ns},
                         {"nd", m.nd},
                         {"refinements", m.refinements}}}};
    }
    if (c.has_solve) {
        const auto& b = c.solve;
        j["solve"] = {{"eps_path", b.eps_path},
                      {"d_init", b.d_init},
                      {"newton_tol", b.newton_tol},
                      {"newton_max_iter", b.newton_max_iter},
                      {"negative_tol", b.negative_tol},
                      {"aux_tol", b.aux_tol},
                      {"min_step_ratio", b.min_step_ratio},
                      {"shooting_fallback", b.shooting_fallback}};
    }
    if (c.has_rates) j["rates"] = {{"run_dir", c.rates.run_dir}, {"f_term", c.rates.f_term}};
    const auto& t = c.tolerances;
    j["tolerances"] = {{"beta_vs_quadrature", t.beta_vs_quadrature},
                       {"beta_identity", t.beta_identity},
                       {"bubble_energy", t.bubble_energy},
                       {"residual_order", t.residual_order},
                       {"residual_finest", t.residual_finest},
                       {"vp_orthogonality", t.vp_orthogonality},
                       {"vp_identity", t.vp_identity},
                       {"vp_slope", t.vp_slope},
                       {"expansion_rel", t.expansion_rel},
                       {"phi_exponent", t.phi_exponent},
                       {"phi_ratio_growth", t.phi_ratio_growth},
                       {"solve_residual", t.solve_residual},
                       {"rate_gap", t.rate_gap},
                       {"amplitude_spread", t.amplitude_spread},
                       {"certificate_rel", t.certificate_rel}};
    return j.dump(2) + "\n";
}

}  // namespace blowup
