#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pmod/classify.hpp"
#include "pmod/portrait.hpp"
#include "pmod/preparation.hpp"

using namespace pmod;

namespace {

// the single table of defaults
struct Defaults {
    static constexpr double radius = 0.5;
    static constexpr double param_radius = 0.05;
    static constexpr double tol = 1e-8;
    static constexpr double compare_tol = 1e-6;
    static constexpr double relation_tol = 1e-6;
    static constexpr double hard_cap = 1e-3;
    static constexpr double delta = 0.2;
    static constexpr int nmax = 16;
    static constexpr double h = 1.5;
    static constexpr double h_check = 2.0;
    static constexpr int deg_w = 12;
    static constexpr int deg_eps = 6;
    static constexpr unsigned seed = 1;
    static inline const std::vector<double> grid = {-0.04, -0.01, 0.01, 0.04};
};

struct RunConfig {
    std::optional<double> radius, param_radius;
    double tol = Defaults::tol;
    double compare_tol = Defaults::compare_tol;
    double relation_tol = Defaults::relation_tol;
    double hard_cap = Defaults::hard_cap;
    double delta = Defaults::delta;
    int nmax = Defaults::nmax;
    double h = Defaults::h;
    double h_check = Defaults::h_check;
    int deg_w = Defaults::deg_w;
    int deg_eps = Defaults::deg_eps;
    unsigned seed = Defaults::seed;
    std::vector<double> grid, rays, radii;
    std::vector<std::string> inputs;
    std::string output, report;

    void check() const {
        for (double t : {tol, compare_tol, relation_tol, hard_cap})
            if (!(t > 0.0)) throw MisuseError("tolerances must be positive");
        if (!(delta > 0.0 && delta < M_PI / 2)) throw MisuseError("delta must lie in (0, pi/2)");
        if (nmax < 1) throw MisuseError("nmax must be positive");
        if (!(h > 0.0)) throw MisuseError("sampling height must be positive");
    }

    ModulusOptions modulus_options() const {
        ModulusOptions o;
        o.nmax = nmax;
        o.h = h;
        o.h_check = h_check;
        o.hard_cap = hard_cap;
        o.fatou.tol = tol;
        o.fatou.delta = delta;
        o.fatou.height = h;
        return o;
    }

    json to_json(const GermFamily* fam = nullptr) const {
        json j;
        j["radius"] = fam ? fam->r : radius.value_or(Defaults::radius);
        j["param_radius"] = fam ? fam->r_param : param_radius.value_or(Defaults::param_radius);
        j["tolerances"] = {{"solver", tol}, {"compare", compare_tol}, {"relation", relation_tol}, {"hard_cap", hard_cap}};
        j["delta"] = delta;
        j["nmax"] = nmax;
        j["h"] = h;
        j["h_check"] = h_check;
        j["deg_w"] = deg_w;
        j["deg_eps"] = deg_eps;
        j["seed"] = seed;
        j["grid"] = grid;
        j["rays"] = rays;
        j["radii"] = radii;
        j["inputs"] = inputs;
        j["output"] = output;
        if (!report.empty()) j["report"] = report;
        return j;
    }
};

GermFamily load_family(const std::string& path, const RunConfig& cfg) {
    GermFamily f;
    try {
        f = read_germ_file(path);
    } catch (const json::exception& e) {
        throw FormatError("malformed germ file " + path + ": " + e.what());
    }
    if (cfg.radius) f.r = *cfg.radius;
    if (cfg.param_radius) f.r_param = *cfg.param_radius;
    return f;
}

bool is_modulus_file(const json& j) { return j.is_object() && j.contains("records"); }

ModulusData load_modulus(const std::string& path) { return modulus_from_json(read_json_file(path)); }

void emit(const json& j, const std::string& path) {
    if (path.empty() || path == "-") std::cout << dump_stable(j);
    else write_json_file(path, j);
}

json with_config(json j, const RunConfig& cfg, const GermFamily* fam = nullptr) {
    j["config"] = cfg.to_json(fam);
    return j;
}

int cmd_validate(const RunConfig& cfg) {
    const GermFamily f = load_family(cfg.inputs.at(0), cfg);
    json j;
    j["label"] = f.label;
    j["kind"] = kind_name(f.kind);
    j["deg_w"] = f.series.deg_w();
    j["deg_eps"] = f.series.deg_eps();
    j["genericity_margin"] = genericity_margin(f);
    j["generic"] = is_generic(f);
    if (f.kind == FamilyKind::Antiholomorphic) {
        json r = json::object();
        for (const auto& [k, v] : prepared_form_residuals(f)) r[k] = v;
        j["prepared_form_residuals"] = r;
    }
    emit(with_config(j, cfg, &f), cfg.output);
    return is_generic(f) ? 0 : 2;
}

int cmd_prepare(const RunConfig& cfg) {
    const GermFamily f = load_family(cfg.inputs.at(0), cfg);
    PrepareOptions po;
    const PrepareResult r = prepare(f, po);
    if (cfg.output.empty()) throw MisuseError("prepare needs -o");
    write_germ_file(cfg.output, r.prepared);
    json rep = with_config(preparation_report(r), cfg, &f);
    if (!cfg.report.empty()) write_json_file(cfg.report, rep);
    else std::cout << dump_stable(rep);
    return 0;
}

int cmd_modulus(const RunConfig& cfg) {
    const GermFamily f = load_family(cfg.inputs.at(0), cfg);
    const ModulusOptions o = cfg.modulus_options();
    ModulusData m;
    if (!cfg.rays.empty()) {
        const std::vector<double> radii = cfg.radii.empty() ? std::vector<double>{0.01} : cfg.radii;
        m = strong_modulus(f, cfg.rays, radii, o);
    } else {
        m = weak_modulus(f, cfg.grid.empty() ? Defaults::grid : cfg.grid, o);
    }
    emit(with_config(modulus_to_json(m), cfg, &f), cfg.output);
    return 0;
}

int cmd_compare(const RunConfig& cfg) {
    if (cfg.inputs.size() != 2) throw MisuseError("compare needs two modulus files");
    const ModulusData a = load_modulus(cfg.inputs[0]);
    const ModulusData b = load_modulus(cfg.inputs[1]);
    const EquivalenceReport r = compare_moduli(a, b, cfg.compare_tol);
    emit(with_config(equivalence_to_json(r), cfg), cfg.output);
    return r.verdict == Verdict::Equivalent ? 0 : 2;
}

int cmd_sqrt(const std::string& action, const RunConfig& cfg, double eps, double half_width, int n) {
    const json in = read_json_file(cfg.inputs.at(0));
    if (action == "check") {
        ModulusData m;
        std::optional<GermFamily> f;
        if (is_modulus_file(in)) {
            m = modulus_from_json(in);
        } else {
            f = load_family(cfg.inputs[0], cfg);
            m = weak_modulus(*f, cfg.grid.empty() ? Defaults::grid : cfg.grid, cfg.modulus_options());
        }
        const SqrtTestResult r = square_root_test(m, cfg.relation_tol);
        emit(with_config(sqrt_test_to_json(r), cfg, f ? &*f : nullptr), cfg.output);
        return r.passes ? 0 : 2;
    }
    if (action == "extract") {
        const GermFamily g = load_family(cfg.inputs[0], cfg);
        SqrtOptions so;
        so.modulus = cfg.modulus_options();
        so.tol = cfg.relation_tol;
        const SqrtExtraction x = extract_square_root(g, eps, square_grid(half_width, n), so);
        emit(with_config(sqrt_extraction_to_json(x), cfg, &g), cfg.output);
        return 0;
    }
    throw MisuseError("sqrt: action must be check or extract");
}

int cmd_curve(const RunConfig& cfg) {
    const json in = read_json_file(cfg.inputs.at(0));
    json j;
    ModulusRecord rec;
    int nmax = cfg.nmax;
    std::optional<GermFamily> f;
    if (is_modulus_file(in)) {
        const ModulusData m = modulus_from_json(in);
        nmax = m.nmax;
        bool found = false;
        for (const auto& r : m.records)
            if (r.param.modulus == 0.0) {
                rec = r;
                found = true;
            }
        if (!found) throw DataError("curve check: no record at eps = 0");
    } else {
        f = load_family(cfg.inputs[0], cfg);
        ModulusOptions o = cfg.modulus_options();
        rec = modulus_record(*f, SectorParam{0.0, 0.0}, o);
        if (!rec.valid) throw DataError("eps = 0 record invalid: " + rec.error);
        j["real_axis_defect"] = real_axis_defect(*f, 0.0);
    }
    const CurveTestResult r = invariant_curve_test(rec, nmax, cfg.relation_tol);
    j["invariant"] = r.invariant;
    j["residual"] = r.residual;
    j["tol"] = r.tol;
    j["record"] = record_to_json(rec, nmax);
    emit(with_config(j, cfg, f ? &*f : nullptr), cfg.output);
    return r.invariant ? 0 : 2;
}

int cmd_compat(const RunConfig& cfg, double eps) {
    const GermFamily f = load_family(cfg.inputs.at(0), cfg);
    CompatibilityOptions o;
    o.modulus = cfg.modulus_options();
    const CompatibilityResult r = compatibility_residual(f, eps, o);
    json j = compatibility_to_json(r);
    j["tol"] = cfg.relation_tol;
    j["passes"] = r.residual <= cfg.relation_tol;
    emit(with_config(j, cfg, &f), cfg.output);
    return r.residual <= cfg.relation_tol ? 0 : 2;
}

int cmd_portrait(const RunConfig& cfg, double eps, int orbits, int iterates) {
    const GermFamily f = load_family(cfg.inputs.at(0), cfg);
    PortraitOptions po;
    po.orbits = orbits;
    po.iterates = iterates;
    const auto pts = orbit_portrait(f, eps, po);
    if (cfg.output.empty() || cfg.output == "-") {
        write_portrait_csv(std::cout, pts);
    } else {
        std::ofstream out(cfg.output);
        if (!out) throw FormatError("cannot write " + cfg.output);
        write_portrait_csv(out, pts);
    }
    return 0;
}

int cmd_family(const std::string& name, const RunConfig& cfg, double b, double B0, double B1) {
    GermFamily f;
    if (name == "normal-form") f = normal_form_family(b, cfg.deg_w, cfg.deg_eps);
    else if (name == "time-one") f = model_time_one_family(b, cfg.deg_w, cfg.deg_eps);
    else if (name == "simple") f = simple_family(B0, B1, cfg.deg_w, cfg.deg_eps);
    else if (name == "random") f = random_generic_family(cfg.seed, cfg.deg_w, cfg.deg_eps);
    else throw MisuseError("unknown family " + name);
    if (cfg.radius) f.r = *cfg.radius;
    if (cfg.param_radius) f.r_param = *cfg.param_radius;
    if (cfg.output.empty() || cfg.output == "-") std::cout << dump_stable(germ_to_json(f));
    else write_germ_file(cfg.output, f);
    return 0;
}

void error_json(const std::string& kind, const std::string& msg) {
    json j;
    j["error"] = {{"kind", kind}, {"message", msg}};
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Moduli of unfoldings of antiholomorphic parabolic germs"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig cfg;
    double radius = Defaults::radius, param_radius = Defaults::param_radius;
    auto* o_radius = app.add_option("--radius", radius, "space radius r")->capture_default_str();
    auto* o_pradius = app.add_option("--param-radius", param_radius, "parameter radius r'")->capture_default_str();
    app.add_option("--tol", cfg.tol, "solver tolerance")->capture_default_str();
    app.add_option("--compare-tol", cfg.compare_tol, "modulus comparison tolerance")->capture_default_str();
    app.add_option("--relation-tol", cfg.relation_tol, "criterion tolerance (sqrt, curve, compat)")->capture_default_str();
    app.add_option("--hard-cap", cfg.hard_cap, "relation residual above which a record is invalid")->capture_default_str();
    app.add_option("--delta", cfg.delta, "sector margin")->capture_default_str();
    app.add_option("--nmax", cfg.nmax, "highest Fourier mode")->capture_default_str();
    app.add_option("--height", cfg.h, "sampling height above the reference level")->capture_default_str();
    app.add_option("--height-check", cfg.h_check, "second height for the independence check (0 = off)")
        ->capture_default_str();
    app.add_option("--deg-w", cfg.deg_w, "space truncation degree (generated families)")->capture_default_str();
    app.add_option("--deg-eps", cfg.deg_eps, "parameter truncation degree (generated families)")->capture_default_str();
    app.add_option("--seed", cfg.seed, "random seed for generated families")->capture_default_str();
    app.add_option("-o,--output", cfg.output, "output path (default stdout)");

    auto* validate = app.add_subcommand("validate", "check a germ file");
    validate->add_option("germ", cfg.inputs, "germ JSON")->required()->expected(1);

    auto* prep = app.add_subcommand("prepare", "reduce to prepared form in the canonical parameter");
    prep->add_option("germ", cfg.inputs, "germ JSON")->required()->expected(1);
    prep->add_option("--report", cfg.report, "report path");

    auto* mod = app.add_subcommand("modulus", "weak (--grid) or strong (--rays/--radii) modulus");
    mod->add_option("family", cfg.inputs, "prepared germ JSON")->required()->expected(1);
    mod->add_option("--grid", cfg.grid, "real parameter values")->delimiter(',');
    mod->add_option("--rays", cfg.rays, "lifted arguments")->delimiter(',');
    mod->add_option("--radii", cfg.radii, "parameter moduli for --rays")->delimiter(',');

    auto* cmp = app.add_subcommand("compare", "compare two moduli");
    cmp->add_option("moduli", cfg.inputs, "two modulus JSON files")->required()->expected(2);

    std::string sqrt_action;
    double sqrt_eps = -0.01, grid_half = 0.2;
    int grid_n = 20;
    auto* sq = app.add_subcommand("sqrt", "antiholomorphic square root: check | extract");
    sq->add_option("action", sqrt_action, "check or extract")->required();
    sq->add_option("family", cfg.inputs, "holomorphic germ JSON (or modulus JSON for check)")->required()->expected(1);
    sq->add_option("--grid", cfg.grid, "real parameter values (check)")->delimiter(',');
    sq->add_option("--eps", sqrt_eps, "parameter value (extract)")->capture_default_str();
    sq->add_option("--half-width", grid_half, "evaluation square half width")->capture_default_str();
    sq->add_option("--points", grid_n, "evaluation points per side")->capture_default_str();

    std::string curve_action;
    auto* cur = app.add_subcommand("curve", "invariant real-analytic curve test at eps = 0");
    cur->add_option("action", curve_action, "check")->required()->check(CLI::IsMember({"check"}));
    cur->add_option("family", cfg.inputs, "germ JSON or modulus JSON")->required()->expected(1);

    double compat_eps = 0.01;
    auto* cmpt = app.add_subcommand("compat", "compatibility residual at eps > 0");
    cmpt->add_option("family", cfg.inputs, "prepared germ JSON")->required()->expected(1);
    cmpt->add_option("--eps", compat_eps, "parameter value")->capture_default_str();

    double portrait_eps = -0.01;
    int orbits = 24, iterates = 400;
    auto* por = app.add_subcommand("portrait", "forward orbits and croissant boundaries as CSV");
    por->add_option("family", cfg.inputs, "germ JSON")->required()->expected(1);
    por->add_option("--eps", portrait_eps, "parameter value")->capture_default_str();
    por->add_option("--orbits", orbits, "number of seeds")->capture_default_str();
    por->add_option("--iterates", iterates, "max iterates per orbit")->capture_default_str();

    std::string fam_name;
    double fam_b = 0.0, fam_B0 = 0.5, fam_B1 = 0.25;
    auto* fam = app.add_subcommand("family", "write a test family: normal-form | time-one | simple | random");
    fam->add_option("name", fam_name, "family name")->required();
    fam->add_option("--b", fam_b, "formal invariant (models)")->capture_default_str();
    fam->add_option("--B0", fam_B0, "simple family B0")->capture_default_str();
    fam->add_option("--B1", fam_B1, "simple family B1")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_json("usage", e.what());
        return 1;
    }
    if (o_radius->count()) cfg.radius = radius;
    if (o_pradius->count()) cfg.param_radius = param_radius;
    try {
        cfg.check();
        if (*validate) return cmd_validate(cfg);
        if (*prep) return cmd_prepare(cfg);
        if (*mod) return cmd_modulus(cfg);
        if (*cmp) return cmd_compare(cfg);
        if (*sq) return cmd_sqrt(sqrt_action, cfg, sqrt_eps, grid_half, grid_n);
        if (*cur) return cmd_curve(cfg);
        if (*cmpt) return cmd_compat(cfg, compat_eps);
        if (*por) return cmd_portrait(cfg, portrait_eps, orbits, iterates);
        if (*fam) return cmd_family(fam_name, cfg, fam_b, fam_B0, fam_B1);
    } catch (const Error& e) {
        error_json(e.kind(), e.what());
        return 1;
    } catch (const json::exception& e) {
        error_json("format", e.what());
        return 1;
    } catch (const std::exception& e) {
        error_json("internal", e.what());
        return 1;
    }
    return 1;
}
