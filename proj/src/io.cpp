#include "pmod/io.hpp"

#include <fstream>
#include <sstream>

namespace pmod {

json series_to_json(const Series& s, FamilyKind kind) {
    json j;
    j["kind"] = kind_name(kind);
    j["deg_w"] = s.deg_w();
    j["deg_eps"] = s.deg_eps();
    json coeffs = json::array();
    for (int jj = 0; jj <= s.deg_w(); ++jj)
        for (int k = 0; k <= s.deg_eps(); ++k) {
            const cplx c = s(jj, k);
            if (c == cplx(0.0)) continue;
            coeffs.push_back({{"j", jj}, {"k", k}, {"re", c.real()}, {"im", c.imag()}});
        }
    j["coeffs"] = coeffs;
    return j;
}

Series series_from_json(const json& j) {
    try {
        const FamilyKind kind = kind_from_name(j.at("kind").get<std::string>());
        const int dw = j.value("deg_w", 12), de = j.value("deg_eps", 6);
        if (dw < 2 || de < 0) throw FormatError("germ file: invalid truncation degrees");
        Series s(dw, de, kind == FamilyKind::Antiholomorphic);
        for (const auto& c : j.at("coeffs")) {
            const int jj = c.at("j").get<int>(), k = c.at("k").get<int>();
            if (jj < 0 || jj > dw || k < 0 || k > de) throw FormatError("germ file: coefficient index out of range");
            s(jj, k) += cplx(c.value("re", 0.0), c.value("im", 0.0));
        }
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("germ file: ") + e.what());
    }
}

json germ_to_json(const GermFamily& f) {
    json j = series_to_json(f.series, f.kind);
    if (!f.label.empty()) j["label"] = f.label;
    j["radius"] = f.r;
    j["param_radius"] = f.r_param;
    if (f.model) j["model"] = {{"b", f.model->b}, {"time", f.model->time}};
    return j;
}

GermFamily germ_from_json(const json& j) {
    GermFamily f;
    f.series = series_from_json(j);
    f.kind = kind_from_name(j.at("kind").get<std::string>());
    f.label = j.value("label", std::string());
    f.r = j.value("radius", 0.5);
    f.r_param = j.value("param_radius", 0.05);
    if (j.contains("model")) f.model = ModelSpec{j["model"].value("b", 0.0), j["model"].value("time", 0.5)};
    return f;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("malformed JSON in " + path + ": " + e.what());
    }
}

std::string dump_stable(const json& j) { return j.dump(2) + "\n"; }

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    out << dump_stable(j);
}

GermFamily read_germ_file(const std::string& path) { return germ_from_json(read_json_file(path)); }

void write_germ_file(const std::string& path, const GermFamily& f) { write_json_file(path, germ_to_json(f)); }

json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace pmod
