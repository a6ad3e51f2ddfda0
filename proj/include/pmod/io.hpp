#pragma once

#include <string>

#include "json.hpp"
#include "pmod/germ.hpp"

namespace pmod {

using json = nlohmann::json;

json series_to_json(const Series& s, FamilyKind kind);
Series series_from_json(const json& j);

json germ_to_json(const GermFamily& f);
GermFamily germ_from_json(const json& j);

GermFamily read_germ_file(const std::string& path);
void write_germ_file(const std::string& path, const GermFamily& f);

json read_json_file(const std::string& path);
// Fixed formatting (indent 2, sorted keys by construction) for byte-stable output.
void write_json_file(const std::string& path, const json& j);
std::string dump_stable(const json& j);

json cplx_to_json(cplx z);
cplx cplx_from_json(const json& j);

}  // namespace pmod
