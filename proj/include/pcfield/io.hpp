#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pcfield/lattice.hpp"
#include "pcfield/model.hpp"
#include "pcfield/spectra.hpp"
#include "pcfield/structure.hpp"
#include "pcfield/wpc2.hpp"

namespace pcf::io {

using nlohmann::json;

// Complex numbers travel as [re, im].
json to_json(Complex z);
Complex complex_from_json(const json& j);
json to_json(const CVector& v);
CVector vector_from_json(const json& j);
json to_json(const Frequency& f);
Frequency frequency_from_json(const json& j);
json to_json(const IntMatrix& m);

/// "12,9", "2,0;0,3" or [[12,9]].
LatticeSubgroup subgroup_from_json(const json& j);

/// Angles as "a,b,…"; each entry is a number, optionally suffixed by "pi".
Frequency parse_frequency(std::string_view text);

/// Quotient coordinates keyed as "j1,j2,…" (empty for the trivial quotient).
std::string coord_key(const QuotientCoord& x);
QuotientCoord parse_coord_key(std::string_view key);

json quotient_json(const QuotientStructure& q);
/// A list of angle vectors, or {families:[{torsion_index, offset, directions}]}.
json annihilator_json(const Annihilator& a);

/// {lattice_dim, dim, generators, atoms:[{freq, basis}], periodic:{quotient,
/// values|geometric|constant, envelope?}}. Each basis is a list of columns.
/// Function-valued fields are tabulated over their support; without one
/// they cannot be written and ContractError is thrown.
json model_json(const PCFieldModel& m);
PCFieldModel model_from_json(const json& j);

/// {window:[[…]], gram:[[[re,im],…],…], generators?}.
json kernel_json(const Window& w, const CMatrix& gram);
std::pair<Window, CMatrix> kernel_from_json(const json& j);

json report_json(const DecompositionReport& r);
json measure_json(const AtomicMeasure& m);

/// One row per path and window point: path,t1,…,tn,re,im.
std::string paths_csv(const SampleSet& s);
json paths_json(const SampleSet& s);

/// Little-endian column file: "PCFP", u32 version (1), u32 metadata length M,
/// M bytes of JSON metadata, u32 lattice dim n, u64 window size W, u64 path
/// count C, W·n i64 coordinates (point-major), then C·W pairs of f64
/// (re, im), path-major.
std::string paths_binary(const SampleSet& s, std::string_view meta = {});
SampleSet paths_from_binary(std::string_view bytes, std::string* meta = nullptr);

std::string figure_csv(const std::vector<FigureRow>& rows);
/// {lines:[{k, segments:[[[u,v],…],…]}], rows:[[k,t,u,v],…]}.
json figure_json(const std::vector<FigureRow>& rows);

}  // namespace pcf::io
