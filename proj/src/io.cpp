#include "pcfield/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <numbers>

#include "pcfield/errors.hpp"

namespace pcf::io {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  std::uint64_t u(int bytes) {
    if (pos_ + static_cast<std::size_t>(bytes) > b_.size()) throw ContractError("binary path file is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  double f64() {
    std::uint64_t bits = u(8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

std::vector<double> angles(const json& j) {
  if (!j.is_array()) throw ContractError("frequency must be an array of angles");
  std::vector<double> a;
  for (const auto& x : j) a.push_back(x.get<double>());
  return a;
}

json field_table(const std::map<QuotientCoord, CVector>& t) {
  json out = json::object();
  for (const auto& [x, v] : t) out[coord_key(x)] = to_json(v);
  return out;
}

std::map<QuotientCoord, CVector> table_from(const json& j) {
  if (!j.is_object()) throw ContractError("periodic values must be an object keyed by quotient coordinates");
  std::map<QuotientCoord, CVector> t;
  for (auto it = j.begin(); it != j.end(); ++it) t[parse_coord_key(it.key())] = vector_from_json(it.value());
  return t;
}

}  // namespace

json to_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw ContractError("complex number must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const CVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(to_json(v(i)));
  return a;
}

CVector vector_from_json(const json& j) {
  if (!j.is_array()) throw ContractError("vector must be an array of [re, im] pairs");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

json to_json(const Frequency& f) { return f.theta(); }

Frequency frequency_from_json(const json& j) {
  if (j.is_string()) return parse_frequency(j.get<std::string>());
  return Frequency(angles(j));
}

json to_json(const IntMatrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    a.push_back(row);
  }
  return a;
}

LatticeSubgroup subgroup_from_json(const json& j) {
  if (j.is_string()) return LatticeSubgroup::parse(j.get<std::string>());
  if (!j.is_array() || j.empty()) throw ContractError("generators must be a non-empty integer matrix");
  json rows = j.front().is_array() ? j : json::array({j});
  std::size_t n = rows.front().size();
  if (n == 0) throw ContractError("generators must be a non-empty integer matrix");
  IntMatrix g(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != n) throw ContractError("generator rows differ in length");
    for (std::size_t c = 0; c < n; ++c) {
      if (!rows[r][c].is_number_integer()) throw ContractError("generator entries must be integers");
      g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<Int>();
    }
  }
  return LatticeSubgroup(static_cast<int>(n), g);
}

Frequency parse_frequency(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string tok(text.substr(start, end - start));
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) throw ContractError("empty angle in frequency '" + std::string(text) + "'");
    double scale = 1;
    if (tok.size() >= 2 && tok.compare(tok.size() - 2, 2, "pi") == 0) {
      scale = std::numbers::pi;
      tok.resize(tok.size() - 2);
      if (!tok.empty() && tok.back() == '*') tok.pop_back();
      if (tok.empty()) tok = "1";
    }
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ContractError("bad angle '" + tok + "'");
    }
    if (used != tok.size()) throw ContractError("bad angle '" + tok + "'");
    out.push_back(wrap_angle(v * scale));
    start = end + 1;
  }
  return Frequency(out);
}

std::string coord_key(const QuotientCoord& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(x[i]);
  }
  return s;
}

QuotientCoord parse_coord_key(std::string_view key) {
  QuotientCoord x;
  if (key.empty()) return x;
  std::size_t start = 0;
  while (start <= key.size()) {
    std::size_t end = key.find(',', start);
    if (end == std::string_view::npos) end = key.size();
    std::string tok(key.substr(start, end - start));
    std::size_t used = 0;
    try {
      x.push_back(std::stoll(tok, &used));
    } catch (const std::exception&) {
      throw ContractError("bad quotient coordinate '" + std::string(key) + "'");
    }
    if (used != tok.size()) throw ContractError("bad quotient coordinate '" + std::string(key) + "'");
    start = end + 1;
  }
  return x;
}

json quotient_json(const QuotientStructure& q) {
  json j{{"torsion", q.torsion()},
         {"invariant_factors", q.invariant_factors()},
         {"free_rank", q.free_rank()},
         {"torsion_order", q.torsion_order()},
         {"finite", q.is_finite()}};
  if (auto p = q.axis_periods()) j["axis_periods"] = *p;
  return j;
}

json annihilator_json(const Annihilator& a) {
  if (a.is_finite()) {
    json pts = json::array();
    for (const auto& f : a.points()) pts.push_back(to_json(f));
    return pts;
  }
  json fams = json::array();
  for (const auto& f : a.families())
    fams.push_back({{"torsion_index", f.torsion_index}, {"offset", f.offset}, {"directions", f.directions}});
  return json{{"families", fams}};
}

json model_json(const PCFieldModel& m) {
  json atoms = json::array();
  for (const auto& a : m.unitary().atoms()) {
    json cols = json::array();
    for (Eigen::Index c = 0; c < a.basis.cols(); ++c) cols.push_back(to_json(CVector(a.basis.col(c))));
    atoms.push_back({{"freq", to_json(a.freq)}, {"basis", cols}});
  }
  const PeriodicField& p = m.periodic();
  const QuotientStructure& q = p.quotient();
  json per{{"quotient", {{"torsion", q.torsion()}, {"free_rank", q.free_rank()}}}};
  switch (p.kind()) {
    case PeriodicField::Kind::Table:
      per["values"] = field_table(p.table());
      break;
    case PeriodicField::Kind::Geometric:
      per["geometric"] = {{"rho", p.rho()}, {"profile", field_table(p.table())}};
      break;
    case PeriodicField::Kind::Function: {
      if (!q.is_finite() && !p.support_radius())
        throw ContractError("field without finite support cannot be written as a table");
      std::map<QuotientCoord, CVector> t;
      for (const auto& x : q.enumerate(q.is_finite() ? 0 : *p.support_radius())) {
        CVector v = p.at(x);
        if (q.is_finite() || v.squaredNorm() > 0) t[x] = v;
      }
      per["values"] = field_table(t);
      break;
    }
  }
  if (p.envelope()) per["envelope"] = {{"amplitude", p.envelope()->amplitude}, {"rho", p.envelope()->rho}};
  return json{{"lattice_dim", m.lattice_dim()},
              {"dim", m.dim()},
              {"generators", to_json(m.subgroup().generators())},
              {"atoms", atoms},
              {"periodic", per}};
}

PCFieldModel model_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ContractError("model must be a JSON object");
    int dim = j.at("dim").get<int>();
    if (dim < 1) throw ContractError("model dimension must be positive");
    LatticeSubgroup k = subgroup_from_json(j.at("generators"));
    int n = k.dim();
    if (j.contains("lattice_dim") && j["lattice_dim"].get<int>() != n)
      throw ContractError("lattice_dim does not match the generators");

    std::vector<SpectralAtom> atoms;
    for (const auto& a : j.at("atoms")) {
      Frequency f = frequency_from_json(a.at("freq"));
      if (f.dim() != n) throw ContractError("atom frequency has the wrong dimension");
      const json& cols = a.at("basis");
      if (!cols.is_array() || cols.empty()) throw ContractError("atom basis must list at least one column");
      CMatrix b(dim, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) {
        CVector v = vector_from_json(cols[c]);
        if (v.size() != dim) throw ContractError("basis column has the wrong dimension");
        b.col(static_cast<Eigen::Index>(c)) = v;
      }
      atoms.push_back({f, b});
    }
    UnitaryRep u(n, dim, std::move(atoms));

    QuotientStructure q(k);
    const json& per = j.at("periodic");
    if (per.contains("quotient")) {
      const json& qq = per["quotient"];
      if ((qq.contains("torsion") && qq["torsion"].get<std::vector<Int>>() != q.torsion()) ||
          (qq.contains("free_rank") && qq["free_rank"].get<int>() != q.free_rank()))
        throw ContractError("declared quotient does not match the generators");
    }
    std::optional<Envelope> env;
    if (per.contains("envelope"))
      env = Envelope{per["envelope"].at("amplitude").get<double>(), per["envelope"].at("rho").get<double>()};

    int kinds = per.contains("values") + per.contains("geometric") + per.contains("constant");
    if (kinds != 1) throw ContractError("periodic part needs exactly one of values, geometric, constant");
    if (per.contains("values")) return make_model(u, PeriodicField::from_table(q, dim, table_from(per["values"]), env));
    if (per.contains("geometric")) {
      const json& g = per["geometric"];
      auto profile = table_from(g.at("profile"));
      for (const auto& [x, v] : profile)
        if (static_cast<std::size_t>(v.size()) != static_cast<std::size_t>(dim))
          throw ContractError("profile vector has the wrong dimension");
      return make_model(u, PeriodicField::geometric(q, profile, g.at("rho").get<double>()));
    }
    CVector c = vector_from_json(per["constant"]);
    if (c.size() != dim) throw ContractError("constant vector has the wrong dimension");
    return make_model(u, PeriodicField::constant(q, c));
  } catch (const json::exception& e) {
    throw ContractError(std::string("malformed model JSON: ") + e.what());
  }
}

json kernel_json(const Window& w, const CMatrix& gram) {
  json pts = w.points();
  json g = json::array();
  for (Eigen::Index a = 0; a < gram.rows(); ++a) g.push_back(to_json(CVector(gram.row(a).transpose())));
  return json{{"window", pts}, {"gram", g}};
}

std::pair<Window, CMatrix> kernel_from_json(const json& j) {
  try {
    Window w(j.at("window").get<std::vector<Point>>());
    const json& g = j.at("gram");
    auto n = static_cast<Eigen::Index>(w.size());
    if (!g.is_array() || static_cast<Eigen::Index>(g.size()) != n) throw ContractError("gram must be |window| × |window|");
    CMatrix m(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      CVector row = vector_from_json(g[static_cast<std::size_t>(a)]);
      if (row.size() != n) throw ContractError("gram must be |window| × |window|");
      m.row(a) = row.transpose();
    }
    return {w, m};
  } catch (const json::exception& e) {
    throw ContractError(std::string("malformed kernel JSON: ") + e.what());
  }
}

json report_json(const DecompositionReport& r) {
  return json{{"rank", r.rank},
              {"scale", r.scale},
              {"gram_error", r.gram_error},
              {"overlap_residual", r.overlap_residual},
              {"isometry_violation", r.isometry_violation},
              {"commutator", r.commutator},
              {"unitarity", r.unitarity},
              {"shift_agreement", r.shift_agreement},
              {"periodicity", r.periodicity},
              {"roundtrip", r.roundtrip}};
}

json measure_json(const AtomicMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"chi", to_json(a.location)}, {"weight", to_json(a.weight)}});
  return atoms;
}

std::string paths_csv(const SampleSet& s) {
  std::string out = "path";
  for (int i = 0; i < s.window.dim(); ++i) out += ",t" + std::to_string(i + 1);
  out += ",re,im\n";
  for (Eigen::Index c = 0; c < s.values.rows(); ++c)
    for (std::size_t a = 0; a < s.window.size(); ++a) {
      out += std::to_string(c);
      for (Int x : s.window[a]) out += "," + std::to_string(x);
      Complex z = s.values(c, static_cast<Eigen::Index>(a));
      out += "," + num(z.real()) + "," + num(z.imag()) + "\n";
    }
  return out;
}

json paths_json(const SampleSet& s) {
  json paths = json::array();
  for (Eigen::Index c = 0; c < s.values.rows(); ++c) paths.push_back(to_json(CVector(s.values.row(c).transpose())));
  return json{{"window", s.window.points()}, {"paths", paths}};
}

std::string paths_binary(const SampleSet& s, std::string_view meta) {
  std::string out = "PCFP";
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  put_u32(out, static_cast<std::uint32_t>(s.window.dim()));
  put_u64(out, s.window.size());
  put_u64(out, static_cast<std::uint64_t>(s.values.rows()));
  for (const auto& t : s.window.points())
    for (Int x : t) put_u64(out, static_cast<std::uint64_t>(x));
  for (Eigen::Index c = 0; c < s.values.rows(); ++c)
    for (Eigen::Index a = 0; a < s.values.cols(); ++a) {
      put_f64(out, s.values(c, a).real());
      put_f64(out, s.values(c, a).imag());
    }
  return out;
}

SampleSet paths_from_binary(std::string_view bytes, std::string* meta) {
  if (bytes.substr(0, 4) != "PCFP") throw ContractError("not a binary path file");
  Reader head(bytes.substr(4));
  if (head.u(4) != 1) throw ContractError("unsupported binary path file version");
  auto m = static_cast<std::size_t>(head.u(4));
  if (12 + m > bytes.size()) throw ContractError("binary path file is truncated");
  if (meta) *meta = std::string(bytes.substr(12, m));
  std::string_view body = bytes.substr(12 + m);
  Reader r(body);
  auto n = static_cast<std::size_t>(r.u(4));
  std::uint64_t w = r.u(8), count = r.u(8);
  if (n == 0 || w == 0) throw ContractError("binary path file has an empty window");
  if (body.size() != 4 + 8 + 8 + w * n * 8 + count * w * 16) throw ContractError("binary path file has the wrong size");
  std::vector<Point> pts(w, Point(n));
  for (auto& t : pts)
    for (auto& x : t) x = static_cast<Int>(r.u(8));
  CMatrix v(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(w));
  for (Eigen::Index c = 0; c < v.rows(); ++c)
    for (Eigen::Index a = 0; a < v.cols(); ++a) {
      double re = r.f64();
      v(c, a) = Complex(re, r.f64());
    }
  return {Window(std::move(pts)), v};
}

std::string figure_csv(const std::vector<FigureRow>& rows) {
  std::string out = "k,t,u,v\n";
  for (const auto& r : rows) out += std::to_string(r.k) + "," + num(r.t) + "," + num(r.u) + "," + num(r.v) + "\n";
  return out;
}

json figure_json(const std::vector<FigureRow>& rows) {
  json lines = json::array();
  for (const auto& seg : figure_segments(rows)) {
    if (lines.empty() || lines.back()["k"].get<Int>() != seg.front().k)
      lines.push_back({{"k", seg.front().k}, {"segments", json::array()}});
    json pts = json::array();
    for (const auto& r : seg) pts.push_back({r.u, r.v});
    lines.back()["segments"].push_back(pts);
  }
  json table = json::array();
  for (const auto& r : rows) table.push_back({r.k, r.t, r.u, r.v});
  return json{{"lines", lines}, {"rows", table}};
}

}  // namespace pcf::io
