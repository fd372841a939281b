#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcfield/errors.hpp"
#include "pcfield/io.hpp"
#include "pcfield/lattice.hpp"
#include "pcfield/model.hpp"
#include "pcfield/spectra.hpp"
#include "pcfield/structure.hpp"
#include "pcfield/wpc2.hpp"

using namespace pcf;
using io::json;

namespace {

struct Options {
  std::string generators;
  std::string model;
  std::string kernel;
  std::string paths;
  std::string window;
  std::string window_basis;
  std::string lambda;
  std::string out;
  std::string format;
  std::uint64_t seed = 1;
  int count = 1;
  Int truncation = 64;
  double tol = 1e-8;
  Int T = 0;
  Int S = 0;
  int samples = 360;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ContractError("cannot read '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ContractError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_output(const Options& o, const std::string& data) {
  if (o.out.empty()) {
    std::cout << data;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw ContractError("cannot write '" + o.out + "'");
  f << data;
}

// Every option of the subcommand with its effective value, defaults included.
// The output path is left out so that identical runs produce identical bytes.
json meta_block(const CLI::App& sub) {
  json config = json::object();
  config["subcommand"] = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    std::string key = opt->get_single_name();
    if (key == "help" || key == "out") continue;
    if (opt->count() > 0) {
      auto r = opt->results();
      config[key] = r.size() == 1 ? json(r.front()) : json(r);
    } else {
      config[key] = opt->get_default_str();
    }
  }
  return json{{"tool", "pcfield"}, {"version", PCFIELD_VERSION}, {"config", config}};
}

std::string csv_with_meta(const json& meta, const std::string& body) { return "# " + meta.dump() + "\n" + body; }

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

void require_format(const Options& o, std::initializer_list<const char*> allowed) {
  for (const char* f : allowed)
    if (o.format == f) return;
  std::string list;
  for (const char* f : allowed) list += std::string(list.empty() ? "" : ", ") + f;
  throw ContractError("unsupported --format '" + o.format + "' (expected " + list + ")");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

LatticeSubgroup parse_generators(const std::string& text) {
  std::string t = text;
  t.erase(0, t.find_first_not_of(" \t"));
  if (!t.empty() && t.front() == '[') {
    try {
      return io::subgroup_from_json(json::parse(t));
    } catch (const json::parse_error& e) {
      throw ContractError(std::string("bad generator JSON: ") + e.what());
    }
  }
  return LatticeSubgroup::parse(text);
}

Window make_window(const Options& o) {
  if (o.window.empty()) throw ContractError("--window is required");
  Window box = Window::parse(o.window);
  if (o.window_basis.empty()) return box;
  IntMatrix basis = LatticeSubgroup::parse(o.window_basis).generators();
  std::size_t n = static_cast<std::size_t>(box.dim());
  if (basis.rows() != static_cast<Eigen::Index>(n)) throw ContractError("--window-basis needs one row per window axis");
  Point lo = box[0], hi = box[0];
  for (const auto& p : box.points())
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  return Window::lattice_box(lo, hi, basis);
}

std::vector<Frequency> parse_lambdas(const std::string& text) {
  std::vector<Frequency> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) out.push_back(io::parse_frequency(part));
  if (out.empty()) throw ContractError("--lambda is empty");
  return out;
}

PCFieldModel load_model(const Options& o) {
  if (o.model.empty()) throw ContractError("--model is required");
  return io::model_from_json(read_json(o.model));
}

std::vector<Frequency> lambdas_for(const Options& o, const QuotientStructure& q) {
  if (!o.lambda.empty()) return parse_lambdas(o.lambda);
  if (!q.is_finite()) throw ContractError("--lambda is required when the quotient is infinite");
  return Annihilator(q).points();
}

int run_lattice(const CLI::App& sub, const Options& o) {
  require_format(o, {"json"});
  if (o.generators.empty()) throw ContractError("--generators is required");
  LatticeSubgroup k = parse_generators(o.generators);
  QuotientStructure q(k);
  json j{{"meta", meta_block(sub)},
         {"generators", io::to_json(k.generators())},
         {"hnf", io::to_json(k.hnf())},
         {"quotient", io::quotient_json(q)},
         {"annihilator", io::annihilator_json(Annihilator(q))}};
  if (k.dim() == 2 && k.generator_count() == 1) {
    Point g = k.generator(0);
    if (g[0] > 0 || g[1] > 0) {
      BezoutPhi b = bezout_phi(g[0], g[1]);
      j["bezout"] = {{"d", b.d}, {"T1", b.t1}, {"S1", b.s1}, {"p", b.p}, {"q", b.q}, {"phi", io::to_json(b.phi)}};
    }
  }
  write_output(o, json_text(j));
  return 0;
}

int run_synth(const CLI::App& sub, const Options& o) {
  require_format(o, {"csv", "json", "bin"});
  if (sub.get_option("--seed")->count() == 0) throw ContractError("--seed is required for sampling");
  PCFieldModel m = load_model(o);
  Window w = make_window(o);
  if (w.dim() != m.lattice_dim()) throw ContractError("window dimension differs from the model");
  SampleSet s = sample_paths(m.kernel_fn(), w, o.count, o.seed);
  json meta = meta_block(sub);
  if (o.format == "csv") {
    write_output(o, csv_with_meta(meta, io::paths_csv(s)));
  } else if (o.format == "json") {
    json j = io::paths_json(s);
    j["meta"] = meta;
    write_output(o, json_text(j));
  } else {
    if (o.out.empty()) throw ContractError("--format bin needs --out");
    write_output(o, io::paths_binary(s, meta.dump()));
  }
  return 0;
}

int run_cyclocov(const CLI::App& sub, const Options& o) {
  require_format(o, {"json", "csv"});
  Window lags = make_window(o);
  json tables = json::array();
  std::string csv;
  bool estimated = !o.paths.empty();

  auto emit = [&](const Frequency& l, const std::vector<Complex>& vals, const std::vector<double>* tails) {
    json t{{"lambda", io::to_json(l)}, {"t", lags.points()}, {"re", json::array()}, {"im", json::array()}};
    if (tails) t["tail_bound"] = *tails;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      t["re"].push_back(vals[i].real());
      t["im"].push_back(vals[i].imag());
      for (double a : l.theta()) csv += num(a) + ",";
      for (Int x : lags[i]) csv += std::to_string(x) + ",";
      csv += num(vals[i].real()) + "," + num(vals[i].imag());
      if (tails) csv += "," + num((*tails)[i]);
      csv += "\n";
    }
    tables.push_back(t);
  };

  std::string header;
  if (estimated) {
    if (o.generators.empty()) throw ContractError("--generators is required with --paths");
    LatticeSubgroup k = parse_generators(o.generators);
    SampleSet s = io::paths_from_binary(read_file(o.paths));
    for (const auto& l : lambdas_for(o, QuotientStructure(k))) {
      std::vector<Complex> vals;
      for (const auto& t : lags.points()) vals.push_back(estimate_spectral_covariance(s, k, l, t));
      emit(l, vals, nullptr);
    }
  } else {
    PCFieldModel m = load_model(o);
    if (lags.dim() != m.lattice_dim()) throw ContractError("lag window dimension differs from the model");
    for (const auto& l : lambdas_for(o, m.quotient())) {
      std::vector<Complex> vals;
      std::vector<double> tails;
      for (const auto& t : lags.points()) {
        SpectralValue a = spectral_covariance(m, l, t, o.truncation);
        vals.push_back(a.value);
        tails.push_back(a.tail_bound);
      }
      emit(l, vals, &tails);
    }
  }
  json meta = meta_block(sub);
  if (o.format == "json") {
    write_output(o, json_text(json{{"meta", meta}, {"estimated", estimated}, {"tables", tables}}));
  } else {
    int n = lags.dim();
    for (int i = 0; i < n; ++i) header += "lambda" + std::to_string(i + 1) + ",";
    for (int i = 0; i < n; ++i) header += "t" + std::to_string(i + 1) + ",";
    header += estimated ? "re,im\n" : "re,im,tail_bound\n";
    write_output(o, csv_with_meta(meta, header + csv));
  }
  return 0;
}

int run_spectrum(const CLI::App& sub, const Options& o) {
  require_format(o, {"json", "csv"});
  PCFieldModel m = load_model(o);
  json meta = meta_block(sub);
  std::vector<SpectrumSlice> slices;
  if (!o.lambda.empty()) {
    for (const auto& l : parse_lambdas(o.lambda)) {
      require_annihilator(l, m.subgroup());
      slices.push_back({l, gamma_lambda(m, l)});
    }
  } else {
    slices = so_spectrum(m).slices();
  }
  if (o.format == "json") {
    json s = json::array();
    for (const auto& sl : slices) s.push_back({{"lambda", io::to_json(sl.lambda)}, {"atoms", io::measure_json(sl.gamma)}});
    json j{{"meta", meta}, {"slices", s}};
    if (o.lambda.empty()) {
      SOSpectrum f(slices);
      j["variation"] = f.variation();
      j["hyperplane_violation"] = f.hyperplane_violation();
    }
    write_output(o, json_text(j));
    return 0;
  }
  int n = m.lattice_dim();
  std::string csv;
  for (int i = 0; i < n; ++i) csv += "lambda" + std::to_string(i + 1) + ",";
  for (int i = 0; i < n; ++i) csv += "chi" + std::to_string(i + 1) + ",";
  csv += "re,im\n";
  for (const auto& sl : slices)
    for (const auto& a : sl.gamma.atoms()) {
      for (double x : sl.lambda.theta()) csv += num(x) + ",";
      for (double x : a.location.theta()) csv += num(x) + ",";
      csv += num(a.weight.real()) + "," + num(a.weight.imag()) + "\n";
    }
  write_output(o, csv_with_meta(meta, csv));
  return 0;
}

int run_decompose(const CLI::App& sub, const Options& o) {
  require_format(o, {"json"});
  if (o.model.empty() == o.kernel.empty()) throw ContractError("pass exactly one of --model and --kernel");
  ShiftOptions opt;
  opt.seed = o.seed;
  std::optional<Decomposition> d;
  if (!o.model.empty()) {
    PCFieldModel m = load_model(o);
    LatticeSubgroup k = o.generators.empty() ? m.subgroup() : parse_generators(o.generators);
    d = decompose(m.kernel_fn(), make_window(o), k, opt);
  } else {
    json kj = read_json(o.kernel);
    auto [w, g] = io::kernel_from_json(kj);
    if (o.generators.empty() && !kj.contains("generators"))
      throw ContractError("--generators is required unless the kernel file lists them");
    LatticeSubgroup k = o.generators.empty() ? io::subgroup_from_json(kj["generators"]) : parse_generators(o.generators);
    d = decompose(g, w, k, opt);
  }
  const DecompositionReport& r = d->report;
  json j{{"meta", meta_block(sub)}, {"model", io::model_json(d->model)}, {"report", io::report_json(r)}};
  double worst = std::max({r.shift_agreement, r.periodicity, r.roundtrip});
  j["within_tolerance"] = worst <= o.tol;
  write_output(o, json_text(j));
  if (worst > o.tol) throw NumericalError("decomposition residuals exceed --tol", worst);
  return 0;
}

int run_figure(const CLI::App& sub, const Options& o) {
  require_format(o, {"csv", "json"});
  WpcParams w = WpcParams::make(o.T, o.S);
  auto rows = figure_data(w, o.samples);
  json meta = meta_block(sub);
  if (o.format == "csv") {
    write_output(o, csv_with_meta(meta, io::figure_csv(rows)));
  } else {
    json j = io::figure_json(rows);
    j["meta"] = meta;
    write_output(o, json_text(j));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcfield: periodically correlated random fields on Z^n"};
  app.set_version_flag("--version", PCFIELD_VERSION);
  app.require_subcommand(1);
  Options o;

  auto out = [&](CLI::App* s, const char* format) {
    s->add_option("--out", o.out, "Output file (stdout when omitted)");
    s->add_option("--format", o.format, "Output format")->default_str(format);
  };
  auto window = [&](CLI::App* s) {
    s->add_option("--window", o.window, "Window \"a..b,c..d\"");
    s->add_option("--window-basis", o.window_basis, "Map the window box through these rows, \"4,3;1,1\"");
  };

  auto* lattice = app.add_subcommand("lattice", "Quotient and annihilator of a period subgroup");
  lattice->add_option("--generators", o.generators, "Generator rows, \"2,0;0,3\" or [[2,0],[0,3]]");
  out(lattice, "json");

  auto* synth = app.add_subcommand("synth", "Gaussian sample paths of a model on a window");
  synth->add_option("--model", o.model, "Model JSON file");
  window(synth);
  synth->add_option("--seed", o.seed, "Random seed (required)");
  synth->add_option("--count", o.count, "Number of paths")->capture_default_str();
  out(synth, "csv");

  auto* cyclocov = app.add_subcommand("cyclocov", "Spectral covariance a_lambda(t) over a lag window");
  cyclocov->add_option("--model", o.model, "Model JSON file");
  cyclocov->add_option("--paths", o.paths, "Binary path file to estimate from instead of a model");
  cyclocov->add_option("--generators", o.generators, "Period subgroup for --paths");
  window(cyclocov);
  cyclocov->add_option("--lambda", o.lambda, "Frequencies \"u,v;u,v\" (angles, optional pi suffix)");
  cyclocov->add_option("--truncation", o.truncation, "Free-coordinate truncation radius")->capture_default_str();
  out(cyclocov, "json");

  auto* spectrum = app.add_subcommand("spectrum", "gamma_lambda measures or the full spectral measure");
  spectrum->add_option("--model", o.model, "Model JSON file");
  spectrum->add_option("--lambda", o.lambda, "Only these gamma_lambda");
  out(spectrum, "json");

  auto* dec = app.add_subcommand("decompose", "Recover U and P from a kernel on a window");
  dec->add_option("--model", o.model, "Model JSON file");
  dec->add_option("--kernel", o.kernel, "Kernel JSON file {window, gram, generators?}");
  dec->add_option("--generators", o.generators, "Period subgroup (defaults to the model's)");
  window(dec);
  dec->add_option("--tol", o.tol, "Residual tolerance")->capture_default_str();
  dec->add_option("--seed", o.seed, "Seed of the joint diagonalization")->capture_default_str();
  out(dec, "json");

  auto* figure = app.add_subcommand("figure", "Sampled lines of the annihilator of {j(T,S)}");
  figure->add_option("--T", o.T, "First period component")->required();
  figure->add_option("--S", o.S, "Second period component")->required();
  figure->add_option("--samples", o.samples, "Points per line")->capture_default_str();
  out(figure, "csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (CLI::App* s : app.get_subcommands())
    if (s->get_option("--format")->count() == 0) o.format = s->get_option("--format")->get_default_str();
  try {
    if (lattice->parsed()) return run_lattice(*lattice, o);
    if (synth->parsed()) return run_synth(*synth, o);
    if (cyclocov->parsed()) return run_cyclocov(*cyclocov, o);
    if (spectrum->parsed()) return run_spectrum(*spectrum, o);
    if (dec->parsed()) return run_decompose(*dec, o);
    if (figure->parsed()) return run_figure(*figure, o);
  } catch (const NumericalError& e) {
    std::cerr << "pcfield: numerical check failed: " << e.what() << " (violation " << e.violation() << ")\n";
    return 3;
  } catch (const ContractError& e) {
    std::cerr << "pcfield: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "pcfield: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
