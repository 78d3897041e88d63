#pragma once

#include "exhier/acceptance.hpp"
#include "exhier/definetti.hpp"
#include "exhier/ehpf.hpp"
#include "exhier/factory.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

namespace exhier::cli {

enum ExitCode { kOk = 0, kValidation = 1, kUsage = 2, kSuiteFailure = 3 };

class ValidationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ==== key=value helpers =======================================================

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline std::string one_line(std::string text) {
  while (!text.empty() && text.back() == '\n') text.pop_back();
  for (auto& c : text)
    if (c == '\n') c = ';';
  return text;
}

inline std::string from_one_line(std::string text) {
  for (auto& c : text)
    if (c == ';') c = '\n';
  return text + "\n";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationFailure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationFailure("cannot write '" + path + "'");
  out << text;
}

// Hierarchy text, or machine output carrying a `hierarchy=` (or reconstruction `I=`) line.
inline FiniteHierarchy load_hierarchy(const std::string& text) {
  if (text.find("hierarchy=") != std::string::npos || text.rfind("I=", 0) == 0 ||
      text.find("\nI=") != std::string::npos) {
    const auto kv = parse_key_values(text);
    const auto it = kv.count("hierarchy") ? kv.find("hierarchy") : kv.find("I");
    return parse_text(from_one_line(it->second));
  }
  return parse_text(text);
}

// `rational` and `h.<shape>` / `se.<shape>` lines of ehpf machine output.
inline EhpfTable load_ehpf(const std::string& text) {
  const auto kv = parse_key_values(text);
  EhpfTable t;
  if (!kv.count("n")) throw ValidationFailure("ehpf output without n");
  t.n = std::stoul(kv.at("n"));
  t.is_exact = kv.count("exact") && kv.at("exact") == "1";
  if (kv.count("replicas")) t.replicas = std::stoull(kv.at("replicas"));
  if (kv.count("truncation_bound")) t.truncation_bound = parse_rational(kv.at("truncation_bound"));
  for (const auto& [k, v] : kv) {
    if (k.rfind("h.", 0) == 0) t.h[k.substr(2)] = std::stod(v);
    else if (k.rfind("se.", 0) == 0) t.se[k.substr(3)] = std::stod(v);
    else if (k.rfind("exact.", 0) == 0) t.exact[k.substr(6)] = parse_rational(v);
  }
  return t;
}

// ==== configuration ===========================================================

struct Config {
  bool machine = false;
  unsigned jobs = 1;
  std::uint64_t seed = default_seed();
  bool seed_given = false;
  std::string gen = "dyadic";
  unsigned depth = 12;
  std::size_t kmax = 32;
  std::string weights, table = "remy";
  std::size_t n = 4, K = 16, window = 4096, K_max = std::size_t(1) << 16;
  std::string mode = "exact";
  bool auto_extend = false, shapes = false, exact_table = false;
  std::uint64_t replicas = 10000;
  std::string hierarchy_file, suite = "all", in, out, tree_out;
};

inline GeneratorSpec generator_spec(const Config& c) {
  GeneratorSpec s;
  s.depth = c.depth;
  s.kmax = c.kmax;
  s.weights = c.weights;
  s.table = c.table;
  s.seed = c.seed;
  if (std::filesystem::is_regular_file(c.gen)) {
    s = spec_from_file(c.gen, s);
    if (c.seed_given) s.seed = c.seed;
  } else {
    s.kind = c.gen;
  }
  return s;
}

// ==== subcommands =============================================================

inline int cmd_enumerate(const Config& c, std::ostream& out) {
  if (c.n < 1 || c.n > 7) throw ValidationFailure("enumerate supports 1 <= n <= 7");
  if (c.shapes) {
    const auto ss = enumerate_shapes(c.n);
    if (c.machine) {
      out << "n=" << c.n << "\ncount=" << ss.size() << "\n";
      for (std::size_t q = 0; q < ss.size(); ++q)
        out << "shape." << q + 1 << "=" << ss[q].key << "\nlabelled." << q + 1 << "=" << labelled_count(ss[q]) << "\n";
    } else {
      out << ss.size() << " shapes on [" << c.n << "]\n";
      for (const auto& s : ss) out << "  " << s.key << "  (" << labelled_count(s) << " labelled)\n";
    }
    return kOk;
  }
  const auto hs = enumerate_hierarchies(c.n);
  if (c.machine) {
    out << "n=" << c.n << "\ncount=" << hs.size() << "\n";
    for (std::size_t q = 0; q < hs.size(); ++q) out << "hierarchy." << q + 1 << "=" << one_line(to_text(hs[q])) << "\n";
  } else {
    out << hs.size() << " hierarchies on [" << c.n << "]\n";
    for (const auto& h : hs) out << "\n" << to_text(h);
  }
  return kOk;
}

inline int cmd_sample(const Config& c, std::ostream& out) {
  if (c.n < 1) throw ValidationFailure("n must be positive");
  const auto spec = generator_spec(c);
  const auto h = make_oracle(spec)->prefix(c.n);
  if (c.machine) {
    out << "generator=" << spec.kind << "\nseed=" << spec.seed << "\nn=" << c.n << "\nshape=" << shape(h).key
        << "\nhierarchy=" << one_line(to_text(h)) << "\n";
  } else {
    out << "# " << spec.kind << " seed " << spec.seed << ", shape " << shape(h).key << "\n" << to_text(h);
  }
  if (!c.out.empty()) write_file(c.out, to_text(h));
  return kOk;
}

template <class S>
int print_reconstruction(const Config& c, const Reconstruction<S>& r, const FiniteHierarchy& expected, std::ostream& out) {
  out << reconstruction_report(r, &expected, c.machine);
  if (!c.tree_out.empty()) write_file(c.tree_out, tree_json(r.tree).dump(2) + "\n");
  return kOk;
}

inline int cmd_reconstruct(const Config& c, std::ostream& out) {
  if (c.n < 1 || c.K < 1) throw ValidationFailure("n and K must be positive");
  const auto spec = generator_spec(c);
  const auto oracle = make_oracle(spec);
  ReconstructOptions opt;
  opt.K = c.K;
  opt.auto_extend = c.auto_extend;
  opt.K_max = c.K_max;
  const auto expected = positive_restriction(*oracle, c.n);
  if (c.mode == "empirical") {
    EmpiricalSource src(*oracle, c.window);
    return print_reconstruction(c, reconstruct(src, c.n, opt), expected, out);
  }
  const auto* exact = dynamic_cast<const ExactSpinalOracle*>(oracle.get());
  if (!exact) throw ValidationFailure("generator '" + spec.kind + "' has no exact spinal values; use --mode empirical");
  if (c.mode == "exact") {
    opt.tie_tol = 0;
    return print_reconstruction(c, reconstruct(ExactSource<Rational>(*exact), c.n, opt), expected, out);
  }
  if (c.mode == "double") return print_reconstruction(c, reconstruct(ExactSource<double>(*exact), c.n, opt), expected, out);
  throw ValidationFailure("mode must be exact, double or empirical");
}

inline int cmd_prob(const Config& c, std::ostream& out) {
  const auto t = parse_weight_tree(read_file(c.weights));
  const auto h = load_hierarchy(read_file(c.hierarchy_file));
  const auto r = prob_exact(t, h);
  const auto s = shape(h);
  const Rational shape_p = r.p * Rational(labelled_count(s));
  if (c.machine) {
    out << "n=" << h.n() << "\nshape=" << s.key << "\np=" << to_string(r.p) << "\np_double=" << std::setprecision(17)
        << r.p.convert_to<double>() << "\nshape_probability=" << to_string(shape_p)
        << "\ntruncation_bound=" << to_string(r.truncation_bound) << "\n";
  } else {
    out << "P(H_" << h.n() << " = H) = " << to_string(r.p) << " ~ " << std::setprecision(10) << r.p.convert_to<double>()
        << "\nshape " << s.key << ": " << labelled_count(s) << " labelled copies, total " << to_string(shape_p)
        << "\ntruncation bound " << to_string(r.truncation_bound) << "\n";
  }
  return kOk;
}

inline int cmd_ehpf(const Config& c, std::ostream& out) {
  if (c.n < 1 || c.n > 7) throw ValidationFailure("ehpf supports 1 <= n <= 7");
  const auto spec = generator_spec(c);
  const OracleFactory f(spec);
  EhpfTable tab;
  if (c.exact_table) {
    if (!f.tree) throw ValidationFailure("--exact needs a weight-tree generator (dyadic or weight-tree)");
    tab = ehpf_exact(*f.tree, c.n);
  } else {
    if (c.replicas < 1) throw ValidationFailure("replicas must be positive");
    const auto counts = parallel_reduce<CountTable>(
        c.replicas, c.jobs,
        [&](std::uint64_t r, CountTable& acc) {
          ++acc[shape(f.make(derive_seed(spec.seed, hash_tag("ehpf"), r))->prefix(c.n)).key];
        },
        [](CountTable& o, const CountTable& a) {
          for (const auto& [k, v] : a) o[k] += v;
        });
    tab = ehpf_from_counts(counts, c.n);
  }
  const auto shapes = enumerate_shapes(c.n);
  if (c.machine) {
    out << "generator=" << spec.kind << "\nn=" << c.n << "\nexact=" << (tab.is_exact ? 1 : 0)
        << "\nreplicas=" << tab.replicas << "\ntruncation_bound=" << to_string(tab.truncation_bound) << "\n"
        << std::setprecision(17);
    for (const auto& s : shapes) {
      out << "h." << s.key << "=" << tab.value(s.key) << "\nse." << s.key << "="
          << (tab.se.count(s.key) ? tab.se.at(s.key) : 0.0) << "\n";
      if (tab.is_exact) out << "exact." << s.key << "=" << to_string(tab.exact_value(s.key)) << "\n";
    }
  } else {
    out << "EHPF of " << spec.kind << " at n=" << c.n
        << (tab.is_exact ? " (exact)" : " (" + std::to_string(tab.replicas) + " replicas)") << "\n";
    out << std::left << std::setw(24) << "shape" << std::setw(8) << "N(s)" << std::setw(16) << "h(s)" << std::setw(14)
        << "se" << "N(s)h(s)\n";
    for (const auto& s : shapes) {
      const double N = labelled_count(s).convert_to<double>();
      // Shape keys use a multibyte leaf glyph; pad by visible width.
      std::string key = s.key;
      std::size_t width = 0;
      for (unsigned char ch : key) width += (ch & 0xC0) != 0x80;
      out << key << std::string(width < 24 ? 24 - width : 1, ' ') << std::setw(8) << labelled_count(s)
          << std::setw(16) << std::setprecision(8) << tab.value(s.key) << std::setw(14) << std::setprecision(3)
          << (tab.se.count(s.key) ? tab.se.at(s.key) : 0.0) << std::setprecision(8) << N * tab.value(s.key) << "\n";
    }
    out << std::right;
  }
  return kOk;
}

inline int cmd_verify(const Config& c, std::ostream& out) {
  const auto sel = acceptance::select(c.suite);
  if (sel.empty()) throw ValidationFailure("unknown suite '" + c.suite + "'");
  acceptance::Options o;
  o.jobs = c.jobs;
  if (c.seed_given) o.seed = c.seed;
  bool ok = true;
  for (const auto* crit : sel) {
    const auto r = acceptance::run(*crit, o);
    out << (c.machine ? r.machine() : r.line() + "\n") << std::flush;
    ok = ok && r.pass;
  }
  return ok ? kOk : kSuiteFailure;
}

// Hierarchy text (or sample output) and line-breaking tree JSON are both accepted.
inline int cmd_export_dot(const Config& c, std::ostream& out) {
  const auto text = read_file(c.in);
  const auto first = text.find_first_not_of(" \t\r\n");
  std::string dot;
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationFailure(std::string("bad tree JSON: ") + e.what());
    }
    dot = to_dot(tree_from_json<double>(j.is_object() ? j.at("segments") : j));
  } else {
    dot = to_dot(load_hierarchy(text));
  }
  write_file(c.out, dot);
  if (c.machine) out << "in=" << c.in << "\nout=" << c.out << "\nbytes=" << dot.size() << "\n";
  else out << "wrote " << c.out << "\n";
  return kOk;
}

// ==== entry point =============================================================

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Exchangeable hierarchies: enumeration, sampling, reconstruction and verification", "exhier"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--machine", c.machine, "line-oriented key=value output");
  app.add_option("--jobs", c.jobs, "threads for Monte Carlo replicas")->check(CLI::Range(1u, 256u));
  auto* seed_opt = app.add_option("--seed", c.seed, "seed (default from EXHIER_SEED; verify defaults to the pinned acceptance seed)");
  auto gen_flags = [&c](CLI::App* s) {
    s->add_option("--gen", c.gen, "generator kind or JSON spec file");
    s->add_option("--depth", c.depth, "dyadic depth");
    s->add_option("--kmax", c.kmax, "CRT segments");
    s->add_option("--weights", c.weights, "weight-tree file");
    s->add_option("--table", c.table, "ehpf-table kind");
  };
  auto* en = app.add_subcommand("enumerate", "list all hierarchies on [n]");
  en->add_option("--n", c.n, "label count")->required();
  en->add_flag("--shapes", c.shapes, "list shapes instead");
  auto* sa = app.add_subcommand("sample", "sample H_n from a generator");
  gen_flags(sa);
  sa->add_option("--n", c.n, "label count")->required();
  sa->add_option("--out", c.out, "also write the hierarchy text here");
  auto* re = app.add_subcommand("reconstruct", "run the reconstruction pipeline");
  gen_flags(re);
  re->add_option("--n", c.n, "sample labels")->required();
  re->add_option("--K", c.K, "spines");
  re->add_option("--mode", c.mode, "exact | double | empirical");
  re->add_option("--window", c.window, "prefix size for empirical mode");
  re->add_flag("--auto", c.auto_extend, "add spines until every sample pair is separated");
  re->add_option("--K-max", c.K_max, "spine budget with --auto");
  re->add_option("--tree-out", c.tree_out, "write the reconstructed tree as JSON");
  auto* pr = app.add_subcommand("prob", "exact P(H_n = H) under a weight tree");
  pr->add_option("--weights", c.weights, "weight-tree file")->required();
  pr->add_option("--hierarchy", c.hierarchy_file, "hierarchy file")->required();
  auto* eh = app.add_subcommand("ehpf", "EHPF table of a generator");
  gen_flags(eh);
  eh->add_option("--n", c.n, "label count")->required();
  eh->add_option("--replicas", c.replicas, "Monte Carlo replicas");
  eh->add_flag("--exact", c.exact_table, "exact table for weight-tree generators");
  auto* ve = app.add_subcommand("verify", "run acceptance checks");
  ve->add_option("--suite", c.suite, "all, a criterion number or a criterion name");
  auto* ex = app.add_subcommand("export-dot", "write a hierarchy or line-breaking tree as DOT");
  ex->add_option("--in", c.in, "hierarchy text or tree JSON")->required();
  ex->add_option("--out", c.out, "DOT output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const CLI::ConversionError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  c.seed_given = seed_opt->count() > 0;

  try {
    if (*en) return cmd_enumerate(c, out);
    if (*sa) return cmd_sample(c, out);
    if (*re) return cmd_reconstruct(c, out);
    if (*pr) return cmd_prob(c, out);
    if (*eh) return cmd_ehpf(c, out);
    if (*ve) return cmd_verify(c, out);
    if (*ex) return cmd_export_dot(c, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kUsage;
}

}  // namespace exhier::cli
