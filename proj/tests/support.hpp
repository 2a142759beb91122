#pragma once

// Shared fixtures, random generators and reference evaluators for the test
// binaries. Nothing here calls into the code it is used to check.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bcl/bcl.hpp"

namespace bcl::test {

inline std::filesystem::path data_dir() { return BCL_DATA_DIR; }
inline std::filesystem::path data_path(const std::string& rel) { return data_dir() / rel; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bcl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(v.size()) - 1))];
}

inline std::string random_word(Rng& rng, int min_len = 1, int max_len = 8) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
  std::string s;
  const int n = uniform_int(rng, min_len, max_len);
  for (int i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(alphabet.size()) - 1))];
  return s;
}

// Printable text with the characters that need escaping in JSON and
// N-Triples, plus some multi-byte UTF-8.
inline std::string random_text(Rng& rng) {
  static const std::vector<std::string> pieces = {"a", "Z", "0", " ", "-", "_", "\"", "\\", "\n", "\t", "/", "é", "Ω", "電池", "%20", "#"};
  std::string s;
  const int n = uniform_int(rng, 1, 12);
  for (int i = 0; i < n; ++i) s += pick(rng, pieces);
  return s;
}

// Finite doubles with a mix of magnitudes and short decimal forms.
inline double random_number(Rng& rng) {
  switch (uniform_int(rng, 0, 3)) {
    case 0: return uniform_int(rng, -50, 50);
    case 1: return uniform_int(rng, -5000, 5000) / 1000.0;
    case 2: return uniform_real(rng, -1e6, 1e6);
    default: return std::ldexp(uniform_real(rng, 0.5, 1.0), uniform_int(rng, -40, 40));
  }
}

// ---------------------------------------------------------------------------
// Protocols

inline Protocol random_protocol(Rng& rng) {
  Protocol p;
  p.name = random_word(rng, 1, 12);
  if (coin(rng)) p.subject_of = random_text(rng);
  if (coin(rng)) p.id = "https://example.org/p/" + random_word(rng);
  if (coin(rng)) p.citation = random_text(rng);

  std::vector<std::string> names;
  if (coin(rng, 0.8)) p.parameters.push_back({"Capacity", uniform_int(rng, 1, 60) / 10.0, std::nullopt});
  if (coin(rng, 0.7)) p.parameters.push_back({"LowerCutoffVoltage", 2.5, coin(rng) ? std::optional<std::string>("Volt") : std::nullopt});
  if (coin(rng, 0.7)) p.parameters.push_back({"UpperCutoffVoltage", 4.2, std::nullopt});
  for (int i = uniform_int(rng, 0, 2); i > 0; --i) {
    p.parameters.push_back({"P" + std::to_string(i) + random_word(rng), random_number(rng), pick(rng, std::vector<std::string>{"Ampere", "Volt", "Second", "CRate"})});
  }
  for (const auto& param : p.parameters) names.push_back(param.name);
  auto value = [&]() -> ValueRef {
    if (!names.empty() && coin(rng, 0.3)) return ValueRef(pick(rng, names));
    return ValueRef(random_number(rng));
  };

  const std::vector<StepKind> kinds = {StepKind::ElectricCurrent, StepKind::Voltage, StepKind::Rest};
  const std::vector<TerminationKind> tkinds = {TerminationKind::Voltage, TerminationKind::ElectricCurrent, TerminationKind::Time};
  const std::vector<Unit> units = {Unit::CRate, Unit::Ampere, Unit::Volt, Unit::Second};
  for (int b = uniform_int(rng, 0, 3); b > 0; --b) {
    InstructionBlock block;
    if (coin(rng)) block.name = random_word(rng);
    block.repeat = coin(rng) ? 1 : uniform_int(rng, 2, 500);
    for (int s = uniform_int(rng, 0, 5); s > 0; --s) {
      Step step;
      step.kind = pick(rng, kinds);
      step.value = value();
      step.unit = pick(rng, units);
      for (int t = uniform_int(rng, 0, 3); t > 0; --t) step.terminations.push_back({pick(rng, tkinds), value(), pick(rng, units)});
      block.sequence.push_back(std::move(step));
    }
    p.instructions.push_back(std::move(block));
  }
  if (coin(rng, 0.3)) p.extensions["x-" + random_word(rng)] = Json::array({1, "two", Json::object({{"k", nullptr}})});
  return p;
}

// ---------------------------------------------------------------------------
// Cell records

inline CellRecord random_cell_record(Rng& rng, int serial) {
  CellRecord r;
  r.id = "https://example.org/cell/" + std::to_string(serial) + "-" + random_word(rng);
  r.manufacturer = random_text(rng);
  r.product_name = random_text(rng);
  r.rated_capacity_ah = uniform_int(rng, 1, 100000) / 1000.0;
  r.lower_cutoff_v = uniform_int(rng, 100, 300) / 100.0;
  r.upper_cutoff_v = r.lower_cutoff_v + uniform_int(rng, 1, 250) / 100.0;
  if (coin(rng)) r.temp_min_c = random_number(rng);
  if (coin(rng)) r.temp_max_c = random_number(rng);
  if (coin(rng)) r.positive_material = random_text(rng);
  if (coin(rng)) r.negative_material = random_text(rng);
  if (coin(rng)) r.citation = random_text(rng);
  for (int i = uniform_int(rng, 0, 4); i > 0; --i) r.paper_dois.push_back("10." + std::to_string(uniform_int(rng, 1000, 99999)) + "/" + random_word(rng));
  for (int i = uniform_int(rng, 0, 4); i > 0; --i) {
    Extension e;
    e.predicate = coin(rng) ? "https://example.org/bcl/ext#" + random_word(rng) : "https://example.net/terms/" + random_word(rng);
    switch (uniform_int(rng, 0, 4)) {
      case 0: e.object = Term::iri("https://example.org/thing/" + random_word(rng)); break;
      case 1: e.object = Term::literal(random_text(rng)); break;
      case 2: e.object = Term::number(random_number(rng)); break;
      case 3: {
        e.object = Term::literal(random_text(rng));
        e.object.lang = coin(rng) ? "en" : "de-DE";
        break;
      }
      default: e.object = Term::typed(random_word(rng), "https://example.org/dt#" + random_word(rng));
    }
    r.extensions.push_back(std::move(e));
  }
  canonicalize(r);
  return r;
}

// ---------------------------------------------------------------------------
// Query oracle: enumerate every assignment of triples to patterns with
// nested loops, keep consistent ones, filter, project, dedupe, sort.

inline std::vector<std::vector<std::string>> oracle_query(const std::vector<Triple>& store, const Query& q) {
  std::vector<std::map<std::string, Term>> solutions{{}};
  auto unify = [](std::map<std::string, Term>& b, const Slot& slot, const Term& value) {
    if (!slot.is_var()) return slot.term == value;
    auto [it, fresh] = b.emplace(*slot.variable, value);
    return fresh || it->second == value;
  };
  for (const auto& pat : q.patterns) {
    std::vector<std::map<std::string, Term>> next;
    for (const auto& b : solutions) {
      for (const auto& t : store) {
        auto nb = b;
        if (unify(nb, pat.subject, t.subject) && unify(nb, pat.predicate, t.predicate) && unify(nb, pat.object, t.object)) {
          next.push_back(std::move(nb));
        }
      }
    }
    solutions = std::move(next);
  }
  std::set<std::vector<std::string>> rows;
  for (const auto& b : solutions) {
    bool keep = true;
    for (const auto& f : q.filters) {
      auto v = b.at(f.variable).numeric();
      double lhs = v.value_or(0.0);
      bool pass = false;
      if (v) {
        switch (f.op) {
          case CompareOp::Less: pass = lhs < f.value; break;
          case CompareOp::LessEqual: pass = lhs <= f.value; break;
          case CompareOp::Equal: pass = lhs == f.value; break;
          case CompareOp::GreaterEqual: pass = lhs >= f.value; break;
          case CompareOp::Greater: pass = lhs > f.value; break;
        }
      }
      keep = keep && pass;
    }
    if (!keep) continue;
    std::vector<std::string> row;
    for (const auto& v : q.select_vars) row.push_back(b.at(v).to_ntriples());
    rows.insert(std::move(row));
  }
  std::vector<std::vector<std::string>> out(rows.begin(), rows.end());
  if (q.limit && out.size() > *q.limit) out.resize(*q.limit);
  return out;
}

inline std::vector<std::vector<std::string>> rendered(const ResultTable& t) {
  std::vector<std::vector<std::string>> out;
  for (const auto& row : t.rows) {
    std::vector<std::string> r;
    for (const auto& term : row) r.push_back(term.to_ntriples());
    out.push_back(std::move(r));
  }
  return out;
}

// Small vocabulary so random patterns actually join.
struct RandomGraph {
  std::vector<Term> subjects, predicates, objects;
  std::vector<Triple> triples;
};

inline RandomGraph random_graph(Rng& rng) {
  RandomGraph g;
  const int ns = uniform_int(rng, 3, 12), np = uniform_int(rng, 2, 5);
  for (int i = 0; i < ns; ++i) g.subjects.push_back(Term::iri("http://ex.org/s" + std::to_string(i)));
  for (int i = 0; i < np; ++i) g.predicates.push_back(Term::iri("http://ex.org/p" + std::to_string(i)));
  g.objects = g.subjects;
  for (int i = 0; i < 6; ++i) g.objects.push_back(Term::number(uniform_int(rng, 0, 8) / 2.0));
  g.objects.push_back(Term::literal("x"));
  g.objects.push_back(Term::typed("3", std::string(kXsdInteger)));
  const int nt = uniform_int(rng, 0, 80);
  for (int i = 0; i < nt; ++i) g.triples.push_back({pick(rng, g.subjects), pick(rng, g.predicates), pick(rng, g.objects)});
  return g;
}

inline Query random_query(Rng& rng, const RandomGraph& g) {
  Query q;
  const std::vector<std::string> vars = {"a", "b", "c", "d"};
  std::vector<std::string> used;
  auto slot = [&](const std::vector<Term>& pool, double var_p) {
    if (coin(rng, var_p)) {
      const std::string v = pick(rng, vars);
      if (std::find(used.begin(), used.end(), v) == used.end()) used.push_back(v);
      return Slot::var(v);
    }
    return Slot::fixed(pick(rng, pool));
  };
  const int n = uniform_int(rng, 1, 3);
  for (int i = 0; i < n; ++i) {
    TriplePattern tp{slot(g.subjects, 0.7), slot(g.predicates, 0.3), slot(g.objects, 0.6)};
    q.patterns.push_back(tp);
  }
  if (used.empty()) {
    q.patterns.front().subject = Slot::var("a");
    used.push_back("a");
  }
  for (const auto& v : used) {
    if (coin(rng, 0.6)) q.select_vars.push_back(v);
  }
  if (q.select_vars.empty()) q.select_vars.push_back(used.front());
  if (coin(rng, 0.4)) {
    const std::vector<CompareOp> ops = {CompareOp::Less, CompareOp::LessEqual, CompareOp::Equal, CompareOp::GreaterEqual, CompareOp::Greater};
    q.filters.push_back({pick(rng, used), pick(rng, ops), uniform_int(rng, 0, 8) / 2.0});
  }
  if (coin(rng, 0.2)) q.limit = static_cast<std::uint64_t>(uniform_int(rng, 1, 5));
  return q;
}

// Query text for a Query built in memory; exercises the parser as well.
inline std::string query_text(const Query& q) {
  auto slot = [](const Slot& s) { return s.is_var() ? "?" + *s.variable : s.term.to_ntriples(); };
  std::string out = "SELECT";
  for (const auto& v : q.select_vars) out += " ?" + v;
  out += " WHERE {\n";
  for (const auto& p : q.patterns) out += "  " + slot(p.subject) + " " + slot(p.predicate) + " " + slot(p.object) + " .\n";
  for (const auto& f : q.filters) {
    static const char* ops[] = {"<", "<=", "=", ">=", ">"};
    out += "  FILTER(?" + f.variable + " " + ops[static_cast<int>(f.op)] + " " + detail::shortest(f.value) + ")\n";
  }
  out += "}";
  if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
  return out + "\n";
}

// ---------------------------------------------------------------------------
// Corpus: planted-mention generator and naive scan oracle.

struct PlantedCorpus {
  std::vector<Document> docs;
  AliasSet aliases;
  // cell IRI -> doc_ids that had one of its aliases planted
  std::map<std::string, std::set<std::string>> planted;
};

// Spells an alias with random case and random separators between its words.
inline std::string vary_spelling(Rng& rng, const std::string& alias) {
  std::string out;
  for (char c : alias) {
    if (c == ' ') {
      out += pick(rng, std::vector<std::string>{" ", "-", "_", "  ", " - "});
    } else if (std::isalpha(static_cast<unsigned char>(c)) && coin(rng)) {
      out += static_cast<char>(std::isupper(static_cast<unsigned char>(c)) ? std::tolower(c) : std::toupper(c));
    } else {
      out += c;
    }
  }
  return out;
}

inline PlantedCorpus planted_corpus(Rng& rng, int n_docs) {
  PlantedCorpus c;
  c.aliases.cells = {
      {"https://example.org/cell/mj1", {"LG Chem INR18650 MJ1", "INR21700 MJ1", "LG MJ1"}},
      {"https://example.org/cell/m50", {"LG Chem INR21700 M50", "M50T cell"}},
      {"https://example.org/cell/p42a", {"Molicel P42A"}},
      {"https://example.org/cell/vtc6", {"Sony VTC6", "US18650VTC6"}},
  };
  // Filler never contains alias words, so no near misses.
  const std::vector<std::string> filler = {"the", "cell", "was", "cycled", "at", "25", "degC", "capacity", "fade", "impedance",
                                           "electrode", "graphite", "we", "measured", "voltage", "(", "results", "show", "and",
                                           "a", "pouch", "format", "temperature", "of", "rate", "model", "data,", "in"};
  std::vector<std::pair<std::string, std::string>> all_aliases;
  for (const auto& [iri, list] : c.aliases.cells) {
    for (const auto& a : list) all_aliases.emplace_back(iri, a);
  }
  for (int d = 0; d < n_docs; ++d) {
    Document doc;
    doc.doc_id = "doc" + std::to_string(d);
    if (coin(rng, 0.85)) doc.doi = "10.5555/Planted." + std::to_string(d);
    const int words = uniform_int(rng, 0, 60);
    for (int w = 0; w < words; ++w) {
      doc.text += pick(rng, filler);
      doc.text += coin(rng, 0.1) ? "\n" : " ";
      if (coin(rng, 0.02)) {
        const auto& [iri, alias] = pick(rng, all_aliases);
        doc.text += vary_spelling(rng, alias) + pick(rng, std::vector<std::string>{" ", ". ", ", ", "; "});
        c.planted[iri].insert(doc.doc_id);
      }
    }
    c.docs.push_back(std::move(doc));
  }
  return c;
}

// Independent tokenizer for the oracle: character classes applied one by
// one, with no DOI special case (planted text contains no DOIs).
inline std::vector<std::string> naive_tokens(const std::string& text) {
  std::string flat;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '-' || c == '_' || std::isspace(u)) flat += ' ';
    else if (u < 0x80 && std::ispunct(u)) continue;
    else flat += static_cast<char>(std::tolower(u));
  }
  std::vector<std::string> out;
  std::istringstream in(flat);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline bool naive_contains(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

inline std::vector<std::size_t> naive_positions(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  std::vector<std::size_t> out;
  if (needle.empty() || needle.size() > hay.size()) return out;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation closed forms for a linear OCV(v_min..v_max) and series r0.

struct LinearCell {
  double capacity_ah, v_min, v_max, r0;

  double slope() const { return v_max - v_min; }  // V per unit SOC
  // CC at current i (A, >0) from soc0 until terminal voltage hits v_stop.
  double cc_time_to(double soc0, double i, double v_stop) const {
    const double soc_stop = (v_stop - i * r0 - v_min) / slope();
    return (soc_stop - soc0) * capacity_ah * 3600.0 / i;
  }
  // CV hold at v_hold starting from current i0 until current falls to i_end.
  double cv_time_to(double i0, double i_end) const {
    const double tau = r0 * capacity_ah * 3600.0 / slope();
    return tau * std::log(i0 / i_end);
  }
  double soc_at_cv_end(double v_hold, double i_end) const { return (v_hold - i_end * r0 - v_min) / slope(); }
};

}  // namespace bcl::test
