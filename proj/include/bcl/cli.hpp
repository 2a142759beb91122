#pragma once

// `bcl` command-line driver. run_cli() takes explicit streams so tests can
// capture stdout/stderr; tools/bcl_main.cpp forwards std::cout/std::cerr.
//
// Exit codes: 0 ok, 1 validation errors, 2 I/O or parse failure,
// 3 simulation error, 4 query error. Usage errors also exit 2.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcl/context.hpp"
#include "bcl/corpus.hpp"
#include "bcl/error.hpp"
#include "bcl/graphstore.hpp"
#include "bcl/protocol.hpp"
#include "bcl/rdf.hpp"
#include "bcl/semantic.hpp"
#include "bcl/simulator.hpp"
#include "bcl/transform.hpp"

namespace bcl {

enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitIo = 2, kExitSimulation = 3, kExitQuery = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingCapacity:
    case ErrorCode::ZeroCurrent:
    case ErrorCode::InvalidProtocol:
      return kExitInvalid;
    case ErrorCode::InvalidModel:
    case ErrorCode::InvalidConfig:
    case ErrorCode::SingularHold:
    case ErrorCode::UnknownBlock:
    case ErrorCode::NoDischarge:
      return kExitSimulation;
    case ErrorCode::SyntaxError:
    case ErrorCode::UnknownPrefix:
    case ErrorCode::UnboundFilter:
    case ErrorCode::UnboundVariable:
      return kExitQuery;
    default:
      return kExitIo;
  }
}

/// Cell records from a directory of JSON-LD files or an N-Triples file
/// (grouped by subject).
inline std::vector<CellRecord> load_store_records(const std::filesystem::path& path, const ContextMap& ctx) {
  if (std::filesystem::is_directory(path)) return load_cell_records(path, ctx);
  std::map<Term, std::vector<Triple>> by_subject;
  for (auto& t : parse_ntriples(read_file(path))) by_subject[t.subject].push_back(std::move(t));
  std::vector<CellRecord> records;
  for (const auto& [subject, triples] : by_subject) records.push_back(triples_to_cell_record(triples, ctx));
  return records;
}

/// Fills `store` from a cell-record directory or an N-Triples file.
inline std::size_t load_store(TripleStore& store, const std::filesystem::path& path, const ContextMap& ctx) {
  if (std::filesystem::is_directory(path)) {
    std::size_t added = 0;
    for (const auto& r : load_cell_records(path, ctx)) added += store.insert(cell_record_to_triples(r, ctx));
    return added;
  }
  return store.insert(parse_ntriples(read_file(path)));
}

inline std::string table_to_csv(const ResultTable& table) {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + '"';
  };
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + field(row[i].to_ntriples());
    out += '\n';
  }
  return out;
}

inline Json table_to_json(const ResultTable& table) {
  Json rows = Json::array();
  for (const auto& row : table.rows) {
    Json r = Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = row[i].to_ntriples();
    rows.push_back(std::move(r));
  }
  return Json{{"columns", table.columns}, {"rows", std::move(rows)}};
}

namespace detail {

inline void write_output(const std::string& path, const std::string& payload, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << payload;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << payload;
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path);
}

inline std::string slug(std::string_view iri) {
  std::string out;
  for (char c : iri.substr(iri.find_last_of("/#") == std::string_view::npos ? 0 : iri.find_last_of("/#") + 1)) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    out += keep ? c : '_';
  }
  return out.empty() ? "cell" : out;
}

inline void reject_format(const std::string& format, std::initializer_list<std::string_view> allowed) {
  if (format.empty()) return;
  for (auto a : allowed) {
    if (format == a) return;
  }
  throw std::invalid_argument("--format " + format + " is not available for this subcommand");
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Battery cycling protocol toolkit", "bcl"};
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print help for every subcommand and flag");
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string context_path;
  std::string output = "-";
  std::string format;
  app.add_option("--context", context_path, "JSON-LD context file (default: built-in)")->check(CLI::ExistingFile);
  app.add_option("-o,--output", output, "Output file, '-' for stdout")->capture_default_str();
  app.add_option("--format", format, "Output format where a subcommand offers a choice")
      ->check(CLI::IsMember({"json", "tsv", "csv"}));

  std::string protocol_path;
  auto add_protocol_cmd = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("protocol", protocol_path, "Protocol JSON file")->required();
    return cmd;
  };
  auto* validate_cmd = add_protocol_cmd("validate", "Check a protocol; prints the validation report");
  auto* resolve_cmd = add_protocol_cmd("resolve", "Substitute parameters and convert CRate to amperes");
  auto* unroll_cmd = add_protocol_cmd("unroll", "Print one line per executed step (block, iteration, step, text)");
  auto* export_cmd = add_protocol_cmd("export-experiment", "Print cycler experiment text");
  auto* jsonld_cmd = add_protocol_cmd("jsonld", "Emit the protocol as JSON-LD");

  auto* simulate_cmd = add_protocol_cmd("simulate", "Run the protocol on an OCV + R0 cell model; prints the trace CSV");
  std::optional<double> capacity;
  std::optional<double> vmin;
  std::optional<double> vmax;
  double r0 = 0.0;
  double fade = 0.0;
  SimConfig sim_cfg;
  std::string events_path;
  std::string summary_path;
  std::string reference_block;
  simulate_cmd->add_option("--capacity", capacity, "Cell capacity in Ah (default: protocol Capacity)");
  simulate_cmd->add_option("--vmin", vmin, "OCV at SOC 0 in V (default: protocol LowerCutoffVoltage)");
  simulate_cmd->add_option("--vmax", vmax, "OCV at SOC 1 in V (default: protocol UpperCutoffVoltage)");
  simulate_cmd->add_option("--r0", r0, "Series resistance in ohm")->required();
  simulate_cmd->add_option("--fade", fade, "Capacity loss per completed block iteration")->capture_default_str();
  simulate_cmd->add_option("--soc0", sim_cfg.initial_soc, "Initial state of charge")->capture_default_str();
  simulate_cmd->add_option("--dt", sim_cfg.dt_s, "Output step in s")->capture_default_str();
  simulate_cmd->add_option("--tol", sim_cfg.event_tol_s, "Event location tolerance in s")->capture_default_str();
  simulate_cmd->add_option("--max-step", sim_cfg.max_step_duration_s, "Per-step time limit in s")->capture_default_str();
  simulate_cmd->add_option("--events", events_path, "Also write the event CSV here");
  simulate_cmd->add_option("--summary", summary_path, "Also write the per-cycle charge summary CSV here");
  simulate_cmd->add_option("--reference-block", reference_block,
                           "Report discharge/rated capacity of this block's last iteration on stderr");

  std::string cells_dir;
  auto* ingest_cmd = app.add_subcommand("ingest-cells", "Convert a directory of cell JSON-LD records to N-Triples");
  ingest_cmd->add_option("dir", cells_dir, "Directory of *.json / *.jsonld cell records")->required()->check(CLI::ExistingDirectory);

  std::string store_path;
  std::string query_path;
  auto* query_cmd = app.add_subcommand("query", "Run a SELECT query; prints TSV (or --format json/csv)");
  query_cmd->add_option("store", store_path, "N-Triples file or cell-record directory")->required()->check(CLI::ExistingPath);
  query_cmd->add_option("query", query_path, "Query file")->required()->check(CLI::ExistingFile);

  std::string manifest_path;
  unsigned threads = 0;
  auto* index_cmd = app.add_subcommand("index-corpus", "Index the documents listed in a manifest; prints the index JSON");
  index_cmd->add_option("manifest", manifest_path, "CSV manifest doc_id,doi,path")->required()->check(CLI::ExistingFile);
  index_cmd->add_option("--threads", threads, "Tokenizer threads (0: hardware concurrency)")->capture_default_str();

  std::string index_path;
  std::string aliases_path;
  std::string out_dir;
  auto* link_cmd = app.add_subcommand("link", "Find cell mentions in an indexed corpus; prints the mentions report");
  link_cmd->add_option("store", store_path, "N-Triples file or cell-record directory")->required()->check(CLI::ExistingPath);
  link_cmd->add_option("index", index_path, "Index JSON from index-corpus")->required()->check(CLI::ExistingFile);
  link_cmd->add_option("--aliases", aliases_path, "Alias JSON {cell IRI: [alias, ...]}")->required()->check(CLI::ExistingFile);
  link_cmd->add_option("--out-dir", out_dir, "Write the updated cell records here as JSON-LD");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitIo;
  }

  try {
    const ContextMap ctx = context_path.empty() ? default_context() : load_context(context_path);
    auto emit = [&](const std::string& payload) { detail::write_output(output, payload, out); };
    auto lines = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& l : v) s += l + '\n';
      return s;
    };
    auto load_protocol = [&]() { return parse_protocol(read_file(protocol_path)); };

    if (validate_cmd->parsed()) {
      detail::reject_format(format, {"json"});
      const auto report = validate_protocol(load_protocol());
      emit(report_to_json(report).dump(2) + '\n');
      for (const auto& e : report.errors) err << "error: " << e.path << ": " << e.code << ": " << e.message << '\n';
      for (const auto& w : report.warnings) err << "warning: " << w.path << ": " << w.code << ": " << w.message << '\n';
      return report.ok() ? kExitOk : kExitInvalid;
    }
    if (resolve_cmd->parsed()) {
      detail::reject_format(format, {"json"});
      emit(resolved_to_json(resolve_quantities(load_protocol())).dump(2) + '\n');
      return kExitOk;
    }
    if (unroll_cmd->parsed()) {
      detail::reject_format(format, {"tsv", "json"});
      const auto flat = unroll(resolve_quantities(load_protocol()));
      if (format == "json") {
        Json arr = Json::array();
        for (const auto& f : flat) {
          arr.push_back(Json{{"block", f.block_index}, {"iteration", f.iteration}, {"step", f.step_index},
                             {"text", experiment_line(f.step)}});
        }
        emit(arr.dump(2) + '\n');
      } else {
        std::string s;
        for (const auto& f : flat) {
          s += std::to_string(f.block_index) + '\t' + std::to_string(f.iteration) + '\t' +
               std::to_string(f.step_index) + '\t' + experiment_line(f.step) + '\n';
        }
        emit(s);
      }
      return kExitOk;
    }
    if (export_cmd->parsed()) {
      detail::reject_format(format, {});
      emit(lines(export_experiment_text(resolve_quantities(load_protocol()))));
      return kExitOk;
    }
    if (jsonld_cmd->parsed()) {
      detail::reject_format(format, {"json"});
      emit(emit_protocol_jsonld(load_protocol(), ctx));
      return kExitOk;
    }
    if (simulate_cmd->parsed()) {
      detail::reject_format(format, {"csv"});
      const Protocol p = load_protocol();
      const ResolvedProtocol rp = resolve_quantities(p);
      auto from_param = [&](const std::optional<double>& flag, std::string_view name) {
        if (flag) return *flag;
        if (const Parameter* param = p.find_parameter(name)) return param->value;
        throw Error(ErrorCode::InvalidModel, "no --" + std::string(name == kCapacity ? "capacity" : name == kLowerCutoffVoltage ? "vmin" : "vmax") +
                                                 " given and the protocol has no " + std::string(name));
      };
      CellModel model = build_reference_model(from_param(capacity, kCapacity), from_param(vmin, kLowerCutoffVoltage),
                                              from_param(vmax, kUpperCutoffVoltage), r0);
      model.fade_per_cycle = fade;
      const SimTrace trace = simulate(rp, model, sim_cfg);
      emit(trace_to_csv(trace));
      if (!events_path.empty()) detail::write_output(events_path, events_to_csv(trace), out);
      if (!summary_path.empty()) detail::write_output(summary_path, cycle_summary_to_csv(trace.per_cycle), out);
      if (!reference_block.empty()) {
        err << "capacity_ratio " << detail::shortest(capacity_check(trace, reference_block, model.capacity_ah)) << '\n';
      }
      return kExitOk;
    }
    if (ingest_cmd->parsed()) {
      detail::reject_format(format, {});
      std::vector<Triple> all;
      const auto records = load_cell_records(cells_dir, ctx);
      for (const auto& r : records) {
        auto t = cell_record_to_triples(r, ctx);
        all.insert(all.end(), t.begin(), t.end());
      }
      emit(to_ntriples(all));
      err << records.size() << " records, " << all.size() << " triples\n";
      return kExitOk;
    }
    if (query_cmd->parsed()) {
      const Query q = parse_query(read_file(query_path));
      TripleStore store;
      load_store(store, store_path, ctx);
      const ResultTable table = execute_query(store, q);
      if (format == "json") emit(table_to_json(table).dump(2) + '\n');
      else if (format == "csv") emit(table_to_csv(table));
      else emit(table.to_tsv());
      return kExitOk;
    }
    if (index_cmd->parsed()) {
      detail::reject_format(format, {"json"});
      CorpusIndex index;
      const std::size_t tokens = index.index_documents(load_corpus(manifest_path), threads);
      emit(index.to_json().dump() + '\n');
      err << index.document_count() << " documents, " << tokens << " tokens\n";
      return kExitOk;
    }
    if (link_cmd->parsed()) {
      detail::reject_format(format, {"json"});
      const CorpusIndex index = CorpusIndex::from_json(detail::parse_json_strict(read_file(index_path)));
      const Mentions mentions = find_cell_mentions(index, load_alias_set(aliases_path));
      LinkResult linked = link_papers(load_store_records(store_path, ctx), mentions);
      for (const auto& iri : linked.unknown_cells) err << "warning: UnknownCell: " << iri << '\n';
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        for (const auto& r : linked.records) {
          detail::write_output((std::filesystem::path(out_dir) / (detail::slug(r.id) + ".jsonld")).string(),
                               emit_cell_record_jsonld(r, ctx), out);
        }
      }
      emit(mentions_to_json(mentions).dump(2) + '\n');
      err << linked.added << " DOIs added\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "bcl: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    err << "bcl: ParseError: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "bcl: IoError: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "bcl: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitIo;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"bcl"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bcl
