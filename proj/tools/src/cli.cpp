#include "fpclean/cli/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <ostream>

#include "eval_report.hpp"
#include "fpclean/blocker.hpp"
#include "fpclean/io.hpp"
#include "fpclean/synthgen.hpp"
#include "manifest.hpp"
#include "run.hpp"

namespace fpclean::cli {

using ojson = nlohmann::ordered_json;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EndpointUnavailable:
    case ErrorCode::ProtocolViolation: return kExitEndpoint;
    case ErrorCode::SafetyLimitExceeded: return kExitSafety;
    case ErrorCode::Interrupted: return kExitInterrupted;
    default: return kExitInput;
  }
}

namespace {

// A flag that overrides a manifest or default value only when given.
template <typename T>
struct Flag {
  T value{};
  CLI::Option* opt = nullptr;

  bool given() const { return opt && opt->count() > 0; }
  template <typename U>
  void apply(U& target) const {
    if (given()) target = U(value);
  }
};

template <typename T>
CLI::Option* add(CLI::App* app, const std::string& name, Flag<T>& flag, const std::string& help) {
  flag.opt = app->add_option(name, flag.value, help);
  return flag.opt;
}

struct MatcherFlags {
  Flag<std::string> kind, command;
  Flag<double> fp_rate, fn_rate, error_decay;
  Flag<std::uint64_t> noise_seed;
  Flag<std::size_t> batch_size;
  Flag<std::int64_t> timeout_ms;
  bool no_finetune = false;

  void bind(CLI::App* app) {
    add(app, "--matcher", kind, "simulated | external")->check(CLI::IsMember({"simulated", "external"}));
    add(app, "--matcher-command", command, "shell command of an external matcher bridge");
    add(app, "--fp-rate", fp_rate, "simulated matcher false-positive rate");
    add(app, "--fn-rate", fn_rate, "simulated matcher false-negative rate");
    add(app, "--error-decay", error_decay, "simulated matcher error factor per finetune");
    add(app, "--noise-seed", noise_seed, "simulated matcher noise seed");
    add(app, "--batch-size", batch_size, "external matcher batch size");
    add(app, "--matcher-timeout-ms", timeout_ms, "external matcher reply timeout");
    app->add_flag("--no-finetune", no_finetune, "treat the matcher as unable to finetune");
  }
  void apply(MatcherDescriptor& d) const {
    kind.apply(d.kind);
    command.apply(d.command);
    fp_rate.apply(d.fp_rate);
    fn_rate.apply(d.fn_rate);
    error_decay.apply(d.error_decay);
    noise_seed.apply(d.noise_seed);
    batch_size.apply(d.batch_size);
    timeout_ms.apply(d.timeout_ms);
    if (no_finetune) d.finetune = false;
  }
};

struct RunFlags {
  Flag<std::string> manifest, dataset, edges, truth, out_dir;
  Flag<std::string> oracle, llm_command, labels;
  Flag<double> flip_rate;
  Flag<std::uint64_t> oracle_seed;
  Flag<std::size_t> iterations, size_threshold, lb_total, sample_cap, path_subset, safety_factor;
  Flag<std::uint64_t> seed;
  Flag<std::size_t> halt_after;
  Flag<int> port;
  std::string host = "127.0.0.1";
  bool resume = false;
  bool linger = false;
  MatcherFlags matcher;

  void bind(CLI::App* app, bool serving) {
    add(app, "--manifest", manifest, "run manifest (flags override its values)");
    add(app, "--dataset", dataset, "dataset file");
    add(app, "--edges", edges, "initial edge file from `match`");
    add(app, "--truth", truth, "ground truth CSV");
    add(app, "--out-dir", out_dir, "output directory");
    add(app, "--oracle", oracle, "groundtruth | noisy | llm | human | replay")
        ->check(CLI::IsMember({"groundtruth", "noisy", "llm", "human", "replay"}));
    add(app, "--flip-rate", flip_rate, "noisy oracle flip probability");
    add(app, "--oracle-seed", oracle_seed, "noisy oracle seed");
    add(app, "--llm-command", llm_command, "shell command of the pseudo-labeler");
    add(app, "--labels", labels, "label log to replay");
    add(app, "--iterations", iterations, "initial iterations n");
    add(app, "--size-threshold", size_threshold, "component size threshold S");
    add(app, "--lb-total", lb_total, "total labeling budget");
    add(app, "--seed", seed, "run seed");
    add(app, "--sample-cap", sample_cap, "transitive pairs sampled for components above S");
    add(app, "--path-subset", path_subset, "negative pairs whose shortest paths become candidates");
    add(app, "--safety-factor", safety_factor, "post-finetune labels allowed, as a multiple of lb_total");
    add(app, "--halt-after-labels", halt_after, "stop with exit 75 after this many new labels");
    app->add_flag("--resume", resume, "continue from the checkpoint in the output directory");
    add(app, "--port", port, serving ? "HTTP port, 0 picks a free one" : "also serve the HTTP API on this port");
    app->add_option("--host", host, "HTTP bind address");
    app->add_flag("--linger", linger, "keep serving after the run until interrupted");
    matcher.bind(app);
  }

  RunManifest manifest_value() const {
    RunManifest m = manifest.given() ? load_manifest(manifest.value) : RunManifest{};
    dataset.apply(m.dataset);
    edges.apply(m.edges);
    truth.apply(m.truth);
    out_dir.apply(m.output_dir);
    oracle.apply(m.oracle.mode);
    flip_rate.apply(m.oracle.flip_rate);
    oracle_seed.apply(m.oracle.seed);
    llm_command.apply(m.oracle.command);
    labels.apply(m.oracle.labels);
    iterations.apply(m.config.n_iterations);
    size_threshold.apply(m.config.size_threshold);
    lb_total.apply(m.config.lb_total);
    seed.apply(m.config.seed);
    if (sample_cap.given()) m.config.sample_cap_for_large = sample_cap.value;
    path_subset.apply(m.config.shortest_path_subset_size);
    safety_factor.apply(m.config.safety_factor);
    matcher.apply(m.matcher);
    return m;
  }

  RunOptions options(const std::string& command, std::optional<int> default_port) const {
    RunOptions o;
    o.manifest = manifest_value();
    o.command = command;
    o.resume = resume;
    if (halt_after.given()) o.halt_after_labels = halt_after.value;
    o.port = port.given() ? std::optional<int>(port.value) : default_port;
    o.host = host;
    o.linger = linger;
    return o;
  }
};

ojson ledger_summary(const BudgetLedger& l) { return ojson::parse(io::ledger_json(l)); }

void print(std::ostream& out, const ojson& j) { out << j.dump() << '\n'; }

int cmd_ingest(const std::string& input, const std::string& format, const io::CsvIngestOptions& csv,
               const std::string& output, std::ostream& out) {
  const std::string text = io::read_file(input);
  std::string fmt = format;
  if (fmt == "auto") {
    const auto ext = fs::path(input).extension().string();
    fmt = ext == ".csv" ? "csv" : "ndjson";
  }
  const Dataset ds = fmt == "csv" ? io::ingest_csv(text, csv) : io::ingest_ndjson(text);
  io::write_file_atomic(output, io::dataset_ndjson(ds));
  print(out, {{"records", ds.size()}, {"output", output}});
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entity-matching false-positive cleanup", "fpclean"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fpclean 0.1.0");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "CSV or newline-delimited records -> canonical dataset file");
  std::string ingest_input, ingest_format = "auto", ingest_out;
  io::CsvIngestOptions csv_opts;
  ingest->add_option("--input", ingest_input, "input records")->required();
  ingest->add_option("--format", ingest_format, "auto | csv | ndjson")->check(CLI::IsMember({"auto", "csv", "ndjson"}));
  ingest->add_option("--id-column", csv_opts.id_column, "CSV column holding record ids");
  ingest->add_option("--source-column", csv_opts.source_column, "CSV column holding source ids");
  ingest->add_option("--out", ingest_out, "dataset file to write")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "synthetic spec -> dataset + ground truth");
  Flag<std::string> sim_spec, sim_perturbation;
  Flag<std::size_t> sim_entities, sim_sources;
  Flag<std::uint64_t> sim_seed;
  std::string sim_dataset, sim_truth;
  add(simulate, "--spec", sim_spec, "synth spec file");
  add(simulate, "--entities", sim_entities, "number of entities");
  add(simulate, "--sources", sim_sources, "number of sources (>= 3)");
  add(simulate, "--seed", sim_seed, "generator seed");
  add(simulate, "--perturbation", sim_perturbation, "none | moderate")->check(CLI::IsMember({"none", "moderate"}));
  simulate->add_option("--dataset", sim_dataset, "dataset file to write")->required();
  simulate->add_option("--truth", sim_truth, "ground truth CSV to write")->required();

  // block
  auto* block = app.add_subcommand("block", "dataset -> candidate pairs by token overlap");
  std::string block_dataset, block_out, block_truth;
  BlockerOptions block_opts;
  block->add_option("--dataset", block_dataset, "dataset file")->required();
  block->add_option("--out", block_out, "candidate file to write")->required();
  block->add_option("--k", block_opts.k, "partners kept per record");
  block->add_option("--stop-fraction", block_opts.stop_fraction, "skip tokens in more than this fraction of records");
  block->add_option("--min-stop-df", block_opts.min_stop_df, "never treat tokens in this few records as stop tokens");
  block->add_option("--truth", block_truth, "ground truth CSV; adds recall to the output");

  // match
  auto* match = app.add_subcommand("match", "candidate pairs + matcher -> initial edge file");
  Flag<std::string> match_manifest, match_dataset, match_truth;
  std::string match_candidates, match_out;
  MatcherFlags match_matcher;
  add(match, "--manifest", match_manifest, "run manifest supplying dataset, truth and matcher");
  add(match, "--dataset", match_dataset, "dataset file");
  add(match, "--truth", match_truth, "ground truth CSV (simulated matcher)");
  match->add_option("--candidates", match_candidates, "candidate file from `block`")->required();
  match->add_option("--out", match_out, "edge file to write")->required();
  match_matcher.bind(match);

  // clean, replay, serve
  auto* clean = app.add_subcommand("clean", "edge file + manifest -> cleaned graph, reports, ledger, label log");
  RunFlags clean_flags;
  clean_flags.bind(clean, false);
  auto* replay = app.add_subcommand("replay", "re-run a cleanup from a recorded label log");
  RunFlags replay_flags;
  replay_flags.bind(replay, false);
  auto* serve = app.add_subcommand("serve", "run a cleanup behind the labeling HTTP API (human oracle by default)");
  RunFlags serve_flags;
  serve_flags.bind(serve, true);

  // eval
  auto* eval = app.add_subcommand("eval", "graph + ground truth -> scores, removal stats, proxy correlation");
  Flag<std::string> ev_manifest, ev_dataset, ev_truth, ev_edges, ev_graph, ev_reports, ev_steps, ev_run_dir;
  std::string ev_out, ev_csv;
  add(eval, "--manifest", ev_manifest, "run manifest supplying dataset, truth, edges and output directory");
  add(eval, "--dataset", ev_dataset, "dataset file");
  add(eval, "--truth", ev_truth, "ground truth CSV");
  add(eval, "--edges", ev_edges, "initial edge file; enables pre scores and removal stats");
  add(eval, "--run-dir", ev_run_dir, "directory with graph.json, reports.json and steps.ndjson");
  add(eval, "--graph", ev_graph, "final graph file");
  add(eval, "--reports", ev_reports, "reports file");
  add(eval, "--steps", ev_steps, "step partitions file");
  eval->add_option("--out", ev_out, "write the JSON report here too");
  eval->add_option("--csv", ev_csv, "write the per-step series as CSV");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::CallForVersion&) {
      out << app.version() << '\n';
      return kExitOk;
    }

    if (ingest->parsed()) return cmd_ingest(ingest_input, ingest_format, csv_opts, ingest_out, out);

    if (simulate->parsed()) {
      SynthSpec spec = sim_spec.given() ? io::parse_synth_spec(io::read_file(sim_spec.value)) : SynthSpec{};
      sim_entities.apply(spec.n_entities);
      sim_sources.apply(spec.sources);
      sim_seed.apply(spec.seed);
      if (sim_perturbation.given())
        spec.perturbation = sim_perturbation.value == "none" ? Perturbation{} : Perturbation::moderate();
      const auto data = generate(spec);
      const Dataset ds(data.records);
      io::write_file_atomic(sim_dataset, io::dataset_ndjson(ds));
      io::write_file_atomic(sim_truth, io::ground_truth_csv(data.truth));
      print(out, {{"records", ds.size()}, {"entities", spec.n_entities}, {"truth_pairs", data.truth.total_pairs()}});
      return kExitOk;
    }

    if (block->parsed()) {
      const Dataset ds = io::parse_dataset(io::read_file(block_dataset));
      const auto pairs = block_top_k(ds, block_opts);
      io::write_file_atomic(block_out, io::candidates_ndjson(pairs));
      ojson j{{"records", ds.size()}, {"pairs", pairs.size()}};
      if (!block_truth.empty()) {
        const auto r = blocking_recall(pairs, load_truth(block_truth));
        j["found"] = r.found;
        j["truth_pairs"] = r.total;
        j["recall"] = std::stod(format_percent(r.recall));
      }
      print(out, j);
      return kExitOk;
    }

    if (match->parsed()) {
      RunManifest m = match_manifest.given() ? load_manifest(match_manifest.value) : RunManifest{};
      match_dataset.apply(m.dataset);
      match_truth.apply(m.truth);
      match_matcher.apply(m.matcher);
      if (m.dataset.empty()) throw Error(ErrorCode::InvalidInput, "a dataset file is required");
      const Dataset ds = io::parse_dataset(io::read_file(m.dataset));
      std::optional<GroundTruth> truth;
      if (!m.truth.empty()) truth = load_truth(m.truth);
      auto matcher = make_matcher(m.matcher, truth ? &*truth : nullptr);
      const auto cands = io::parse_candidates(io::read_file(match_candidates));
      std::vector<RecordPairRef> refs;
      refs.reserve(cands.size());
      for (const auto& c : cands) refs.push_back({&ds[ds.index_of(c.pair.first)], &ds[ds.index_of(c.pair.second)]});
      std::vector<PairPrediction> matches;
      if (!refs.empty())
        for (auto& p : matcher->evaluate_batch(refs))
          if (p.label == Label::Match) matches.push_back(std::move(p));
      io::write_file_atomic(match_out, io::edges_ndjson(matches));
      print(out, {{"candidates", cands.size()}, {"edges", matches.size()}});
      return kExitOk;
    }

    const RunFlags* flags = nullptr;
    std::string command;
    std::optional<int> default_port;
    if (clean->parsed()) {
      flags = &clean_flags;
      command = "clean";
    } else if (replay->parsed()) {
      flags = &replay_flags;
      command = "replay";
    } else if (serve->parsed()) {
      flags = &serve_flags;
      command = "serve";
      default_port = 8080;
    }
    if (flags) {
      RunOptions opts = flags->options(command, default_port);
      if (command == "replay") {
        if (opts.manifest.oracle.labels.empty())
          throw Error(ErrorCode::InvalidInput, "replay requires --labels (or oracle.labels in the manifest)");
        opts.manifest.oracle.mode = "replay";
      }
      if (command == "serve" && !flags->oracle.given() && !flags->manifest.given()) opts.manifest.oracle.mode = "human";
      const auto outcome = run_clean(opts, out);
      print(out, {{"status", "completed"},
                  {"steps", outcome.steps},
                  {"live_edges", outcome.live_edges},
                  {"labels", outcome.labels},
                  {"ledger", ledger_summary(outcome.ledger)}});
      return kExitOk;
    }

    if (eval->parsed()) {
      RunManifest m = ev_manifest.given() ? load_manifest(ev_manifest.value) : RunManifest{};
      ev_dataset.apply(m.dataset);
      ev_truth.apply(m.truth);
      ev_edges.apply(m.edges);
      ev_run_dir.apply(m.output_dir);
      const fs::path dir = m.output_dir;
      fs::path graph_path = dir.empty() ? fs::path{} : dir / "graph.json";
      fs::path reports_path = dir.empty() ? fs::path{} : dir / "reports.json";
      fs::path steps_path = dir.empty() ? fs::path{} : dir / "steps.ndjson";
      ev_graph.apply(graph_path);
      ev_reports.apply(reports_path);
      ev_steps.apply(steps_path);
      if (m.dataset.empty() || m.truth.empty() || graph_path.empty())
        throw Error(ErrorCode::InvalidInput, "eval needs --dataset, --truth and a graph (--graph or --run-dir)");
      auto ds = std::make_shared<const Dataset>(io::parse_dataset(io::read_file(m.dataset)));
      const auto truth = load_truth(m.truth);
      const auto final_graph = io::parse_graph(io::read_file(graph_path), ds);
      std::optional<MatchingGraph> initial;
      if (!m.edges.empty()) {
        const auto preds = io::parse_edges(io::read_file(m.edges));
        initial = build_graph(ds, preds);
      }
      std::optional<std::vector<TransitiveReport>> reports;
      std::optional<std::vector<io::StepPartition>> steps;
      if (!reports_path.empty() && fs::exists(reports_path) && !steps_path.empty() && fs::exists(steps_path)) {
        reports = io::parse_reports(io::read_file(reports_path));
        steps = io::parse_step_partitions(io::read_file(steps_path));
      }
      EvalInputs in;
      in.final_graph = &final_graph;
      in.initial_graph = initial ? &*initial : nullptr;
      in.reports = reports ? &*reports : nullptr;
      in.steps = steps ? &*steps : nullptr;
      in.truth = &truth;
      const auto report = build_eval_report(in);
      if (!ev_out.empty()) io::write_file_atomic(ev_out, report.json.dump(2) + "\n");
      if (!ev_csv.empty()) io::write_file_atomic(ev_csv, report.csv);
      out << report.json.dump(2) << '\n';
      return kExitOk;
    }
    return kExitInput;
  } catch (const CLI::ParseError& e) {
    print(err, {{"error", "InvalidInput"}, {"message", e.what()}, {"exit_code", kExitInput}});
    return kExitInput;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    print(err, {{"error", std::string(to_string(e.code()))}, {"message", e.what()}, {"exit_code", code}});
    return code;
  } catch (const fs::filesystem_error& e) {
    print(err, {{"error", "InvalidInput"}, {"message", e.what()}, {"exit_code", kExitInput}});
    return kExitInput;
  } catch (const std::exception& e) {
    print(err, {{"error", "Internal"}, {"message", e.what()}, {"exit_code", kExitInternal}});
    return kExitInternal;
  }
}

}  // namespace fpclean::cli
