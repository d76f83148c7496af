#include "run.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <ctime>
#include <fstream>
#include <ostream>
#include <thread>

#include "fpclean/channel.hpp"
#include "fpclean/error.hpp"
#include "fpclean/io.hpp"
#include "server.hpp"

namespace fpclean::cli {

namespace {

using ojson = nlohmann::ordered_json;

std::atomic<bool> g_stop_requested{false};

extern "C" void request_stop(int) { g_stop_requested.store(true); }

// Installs SIGINT/SIGTERM handlers for the lifetime of a serving run.
class StopSignals {
 public:
  StopSignals() {
    g_stop_requested = false;
    prev_int_ = std::signal(SIGINT, request_stop);
    prev_term_ = std::signal(SIGTERM, request_stop);
  }
  ~StopSignals() {
    std::signal(SIGINT, prev_int_);
    std::signal(SIGTERM, prev_term_);
  }

 private:
  void (*prev_int_)(int) = SIG_DFL;
  void (*prev_term_)(int) = SIG_DFL;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<LabelRecord> replay_log(const fs::path& path) {
  auto log = io::parse_label_log(io::read_file(path));
  std::erase_if(log, [](const LabelRecord& r) { return r.superseded; });
  std::stable_sort(log.begin(), log.end(), [](const LabelRecord& a, const LabelRecord& b) { return a.ts < b.ts; });
  return log;
}

std::unique_ptr<LabelSource> make_source(const RunManifest& m, const GroundTruth* truth, HumanQueue* queue) {
  const auto& o = m.oracle;
  if (o.mode == "groundtruth") return std::make_unique<GroundTruthSource>(truth->assignment);
  if (o.mode == "noisy") return std::make_unique<NoisySource>(truth->assignment, o.flip_rate, o.seed);
  if (o.mode == "replay") return std::make_unique<ReplaySource>(replay_log(o.labels));
  if (o.mode == "human") return std::make_unique<HumanSource>(*queue);
  LlmSourceOptions opts;
  opts.timeout = std::chrono::milliseconds(o.timeout_ms);
  opts.fallback_to_nomatch = o.fallback_nomatch;
  return std::make_unique<LlmSource>(std::make_unique<ProcessChannel>(o.command), opts);
}

// Keeps the header and the first `keep` body lines of a newline-delimited file.
std::string truncated_ndjson(const std::string& text, std::size_t keep) {
  std::size_t pos = 0;
  for (std::size_t line = 0; line < keep + 1 && pos < text.size(); ++line) {
    const auto nl = text.find('\n', pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
  }
  return text.substr(0, pos);
}

}  // namespace

RunOutcome run_clean(const RunOptions& options, std::ostream& out) {
  const RunManifest& m = options.manifest;
  m.validate();
  if (m.oracle.mode == "human" && !options.port)
    throw Error(ErrorCode::InvalidInput, "the human oracle needs the HTTP API: use `serve` or pass --port");

  const std::string started = utc_now();
  const fs::path dir = m.output_dir;
  fs::create_directories(dir);
  const fs::path checkpoint_path = dir / "checkpoint.json";
  const fs::path labels_path = dir / "labels.ndjson";
  const fs::path steps_path = dir / "steps.ndjson";

  auto dataset = std::make_shared<const Dataset>(io::parse_dataset(io::read_file(m.dataset)));
  const auto predictions = io::parse_edges(io::read_file(m.edges));
  std::optional<GroundTruth> truth;
  if (!m.truth.empty()) truth = load_truth(m.truth);

  auto matcher = make_matcher(m.matcher, truth ? &*truth : nullptr);
  std::unique_ptr<HumanQueue> queue;
  if (m.oracle.mode == "human") queue = std::make_unique<HumanQueue>(dir / "queue.json");
  Oracle oracle(make_source(m, truth ? &*truth : nullptr, queue.get()),
                BudgetLedger::with_defaults(m.config.lb_total, m.config.n_iterations, m.config.safety_factor));
  CleanupEngine engine(build_graph(dataset, predictions), *matcher, oracle, m.config);

  // Bring the durable logs in line with the state the engine starts from.
  std::size_t resumed_step = 0;
  if (options.resume && fs::exists(checkpoint_path)) {
    engine.restore_checkpoint(io::read_file(checkpoint_path));
    resumed_step = engine.cursor().next;
  }
  if (options.resume && fs::exists(labels_path)) {
    std::vector<LabelRecord> kept, pending;
    for (auto& r : io::parse_label_log(io::read_file(labels_path)))
      (r.ts < oracle.next_ts() ? kept : pending).push_back(std::move(r));
    oracle.preload_answers(std::move(pending));
    io::write_file_atomic(labels_path, io::label_log(kept));
  } else {
    io::write_file_atomic(labels_path, io::label_log_header());
  }
  if (options.resume && fs::exists(steps_path))
    io::write_file_atomic(steps_path, truncated_ndjson(io::read_file(steps_path), engine.reports().size()));
  else
    io::write_file_atomic(steps_path, io::step_partition_header());
  if (!options.resume) fs::remove(checkpoint_path);

  std::ofstream labels_out(labels_path, std::ios::binary | std::ios::app);
  std::ofstream steps_out(steps_path, std::ios::binary | std::ios::app);
  oracle.set_listener([&](const LabelRecord& r) { labels_out << io::label_line(r) << '\n' << std::flush; });
  oracle.halt_after(options.halt_after_labels);
  engine.on_report([&](const TransitiveReport& r, const MatchingGraph& g) {
    steps_out << io::step_partition_line(io::partition_of(g, r.step_name)) << '\n' << std::flush;
  });
  engine.on_checkpoint([&](const std::string& text) { io::write_file_atomic(checkpoint_path, text); });

  auto write_meta = [&](std::string_view status, std::string_view message) {
    ojson meta;
    meta["format"] = "fpclean.run_meta";
    meta["version"] = 1;
    meta["command"] = options.command;
    meta["status"] = status;
    if (!message.empty()) meta["message"] = message;
    meta["started_at"] = started;
    meta["finished_at"] = utc_now();
    meta["resumed_from_step"] = options.resume ? ojson(resumed_step) : ojson(nullptr);
    meta["manifest"] = manifest_to_json(m);
    meta["notes"] = engine.notes();
    io::write_file_atomic(dir / "run_meta.json", meta.dump(2) + "\n");
  };

  std::unique_ptr<LabelServer> server;
  std::optional<StopSignals> signals;
  std::thread watcher;
  std::atomic<bool> finished{false};
  if (options.port) {
    server = std::make_unique<LabelServer>(dataset, queue.get());
    engine.on_snapshot([&](std::shared_ptr<const EngineSnapshot> s) { server->publish(std::move(s)); });
    signals.emplace();
    const int port = server->start(options.host, *options.port);
    out << ojson{{"listening", port}}.dump() << std::endl;
    // A stop request unblocks an engine waiting on the human queue.
    watcher = std::thread([&] {
      while (!finished && !g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      if (g_stop_requested && queue) queue->close();
    });
  }
  auto shutdown = [&] {
    finished = true;
    if (watcher.joinable()) watcher.join();
    if (server) server->stop();
  };

  try {
    engine.run();
  } catch (const Error& e) {
    write_meta(e.code() == ErrorCode::Interrupted ? "interrupted" : "failed", e.what());
    shutdown();
    throw;
  } catch (...) {
    shutdown();
    throw;
  }

  io::write_file_atomic(dir / "graph.json", io::graph_json(engine.graph()));
  io::write_file_atomic(dir / "reports.json", io::reports_json(engine.reports()));
  io::write_file_atomic(dir / "ledger.json", io::ledger_json(oracle.ledger()));
  write_meta("completed", "");

  if (server && options.linger)
    while (!g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  shutdown();

  RunOutcome outcome;
  outcome.ledger = oracle.ledger();
  outcome.live_edges = engine.graph().live_edges().size();
  outcome.steps = engine.reports().size();
  outcome.labels = oracle.store().size();
  return outcome;
}

}  // namespace fpclean::cli
