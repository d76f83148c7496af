#include "manifest.hpp"

#include "fpclean/channel.hpp"
#include "fpclean/error.hpp"
#include "fpclean/io.hpp"

namespace fpclean::cli {

namespace {

fs::path resolve(const nlohmann::json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || j[key].is_null()) return {};
  fs::path p = j[key].get<std::string>();
  return p.is_absolute() || base.empty() ? p : base / p;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::InvalidInput, message);
}

}  // namespace

void RunManifest::validate() const {
  require(!dataset.empty(), "a dataset file is required");
  require(!edges.empty(), "an edge file is required");
  require(!output_dir.empty(), "an output directory is required");
  const auto& m = oracle.mode;
  require(m == "groundtruth" || m == "noisy" || m == "llm" || m == "human" || m == "replay",
          "unknown oracle mode '" + m + "'");
  require(!((m == "groundtruth" || m == "noisy") && truth.empty()), "oracle mode " + m + " requires a ground truth file");
  require(!(m == "replay" && oracle.labels.empty()), "oracle mode replay requires a label log");
  require(!(m == "llm" && oracle.command.empty()), "oracle mode llm requires a pseudo-labeler command");
  require(oracle.flip_rate >= 0 && oracle.flip_rate <= 1, "flip_rate must lie in [0, 1]");
  require(matcher.kind == "simulated" || matcher.kind == "external", "unknown matcher kind '" + matcher.kind + "'");
  require(!(matcher.kind == "simulated" && truth.empty()), "the simulated matcher requires a ground truth file");
  require(!(matcher.kind == "external" && matcher.command.empty()), "the external matcher requires a command");
  config.validate();
}

RunManifest parse_manifest(const nlohmann::json& j, const fs::path& base) {
  if (!j.is_object() || j.value("format", "") != "fpclean.manifest")
    throw Error(ErrorCode::InvalidInput, "expected a fpclean.manifest document");
  if (j.value("version", 0) != 1) throw Error(ErrorCode::InvalidInput, "unsupported fpclean.manifest version");
  RunManifest m;
  try {
    m.dataset = resolve(j, "dataset", base);
    m.edges = resolve(j, "edges", base);
    m.truth = resolve(j, "truth", base);
    m.output_dir = resolve(j, "output_dir", base);
    if (j.contains("matcher")) {
      const auto& d = j["matcher"];
      auto& t = m.matcher;
      t.kind = d.value("kind", t.kind);
      t.fp_rate = d.value("fp_rate", t.fp_rate);
      t.fn_rate = d.value("fn_rate", t.fn_rate);
      t.noise_seed = d.value("noise_seed", t.noise_seed);
      t.error_decay = d.value("error_decay", t.error_decay);
      t.finetune = d.value("finetune", t.finetune);
      t.command = d.value("command", t.command);
      t.batch_size = d.value("batch_size", t.batch_size);
      t.timeout_ms = d.value("timeout_ms", t.timeout_ms);
    }
    if (j.contains("oracle")) {
      const auto& d = j["oracle"];
      auto& o = m.oracle;
      o.mode = d.value("mode", o.mode);
      o.flip_rate = d.value("flip_rate", o.flip_rate);
      o.seed = d.value("seed", o.seed);
      o.command = d.value("command", o.command);
      o.timeout_ms = d.value("timeout_ms", o.timeout_ms);
      o.fallback_nomatch = d.value("fallback", std::string("nomatch")) == "nomatch";
      o.labels = resolve(d, "labels", base);
    }
    if (j.contains("config")) {
      const auto& d = j["config"];
      auto& c = m.config;
      c.n_iterations = d.value("n_iterations", c.n_iterations);
      c.size_threshold = d.value("size_threshold", c.size_threshold);
      c.lb_total = d.value("lb_total", c.lb_total);
      c.seed = d.value("seed", c.seed);
      if (d.contains("sample_cap") && !d["sample_cap"].is_null()) c.sample_cap_for_large = d["sample_cap"].get<std::size_t>();
      c.shortest_path_subset_size = d.value("shortest_path_subset_size", c.shortest_path_subset_size);
      c.safety_factor = d.value("safety_factor", c.safety_factor);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, "manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "fpclean.manifest";
  j["version"] = 1;
  j["dataset"] = m.dataset.string();
  j["edges"] = m.edges.string();
  j["truth"] = m.truth.string();
  j["output_dir"] = m.output_dir.string();
  auto& t = j["matcher"];
  t["kind"] = m.matcher.kind;
  if (m.matcher.kind == "simulated") {
    t["fp_rate"] = m.matcher.fp_rate;
    t["fn_rate"] = m.matcher.fn_rate;
    t["noise_seed"] = m.matcher.noise_seed;
    t["error_decay"] = m.matcher.error_decay;
  } else {
    t["command"] = m.matcher.command;
    t["batch_size"] = m.matcher.batch_size;
    t["timeout_ms"] = m.matcher.timeout_ms;
  }
  t["finetune"] = m.matcher.finetune;
  auto& o = j["oracle"];
  o["mode"] = m.oracle.mode;
  if (m.oracle.mode == "noisy") {
    o["flip_rate"] = m.oracle.flip_rate;
    o["seed"] = m.oracle.seed;
  } else if (m.oracle.mode == "llm") {
    o["command"] = m.oracle.command;
    o["timeout_ms"] = m.oracle.timeout_ms;
    o["fallback"] = m.oracle.fallback_nomatch ? "nomatch" : "error";
  } else if (m.oracle.mode == "replay") {
    o["labels"] = m.oracle.labels.string();
  }
  auto& c = j["config"];
  c["n_iterations"] = m.config.n_iterations;
  c["size_threshold"] = m.config.size_threshold;
  c["lb_total"] = m.config.lb_total;
  c["seed"] = m.config.seed;
  c["sample_cap"] = m.config.sample_cap();
  c["shortest_path_subset_size"] = m.config.shortest_path_subset_size;
  c["safety_factor"] = m.config.safety_factor;
  return j;
}

GroundTruth load_truth(const fs::path& path) { return io::parse_ground_truth(io::read_file(path)); }

std::unique_ptr<Matcher> make_matcher(const MatcherDescriptor& d, const GroundTruth* truth) {
  if (d.kind == "external") {
    ExternalMatcherOptions opts;
    opts.batch_size = d.batch_size;
    opts.timeout = std::chrono::milliseconds(d.timeout_ms);
    opts.finetune_enabled = d.finetune;
    return std::make_unique<ExternalMatcher>(std::make_unique<ProcessChannel>(d.command), opts);
  }
  if (!truth) throw Error(ErrorCode::InvalidInput, "the simulated matcher requires a ground truth file");
  SimulatedMatcherSpec spec;
  spec.ground_truth = truth->assignment;
  spec.fp_rate = d.fp_rate;
  spec.fn_rate = d.fn_rate;
  spec.noise_seed = d.noise_seed;
  spec.error_decay = d.error_decay;
  spec.finetune_enabled = d.finetune;
  return std::make_unique<SimulatedMatcher>(std::move(spec));
}

}  // namespace fpclean::cli
