#include "server.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fpclean/error.hpp"
#include "fpclean/io.hpp"

namespace fpclean::cli {

using ojson = nlohmann::ordered_json;

namespace {

ojson record_json(const Record& r) {
  ojson j;
  j["record_id"] = r.record_id;
  j["source_id"] = r.source_id;
  auto attrs = ojson::array();
  for (const auto& [k, v] : r.attributes) attrs.push_back({k, v});
  j["attributes"] = std::move(attrs);
  return j;
}

ojson ledger_json(const BudgetLedger& l) { return ojson::parse(io::ledger_json(l)); }

// Phase of the step currently running, and what it may still spend.
std::pair<std::string, ojson> phase_budget(const EngineSnapshot& s) {
  if (s.step.rfind("iteration_", 0) == 0) {
    const auto k = std::stoul(s.step.substr(10));
    return {"init", s.ledger.init_remaining(k - 1)};
  }
  if (s.step == "post_cleanup") return {"postft", nullptr};
  if (s.step == "edge_recovery") return {"recovery", s.ledger.recovery_remaining()};
  return {"none", 0};
}

std::string error_body(std::string_view code, const std::string& message) {
  ojson j;
  j["error"] = code;
  j["message"] = message;
  return j.dump();
}

}  // namespace

LabelServer::LabelServer(DatasetPtr dataset, HumanQueue* queue) : dataset_(std::move(dataset)), queue_(queue) {}

LabelServer::~LabelServer() { stop(); }

void LabelServer::publish(std::shared_ptr<const EngineSnapshot> snapshot) {
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(snapshot);
}

std::shared_ptr<const EngineSnapshot> LabelServer::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

std::string LabelServer::status_body() const {
  const auto snap = snapshot();
  ojson j;
  j["step"] = snap ? snap->step : "starting";
  j["done"] = snap ? snap->done : false;
  j["ledger"] = snap ? ledger_json(snap->ledger) : ojson(nullptr);
  j["pending"] = queue_ ? queue_->pending().size() : 0;
  j["resolved"] = queue_ ? queue_->resolved_count() : 0;
  auto traj = ojson::array();
  if (snap)
    for (const auto& r : snap->reports)
      traj.push_back({{"step", r.step_name},
                      {"generation", r.generation},
                      {"total_pos", r.total_pos},
                      {"total_neg", r.total_neg},
                      {"live_edges", r.live_edges}});
  j["trajectory"] = std::move(traj);
  return j.dump();
}

std::string LabelServer::queue_body() const {
  const auto snap = snapshot();
  ojson j;
  auto items = ojson::array();
  if (queue_) {
    const auto comp = snap ? snap->graph.component_index() : std::vector<NodeId>{};
    const auto [phase, remaining] = snap ? phase_budget(*snap) : std::pair<std::string, ojson>{"none", 0};
    for (const auto& item : queue_->pending()) {
      ojson it;
      it["pairkey"] = item.pair.key();
      it["order"] = item.order;
      const auto a = dataset_->find(item.pair.first);
      const auto b = dataset_->find(item.pair.second);
      it["a"] = a ? record_json((*dataset_)[*a]) : ojson(nullptr);
      it["b"] = b ? record_json((*dataset_)[*b]) : ojson(nullptr);
      if (snap && a) {
        const auto cid = comp[*a];
        it["component"] = dataset_->records()[cid].record_id;
      } else {
        it["component"] = nullptr;
      }
      it["phase"] = phase;
      it["remaining"] = remaining;
      items.push_back(std::move(it));
    }
  }
  j["items"] = std::move(items);
  return j.dump();
}

std::string LabelServer::reports_body() const {
  const auto snap = snapshot();
  if (!snap) return io::reports_json({});
  return io::reports_json(snap->reports);
}

std::optional<std::string> LabelServer::component_body(const std::string& record_id) const {
  const auto node = dataset_->find(record_id);
  if (!node) return std::nullopt;
  const auto snap = snapshot();
  ojson j;
  if (!snap) {
    j["component_id"] = record_id;
    j["nodes"] = ojson::array({record_json((*dataset_)[*node])});
    j["edges"] = ojson::array();
    j["transitive"] = ojson::array();
    return j.dump();
  }
  const auto& g = snap->graph;
  const Component c = g.component_of(*node);
  j["component_id"] = g.id_of(c.nodes.empty() ? *node : c.nodes.front());
  auto nodes = ojson::array();
  if (c.nodes.empty()) nodes.push_back(record_json(g.record(*node)));
  for (auto n : c.nodes) nodes.push_back(record_json(g.record(n)));
  j["nodes"] = std::move(nodes);
  auto edges = ojson::array();
  for (const auto& e : c.edges) {
    const auto& edge = g.live_edges().at(e);
    ojson row = {g.id_of(e.lo), g.id_of(e.hi), std::string(to_string(edge.state))};
    row.push_back(edge.origin_score ? ojson(*edge.origin_score) : ojson(nullptr));
    edges.push_back(std::move(row));
  }
  j["edges"] = std::move(edges);
  // Only pairs the engine evaluated at the current generation are shown.
  auto trans = ojson::array();
  std::size_t unevaluated = 0;
  if (c.nodes.size() >= 2) {
    for (const auto& p : transitive_pairs(g, c)) {
      auto it = snap->predictions.find(p);
      if (it == snap->predictions.end()) {
        ++unevaluated;
        continue;
      }
      trans.push_back({{"pair", {g.id_of(p.lo), g.id_of(p.hi)}}, {"prediction", std::string(to_string(it->second))}});
    }
  }
  j["transitive"] = std::move(trans);
  j["unevaluated"] = unevaluated;
  return j.dump();
}

int LabelServer::start(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto& s = *server_;
  constexpr const char* kJson = "application/json; charset=utf-8";
  s.Get("/status", [this](const httplib::Request&, httplib::Response& res) { res.set_content(status_body(), kJson); });
  s.Get("/queue", [this](const httplib::Request&, httplib::Response& res) { res.set_content(queue_body(), kJson); });
  s.Get("/reports", [this](const httplib::Request&, httplib::Response& res) { res.set_content(reports_body(), kJson); });
  s.Get(R"(/component/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto id = httplib::detail::decode_url(req.matches[1], false);
    if (auto body = component_body(id)) {
      res.set_content(*body, kJson);
    } else {
      res.status = 404;
      res.set_content(error_body("InvalidInput", "no record " + id), kJson);
    }
  });
  s.Post(R"(/queue/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto key = httplib::detail::decode_url(req.matches[1], false);
    const auto pair = RecordPair::from_key(key);
    std::optional<Label> label;
    try {
      const auto body = nlohmann::json::parse(req.body);
      if (body.is_object() && body.contains("label") && body["label"].is_string())
        label = parse_label(body["label"].get<std::string>());
    } catch (const nlohmann::json::exception&) {
    }
    if (!pair || !label) {
      res.status = 400;
      res.set_content(error_body("InvalidInput", "expected /queue/<a>::<b> with body {\"label\":\"match\"|\"nomatch\"}"),
                      kJson);
      return;
    }
    if (!queue_) {
      res.status = 409;
      res.set_content(error_body("NotPending", "this run has no human queue"), kJson);
      return;
    }
    try {
      queue_->resolve(*pair, *label);
      res.set_content(ojson{{"pairkey", pair->key()}, {"label", std::string(to_string(*label))}}.dump(), kJson);
    } catch (const Error& e) {
      res.status = e.code() == ErrorCode::NotPending ? 409 : 400;
      res.set_content(error_body(to_string(e.code()), e.what()), kJson);
    }
  });

  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::EndpointUnavailable, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  return bound;
}

void LabelServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace fpclean::cli
