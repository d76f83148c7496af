#include "eval_report.hpp"

#include "fpclean/error.hpp"

namespace fpclean::cli {

using ojson = nlohmann::ordered_json;

namespace {

double pct(double fraction) { return std::stod(format_percent(fraction)); }

ojson score_json(const MatchingScore& s) {
  ojson j;
  j["precision"] = pct(s.precision);
  j["recall"] = pct(s.recall);
  j["f1"] = pct(s.f1);
  j["tp"] = s.tp;
  j["fp"] = s.fp;
  j["fn"] = s.fn;
  return j;
}

ojson scores_json(const MatchingGraph& g, const GroundTruth& gt) {
  ojson j;
  j["pairwise_only"] = score_json(score(g, gt, Scope::PairwiseOnly));
  j["with_transitive"] = score_json(score(g, gt, Scope::WithTransitive));
  return j;
}

ojson optional_number(std::optional<double> v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

EvalReport build_eval_report(const EvalInputs& in) {
  if (!in.final_graph || !in.truth) throw Error(ErrorCode::InvalidInput, "eval needs a graph and a ground truth");
  const auto& gt = *in.truth;
  EvalReport r;
  ojson& j = r.json;
  j["format"] = "fpclean.eval";
  j["version"] = 1;
  j["records"] = in.final_graph->node_count();
  j["truth_pairs"] = gt.total_pairs();
  const auto post = score(*in.final_graph, gt, Scope::WithTransitive);
  if (in.initial_graph) {
    const auto pre = score(*in.initial_graph, gt, Scope::WithTransitive);
    j["pre"] = scores_json(*in.initial_graph, gt);
    j["post"] = scores_json(*in.final_graph, gt);
    j["f1_improvement"] = pct(post.f1 - pre.f1);
    const auto rs = removal_stats(*in.initial_graph, *in.final_graph, gt);
    ojson rm;
    rm["tp_removed_pct"] = std::stod(format_percent(rs.tp_removed_pct / 100.0));
    rm["fp_removed_pct"] = std::stod(format_percent(rs.fp_removed_pct / 100.0));
    rm["tp_before"] = rs.tp_before;
    rm["fp_before"] = rs.fp_before;
    rm["tp_removed"] = rs.tp_removed;
    rm["fp_removed"] = rs.fp_removed;
    j["removal"] = std::move(rm);
  } else {
    j["post"] = scores_json(*in.final_graph, gt);
  }

  r.csv = "step,generation,total_pos,total_neg,tp,fp,precision,recall,f1\n";
  if (in.reports && in.steps) {
    const auto& reports = *in.reports;
    const auto& steps = *in.steps;
    if (reports.size() != steps.size())
      throw Error(ErrorCode::InvalidInput, "reports and step partitions describe different numbers of steps");
    std::vector<TruthPoint> truth;
    auto series = ojson::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].step_name != steps[i].step_name)
        throw Error(ErrorCode::InvalidInput, "step " + std::to_string(i) + " is named differently in reports and steps");
      const auto g = io::graph_from_partition(steps[i], in.final_graph->dataset_ptr());
      const auto s = score(g, gt, Scope::WithTransitive);
      truth.push_back({s.tp, s.fp});
      ojson row;
      row["step"] = reports[i].step_name;
      row["generation"] = reports[i].generation;
      row["total_pos"] = reports[i].total_pos;
      row["total_neg"] = reports[i].total_neg;
      row["tp"] = s.tp;
      row["fp"] = s.fp;
      row["precision"] = pct(s.precision);
      row["recall"] = pct(s.recall);
      row["f1"] = pct(s.f1);
      series.push_back(row);
      r.csv += reports[i].step_name + "," + std::to_string(reports[i].generation) + "," +
               std::to_string(reports[i].total_pos) + "," + std::to_string(reports[i].total_neg) + "," +
               std::to_string(s.tp) + "," + std::to_string(s.fp) + "," + format_percent(s.precision) + "," +
               format_percent(s.recall) + "," + format_percent(s.f1) + "\n";
    }
    j["steps"] = std::move(series);
    ojson proxy;
    try {
      const auto pc = cleanup_proxy_correlation(reports, truth);
      proxy["pos_vs_tp"] = optional_number(pc.pos_vs_tp);
      proxy["neg_vs_fp"] = optional_number(pc.neg_vs_fp);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientSeries) throw;
      proxy["pos_vs_tp"] = nullptr;
      proxy["neg_vs_fp"] = nullptr;
      proxy["note"] = e.what();
    }
    proxy["excludes"] = "pre_cleanup";
    j["proxy_correlation"] = std::move(proxy);
  }
  return r;
}

}  // namespace fpclean::cli
