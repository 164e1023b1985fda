#include "safe/metrics.hpp"

#include <json.hpp>

#include <cstdio>

#include "safe/error.hpp"

namespace safe::eval {

MetricsReport compute_metrics(const std::vector<int>& preds,
                              const std::vector<int>& labels) {
  if (preds.size() != labels.size())
    throw DataError("compute_metrics: " + std::to_string(preds.size()) +
                    " predictions vs " + std::to_string(labels.size()) + " labels");
  if (preds.empty()) throw DataError("compute_metrics: empty input");
  MetricsReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1))
      throw DataError("compute_metrics: values must be 0 or 1");
    if (p == 1 && y == 1) ++r.tp;
    if (p == 1 && y == 0) ++r.fp;
    if (p == 0 && y == 1) ++r.fn;
    if (p == 0 && y == 0) ++r.tn;
  }
  r.precision = r.tp + r.fp > 0 ? static_cast<Real>(r.tp) / static_cast<Real>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn > 0 ? static_cast<Real>(r.tp) / static_cast<Real>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

ReportFormat format_from(const std::string& name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "md" || name == "markdown") return ReportFormat::Markdown;
  throw ConfigError("unknown report format '" + name + "' (valid: json, csv, md)");
}

namespace {

std::string pct(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v * 100.0);
  return buf;
}

}  // namespace

std::string emit_report(const MetricsReport& r, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: {
      nlohmann::json j;
      j["dataset"] = r.dataset;
      j["split"] = r.split;
      j["model"] = r.model_id;
      j["tp"] = r.tp;
      j["fp"] = r.fp;
      j["fn"] = r.fn;
      j["tn"] = r.tn;
      j["recall"] = r.recall;
      j["precision"] = r.precision;
      j["f1"] = r.f1;
      return j.dump(2) + "\n";
    }
    case ReportFormat::Csv: {
      std::string out = "dataset,split,model,recall,precision,f1\n";
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f", r.recall, r.precision, r.f1);
      out += r.dataset + "," + r.split + "," + r.model_id + "," + buf + "\n";
      return out;
    }
    case ReportFormat::Markdown: {
      std::string out;
      out += "| Dataset | Model | Recall | Precision | F1-measure |\n";
      out += "|---|---|---|---|---|\n";
      out += "| " + r.dataset + " (" + r.split + ") | " + r.model_id + " | " +
             pct(r.recall) + " | " + pct(r.precision) + " | " + pct(r.f1) + " |\n";
      return out;
    }
  }
  throw InternalError("emit_report: unreachable format");
}

std::string predictions_jsonl(const MetricsReport& r) {
  std::string out;
  for (const auto& p : r.predictions) {
    nlohmann::json j;
    j["id"] = p.id;
    j["label"] = p.label;
    j["pred"] = p.pred;
    j["p_vulnerable"] = p.p_vulnerable;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace safe::eval
