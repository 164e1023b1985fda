#pragma once

#include <string>
#include <vector>

#include "safe/tensor.hpp"

namespace safe::eval {

struct SamplePrediction {
  std::string id;
  int label = 0;
  int pred = 0;
  Real p_vulnerable = 0.0;
};

struct MetricsReport {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  Real precision = 0.0, recall = 0.0, f1 = 0.0;
  std::string dataset;
  std::string split;
  std::string model_id;
  std::vector<SamplePrediction> predictions;
};

/// Confusion counts with the vulnerable class (1) as positive.
/// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2PR/(P+R); every
/// 0/0 resolves to 0.
MetricsReport compute_metrics(const std::vector<int>& preds,
                              const std::vector<int>& labels);

enum class ReportFormat { Json, Csv, Markdown };

ReportFormat format_from(const std::string& name);

/// json: all counts, rates and identifiers. csv: fixed header
/// "dataset,split,model,recall,precision,f1". markdown: table with columns
/// ordered Recall, Precision, F1-measure, percentages with 2 decimals.
std::string emit_report(const MetricsReport& r, ReportFormat format);

/// One {"id","label","pred","p_vulnerable"} object per line.
std::string predictions_jsonl(const MetricsReport& r);

}  // namespace safe::eval
