#pragma once

#include <string>
#include <vector>

#include "safe/error.hpp"

namespace safe::data {

/// One labeled source function. label 1 = vulnerable.
struct CodeSample {
  std::string id;
  std::string code;
  int label = 0;
};

struct Dataset {
  std::string name;
  std::vector<CodeSample> train;
  std::vector<CodeSample> val;
  std::vector<CodeSample> test;

  const std::vector<CodeSample>& split(const std::string& name) const;
};

// JSONL schema per line: {"id": str, "code": str, "label": 0|1}. Errors
// name the offending line number.
std::vector<CodeSample> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<CodeSample>& samples, const std::string& path);

// A dataset directory holds train.jsonl, val.jsonl and test.jsonl.
Dataset load_dataset_dir(const std::string& dir, const std::string& name);
void save_dataset_dir(const Dataset& ds, const std::string& dir);

}  // namespace safe::data
