#include "safe/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace safe::data {

const std::vector<CodeSample>& Dataset::split(const std::string& split_name) const {
  if (split_name == "train") return train;
  if (split_name == "val") return val;
  if (split_name == "test") return test;
  throw ConfigError("unknown split '" + split_name + "' (valid: train, val, test)");
}

std::vector<CodeSample> load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::vector<CodeSample> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    if (!j.contains("id") || !j["id"].is_string())
      throw DataError(path + " line " + std::to_string(line_no) + ": missing \"id\" field");
    if (!j.contains("code") || !j["code"].is_string())
      throw DataError(path + " line " + std::to_string(line_no) + ": missing \"code\" field");
    if (!j.contains("label") || !j["label"].is_number_integer())
      throw DataError(path + " line " + std::to_string(line_no) + ": missing \"label\" field");
    const int label = j["label"].get<int>();
    if (label != 0 && label != 1)
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": label must be 0 or 1, got " + std::to_string(label));
    out.push_back({j["id"].get<std::string>(), j["code"].get<std::string>(), label});
  }
  return out;
}

void save_jsonl(const std::vector<CodeSample>& samples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file: " + path);
  for (const auto& s : samples) {
    nlohmann::json j;
    j["id"] = s.id;
    j["code"] = s.code;
    j["label"] = s.label;
    out << j.dump() << '\n';
  }
}

Dataset load_dataset_dir(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.name = name;
  ds.train = load_jsonl((fs::path(dir) / "train.jsonl").string());
  ds.val = load_jsonl((fs::path(dir) / "val.jsonl").string());
  ds.test = load_jsonl((fs::path(dir) / "test.jsonl").string());
  return ds;
}

void save_dataset_dir(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_jsonl(ds.train, (fs::path(dir) / "train.jsonl").string());
  save_jsonl(ds.val, (fs::path(dir) / "val.jsonl").string());
  save_jsonl(ds.test, (fs::path(dir) / "test.jsonl").string());
}

}  // namespace safe::data
