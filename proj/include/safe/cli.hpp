#pragma once

#include <json.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "safe/tensor.hpp"

namespace safe::cli {

/// Fully resolved run configuration. Source precedence: command-line flags,
/// then the JSON config file (flat dotted keys), then defaults. The resolved
/// snapshot is embedded in every checkpoint and report for provenance.
struct RunConfig {
  // paths and command arguments
  std::string data;
  std::string out;
  std::string config_file;
  std::string teacher_a;
  std::string teacher_b;
  std::string checkpoint;
  std::string ast_import;
  std::string split = "test";
  std::string format = "json";

  // run settings
  std::uint64_t seed = 1;
  int epochs = 10;
  int batch_size = 32;
  double lr = 1e-3;
  std::int64_t seq_len = 512;
  std::int64_t vocab_size = 4096;
  std::string structure = "ast";
  std::string ablation = "wAB";
  double gamma = 0.5;
  double kappa = 0.5;
  double temperature = 1.0;
  bool grid = false;

  // corpus generation
  int n = 2000;
  double ratio = 0.3;

  // model dimensions (config-file keys, e.g. "student.layers")
  std::int64_t teacher_a_embed_dim = 64;
  std::int64_t teacher_a_filters_per_width = 32;
  std::vector<std::int64_t> teacher_a_filter_widths = {3, 4, 5};
  double teacher_a_dropout_rate = 0.1;
  std::int64_t teacher_b_embed_dim = 64;
  std::int64_t teacher_b_hidden_dim = 64;
  std::int64_t teacher_b_gnn_layers = 2;
  int teacher_b_window = 5;
  std::int64_t student_embed_dim = 64;
  std::int64_t student_layers = 4;
  std::int64_t student_heads = 4;
  std::int64_t student_ffn_dim = 256;

  bool verbose = true;

  /// Flat dotted-key snapshot of everything above.
  nlohmann::json to_json() const;

  /// Applies config-file values for keys not already pinned by flags.
  void apply_config_file(const std::string& path, const std::set<std::string>& from_flags);
};

// Commands. Each throws on failure; run_cli maps exceptions to exit codes
// (0 ok, 2 usage, 3 data, 4 internal).
void cmd_gen_corpus(const RunConfig& cfg);
void cmd_prepare(const RunConfig& cfg);
void cmd_train_teacher_a(const RunConfig& cfg);
void cmd_train_teacher_b(const RunConfig& cfg);
void cmd_train_student(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg);

int run_cli(int argc, const char* const* argv);

}  // namespace safe::cli
