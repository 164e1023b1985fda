#include "safe/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "safe/checkpoint.hpp"
#include "safe/corpusgen.hpp"
#include "safe/trainer.hpp"

namespace safe::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bpe::Vocab load_prepared_vocab(const RunConfig& cfg, const char* file) {
  const fs::path path = fs::path(cfg.out) / file;
  if (!fs::exists(path))
    throw ConfigError("missing prepared artifact " + path.string() +
                      "; run the prepare command first");
  return bpe::load_vocab(path.string());
}

prep::AstImportMap load_imports(const RunConfig& cfg) {
  prep::AstImportMap imports;
  if (cfg.ast_import.empty()) return imports;
  for (auto& [id, node] : prep::load_ast_json(cfg.ast_import))
    imports.emplace(std::move(id), std::move(node));
  return imports;
}

// Rebuilds the in-memory prepared dataset from the dataset dir plus the
// vocab files written by prepare; deterministic, so training commands do
// not need serialized token files.
prep::Prepared reload_prepared(const RunConfig& cfg) {
  require(!cfg.data.empty(), "--data is required");
  require(!cfg.out.empty(), "--out is required");
  const auto ds = data::load_dataset_dir(cfg.data, fs::path(cfg.data).filename().string());
  const auto imports = load_imports(cfg);
  return prep::prepare_with_vocabs(
      ds, load_prepared_vocab(cfg, "vocab_code.json"),
      load_prepared_vocab(cfg, "vocab_struct.json"), cfg.seq_len,
      frontend::structure_mode_from(cfg.structure), cfg.teacher_b_window,
      imports.empty() ? nullptr : &imports);
}

model::TeacherAConfig teacher_a_config(const RunConfig& cfg, std::int64_t vocab) {
  model::TeacherAConfig m;
  m.vocab_size = vocab;
  m.embed_dim = cfg.teacher_a_embed_dim;
  m.filter_widths.assign(cfg.teacher_a_filter_widths.begin(),
                         cfg.teacher_a_filter_widths.end());
  m.filters_per_width = cfg.teacher_a_filters_per_width;
  m.dropout_rate = cfg.teacher_a_dropout_rate;
  return m;
}

model::TeacherBConfig teacher_b_config(const RunConfig& cfg, std::int64_t vocab) {
  model::TeacherBConfig m;
  m.vocab_size = vocab;
  m.embed_dim = cfg.teacher_b_embed_dim;
  m.hidden_dim = cfg.teacher_b_hidden_dim;
  m.gnn_layers = cfg.teacher_b_gnn_layers;
  m.window = cfg.teacher_b_window;
  return m;
}

model::StudentConfig student_config(const RunConfig& cfg, std::int64_t vocab) {
  model::StudentConfig m;
  m.vocab_size = vocab;
  m.embed_dim = cfg.student_embed_dim;
  m.layers = cfg.student_layers;
  m.heads = cfg.student_heads;
  m.ffn_dim = cfg.student_ffn_dim;
  m.seq_len = cfg.seq_len;
  return m;
}

train::TrainConfig train_config(const RunConfig& cfg) {
  train::TrainConfig t;
  t.epochs = cfg.epochs;
  t.batch_size = cfg.batch_size;
  t.lr = cfg.lr;
  t.seed = cfg.seed;
  t.ablation = train::ablation_from(cfg.ablation);
  t.structure_mode = frontend::structure_mode_from(cfg.structure);
  t.verbose = cfg.verbose;
  return t;
}

void check_vocab_hash(const train::Checkpoint& ckpt, const bpe::Vocab& vocab,
                      const std::string& what) {
  const std::string have = bpe::vocab_hash(vocab);
  if (ckpt.vocab_hash != have)
    throw DataError(what + " was trained with vocab " + ckpt.vocab_hash +
                    " but the prepared data uses " + have);
}

void save_fit(const RunConfig& cfg, const std::string& kind, const nlohmann::json& model_json,
              const std::string& vocab_hash, const train::FitResult& fit,
              const fs::path& path) {
  nlohmann::json config;
  config["model"] = model_json;
  config["run"] = cfg.to_json();
  train::save_checkpoint(
      train::make_checkpoint(kind, config, vocab_hash, fit.metrics_json(), fit.best_params),
      path.string());
  std::printf("wrote %s (best epoch %d, val F1 %.4f)\n", path.string().c_str(),
              fit.best_epoch, fit.best_f1);
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["data"] = data;
  j["out"] = out;
  j["seed"] = seed;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["seq_len"] = seq_len;
  j["vocab_size"] = vocab_size;
  j["structure"] = structure;
  j["ablation"] = ablation;
  j["gamma"] = gamma;
  j["kappa"] = kappa;
  j["temperature"] = temperature;
  j["grid"] = grid;
  j["n"] = n;
  j["ratio"] = ratio;
  j["split"] = split;
  j["format"] = format;
  j["ast_import"] = ast_import;
  j["teacher_a.embed_dim"] = teacher_a_embed_dim;
  j["teacher_a.filters_per_width"] = teacher_a_filters_per_width;
  j["teacher_a.filter_widths"] = teacher_a_filter_widths;
  j["teacher_a.dropout_rate"] = teacher_a_dropout_rate;
  j["teacher_b.embed_dim"] = teacher_b_embed_dim;
  j["teacher_b.hidden_dim"] = teacher_b_hidden_dim;
  j["teacher_b.gnn_layers"] = teacher_b_gnn_layers;
  j["teacher_b.window"] = teacher_b_window;
  j["student.embed_dim"] = student_embed_dim;
  j["student.layers"] = student_layers;
  j["student.heads"] = student_heads;
  j["student.ffn_dim"] = student_ffn_dim;
  return j;
}

void RunConfig::apply_config_file(const std::string& path,
                                  const std::set<std::string>& from_flags) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": invalid JSON: " + std::string(e.what()));
  }
  auto take = [&](const char* key, auto& field) {
    if (from_flags.count(key) || !j.contains(key)) return;
    using T = std::decay_t<decltype(field)>;
    try {
      field = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config file " + path + ": bad value for key '" + key + "'");
    }
  };
  take("seed", seed);
  take("epochs", epochs);
  take("batch_size", batch_size);
  take("lr", lr);
  take("seq_len", seq_len);
  take("vocab_size", vocab_size);
  take("structure", structure);
  take("ablation", ablation);
  take("gamma", gamma);
  take("kappa", kappa);
  take("temperature", temperature);
  take("n", n);
  take("ratio", ratio);
  take("split", split);
  take("format", format);
  take("teacher_a.embed_dim", teacher_a_embed_dim);
  take("teacher_a.filters_per_width", teacher_a_filters_per_width);
  take("teacher_a.filter_widths", teacher_a_filter_widths);
  take("teacher_a.dropout_rate", teacher_a_dropout_rate);
  take("teacher_b.embed_dim", teacher_b_embed_dim);
  take("teacher_b.hidden_dim", teacher_b_hidden_dim);
  take("teacher_b.gnn_layers", teacher_b_gnn_layers);
  take("teacher_b.window", teacher_b_window);
  take("student.embed_dim", student_embed_dim);
  take("student.layers", student_layers);
  take("student.heads", student_heads);
  take("student.ffn_dim", student_ffn_dim);
}

void cmd_gen_corpus(const RunConfig& cfg) {
  require(!cfg.out.empty(), "--out is required");
  const auto ds = corpus::generate(cfg.seed, cfg.n, cfg.ratio);
  data::save_dataset_dir(ds, cfg.out);
  nlohmann::json manifest;
  manifest["config"] = cfg.to_json();
  manifest["train"] = ds.train.size();
  manifest["val"] = ds.val.size();
  manifest["test"] = ds.test.size();
  write_text(fs::path(cfg.out) / "manifest.json", manifest.dump(2) + "\n");
  std::printf("wrote %zu/%zu/%zu samples to %s\n", ds.train.size(), ds.val.size(),
              ds.test.size(), cfg.out.c_str());
}

void cmd_prepare(const RunConfig& cfg) {
  require(!cfg.data.empty(), "--data is required");
  require(!cfg.out.empty(), "--out is required");
  const auto mode = frontend::structure_mode_from(cfg.structure);
  const auto ds = data::load_dataset_dir(cfg.data, fs::path(cfg.data).filename().string());
  const auto imports = load_imports(cfg);
  const auto* imp = imports.empty() ? nullptr : &imports;
  const auto prepared = prep::prepare(ds, cfg.seq_len, cfg.vocab_size, mode,
                                      cfg.teacher_b_window, imp);

  fs::create_directories(cfg.out);
  bpe::save_vocab(prepared.code_vocab, (fs::path(cfg.out) / "vocab_code.json").string());
  bpe::save_vocab(prepared.struct_vocab, (fs::path(cfg.out) / "vocab_struct.json").string());

  const std::string mode_name = frontend::to_string(mode);
  for (const char* split : {"train", "val", "test"}) {
    const auto& raw = ds.split(split);
    const auto& cooked = prepared.split(split);

    std::string struct_text, token_text, graph_text;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const frontend::AstNode* node = nullptr;
      if (imp) {
        auto it = imp->find(raw[i].id);
        if (it != imp->end()) node = &it->second;
      }
      struct_text += prep::structure_line(raw[i].code, mode, node) + "\n";
      std::string row;
      for (std::int64_t id : cooked[i].code_seq.ids) {
        if (!row.empty()) row += ' ';
        row += std::to_string(id);
      }
      token_text += row + "\n";
      graph_text += "# " + raw[i].id + "\n";
      std::ostringstream edges;
      graph::dump_edges(cooked[i].struct_graph, edges);
      graph_text += edges.str();
    }
    write_text(fs::path(cfg.out) / ("struct_" + mode_name + "_" + split + ".txt"), struct_text);
    write_text(fs::path(cfg.out) / ("tokens_" + std::string(split) + ".txt"), token_text);
    write_text(fs::path(cfg.out) / ("graphs_" + std::string(split) + ".txt"), graph_text);
  }

  nlohmann::json manifest;
  manifest["config"] = cfg.to_json();
  manifest["vocab_code_hash"] = bpe::vocab_hash(prepared.code_vocab);
  manifest["vocab_struct_hash"] = bpe::vocab_hash(prepared.struct_vocab);
  manifest["version"] = 1;
  write_text(fs::path(cfg.out) / "manifest.json", manifest.dump(2) + "\n");
  std::printf("prepared %zu/%zu/%zu samples into %s\n", prepared.train.size(),
              prepared.val.size(), prepared.test.size(), cfg.out.c_str());
}

void cmd_train_teacher_a(const RunConfig& cfg) {
  const auto prepared = reload_prepared(cfg);
  const auto mcfg = teacher_a_config(cfg, prepared.code_vocab.size());
  const auto fit = train::train_teacher_a(prepared.train, prepared.val, mcfg,
                                          train_config(cfg));
  save_fit(cfg, "teacher_a", train::to_json(mcfg), bpe::vocab_hash(prepared.code_vocab),
           fit, fs::path(cfg.out) / "teacher_a.ckpt");
}

void cmd_train_teacher_b(const RunConfig& cfg) {
  const auto prepared = reload_prepared(cfg);
  const auto mcfg = teacher_b_config(cfg, prepared.struct_vocab.size());
  const auto fit = train::train_teacher_b(prepared.train, prepared.val, mcfg,
                                          train_config(cfg));
  save_fit(cfg, "teacher_b", train::to_json(mcfg), bpe::vocab_hash(prepared.struct_vocab),
           fit, fs::path(cfg.out) / "teacher_b.ckpt");
}

void cmd_train_student(const RunConfig& cfg) {
  const auto prepared = reload_prepared(cfg);
  const auto tcfg = train_config(cfg);
  const auto weights = train::resolve_weights(
      train::make_weights(cfg.gamma, cfg.kappa, cfg.temperature), tcfg.ablation);

  std::optional<model::TeacherA> ta;
  std::optional<model::TeacherB> tb;
  if (weights.delta > 0.0) {
    require(!cfg.teacher_a.empty(),
            "ablation " + cfg.ablation + " requires --teacher-a <checkpoint>");
    auto ckpt = train::load_checkpoint(cfg.teacher_a);
    check_vocab_hash(ckpt, prepared.code_vocab, "teacher-A checkpoint");
    ta.emplace(train::teacher_a_from(ckpt, /*frozen=*/true));
  }
  if (weights.eta > 0.0) {
    require(!cfg.teacher_b.empty(),
            "ablation " + cfg.ablation + " requires --teacher-b <checkpoint>");
    auto ckpt = train::load_checkpoint(cfg.teacher_b);
    check_vocab_hash(ckpt, prepared.struct_vocab, "teacher-B checkpoint");
    tb.emplace(train::teacher_b_from(ckpt, /*frozen=*/true));
  }

  const auto mcfg = student_config(cfg, prepared.code_vocab.size());
  const std::string code_hash = bpe::vocab_hash(prepared.code_vocab);

  if (!cfg.grid) {
    const auto fit = train::train_student(prepared.train, prepared.val, mcfg, tcfg, weights,
                                          ta ? &*ta : nullptr, tb ? &*tb : nullptr);
    save_fit(cfg, "student", train::to_json(mcfg), code_hash, fit,
             fs::path(cfg.out) / "student.ckpt");
    return;
  }

  // hyper-parameter sweep: all 9 grid points, one comparison report
  const auto grid = train::hyper_grid();
  nlohmann::json rows = nlohmann::json::array();
  std::string md = "| gamma | delta | eta | val F1 | test F1 |\n|---|---|---|---|---|\n";
  int best_point = -1;
  Real best_f1 = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto w = train::resolve_weights(grid[g], tcfg.ablation);
    const auto fit = train::train_student(prepared.train, prepared.val, mcfg, tcfg, w,
                                          ta ? &*ta : nullptr, tb ? &*tb : nullptr);
    auto student = model::Student(mcfg, 0);
    for (auto& [name, t] : student.params) t.value() = fit.best_params.at(name).value();
    auto test_report = train::evaluate_student(student, prepared.test);

    const auto path = fs::path(cfg.out) / ("student_grid_" + std::to_string(g + 1) + ".ckpt");
    save_fit(cfg, "student", train::to_json(mcfg), code_hash, fit, path);

    nlohmann::json row;
    row["gamma"] = w.gamma;
    row["delta"] = w.delta;
    row["eta"] = w.eta;
    row["val_f1"] = fit.best_f1;
    row["test_f1"] = test_report.f1;
    row["checkpoint"] = path.filename().string();
    rows.push_back(row);
    char line[160];
    std::snprintf(line, sizeof(line), "| %.2f | %.2f | %.2f | %.4f | %.4f |\n", w.gamma,
                  w.delta, w.eta, fit.best_f1, test_report.f1);
    md += line;
    if (fit.best_f1 > best_f1) {
      best_f1 = fit.best_f1;
      best_point = static_cast<int>(g);
      save_fit(cfg, "student", train::to_json(mcfg), code_hash, fit,
               fs::path(cfg.out) / "student.ckpt");
    }
  }
  nlohmann::json report;
  report["config"] = cfg.to_json();
  report["points"] = rows;
  report["best_point"] = best_point + 1;
  write_text(fs::path(cfg.out) / "grid_report.json", report.dump(2) + "\n");
  write_text(fs::path(cfg.out) / "grid_report.md", md);
  std::printf("grid done; best point %d (val F1 %.4f)\n", best_point + 1, best_f1);
}

void cmd_evaluate(const RunConfig& cfg) {
  require(!cfg.checkpoint.empty(), "--checkpoint is required");
  require(cfg.split == "train" || cfg.split == "val" || cfg.split == "test",
          "unknown split '" + cfg.split + "' (valid: train, val, test)");
  auto ckpt = train::load_checkpoint(cfg.checkpoint);

  // Preparation settings come from the checkpoint's stored run config so a
  // mismatched flag cannot silently change the inputs being scored.
  RunConfig eval_cfg = cfg;
  if (ckpt.config.contains("run")) {
    const auto& run = ckpt.config["run"];
    if (run.contains("seq_len")) eval_cfg.seq_len = run["seq_len"].get<std::int64_t>();
    if (run.contains("structure")) eval_cfg.structure = run["structure"].get<std::string>();
    if (run.contains("teacher_b.window"))
      eval_cfg.teacher_b_window = run["teacher_b.window"].get<int>();
  }
  const auto prepared = reload_prepared(eval_cfg);
  const auto& samples = prepared.split(cfg.split);

  eval::MetricsReport report;
  if (ckpt.kind == "student") {
    check_vocab_hash(ckpt, prepared.code_vocab, "student checkpoint");
    auto m = train::student_from(ckpt, /*frozen=*/true);
    report = train::evaluate_student(m, samples);
  } else if (ckpt.kind == "teacher_a") {
    check_vocab_hash(ckpt, prepared.code_vocab, "teacher-A checkpoint");
    auto m = train::teacher_a_from(ckpt, /*frozen=*/true);
    report = train::evaluate_teacher_a(m, samples);
  } else if (ckpt.kind == "teacher_b") {
    check_vocab_hash(ckpt, prepared.struct_vocab, "teacher-B checkpoint");
    auto m = train::teacher_b_from(ckpt, /*frozen=*/true);
    report = train::evaluate_teacher_b(m, samples);
  } else {
    throw FormatError("unknown checkpoint kind '" + ckpt.kind + "'");
  }
  report.dataset = fs::path(cfg.data).filename().string();
  report.split = cfg.split;
  report.model_id = ckpt.kind;

  fs::create_directories(cfg.out);
  const std::string stem = "report_" + ckpt.kind + "_" + cfg.split;
  auto with_config = nlohmann::json::parse(emit_report(report, eval::ReportFormat::Json));
  with_config["config"] = cfg.to_json();
  write_text(fs::path(cfg.out) / (stem + ".json"), with_config.dump(2) + "\n");
  write_text(fs::path(cfg.out) / (stem + ".csv"),
             emit_report(report, eval::ReportFormat::Csv));
  write_text(fs::path(cfg.out) / (stem + ".md"),
             emit_report(report, eval::ReportFormat::Markdown));
  write_text(fs::path(cfg.out) / ("predictions_" + ckpt.kind + "_" + cfg.split + ".jsonl"),
             eval::predictions_jsonl(report));
  std::fputs(emit_report(report, eval::format_from(cfg.format)).c_str(), stdout);
}

void cmd_predict(const RunConfig& cfg) {
  require(!cfg.checkpoint.empty(), "--checkpoint is required");
  require(!cfg.data.empty(), "--data is required (a JSONL file of samples)");
  require(!cfg.out.empty(), "--out is required");
  auto ckpt = train::load_checkpoint(cfg.checkpoint);
  if (ckpt.kind != "student")
    throw ConfigError("predict requires a student checkpoint, got kind '" + ckpt.kind + "'");
  const auto code_vocab = load_prepared_vocab(cfg, "vocab_code.json");
  check_vocab_hash(ckpt, code_vocab, "student checkpoint");
  auto m = train::student_from(ckpt, /*frozen=*/true);

  // label field optional here: prediction inputs may be unlabeled
  std::ifstream in(cfg.data, std::ios::binary);
  if (!in) throw DataError("cannot open " + cfg.data);
  std::string line, out_text;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(cfg.data + " line " + std::to_string(line_no) + ": invalid JSON: " +
                      e.what());
    }
    if (!j.contains("id") || !j.contains("code"))
      throw DataError(cfg.data + " line " + std::to_string(line_no) +
                      ": missing \"id\" or \"code\" field");
    const auto seq = bpe::assemble(
        code_vocab,
        prep::content_ids(code_vocab, prep::normalize_code(j["code"].get<std::string>())),
        m.cfg.seq_len);
    const auto pred = train::predict(m, seq);
    nlohmann::json row;
    row["id"] = j["id"];
    row["label"] = j.value("label", -1);
    row["pred"] = pred.label;
    row["p_vulnerable"] = pred.p_vulnerable;
    out_text += row.dump() + "\n";
  }
  const fs::path out_path = fs::path(cfg.out) / "predictions_predict.jsonl";
  fs::create_directories(cfg.out);
  write_text(out_path, out_text);
  std::printf("wrote %s\n", out_path.string().c_str());
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"dual-teacher distillation for function-level vulnerability detection"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::set<std::string> from_flags;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data", cfg.data, "dataset directory (train/val/test.jsonl)");
    sub->add_option("--out", cfg.out, "working directory for artifacts");
    sub->add_option("--config", cfg.config_file, "JSON config file with flat dotted keys");
    sub->add_option("--seed", cfg.seed, "run seed (env SAFE_SEED is the fallback)");
    sub->add_option("--epochs", cfg.epochs, "training epochs");
    sub->add_option("--batch-size", cfg.batch_size, "minibatch size");
    sub->add_option("--lr", cfg.lr, "Adam learning rate");
    sub->add_option("--seq-len", cfg.seq_len, "student/teacher-A sequence length");
    sub->add_option("--vocab-size", cfg.vocab_size, "BPE vocabulary size");
    sub->add_option("--structure", cfg.structure, "structure source: ast or dfg")
        ->check(CLI::IsMember({"ast", "dfg"}));
    sub->add_option("--ablation", cfg.ablation, "wAB, w/oA, w/oB or w/oAB")
        ->check(CLI::IsMember({"wAB", "w/oA", "w/oB", "w/oAB"}));
    sub->add_option("--gamma", cfg.gamma, "cls cross-entropy weight");
    sub->add_option("--kappa", cfg.kappa, "teacher split: delta=(1-gamma)*kappa");
    sub->add_option("--temperature", cfg.temperature, "distillation temperature");
    sub->add_option("--teacher-a", cfg.teacher_a, "teacher-A checkpoint path");
    sub->add_option("--teacher-b", cfg.teacher_b, "teacher-B checkpoint path");
    sub->add_flag("--grid", cfg.grid, "sweep all 9 hyper-grid points");
    sub->add_option("--format", cfg.format, "report format printed to stdout")
        ->check(CLI::IsMember({"json", "csv", "md"}));
    sub->add_option("--checkpoint", cfg.checkpoint, "checkpoint to evaluate or predict with");
    sub->add_option("--split", cfg.split, "dataset split (train, val, test)");
    sub->add_option("--ast-import", cfg.ast_import, "JSON file of externally parsed ASTs");
    sub->add_option("--n", cfg.n, "gen-corpus: number of samples");
    sub->add_option("--ratio", cfg.ratio, "gen-corpus: vulnerable ratio");
    sub->add_flag("--quiet", quiet, "suppress per-epoch logs");
  };

  struct Sub {
    const char* name;
    const char* help;
    void (*fn)(const RunConfig&);
  };
  const std::vector<Sub> subs = {
      {"gen-corpus", "generate the synthetic vulnerability corpus", cmd_gen_corpus},
      {"prepare", "train vocabularies and write prepared artifacts", cmd_prepare},
      {"train-teacher-a", "phase 1: train the token-sequence teacher", cmd_train_teacher_a},
      {"train-teacher-b", "phase 1: train the structure-graph teacher", cmd_train_teacher_b},
      {"train-student", "phase 2: distill both teachers into the student", cmd_train_student},
      {"evaluate", "run a checkpoint over a split and write reports", cmd_evaluate},
      {"predict", "label a JSONL file with a student checkpoint", cmd_predict},
  };
  for (const auto& s : subs) add_common(app.add_subcommand(s.name, s.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    cfg.verbose = !quiet;
    CLI::App* sub = app.get_subcommands().front();
    // flag > config file > default; note which flags were given
    for (const auto* opt : sub->get_options())
      if (opt->count() > 0) {
        std::string name = opt->get_name();
        if (name.rfind("--", 0) == 0) name = name.substr(2);
        for (auto& c : name)
          if (c == '-') c = '_';
        from_flags.insert(name);
      }
    if (sub->get_option("--seed")->count() == 0) {
      if (const char* env = std::getenv("SAFE_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
    }
    if (!cfg.config_file.empty()) {
      // flag names above map onto flat keys; model dims use dotted keys
      std::set<std::string> pinned = from_flags;
      cfg.apply_config_file(cfg.config_file, pinned);
    }
    for (const auto& s : subs)
      if (sub->get_name() == s.name) {
        s.fn(cfg);
        return 0;
      }
    throw InternalError("no subcommand dispatched");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
}

}  // namespace safe::cli
