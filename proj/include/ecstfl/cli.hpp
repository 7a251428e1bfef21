#pragma once

// The `ecstfl` command line: gen-data, train, eval, kappa, sweep, report.
//
// Every command writes into one run directory (`--out`, default
// runs/<timestamp>-<command>) and finishes by writing manifest.json with the
// resolved configuration, seed and SHA-256 digests of inputs and outputs.
// Exit codes: 0 success, 1 validation or usage error, 2 numerical failure.

#include "ecstfl/annotation.hpp"
#include "ecstfl/data.hpp"
#include "ecstfl/eval.hpp"
#include "ecstfl/model.hpp"
#include "ecstfl/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace ecstfl {

inline constexpr const char* kVersion = "1.0.0";

namespace fs = std::filesystem;

inline std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

// Collects a run's inputs and outputs and writes the manifest.
class RunDir {
 public:
  RunDir(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    fs::create_directories(dir_);
    started_ = std::chrono::steady_clock::now();
  }

  const fs::path& path() const { return dir_; }

  void input(const fs::path& p) { inputs_.push_back(p); }

  template <typename Fn>
  fs::path write(const std::string& name, Fn&& fn) {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    require(out.good(), "cannot write " + p.string());
    fn(out);
    out.close();
    require(!out.fail(), "failed writing " + p.string());
    outputs_.push_back(p);
    return p;
  }

  fs::path write_json(const std::string& name, const nlohmann::json& j) {
    return write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  }

  void finish(const nlohmann::json& config, std::uint64_t seed) {
    nlohmann::json m;
    m["command"] = command_;
    m["config"] = config;
    m["seed"] = seed;
    m["versions"] = {{"ecstfl", kVersion}, {"checkpoint_format", kCheckpointVersion}};
    auto digests = [&](const std::vector<fs::path>& paths) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& p : paths) {
        const fs::path rel = p.lexically_relative(dir_);
        const bool inside = !rel.empty() && *rel.begin() != "..";
        arr.push_back({{"path", inside ? rel.generic_string() : p.generic_string()}, {"sha256", sha256_file(p)}});
      }
      return arr;
    };
    m["inputs"] = digests(inputs_);
    m["outputs"] = digests(outputs_);
    m["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    std::ofstream out(dir_ / "manifest.json");
    out << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::string command_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  std::chrono::steady_clock::time_point started_;
};

inline std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

template <typename T, typename ReadFn>
T read_file(const fs::path& p, ReadFn&& fn) {
  std::ifstream in(p, std::ios::binary);
  if (!in.good()) throw ValidationError("cannot open " + p.string());
  try {
    return fn(in);
  } catch (const ValidationError& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

inline nlohmann::json read_json_file(const fs::path& p) {
  return read_file<nlohmann::json>(p, [&](std::istream& in) {
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
  });
}

struct GlobalOptions {
  std::uint64_t seed = 1;
  std::string out;
  unsigned jobs = default_jobs();
};

struct DataInputs {
  std::string data_dir;
  std::string dataset;
  std::string folds;
  double min_usable = 0.5;

  fs::path dataset_path() const { return dataset.empty() ? fs::path(data_dir) / "dataset.csv" : fs::path(dataset); }
  fs::path folds_path() const { return folds.empty() ? fs::path(data_dir) / "folds.csv" : fs::path(folds); }

  void add_options(CLI::App* cmd) {
    cmd->add_option("--data", data_dir, "Directory written by gen-data (dataset.csv, folds.csv)");
    cmd->add_option("--dataset", dataset, "Dataset CSV (overrides --data)");
    cmd->add_option("--folds", folds, "Fold CSV (overrides --data)");
    cmd->add_option("--min-usable", min_usable, "Minimum usable-frame rate kept")->capture_default_str();
  }

  void validate() const {
    require(!data_dir.empty() || (!dataset.empty() && !folds.empty()),
            "give --data DIR or both --dataset and --folds");
    require(fs::exists(dataset_path()), "dataset file not found: " + dataset_path().string());
    require(fs::exists(folds_path()), "fold file not found: " + folds_path().string());
  }

  nlohmann::json to_json() const {
    return {{"dataset", dataset_path().generic_string()},
            {"folds", folds_path().generic_string()},
            {"min_usable", min_usable}};
  }
};

struct LoadedData {
  std::vector<ClipSequence> clips;  // filtered and aligned
  FoldAssignment folds;
  std::size_t rejected = 0;
};

inline LoadedData load_data(const DataInputs& in, RunDir& run) {
  in.validate();
  run.input(in.dataset_path());
  run.input(in.folds_path());
  const auto raw = read_file<std::vector<ClipSequence>>(in.dataset_path(), [](std::istream& s) { return read_dataset_csv(s); });
  LoadedData d;
  d.folds = read_file<FoldAssignment>(in.folds_path(), [](std::istream& s) { return read_folds_csv(s); });
  for (const auto& clip : raw) d.folds.fold(clip.clip_id);
  FilterReport report = preprocess(raw, in.min_usable);
  d.clips = std::move(report.retained);
  d.rejected = report.rejected.size();
  require(!d.clips.empty(), "no clips survive the usable-frame filter");
  return d;
}

struct TrainOptions {
  TrainConfig cfg;
  std::string loss = "softmax+ecstfl";
  int fold = 1;
  std::vector<double> lr_grid;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--fold", fold, "Test fold (1..k); the rest train")->capture_default_str();
    cmd->add_option("--loss", loss, "softmax | softmax+ecstfl | softmax+center")->capture_default_str();
    cmd->add_option("--lambda", cfg.lambda, "Weight of the clustered loss")->capture_default_str();
    cmd->add_option("--center-coef", cfg.center_coef, "Weight of the center loss")->capture_default_str();
    cmd->add_option("--center-rate", cfg.center_update_rate, "Center update rate")->capture_default_str();
    cmd->add_option("--batch", cfg.batch_size, "Mini-batch size")->capture_default_str();
    cmd->add_option("--lr", cfg.learning_rate, "Initial learning rate")->capture_default_str();
    cmd->add_option("--lr-grid", lr_grid, "Grid-search these learning rates first")->delimiter(',');
    cmd->add_option("--epochs", cfg.epochs, "Epoch budget")->capture_default_str();
    cmd->add_option("--patience", cfg.patience_epochs, "Stalled epochs before a 10x lr drop")->capture_default_str();
    cmd->add_option("--min-improvement", cfg.min_improvement, "Improvement that resets patience")->capture_default_str();
    cmd->add_option("--hidden1", cfg.shape.hidden1, "First per-frame layer width")->capture_default_str();
    cmd->add_option("--hidden2", cfg.shape.hidden2, "Second per-frame layer width")->capture_default_str();
    cmd->add_option("--dim", cfg.shape.feature_dim, "Feature (final hidden) dimension")->capture_default_str();
  }

  TrainConfig resolve(std::uint64_t seed, int input_dim) const {
    TrainConfig c = cfg;
    c.loss_mode = parse_loss_mode(loss);
    c.seed = seed;
    c.shape.input_dim = input_dim;
    c.validate();
    return c;
  }
};

inline nlohmann::json fold_report_json(const FoldRun& run) {
  return {{"fold", run.fold}, {"n_test", run.predictions.items.size()}, {"metrics", to_json(run.report)}};
}

// Writes checkpoint, history and loss trace of one trained fold.
inline void write_training_outputs(RunDir& run, const std::string& prefix, const TrainResult& tr, const TrainConfig& cfg,
                                   int fold) {
  run.write_json(prefix + "checkpoint.json", checkpoint_json(tr, cfg, fold));
  run.write(prefix + "history.csv", [&](std::ostream& o) { write_history_csv(o, tr.history); });
  run.write(prefix + "loss_trace.csv", [&](std::ostream& o) { write_loss_trace_csv(o, tr.history); });
}

inline const std::vector<double> kLambdaGrid = {1, 3, 5, 10, 15, 20, 30, 50, 80, 100};
inline const std::vector<double> kBatchGrid = {18, 24, 30, 36, 42, 48};

inline std::string cell_label(double v) { return format_double(v); }

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Expression-clustered feature learning laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Config file mirroring the command-line flags (flags win)");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Master seed for every random stream")->capture_default_str();
  app.add_option("--out", global.out, "Run directory (default runs/<timestamp>-<command>)");
  app.add_option("--jobs", global.jobs, "Worker threads for folds and sweep cells")->capture_default_str();

  auto run_dir = [&](const std::string& command) {
    return RunDir(global.out.empty() ? fs::path("runs") / (timestamp() + "-" + command) : fs::path(global.out), command);
  };

  // gen-data
  DatasetSpec spec;
  std::vector<double> proportions;
  int fold_count = 5;
  bool stratify = false;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic clip dataset and its fold file");
  gen->add_option("--n", spec.n_clips, "Number of clips")->capture_default_str();
  gen->add_option("--feature-dim", spec.feature_dim, "Per-frame feature dimension")->capture_default_str();
  gen->add_option("--separation", spec.cluster_separation, "Class template scale")->capture_default_str();
  gen->add_option("--noise", spec.noise_scale, "Clip and frame noise scale")->capture_default_str();
  gen->add_option("--min-len", spec.min_length, "Shortest clip in frames")->capture_default_str();
  gen->add_option("--max-len", spec.max_length, "Longest clip in frames")->capture_default_str();
  gen->add_option("--dropout", spec.dropout_rate, "Per-frame unusable probability")->capture_default_str();
  gen->add_option("--proportions", proportions, "Seven class proportions happy..fear")->delimiter(',')->expected(kNumClasses);
  gen->add_option("--k", fold_count, "Number of folds")->capture_default_str();
  gen->add_flag("--stratify", stratify, "Class-stratified folds");

  // train
  DataInputs train_data;
  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train one fold's model");
  train_data.add_options(train_cmd);
  train_opts.add_options(train_cmd);

  // eval
  DataInputs eval_data;
  std::vector<std::string> checkpoints;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on their test folds");
  eval_data.add_options(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoints, "Checkpoint(s); each is scored on the fold it held out")->required();
  std::vector<int> eval_folds;
  eval_cmd->add_option("--fold", eval_folds, "Override the held-out fold recorded in each checkpoint");

  // kappa
  std::string annotations;
  int threshold = kDefaultLabelThreshold;
  auto* kappa_cmd = app.add_subcommand("kappa", "Fleiss's kappa and threshold single-labels of an annotation file");
  kappa_cmd->add_option("--annotations", annotations, "Annotation CSV")->required();
  kappa_cmd->add_option("--r", threshold, "Single-label threshold (label iff count > r)")->capture_default_str();

  // sweep
  DataInputs sweep_data;
  TrainOptions sweep_opts;
  std::string axis;
  std::vector<double> grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sensitivity sweep over lambda or batch size on one fold");
  sweep_data.add_options(sweep_cmd);
  sweep_opts.add_options(sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "lambda | batch")->required()->check(CLI::IsMember({"lambda", "batch"}));
  sweep_cmd->add_option("--grid", grid, "Grid values (default: the standard grid for the axis)")->delimiter(',');

  // report
  DataInputs report_data;
  TrainOptions report_opts;
  std::vector<std::string> modes = {"softmax", "softmax+ecstfl", "softmax+center"};
  auto* report_cmd = app.add_subcommand("report", "Full k-fold cross-validation per loss mode, pooled UAR/WAR table");
  report_data.add_options(report_cmd);
  report_opts.add_options(report_cmd);
  report_cmd->add_option("--modes", modes, "Loss modes to compare")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  if (global.jobs == 0) global.jobs = 1;

  try {
    if (*gen) {
      if (!proportions.empty()) std::copy(proportions.begin(), proportions.end(), spec.class_proportions.begin());
      spec.seed = global.seed;
      const auto clips = synth_generate(spec);
      std::vector<std::string> ids;
      std::vector<int> labels;
      for (const auto& c : clips) {
        ids.push_back(c.clip_id);
        labels.push_back(*c.label);
      }
      const FoldAssignment folds = kfold_split(ids, fold_count, global.seed, stratify ? &labels : nullptr);
      RunDir run = run_dir("gen-data");
      run.write("dataset.csv", [&](std::ostream& o) { write_dataset_csv(o, clips); });
      run.write("folds.csv", [&](std::ostream& o) { write_folds_csv(o, folds); });
      const auto counts = apportion(spec.class_proportions, spec.n_clips);
      nlohmann::json meta{{"spec", to_json(spec)},
                          {"seed", global.seed},
                          {"class_counts", counts},
                          {"n_clips", clips.size()},
                          {"folds", {{"k", fold_count}, {"stratified", stratify}, {"sizes", folds.sizes()}}},
                          {"generator",
                           "per-class affine trajectories u_c + tau*v_c with |u_c| = |v_c| = separation (seeded "
                           "orthonormal directions when feature_dim >= 14, Gaussian otherwise); clip offset and "
                           "frame jitter ~ noise*N(0,1); lengths uniform in [min_length, max_length]; frames "
                           "unusable with probability dropout_rate"}};
      run.write_json("dataset.json", meta);
      run.finish({{"spec", to_json(spec)}, {"k", fold_count}, {"stratify", stratify}}, global.seed);
      out << "wrote " << clips.size() << " clips to " << run.path().string() << '\n';
      return 0;
    }

    if (*train_cmd) {
      RunDir run = run_dir("train");
      const LoadedData data = load_data(train_data, run);
      TrainConfig cfg = train_opts.resolve(global.seed, static_cast<int>(data.clips.front().frames.cols()));
      const FoldSplit split = split_fold(data.clips, data.folds, train_opts.fold);
      nlohmann::json config{{"data", train_data.to_json()}, {"fold", train_opts.fold}};
      if (!train_opts.lr_grid.empty()) {
        const GridSearchResult gs = lr_grid_search(split.train, train_opts.lr_grid, cfg);
        nlohmann::json g = nlohmann::json::array();
        for (const auto& o : gs.outcomes)
          g.push_back({{"rate", o.rate}, {"diverged", o.diverged}, {"validation_loss", o.diverged ? nlohmann::json() : nlohmann::json(o.validation_loss)}, {"note", o.note}});
        run.write_json("lr_grid.json", {{"best_rate", gs.best_rate}, {"outcomes", g}});
        cfg.learning_rate = gs.best_rate;
        config["lr_grid"] = train_opts.lr_grid;
      }
      config["train"] = to_json(cfg);
      const TrainResult tr = train(split.train, cfg);
      write_training_outputs(run, "", tr, cfg, train_opts.fold);
      run.finish(config, global.seed);
      out << "trained fold " << train_opts.fold << " (" << split.train.size() << " clips, " << to_string(cfg.loss_mode)
          << "), final loss " << tr.history.epochs.back().total << " -> " << run.path().string() << '\n';
      return 0;
    }

    if (*eval_cmd) {
      RunDir run = run_dir("eval");
      const LoadedData data = load_data(eval_data, run);
      require(eval_folds.empty() || eval_folds.size() == checkpoints.size(), "give one --fold per --checkpoint");
      std::vector<FoldRun> runs;
      for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        run.input(checkpoints[i]);
        const Checkpoint ck = checkpoint_from_json(read_json_file(checkpoints[i]));
        const auto feat_dim = data.clips.front().frames.cols();
        if (ck.params.shape.input_dim != feat_dim) {
          throw ValidationError("checkpoint " + checkpoints[i] + " expects feature dim " +
                                std::to_string(ck.params.shape.input_dim) + ", dataset has " + std::to_string(feat_dim));
        }
        const int fold = eval_folds.empty() ? ck.fold : eval_folds[i];
        require(fold >= 1, "checkpoint " + checkpoints[i] + " records no held-out fold; pass --fold");
        const FoldSplit split = split_fold(data.clips, data.folds, fold);
        for (const auto& r : runs) require(r.fold != fold, "fold " + std::to_string(fold) + " evaluated twice");
        runs.push_back(evaluate_fold(ck.params, split.test, fold));
      }
      std::vector<FoldPredictions> preds;
      std::vector<std::string> expected;
      nlohmann::json per_fold = nlohmann::json::array();
      for (const auto& r : runs) {
        preds.push_back(r.predictions);
        per_fold.push_back(fold_report_json(r));
        for (const auto& clip : data.clips)
          if (data.folds.fold(clip.clip_id) == r.fold) expected.push_back(clip.clip_id);
      }
      ConfusionMatrix pooled_cm;
      const MetricReport pooled = cv_aggregate(preds, expected, &pooled_cm);
      run.write_json("metrics.json", {{"folds", per_fold}, {"pooled", to_json(pooled)}, {"n_clips", expected.size()}});
      run.write("confusion.csv", [&](std::ostream& o) { write_confusion_csv(o, pooled_cm); });
      for (const auto& r : runs) {
        std::vector<std::string> ids;
        std::vector<int> labels;
        for (const auto& item : r.predictions.items) {
          ids.push_back(item.clip_id);
          labels.push_back(item.truth);
        }
        const std::string name = runs.size() == 1 ? "projection.csv" : "projection_fd" + std::to_string(r.fold) + ".csv";
        run.write(name, [&](std::ostream& o) { write_projection_csv(o, ids, labels, project_2d(r.test_features)); });
      }
      run.finish({{"data", eval_data.to_json()}, {"checkpoints", checkpoints}}, global.seed);
      out << std::fixed << std::setprecision(2) << "UAR " << percent2(pooled.uar) << "%  WAR " << percent2(pooled.war)
          << "%  (" << expected.size() << " clips) -> " << run.path().string() << '\n';
      return 0;
    }

    if (*kappa_cmd) {
      RunDir run = run_dir("kappa");
      run.input(annotations);
      const AnnotatedDataset ds =
          read_file<AnnotatedDataset>(annotations, [](std::istream& s) { return read_annotations(s); });
      const KappaReport rep = kappa_report(ds);
      run.write_json("kappa.json", to_json(rep));
      std::size_t labeled = 0;
      run.write("single_labels.csv", [&](std::ostream& o) {
        o << "clip_id,label,label_name\n";
        for (const auto& item : ds.items()) {
          if (auto e = single_label(item.dist, threshold)) {
            o << item.clip_id << ',' << static_cast<int>(*e) << ',' << emotion_name(*e) << '\n';
            ++labeled;
          }
        }
      });
      run.finish({{"annotations", annotations}, {"r", threshold}}, global.seed);
      out << "kappa " << rep.kappa << " (" << rep.band << "), " << labeled << " of " << ds.size()
          << " clips single-labeled at r=" << threshold << " -> " << run.path().string() << '\n';
      return 0;
    }

    if (*sweep_cmd) {
      RunDir run = run_dir("sweep");
      const LoadedData data = load_data(sweep_data, run);
      const TrainConfig base = sweep_opts.resolve(global.seed, static_cast<int>(data.clips.front().frames.cols()));
      if (grid.empty()) grid = axis == "lambda" ? kLambdaGrid : kBatchGrid;
      struct Cell {
        double value = 0.0;
        TrainConfig cfg;
        std::optional<FoldRun> result;
        std::string error;
      };
      std::vector<Cell> cells(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        cells[i].value = grid[i];
        cells[i].cfg = base;
        if (axis == "lambda") {
          cells[i].cfg.lambda = grid[i];
        } else {
          require(grid[i] >= 1 && grid[i] == std::floor(grid[i]), "batch sizes must be positive integers");
          cells[i].cfg.batch_size = static_cast<int>(grid[i]);
        }
        cells[i].cfg.validate();
      }
      parallel_for(cells.size(), global.jobs, [&](std::size_t i) {
        try {
          cells[i].result = run_fold(data.clips, data.folds, sweep_opts.fold, cells[i].cfg);
        } catch (const NumericalError& e) {
          cells[i].error = e.what();
        }
      });
      nlohmann::json summary_cells = nlohmann::json::array();
      bool any_failed = false;
      for (const auto& c : cells) {
        const std::string dir = "cell_" + cell_label(c.value) + "/";
        if (c.result) {
          write_training_outputs(run, dir, c.result->trained, c.cfg, sweep_opts.fold);
          run.write_json(dir + "metrics.json", fold_report_json(*c.result));
          summary_cells.push_back({{"cell", c.value}, {"uar", c.result->report.uar}, {"war", c.result->report.war}, {"status", "ok"}});
        } else {
          any_failed = true;
          summary_cells.push_back({{"cell", c.value}, {"status", "diverged"}, {"error", c.error}});
        }
      }
      run.write("sweep.csv", [&](std::ostream& o) {
        o << "cell,uar,war\n" << std::fixed << std::setprecision(2);
        for (const auto& c : cells) {
          o << cell_label(c.value) << ',';
          if (c.result) o << percent2(c.result->report.uar) << ',' << percent2(c.result->report.war) << '\n';
          else o << "nan,nan\n";
        }
      });
      run.write_json("summary.json", {{"axis", axis}, {"fold", sweep_opts.fold}, {"cells", summary_cells}, {"any_failed", any_failed}});
      run.finish({{"data", sweep_data.to_json()}, {"axis", axis}, {"grid", grid}, {"fold", sweep_opts.fold}, {"base", to_json(base)}},
                 global.seed);
      out << "swept " << axis << " over " << cells.size() << " cells" << (any_failed ? " (some cells diverged)" : "")
          << " -> " << run.path().string() << '\n';
      return any_failed ? 2 : 0;
    }

    if (*report_cmd) {
      RunDir run = run_dir("report");
      const LoadedData data = load_data(report_data, run);
      nlohmann::json rows = nlohmann::json::array();
      std::vector<std::pair<std::string, MetricReport>> table;
      for (const auto& mode : modes) {
        TrainOptions opts = report_opts;
        opts.loss = mode;
        const TrainConfig cfg = opts.resolve(global.seed, static_cast<int>(data.clips.front().frames.cols()));
        const CrossValidation cv = cross_validate(data.clips, data.folds, cfg, global.jobs);
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& f : cv.folds) folds.push_back(fold_report_json(f));
        rows.push_back({{"mode", mode}, {"config", to_json(cfg)}, {"pooled", to_json(cv.pooled)}, {"folds", folds}});
        run.write("confusion_" + mode + ".csv", [&](std::ostream& o) { write_confusion_csv(o, cv.pooled_confusion); });
        table.emplace_back(mode, cv.pooled);
      }
      run.write("report.csv", [&](std::ostream& o) {
        o << "mode,uar,war\n" << std::fixed << std::setprecision(2);
        for (const auto& [mode, m] : table) o << mode << ',' << percent2(m.uar) << ',' << percent2(m.war) << '\n';
      });
      run.write_json("report.json", {{"modes", rows}, {"n_clips", data.clips.size()}, {"rejected_clips", data.rejected}});
      run.finish({{"data", report_data.to_json()}, {"modes", modes}}, global.seed);
      out << std::fixed << std::setprecision(2);
      for (const auto& [mode, m] : table)
        out << std::setw(16) << std::left << mode << " UAR " << percent2(m.uar) << "%  WAR " << percent2(m.war) << "%\n";
      return 0;
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace ecstfl
