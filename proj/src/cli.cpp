#include "segbias/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "segbias/error.hpp"
#include "segbias/experiments.hpp"
#include "segbias/loss.hpp"
#include "segbias/manifest.hpp"
#include "segbias/mask.hpp"
#include "segbias/report.hpp"
#include "segbias/synth.hpp"
#include "segbias/trainer.hpp"

namespace segbias {

namespace fs = std::filesystem;

namespace {

/// Bad flag combination detected after parsing; exits with kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

void report_error(std::string_view category, const std::string& message) {
  std::cerr << "segbias: error: " << category << ": " << one_line(message) << '\n';
}

std::string full_precision(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct TrainFlags {
  std::size_t epochs = 500;
  double lr = 0.5;
  double wpos = 1.0;
  double wneg = 1.0;
  std::uint64_t seed = 0;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_weights = true) {
  cmd->add_option("--epochs", f.epochs, "Gradient-descent epochs")->check(CLI::Range(std::size_t{1}, std::size_t{1000000}))->capture_default_str();
  cmd->add_option("--lr", f.lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  if (with_weights) {
    cmd->add_option("--wpos", f.wpos, "Foreground loss weight")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--wneg", f.wneg, "Background loss weight")->check(CLI::PositiveNumber)->capture_default_str();
  }
}

TrainOptions train_options(const TrainFlags& f) {
  TrainOptions o;
  o.epochs = f.epochs;
  o.lr = f.lr;
  o.seed = f.seed;
  return o;
}

struct EvalFlags {
  std::string aggregation = "macro";
  std::string empty_pred = "exclude";
  double threshold = 0.5;
};

void add_eval_flags(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--aggregation", f.aggregation, "Aggregation over images")
      ->check(CLI::IsMember({"macro", "micro"}))
      ->capture_default_str();
  cmd->add_option("--empty-pred-policy", f.empty_pred, "HD/ASSD for empty predictions")
      ->check(CLI::IsMember({"exclude", "diagonal"}))
      ->capture_default_str();
  cmd->add_option("--threshold", f.threshold, "Foreground iff probability > threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

EvalOptions eval_options(const EvalFlags& f) {
  EvalOptions o;
  o.threshold = f.threshold;
  o.aggregation.mode = f.aggregation == "micro" ? AggregationMode::kMicro : AggregationMode::kMacro;
  o.empty_pred = f.empty_pred == "diagonal" ? EmptyPredPolicy::kDiagonal : EmptyPredPolicy::kExclude;
  return o;
}

struct TableFlags {
  std::string out;
  std::string format = "csv";
};

void add_table_flags(CLI::App* cmd, TableFlags& f) {
  cmd->add_option("--out", f.out, "Output table (a .raw.csv sibling is written too)")->required();
  cmd->add_option("--format", f.format, "Table format")->check(CLI::IsMember({"csv", "md"}))->capture_default_str();
}

fs::path raw_sibling(const fs::path& out) {
  fs::path raw = out;
  raw.replace_extension(".raw.csv");
  if (raw == out) raw = out.string() + ".raw.csv";
  return raw;
}

void write_tables(const std::vector<ReportRow>& rows, const TableFlags& f, bool sort_by_size) {
  const fs::path out = f.out;
  TableOptions main_table{f.format == "md" ? TableFormat::kMarkdown : TableFormat::kPercentCsv, sort_by_size};
  TableOptions raw_table{TableFormat::kRawCsv, sort_by_size};
  ensure_parent(out);
  write_file(out, emit_table(rows, main_table));
  write_file(raw_sibling(out), emit_table(rows, raw_table));
}

ArmResult arm_of(std::string tag, const EvaluationResult& e) {
  return {std::move(tag), e.counting, e.distance.hd, e.distance.assd, e.pooled};
}

/// Supplemented manifests must live next to the dataset they reference,
/// because image paths are resolved relative to the manifest.
void require_same_dataset(const fs::path& out, const DatasetManifest& m) {
  const fs::path out_dir = fs::weakly_canonical(fs::absolute(out).parent_path());
  const fs::path data_dir = fs::weakly_canonical(fs::absolute(m.base_dir.empty() ? fs::path(".") : m.base_dir));
  if (out_dir != data_dir) {
    throw UsageError("--out must be in the dataset directory " + data_dir.string() +
                     " (images are located relative to the manifest)");
  }
}

fs::path sibling_pool(const fs::path& manifest_path) { return manifest_path.parent_path() / "pool.jsonl"; }

std::string dataset_label(const fs::path& manifest_path) {
  const fs::path dir = fs::absolute(manifest_path).parent_path();
  return dir.filename().empty() ? manifest_path.stem().string() : dir.filename().string();
}

ReportRow composition_row(const fs::path& manifest_path, const fs::path& pool_path, const std::string& organ,
                          std::uint64_t seed, const TrainFlags& tf, const EvalOptions& eval) {
  const DatasetManifest organ_specific = load_manifest(manifest_path, organ);
  if (organ_specific.composition != Composition::kOrganSpecific) {
    throw std::invalid_argument(manifest_path.string() + " is not an organ-specific manifest");
  }
  const auto pool = load_records(pool_path);
  const DatasetManifest supplemented = supplement(organ_specific, pool, seed);
  ExperimentOptions opts{train_options(tf), eval};
  const CompositionResult r = composition_experiment(organ_specific, supplemented, LossWeights(tf.wpos, tf.wneg), opts);
  ReportRow row;
  row.label = organ_specific.organ;
  row.organ_size = manifest_stats(organ_specific).organ_size;
  row.arms.push_back(arm_of("O", r.organ_specific.evaluation));
  row.arms.push_back(arm_of("S", r.supplemented.evaluation));
  return row;
}

/// Prediction of a TEST record: `<dir>/<id>.f32` (thresholded) or `<dir>/<id>.pgm`.
BinaryMask load_prediction(const fs::path& dir, const std::string& id, double threshold) {
  const fs::path f32 = dir / (id + ".f32");
  if (fs::exists(f32)) return load_probmap(f32).threshold(threshold);
  const fs::path pgm = dir / (id + ".pgm");
  if (fs::exists(pgm)) return load_mask(pgm);
  throw std::runtime_error("no prediction for " + id + " in " + dir.string());
}

std::vector<const ImageRecord*> test_records(const DatasetManifest& m) {
  std::vector<const ImageRecord*> out;
  for (const auto& r : m.records) {
    if (r.split == Split::kTest) out.push_back(&r);
  }
  if (out.empty()) throw std::invalid_argument("manifest has no TEST records");
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SynthFlags {
  std::string out;
  std::uint64_t seed = 0;
  std::vector<double> fg_fractions{0.1};
  std::string organ = "organ";
  std::size_t n_train = 30;
  std::size_t n_val = 0;
  std::size_t n_test = 15;
};

void run_synth(const SynthFlags& f) {
  SynthConfig config;
  config.seed = f.seed;
  config.organ = f.organ;
  config.n_positive = {f.n_train, f.n_val, f.n_test};
  config.n_negative = {f.n_train, f.n_val, f.n_test};
  if (f.fg_fractions.size() == 1) {
    config.fg_fraction = f.fg_fractions.front();
    generate(config, f.out);
  } else {
    size_ladder(config, f.fg_fractions, f.out);
  }
}

struct SupplementFlags {
  std::string manifest;
  std::string pool;
  std::string organ;
  std::uint64_t seed = 0;
  std::string out;
};

void run_supplement(const SupplementFlags& f) {
  const DatasetManifest m = load_manifest(f.manifest, f.organ);
  require_same_dataset(f.out, m);
  const DatasetManifest s = supplement(m, load_records(f.pool), f.seed);
  save_manifest(s, f.out);
}

struct EvalCmdFlags {
  std::string pred_dir;
  std::string manifest;
  std::string organ;
  EvalFlags eval;
  TableFlags table;
};

void run_eval(const EvalCmdFlags& f) {
  const DatasetManifest m = load_manifest(f.manifest, f.organ);
  const EvalOptions opts = eval_options(f.eval);
  std::vector<std::string> ids;
  std::vector<BinaryMask> preds;
  std::vector<BinaryMask> truths;
  for (const ImageRecord* r : test_records(m)) {
    ids.push_back(r->image_id);
    preds.push_back(load_prediction(f.pred_dir, r->image_id, opts.threshold));
    truths.push_back(ground_truth_mask(m, *r));
  }
  const EvaluationResult e = evaluate_masks(ids, preds, truths, opts);

  std::vector<ReportRow> rows;
  double size_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < e.images.size(); ++i) {
    const ImageEvaluation& img = e.images[i];
    AggregatedMetrics single;
    single.metrics = img.metrics;
    single.mode = opts.aggregation.mode;
    ArmResult arm{"", single, std::nullopt, std::nullopt, img.counts};
    if (img.distance) {
      arm.hd = img.distance->hd;
      arm.assd = img.distance->assd;
    }
    const double size = truths[i].foreground_fraction();
    if (!truths[i].empty_foreground()) {
      size_sum += size;
      ++positives;
    }
    rows.push_back({img.image_id, size, {arm}});
  }
  std::optional<double> mean_size;
  if (positives > 0) mean_size = size_sum / static_cast<double>(positives);
  rows.push_back({"aggregate", mean_size, {arm_of("", e)}});
  write_tables(rows, f.table, false);
}

struct LossFlags {
  std::string pred_dir;
  std::string manifest;
  std::string organ;
  std::string out;
  double wpos = 1.0;
  double wneg = 1.0;
};

void run_loss(const LossFlags& f) {
  const DatasetManifest m = load_manifest(f.manifest, f.organ);
  const LossWeights weights(f.wpos, f.wneg);
  std::string csv = "image_id,kind,l_pos,l_neg,l_suppl,l_comb\n";
  double total_pos = 0.0;
  double total_neg = 0.0;
  double total_suppl = 0.0;
  for (const ImageRecord* r : test_records(m)) {
    const ProbMap prob = load_probmap(fs::path(f.pred_dir) / (r->image_id + ".f32"));
    if (r->mask_path) {
      const BinaryMask gt = load_mask(m.mask_path(*r));
      const double lp = loss_pos(prob, gt, weights.w_pos());
      const double ln = loss_neg(prob, gt, weights.w_neg());
      total_pos += lp;
      total_neg += ln;
      csv += r->image_id + ",positive," + full_precision(lp) + "," + full_precision(ln) + ",," +
             full_precision(lp + ln) + "\n";
    } else {
      const double ls = loss_suppl(std::span<const ProbMap>(&prob, 1), weights.w_neg());
      total_suppl += ls;
      csv += r->image_id + ",supplementary,,," + full_precision(ls) + "," + full_precision(ls) + "\n";
    }
  }
  csv += "total,batch," + full_precision(total_pos) + "," + full_precision(total_neg) + "," +
         full_precision(total_suppl) + "," + full_precision(total_pos + total_neg + total_suppl) + "\n";
  ensure_parent(f.out);
  write_file(f.out, csv);
}

struct TrainCmdFlags {
  std::string manifest;
  std::string organ;
  std::string out;
  std::string pred_dir;
  TrainFlags train;
};

void run_train(const TrainCmdFlags& f) {
  const DatasetManifest m = load_manifest(f.manifest, f.organ);
  const PixelModel model = train(m, LossWeights(f.train.wpos, f.train.wneg), train_options(f.train));
  ensure_parent(f.out);
  save_model(model, f.out);
  if (!f.pred_dir.empty()) {
    fs::create_directories(f.pred_dir);
    for (const ImageRecord* r : test_records(m)) {
      const ProbMap prob = predict(model, load_intensity(m.image_path(*r)));
      save_probmap(prob, fs::path(f.pred_dir) / (r->image_id + ".f32"));
    }
  }
}

struct SweepFlags {
  std::string manifest;
  std::string organ;
  std::vector<double> ratios = kDefaultSweepRatios;
  TrainFlags train;
  EvalFlags eval;
  TableFlags table;
};

void run_sweep(const SweepFlags& f) {
  const DatasetManifest m = load_manifest(f.manifest, f.organ);
  SweepOptions opts;
  opts.train = train_options(f.train);
  opts.eval = eval_options(f.eval);
  const SweepResult result = weight_sweep(m, f.ratios, opts);
  const double size = manifest_stats(m).organ_size;
  std::vector<ReportRow> rows;
  for (const SweepRow& r : result.rows) {
    char label[32];
    std::snprintf(label, sizeof label, "%g", r.ratio);
    rows.push_back({label, size, {arm_of("", r.evaluation)}});
  }
  write_tables(rows, f.table, false);
}

struct CompositionFlags {
  std::string manifest;
  std::string pool;
  std::string organ;
  TrainFlags train;
  EvalFlags eval;
  TableFlags table;
};

void run_composition(const CompositionFlags& f) {
  const fs::path pool = f.pool.empty() ? sibling_pool(f.manifest) : fs::path(f.pool);
  write_tables({composition_row(f.manifest, pool, f.organ, f.train.seed, f.train, eval_options(f.eval))}, f.table,
               true);
}

struct MultiFlags {
  std::vector<std::string> manifests;
  std::string pool;
  std::string organ;
  TrainFlags train;
  EvalFlags eval;
  TableFlags table;
};

void run_size_effect(const MultiFlags& f) {
  const EvalOptions eval = eval_options(f.eval);
  const LossWeights weights(f.train.wpos, f.train.wneg);
  std::vector<ReportRow> rows;
  for (const auto& path : f.manifests) {
    const DatasetManifest m = load_manifest(path, f.organ);
    const PixelModel model = train(m, weights, train_options(f.train));
    rows.push_back({dataset_label(path), manifest_stats(m).organ_size, {arm_of("", evaluate(model, m, eval))}});
  }
  write_tables(rows, f.table, true);
}

void run_report(const MultiFlags& f) {
  if (!f.pool.empty() && f.manifests.size() != 1) {
    throw UsageError("--pool applies to a single --manifest; otherwise each manifest's pool.jsonl is used");
  }
  const EvalOptions eval = eval_options(f.eval);
  std::vector<ReportRow> rows;
  for (const auto& path : f.manifests) {
    const fs::path pool = f.pool.empty() ? sibling_pool(path) : fs::path(f.pool);
    rows.push_back(composition_row(path, pool, f.organ, f.train.seed, f.train, eval));
  }
  write_tables(rows, f.table, true);
}

std::string usage_for(const CLI::App& app) {
  for (const CLI::App* sub : app.get_subcommands()) return sub->help();
  return app.help();
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Segmentation metrics, weighted losses and dataset composition experiments", "segbias"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::simple);

  SynthFlags synth_f;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset (or a size ladder)");
  synth->add_option("--out", synth_f.out, "Output directory")->required();
  synth->add_option("--seed", synth_f.seed, "PRNG seed")->required();
  synth->add_option("--fg-fraction", synth_f.fg_fractions, "Target foreground fraction(s); several give a ladder")
      ->delimiter(',')
      ->check(CLI::Range(0.005, 0.5))
      ->capture_default_str();
  synth->add_option("--organ", synth_f.organ, "Organ name")->capture_default_str();
  synth->add_option("--n-train", synth_f.n_train, "Positives and negatives in TRAIN")->capture_default_str();
  synth->add_option("--n-val", synth_f.n_val, "Positives and negatives in VAL")->capture_default_str();
  synth->add_option("--n-test", synth_f.n_test, "Positives and negatives in TEST")->capture_default_str();

  SupplementFlags supp_f;
  auto* supp = app.add_subcommand("supplement", "Add 1:1 negative samples from a pool");
  supp->add_option("--manifest", supp_f.manifest, "Organ-specific manifest")->required();
  supp->add_option("--pool", supp_f.pool, "Pool of class-negative records")->required();
  supp->add_option("--organ", supp_f.organ, "Organ (inferred when omitted)");
  supp->add_option("--seed", supp_f.seed, "PRNG seed")->required();
  supp->add_option("--out", supp_f.out, "Output manifest")->required();

  EvalCmdFlags eval_f;
  auto* eval = app.add_subcommand("eval", "Score predictions on the TEST split");
  eval->add_option("--pred-dir", eval_f.pred_dir, "Directory of <image_id>.f32 or .pgm predictions")->required();
  eval->add_option("--manifest", eval_f.manifest, "Manifest")->required();
  eval->add_option("--organ", eval_f.organ, "Organ (inferred when omitted)");
  add_eval_flags(eval, eval_f.eval);
  add_table_flags(eval, eval_f.table);

  LossFlags loss_f;
  auto* loss = app.add_subcommand("loss", "Per-image loss breakdown of TEST predictions");
  loss->add_option("--pred-dir", loss_f.pred_dir, "Directory of <image_id>.f32 probability maps")->required();
  loss->add_option("--manifest", loss_f.manifest, "Manifest")->required();
  loss->add_option("--organ", loss_f.organ, "Organ (inferred when omitted)");
  loss->add_option("--wpos", loss_f.wpos, "Foreground loss weight")->check(CLI::PositiveNumber)->capture_default_str();
  loss->add_option("--wneg", loss_f.wneg, "Background loss weight")->check(CLI::PositiveNumber)->capture_default_str();
  loss->add_option("--out", loss_f.out, "Output CSV")->required();

  TrainCmdFlags train_f;
  auto* train_cmd = app.add_subcommand("train", "Train the pixel classifier on the TRAIN split");
  train_cmd->add_option("--manifest", train_f.manifest, "Manifest")->required();
  train_cmd->add_option("--organ", train_f.organ, "Organ (inferred when omitted)");
  train_cmd->add_option("--seed", train_f.train.seed, "Recorded in the model; training is deterministic");
  train_cmd->add_option("--out", train_f.out, "Model JSON")->required();
  train_cmd->add_option("--pred-dir", train_f.pred_dir, "Also write TEST probability maps here");
  add_train_flags(train_cmd, train_f.train);

  SweepFlags sweep_f;
  auto* sweep = app.add_subcommand("sweep", "Foreground/background weight-ratio sweep");
  sweep->add_option("--manifest", sweep_f.manifest, "Manifest")->required();
  sweep->add_option("--organ", sweep_f.organ, "Organ (inferred when omitted)");
  sweep->add_option("--ratios", sweep_f.ratios, "w_pos/w_neg ratios, strictly increasing, within [0.7, 15]")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--seed", sweep_f.train.seed, "Recorded in the models; training is deterministic");
  add_train_flags(sweep, sweep_f.train, false);
  add_eval_flags(sweep, sweep_f.eval);
  add_table_flags(sweep, sweep_f.table);

  CompositionFlags comp_f;
  auto* comp = app.add_subcommand("composition", "Organ-specific vs supplemented training data");
  comp->add_option("--manifest", comp_f.manifest, "Organ-specific manifest")->required();
  comp->add_option("--pool", comp_f.pool, "Negative pool (default: pool.jsonl next to the manifest)");
  comp->add_option("--organ", comp_f.organ, "Organ (inferred when omitted)");
  comp->add_option("--seed", comp_f.train.seed, "Supplementation seed")->required();
  add_train_flags(comp, comp_f.train);
  add_eval_flags(comp, comp_f.eval);
  add_table_flags(comp, comp_f.table);

  MultiFlags size_f;
  auto* size = app.add_subcommand("size-effect", "Train and evaluate one model per dataset, ordered by organ size");
  size->add_option("--manifest", size_f.manifests, "Manifest (repeatable)")->required();
  size->add_option("--organ", size_f.organ, "Organ (inferred when omitted)");
  size->add_option("--seed", size_f.train.seed, "Recorded in the models; training is deterministic");
  add_train_flags(size, size_f.train);
  add_eval_flags(size, size_f.eval);
  add_table_flags(size, size_f.table);

  MultiFlags report_f;
  auto* report = app.add_subcommand("report", "Organ-specific vs supplemented table, one row per dataset");
  report->add_option("--manifest", report_f.manifests, "Organ-specific manifest (repeatable)")->required();
  report->add_option("--pool", report_f.pool, "Negative pool (default: pool.jsonl next to each manifest)");
  report->add_option("--organ", report_f.organ, "Organ (inferred when omitted)");
  report->add_option("--seed", report_f.train.seed, "Supplementation seed")->required();
  add_train_flags(report, report_f.train);
  add_eval_flags(report, report_f.eval);
  add_table_flags(report, report_f.table);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << usage_for(app);
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    std::cerr << usage_for(app);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) run_synth(synth_f);
    else if (supp->parsed()) run_supplement(supp_f);
    else if (eval->parsed()) run_eval(eval_f);
    else if (loss->parsed()) run_loss(loss_f);
    else if (train_cmd->parsed()) run_train(train_f);
    else if (sweep->parsed()) run_sweep(sweep_f);
    else if (comp->parsed()) run_composition(comp_f);
    else if (size->parsed()) run_size_effect(size_f);
    else if (report->parsed()) run_report(report_f);
  } catch (const UsageError& e) {
    report_error("usage", e.what());
    std::cerr << usage_for(app);
    return kExitUsage;
  } catch (const ParseError& e) {
    report_error("parse/" + std::string(to_string(e.kind())) + "@" + std::to_string(e.offset()), e.what());
    return kExitFailure;
  } catch (const ManifestError& e) {
    report_error("manifest/" + std::string(to_string(e.kind())) + "@line" + std::to_string(e.line()), e.what());
    return kExitFailure;
  } catch (const TrainingError& e) {
    report_error("training", e.what());
    return kExitFailure;
  } catch (const DimensionMismatch& e) {
    report_error("dimension-mismatch", e.what());
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    report_error("invalid-argument", e.what());
    return kExitFailure;
  } catch (const fs::filesystem_error& e) {
    report_error("io", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    report_error("runtime", e.what());
    return kExitFailure;
  }
  return kExitOk;
}

int cli_dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"segbias"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace segbias
