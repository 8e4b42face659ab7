// radfp command-line pipeline: synth | extract | train | predict | report.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "radfp/extract.hpp"
#include "radfp/metrics.hpp"
#include "radfp/model_io.hpp"
#include "radfp/report.hpp"
#include "radfp/synth.hpp"
#include "radfp/trainer.hpp"

namespace fs = std::filesystem;

namespace {

radfp::Dims parse_dims(const std::string& s) {
  radfp::Dims d;
  if (std::sscanf(s.c_str(), "%dx%dx%d", &d.d, &d.h, &d.w) != 3 || d.d < 1 ||
      d.h < 1 || d.w < 1)
    throw radfp::invalid_argument("bad dims '" + s + "', expected DxHxW");
  return d;
}

radfp::PatchGrid parse_grid(const std::string& s) {
  radfp::PatchGrid g;
  if (std::sscanf(s.c_str(), "%dx%dx%d", &g.nd, &g.nh, &g.nw) == 3) {
  } else if (std::sscanf(s.c_str(), "%d", &g.nd) == 1) {
    g.nh = g.nw = g.nd;
  } else {
    throw radfp::invalid_argument("bad grid '" + s + "', expected N or NxNxN");
  }
  if (g.nd < 1 || g.nh < 1 || g.nw < 1)
    throw radfp::invalid_argument("grid axes must be >= 1");
  return g;
}

radfp::RoiSpec parse_roi(const std::string& s) {
  double fd = 0, fh = 0, fw = 0;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &fd, &fh, &fw) != 3)
    throw radfp::invalid_argument("bad roi '" + s + "', expected fD,fH,fW");
  return radfp::RoiSpec::fractional(fd, fh, fw);
}

std::vector<radfp::Family> parse_families(const std::string& s) {
  if (s.empty() || s == "all") return {};
  std::vector<radfp::Family> fams;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    std::string tok = s.substr(pos, comma == std::string::npos
                                        ? std::string::npos
                                        : comma - pos);
    if (!tok.empty()) fams.push_back(radfp::family_from_name(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (fams.empty())
    throw radfp::invalid_argument("no feature families given");
  return fams;
}

std::vector<radfp::Study> load_studies(const fs::path& manifest) {
  std::vector<radfp::ManifestEntry> entries = radfp::load_manifest(manifest);
  if (entries.empty())
    throw radfp::error("manifest is empty: " + manifest.string());
  std::vector<radfp::Study> studies;
  studies.reserve(entries.size());
  for (const auto& e : entries) studies.push_back(radfp::load_study(e));
  return studies;
}

char score_buf[64];
const char* fmt_score(double v) {
  std::snprintf(score_buf, sizeof(score_buf), "%.17g", v);
  return score_buf;
}

int run(int argc, char** argv) {
  CLI::App app{"Patient-specific radiomic fingerprint pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI config file");

  // --- synth ---------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a phantom cohort");
  int s_n = 40;
  std::string s_dims = "16x48x48", s_grid = "2x2x2", s_roi = "0.5,0.3,0.5";
  int s_patch = 0;
  std::string s_kind = "intensity-shift";
  double s_effect = 3.0, s_noise = 0.0;
  std::uint64_t s_seed = 0;
  std::string s_out;
  synth->add_option("--n", s_n, "Number of studies");
  synth->add_option("--dims", s_dims, "Volume dims DxHxW");
  synth->add_option("--grid", s_grid, "Patch grid for lesion placement");
  synth->add_option("--roi", s_roi, "ROI fractions fD,fH,fW");
  synth->add_option("--lesion-patch", s_patch, "Planted patch index (0-based)");
  synth->add_option("--kind", s_kind,
                    "intensity-shift | texture-roughening | mixed");
  synth->add_option("--effect", s_effect, "Lesion effect size (sigmas)");
  synth->add_option("--label-noise", s_noise, "Label flip probability");
  synth->add_option("--seed", s_seed, "RNG seed");
  synth->add_option("--out", s_out, "Output directory")->required();

  // --- extract -------------------------------------------------------
  auto* extract = app.add_subcommand("extract", "Extract feature CSV");
  std::string e_manifest, e_grid = "2x2x2", e_roi = "0.5,0.3,0.5", e_out;
  std::string e_dims;
  int e_bins = 32;
  extract->add_option("--manifest", e_manifest, "JSONL manifest")->required();
  extract->add_option("--grid", e_grid, "Patch grid");
  extract->add_option("--bins", e_bins, "Discretization bins");
  extract->add_option("--roi", e_roi, "ROI fractions fD,fH,fW");
  extract->add_option("--dims", e_dims,
                      "Resize volumes to DxHxW before extraction");
  extract->add_option("--out", e_out, "Output CSV path")->required();

  // --- train ---------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train a fingerprint model");
  std::string t_manifest, t_task = "abnormal", t_out, t_history;
  std::string t_grid = "2x2x2", t_roi = "0.5,0.3,0.5", t_dims = "16x48x48";
  std::string t_mode = "full", t_families = "all";
  int t_epochs = 30, t_batch = 16, t_bins = 32, t_topm = 0, t_patience = 10;
  double t_lr = 1e-3, t_split = 0.8;
  std::uint64_t t_seed = 0;
  bool t_no_selection = false;
  train_cmd->add_option("--manifest", t_manifest, "JSONL manifest")->required();
  train_cmd->add_option("--task", t_task, "abnormal | acl | meniscus");
  train_cmd->add_option("--epochs", t_epochs, "Max epochs");
  train_cmd->add_option("--batch-size", t_batch, "Batch size");
  train_cmd->add_option("--lr", t_lr, "Learning rate");
  train_cmd->add_option("--seed", t_seed, "RNG seed");
  train_cmd->add_option("--grid", t_grid, "Patch grid");
  train_cmd->add_option("--bins", t_bins, "Discretization bins");
  train_cmd->add_option("--roi", t_roi, "ROI fractions");
  train_cmd->add_option("--dims", t_dims, "Working volume dims DxHxW");
  train_cmd->add_option("--interactions", t_mode, "none | full | top_m");
  train_cmd->add_option("--top-m", t_topm, "Active features in top_m mode");
  train_cmd->add_option("--families", t_families,
                        "Comma-separated feature families, or 'all'");
  train_cmd->add_option("--split", t_split, "Training split fraction");
  train_cmd->add_option("--patience", t_patience,
                        "Early-stop patience on validation AUC (0 = off)");
  train_cmd->add_flag("--no-selection", t_no_selection,
                      "Disable the feature-weighting network (ablation)");
  train_cmd->add_option("--out", t_out, "Model output path")->required();
  train_cmd->add_option("--history", t_history, "History CSV path");

  // --- predict -------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "Predict with fingerprints");
  std::string p_manifest, p_model, p_out, p_metrics;
  double p_threshold = -1.0;
  predict->add_option("--manifest", p_manifest, "JSONL manifest")->required();
  predict->add_option("--model", p_model, "Model artifact")->required();
  predict->add_option("--threshold", p_threshold,
                      "Selection threshold override in [0,1]; defaults to "
                      "the threshold stored in the model");
  predict->add_option("--out", p_out, "Predictions JSONL path")->required();
  predict->add_option("--metrics-out", p_metrics,
                      "Also write a metric report JSON");

  // --- report --------------------------------------------------------
  auto* report = app.add_subcommand("report", "Interpretation report");
  std::string r_manifest, r_model, r_out, r_text, r_csv, r_rank = "relevance";
  int r_topk = 20;
  report->add_option("--manifest", r_manifest, "JSONL manifest")->required();
  report->add_option("--model", r_model, "Model artifact")->required();
  report->add_option("--top-k", r_topk, "Features per ranking");
  report->add_option("--rank-by", r_rank, "relevance | contribution");
  report->add_option("--out", r_out, "Report JSON path")->required();
  report->add_option("--text", r_text, "Also write a plain-text table");
  report->add_option("--csv", r_csv, "Also write a plot-ready CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  if (synth->parsed()) {
    radfp::PhantomConfig cfg;
    cfg.n_studies = s_n;
    cfg.dims = parse_dims(s_dims);
    cfg.grid = parse_grid(s_grid);
    cfg.roi = parse_roi(s_roi);
    cfg.lesion_patch = s_patch;
    cfg.kind = radfp::lesion_kind_from_name(s_kind);
    cfg.effect_size = s_effect;
    cfg.label_noise = s_noise;
    cfg.seed = s_seed;
    auto [studies, gt] = radfp::generate_cohort(cfg);
    radfp::write_cohort(studies, gt, s_out);
    std::cout << "wrote " << studies.size() << " studies to " << s_out
              << "\n";
    return 0;
  }

  if (extract->parsed()) {
    radfp::ExtractConfig cfg;
    cfg.grid = parse_grid(e_grid);
    cfg.roi = parse_roi(e_roi);
    cfg.n_bins = e_bins;
    std::optional<radfp::Dims> resize;
    if (!e_dims.empty()) resize = parse_dims(e_dims);

    std::vector<radfp::Study> studies = load_studies(e_manifest);
    std::ofstream out(e_out);
    if (!out) throw radfp::error("cannot open output: " + e_out);
    radfp::write_feature_csv_header(out);
    for (radfp::Study& st : studies) {
      if (resize)
        for (auto& view : st.views)
          if (!(view.dims == *resize))
            view = radfp::resize_trilinear(view, *resize);
      radfp::FeatureVector fv = radfp::extract_study_features(st, cfg);
      radfp::write_feature_csv_rows(out, st.study_id, fv);
    }
    return 0;
  }

  if (train_cmd->parsed()) {
    radfp::TrainConfig cfg;
    cfg.task = t_task;
    if (!radfp::known_task(cfg.task))
      throw radfp::invalid_argument("unknown task: " + cfg.task);
    cfg.epochs = t_epochs;
    cfg.batch_size = t_batch;
    cfg.learning_rate = t_lr;
    cfg.seed = t_seed;
    cfg.grid = parse_grid(t_grid);
    cfg.n_bins = t_bins;
    cfg.roi = parse_roi(t_roi);
    cfg.input_dims = parse_dims(t_dims);
    cfg.mode = radfp::interaction_mode_from_name(t_mode);
    cfg.top_m = t_topm;
    cfg.families = parse_families(t_families);
    cfg.selection_enabled = !t_no_selection;
    cfg.split_fraction = t_split;
    cfg.patience = t_patience;

    std::vector<radfp::Study> studies = load_studies(t_manifest);
    auto [bundle, history] = radfp::train(studies, cfg);
    radfp::save_model(bundle, t_out);
    if (!t_history.empty()) radfp::write_history_csv(history, t_history);

    const auto& best = history.records[static_cast<std::size_t>(
        history.best_epoch - 1)];
    std::cout << "best epoch " << history.best_epoch << " val_auc "
              << best.val_auc << " threshold " << bundle.threshold << "\n";
    return 0;
  }

  if (predict->parsed()) {
    radfp::ModelBundle bundle = radfp::load_model(p_model);
    std::optional<double> t_override;
    if (p_threshold >= 0.0) t_override = p_threshold;

    std::vector<radfp::Study> studies = load_studies(p_manifest);
    std::ofstream out(p_out);
    if (!out) throw radfp::error("cannot open output: " + p_out);

    std::vector<double> scores;
    std::vector<int> labels;
    bool have_labels = true;
    for (const radfp::Study& st : studies) {
      radfp::PreparedStudy ps = radfp::prepare_study(bundle.config, st);
      auto pred = bundle.predict(ps.features, ps.roi_input, t_override);
      nlohmann::json j;
      j["study_id"] = st.study_id;
      j["task"] = bundle.config.task;
      j["score"] = pred.score;
      j["prediction"] = pred.predicted;
      j["n_selected_features"] = pred.n_selected;
      out << j.dump() << "\n";
      scores.push_back(pred.score);
      if (st.labels.count(bundle.config.task))
        labels.push_back(st.labels.at(bundle.config.task));
      else
        have_labels = false;
    }

    if (!p_metrics.empty()) {
      if (!have_labels || labels.size() != scores.size())
        throw radfp::error("metrics requested but manifest lacks labels for "
                           "task " + bundle.config.task);
      radfp::ConfusionReport r = radfp::confusion_metrics(scores, labels, 0.5);
      nlohmann::json j;
      j["task"] = bundle.config.task;
      j["n"] = scores.size();
      j["accuracy"] = r.accuracy;
      j["sensitivity"] =
          r.sensitivity ? nlohmann::json(*r.sensitivity) : nlohmann::json();
      j["specificity"] =
          r.specificity ? nlohmann::json(*r.specificity) : nlohmann::json();
      int n_pos = 0;
      for (int l : labels) n_pos += l;
      j["auc"] = (n_pos > 0 && n_pos < static_cast<int>(labels.size()))
                     ? nlohmann::json(radfp::auc(scores, labels))
                     : nlohmann::json();
      j["youden"] = r.youden ? nlohmann::json(*r.youden) : nlohmann::json();
      j["cutoff"] = 0.5;
      j["threshold_T"] = t_override.value_or(bundle.threshold);
      std::ofstream mout(p_metrics);
      if (!mout) throw radfp::error("cannot open metrics output: " + p_metrics);
      mout << j.dump(2) << "\n";
    }
    return 0;
  }

  if (report->parsed()) {
    radfp::ModelBundle bundle = radfp::load_model(r_model);
    std::vector<radfp::Study> studies = load_studies(r_manifest);
    bool by_contrib = r_rank == "contribution";
    if (!by_contrib && r_rank != "relevance")
      throw radfp::invalid_argument("--rank-by must be relevance or "
                                    "contribution, got " + r_rank);
    radfp::CohortReport rep =
        radfp::build_report(bundle, studies, r_topk, by_contrib);

    std::ofstream out(r_out);
    if (!out) throw radfp::error("cannot open output: " + r_out);
    out << radfp::report_to_json(rep).dump(2) << "\n";
    if (!r_text.empty()) {
      std::ofstream tout(r_text);
      if (!tout) throw radfp::error("cannot open output: " + r_text);
      radfp::write_report_text(tout, rep);
    }
    if (!r_csv.empty()) {
      std::ofstream cout_(r_csv);
      if (!cout_) throw radfp::error("cannot open output: " + r_csv);
      radfp::write_report_csv(cout_, rep);
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const radfp::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
