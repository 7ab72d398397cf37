// parkgen command-line interface.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parkgen/parkgen.hpp"

namespace fs = std::filesystem;
using namespace parkgen;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> tile_size;
  std::optional<double> strength;
  std::optional<int> upscale;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "Key-value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Seed (overrides the config)");
  auto* out = cmd->add_option("--out", c.out, "Output directory or file");
  if (out_required) out->required();
}

KeyValues load_config(const Common& c) { return c.config.empty() ? KeyValues{} : KeyValues::load(c.config); }

fs::path config_dir(const Common& c) {
  return c.config.empty() ? fs::path{} : fs::absolute(c.config).parent_path();
}

LegendPtr legend_by_name(const std::string& name) {
  if (name == "park") return Legend::park();
  if (name == "environment") return Legend::environment();
  if (name == "none" || name.empty()) return nullptr;
  fail<ConfigError>("unknown legend '", name, "' (park, environment or none)");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  detail::write_atomically(path.string(), text);
}

// ---------------------------------------------------------------------------

int cmd_synth(const Common& c, std::optional<std::size_t> count) {
  const auto kv = load_config(c);
  const auto params = SceneParams::from_kv(kv);
  const auto n = count.value_or(kv.get<std::size_t>("count", 50));
  const auto seed = c.seed.value_or(kv.get<std::uint64_t>("seed", 0));
  const auto corpus = generate_corpus(n, seed, params);
  save_corpus(corpus, c.out);
  std::cout << "wrote " << corpus.size() << " scenes (seeds " << seed << ".." << seed + n - 1 << ") to "
            << c.out << "\n";
  return 0;
}

int cmd_prepare(const Common& c, const std::string& input, int stride, const std::string& legend_name) {
  const auto kv = load_config(c);
  TileSpec spec;
  spec.tile_size = c.tile_size.value_or(kv.get("tile_size", spec.tile_size));
  spec.stride = stride > 0 ? stride : kv.get("tile_stride", spec.tile_size);
  const auto legend = legend_by_name(legend_name.empty() ? kv.str("legend", "none") : legend_name);
  const auto img = read_png(input);
  fs::create_directories(c.out);
  std::string index = "file,x,y\n";
  int i = 0;
  for (const auto& t : tile(img, spec)) {
    char name[48];
    std::snprintf(name, sizeof name, "tile_%04d.png", i++);
    const auto path = (fs::path(c.out) / name).string();
    if (legend)
      write_classmap_png(path, quantize_to_classes(t.image, legend));
    else
      write_png(path, t.image);
    index += detail::concat(name, ',', t.x, ',', t.y, '\n');
  }
  write_text(fs::path(c.out) / "tiles.csv", index);
  std::cout << "wrote " << i << " tiles of " << spec.tile_size << " px to " << c.out << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& task_name, const std::string& corpus_dir,
              const std::string& eval_dir) {
  auto kv = load_config(c);
  if (c.seed) kv.set("seed", *c.seed);
  const auto corpus = load_corpus(corpus_dir);
  fs::create_directories(c.out);
  if (task_name == "denoiser") {
    const auto cfg = DenoiserConfig::from_kv(kv);
    std::vector<RasterImage> schemes;
    for (const auto& s : corpus.scenes) schemes.push_back(s.scheme);
    const auto r = train_denoiser(schemes, cfg);
    save_checkpoint((fs::path(c.out) / "denoiser.ckpt").string(), r.checkpoint);
    write_text(fs::path(c.out) / "denoiser.history.csv", r.history.to_csv());
    write_text(fs::path(c.out) / "denoiser.summary.txt", "task: denoiser\n" + r.history.summary());
    std::cout << r.history.summary();
    return 0;
  }
  const auto task = task_from_string(task_name);
  const auto cfg = TrainConfig::from_kv(kv);
  std::optional<Corpus> eval;
  if (!eval_dir.empty()) eval = load_corpus(eval_dir);
  const auto r = train(task, corpus, cfg, eval ? &*eval : nullptr, c.out);
  std::cout << r.history.summary();
  return 0;
}

int cmd_infer(const Common& c, const std::string& ckpt_path, const std::string& input,
              const std::string& legend_name) {
  const auto ckpt = load_checkpoint(ckpt_path);
  const auto img = read_png(input);
  const auto kv = load_config(c);
  RasterImage out;
  if (ckpt.spec().kind == ArchKind::diffusion_unet) {
    const auto sched = schedule_of(ckpt);
    RefineParams p;
    p.strength = c.strength.value_or(kv.get("strength", p.strength));
    p.prompt = kv.str("prompt", p.prompt);
    p.seed = c.seed.value_or(kv.get<std::uint64_t>("seed", 0));
    out = refine_tiled(img, p, ckpt, sched);
    if (const int f = c.upscale.value_or(kv.get("upscale", 1)); f > 1) {
      RefineParams up = p;
      up.strength = kv.get("upscale_strength", 0.05);
      up.seed = mix_seed(p.seed, 2);
      out = upscale(out, f, &ckpt, &sched, up);
    }
  } else {
    TileSpec spec;
    spec.tile_size = c.tile_size.value_or(ckpt.meta.get("image_size", img.width));
    spec.stride = spec.tile_size;
    out = infer_tiled(ckpt, img, spec);
  }
  const fs::path dst = c.out;
  if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
  std::string name = legend_name;
  if (name.empty() && ckpt.meta.has("output_legend")) name = ckpt.meta.str("output_legend");
  if (const auto legend = legend_by_name(name))
    write_classmap_png(dst.string(), quantize_to_classes(out, legend));
  else
    write_png(dst.string(), out);
  std::cout << "wrote " << dst.string() << " (" << out.width << "x" << out.height << ")\n";
  return 0;
}

int cmd_pipeline(const Common& c, const std::string& input) {
  require<ConfigError>(!c.config.empty(), "pipeline needs --config");
  auto kv = load_config(c);
  if (c.seed) kv.set("seed", *c.seed);
  if (c.tile_size) {
    kv.set("tile_size", *c.tile_size);
    kv.set("tile_stride", *c.tile_size);
  }
  if (c.strength) kv.set("strength", *c.strength);
  if (c.upscale) kv.set("upscale", *c.upscale);
  const auto cfg = PipelineConfig::from_kv(kv, config_dir(c));
  const auto run = run_pipeline(read_png(input), cfg, c.out, input);
  std::cout << "run " << run.run_id << " -> " << (fs::path(c.out) / kRunManifestName).string() << "\n";
  for (const auto& s : run.stages) std::cout << "  " << s.name << " " << s.wall_ms << " ms\n";
  for (const auto& [k, v] : run.metrics) std::cout << "  " << k << " = " << v << "\n";
  return 0;
}

int cmd_experiment(const Common& c, const std::string& id_name, const std::string& corpus_dir) {
  auto kv = load_config(c);
  if (c.seed) {
    kv.set("seed", *c.seed);
    kv.set("gan.seed", *c.seed);
    kv.set("denoiser.seed", *c.seed);
  }
  if (c.strength) kv.set("strength", *c.strength);
  const auto cfg = ExperimentConfig::from_kv(kv, config_dir(c));
  const auto corpus = load_corpus(corpus_dir);
  const auto [train_set, test_set] = split_corpus(corpus, cfg.train_fraction);
  const auto id = experiment_from_string(id_name);
  const auto rep = run_experiment(id, train_set, test_set, cfg, c.out);
  std::cout << rep.to_json().dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::vector<std::string>& preds, const std::vector<std::string>& truths,
                 const std::vector<std::string>& envs, const std::string& legend_name) {
  require<ConfigError>(preds.size() == truths.size(), "need as many --truth as --pred maps");
  require<ConfigError>(envs.empty() || envs.size() == preds.size(), "need one --environment per --pred map");
  const auto legend = legend_by_name(legend_name);
  require<ConfigError>(legend != nullptr, "evaluate needs --legend park or environment");
  ReportTable table;
  table.columns = {"pixel_accuracy", "mean_iou", "boundary_noise", "histogram_distance"};
  const bool park = legend->find("Roads").has_value();
  if (park) table.columns.push_back("road_connectivity");
  if (!envs.empty()) table.columns.push_back("entrance_count");
  auto total = empty_confusion(legend);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto pred = read_classmap_png(preds[i], legend);
    const auto truth = read_classmap_png(truths[i], legend);
    const auto m = confusion(pred, truth);
    total += m;
    std::vector<std::optional<double>> row{m.pixel_accuracy(), m.mean_iou(), boundary_noise(pred),
                                           histogram_distance(pred, truth)};
    if (park) row.push_back(road_connectivity(pred));
    if (!envs.empty())
      row.push_back(entrance_count(pred, read_classmap_png(envs[i], Legend::environment())));
    table.add(preds[i], row);
  }
  auto summary = table.summary();
  summary["pooled_pixel_accuracy"] = total.pixel_accuracy();
  const auto worst = total.worst_confusion();
  if (worst.count > 0)
    summary["worst_confusion"] = {{"truth", (*legend)[worst.truth].name},
                                  {"pred", (*legend)[worst.pred].name},
                                  {"pixels", worst.count}};
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "metrics.csv", table.to_csv());
  write_text(fs::path(c.out) / "confusion.csv", total.to_csv());
  write_text(fs::path(c.out) / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_report(const Common& c, const std::string& in_dir) {
  std::vector<nlohmann::json> reports;
  for (int i = 0; i < 6; ++i) {
    const auto p = fs::path(in_dir) / (std::string(to_string(static_cast<ExperimentId>(i))) + ".json");
    if (!fs::exists(p)) continue;
    try {
      reports.push_back(nlohmann::json::parse(detail::read_file(p.string())));
    } catch (const nlohmann::json::exception& e) {
      fail("cannot parse '", p.string(), "': ", e.what());
    }
  }
  require(!reports.empty(), "no experiment reports (E1.json .. E6.json) in '", in_dir, "'");
  std::string md = "# Experiment comparison\n\n";
  std::string csv = "experiment,metric,mean\n";
  for (const auto& r : reports) {
    md += "## " + r.at("experiment").get<std::string>() + ": " + r.at("description").get<std::string>() + "\n\n";
    md += "Test scenes: " + std::to_string(r.at("count").get<int>()) + "\n\n| metric | mean |\n|---|---|\n";
    for (const auto& [k, v] : r.at("means").items()) {
      const auto val = v.is_null() ? std::string("n/a") : detail::concat(v.get<double>());
      md += "| " + k + " | " + val + " |\n";
      csv += r.at("experiment").get<std::string>() + "," + k + "," + (v.is_null() ? "" : val) + "\n";
    }
    for (const auto& n : r.at("notes")) md += "\nNote: " + n.get<std::string>() + "\n";
    md += "\n";
  }
  const fs::path out = c.out;
  if (out.extension() == ".md") {
    write_text(out, md);
    write_text(fs::path(out).replace_extension(".csv"), csv);
  } else {
    write_text(out / "report.md", md);
    write_text(out / "report.csv", csv);
  }
  std::cout << md;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parkgen: synthetic park-design corpus, GAN and diffusion pipeline"};
  app.require_subcommand(1);
  Common c;
  std::optional<std::size_t> count;
  std::string input, task, corpus, eval_corpus, checkpoint, legend, id, in_dir;
  int stride = 0;
  std::vector<std::string> preds, truths, envs;

  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic scene corpus");
  add_common(synth, c);
  synth->add_option("--count", count, "Number of scenes (overrides the config, default 50)")->check(CLI::PositiveNumber);

  auto* prepare = app.add_subcommand("prepare", "Tile (and optionally quantize) an external PNG");
  add_common(prepare, c);
  prepare->add_option("input", input, "Input PNG")->required()->check(CLI::ExistingFile);
  prepare->add_option("--tile-size", c.tile_size, "Tile size in pixels");
  prepare->add_option("--stride", stride, "Tile stride (defaults to the tile size)");
  prepare->add_option("--legend", legend, "Quantize tiles against park or environment");

  auto* train_cmd = app.add_subcommand("train", "Train a task's networks or the denoiser");
  add_common(train_cmd, c);
  train_cmd->add_option("--task", task, "seg_extract, env_to_layout_supervised, env_to_layout_unpaired, layout_to_scheme or denoiser")
      ->required();
  train_cmd->add_option("--corpus", corpus, "Corpus directory")->required();
  train_cmd->add_option("--eval-corpus", eval_corpus, "Held-out corpus for eval_every");

  auto* infer_cmd = app.add_subcommand("infer", "Run a checkpoint on one image");
  add_common(infer_cmd, c);
  infer_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("input", input, "Input PNG")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--legend", legend, "Quantize output against park or environment");
  infer_cmd->add_option("--tile-size", c.tile_size, "Tile size for generator inference");
  infer_cmd->add_option("--strength", c.strength, "Refine strength (denoiser checkpoints)");
  infer_cmd->add_option("--upscale", c.upscale, "Upscale factor (denoiser checkpoints)");

  auto* pipe = app.add_subcommand("pipeline", "Remote image to enlarged design scheme");
  add_common(pipe, c);
  pipe->add_option("input", input, "Remote-sensing PNG")->required()->check(CLI::ExistingFile);
  pipe->add_option("--tile-size", c.tile_size, "Tile size");
  pipe->add_option("--strength", c.strength, "Refine strength");
  pipe->add_option("--upscale", c.upscale, "Per-side upscale factor (power of 2)");

  auto* exp = app.add_subcommand("experiment", "Run one of the comparison experiments E1..E6");
  add_common(exp, c);
  exp->add_option("--id", id, "E1..E6")->required();
  exp->add_option("--corpus", corpus, "Corpus directory")->required();
  exp->add_option("--strength", c.strength, "Refine strength for E5/E6");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score predicted class maps against ground truth");
  add_common(eval_cmd, c);
  eval_cmd->add_option("--pred", preds, "Predicted indexed PNG(s)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", truths, "Ground-truth indexed PNG(s)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--environment", envs, "Environment maps for entrance counts")->check(CLI::ExistingFile);
  eval_cmd->add_option("--legend", legend, "park or environment")->required();

  auto* report = app.add_subcommand("report", "Summarise experiment reports");
  add_common(report, c);
  report->add_option("--in", in_dir, "Directory holding E*.json reports")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::config);
  }

  try {
    if (*synth) return cmd_synth(c, count);
    if (*prepare) return cmd_prepare(c, input, stride, legend);
    if (*train_cmd) return cmd_train(c, task, corpus, eval_corpus);
    if (*infer_cmd) return cmd_infer(c, checkpoint, input, legend);
    if (*pipe) return cmd_pipeline(c, input);
    if (*exp) return cmd_experiment(c, id, corpus);
    if (*eval_cmd) return cmd_evaluate(c, preds, truths, envs, legend);
    if (*report) return cmd_report(c, in_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::data);
  }
  return 0;
}
