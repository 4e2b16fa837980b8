/*
 * Copyright 2026 The TinyReID Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// tinyreid command-line driver. Every subcommand parses flags, calls one
// library operation and prints or saves its result.

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tinyreid/arch.hpp"
#include "tinyreid/config.hpp"
#include "tinyreid/dataset.hpp"
#include "tinyreid/error.hpp"
#include "tinyreid/finetune.hpp"
#include "tinyreid/image_io.hpp"
#include "tinyreid/metrics.hpp"
#include "tinyreid/model_store.hpp"
#include "tinyreid/ptq.hpp"
#include "tinyreid/random_model.hpp"
#include "tinyreid/reid.hpp"

namespace fs = std::filesystem;
using namespace tinyreid;

namespace {

// Flags that mirror RunConfig keys. Values are routed through
// RunConfig::set so file and command line share one validator.
class ConfigFlags {
 public:
  void add(CLI::App* app, const std::string& key, const std::string& flag,
           const std::string& help) {
    opts_[app].emplace_back(key, app->add_option(flag, help));
  }

  RunConfig resolve(CLI::App* app, const std::string& config_path) const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    auto it = opts_.find(app);
    if (it == opts_.end()) return cfg;
    for (const auto& [key, opt] : it->second) {
      if (opt->count() == 0) continue;
      try {
        cfg.set(key, opt->results().back());
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(opt->get_name() + ": " + e.what());
      }
    }
    return cfg;
  }

 private:
  std::map<CLI::App*, std::vector<std::pair<std::string, CLI::Option*>>> opts_;
};

void add_arch_flags(ConfigFlags& flags, CLI::App* app) {
  flags.add(app, "alpha", "--alpha", "Width multiplier (default 0.35)");
  flags.add(app, "n_blocks", "--n,--n-blocks", "Bottleneck blocks after block 0 (default 7)");
  flags.add(app, "embed_dim", "--embed-dim", "Embedding dimension (default 128)");
}

size_t bytes_per_element(const std::string& dtype) {
  if (dtype == "int8") return 1;
  if (dtype == "f32") return 4;
  throw InvalidArgument("--dtype: expected int8 or f32, got '" + dtype + "'");
}

std::string format_floats(std::span<const float> v) {
  std::string out;
  char buf[32];
  for (float x : v) {
    std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(x));
    out += buf;
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

std::vector<ManifestRecord> rows_of(const DatasetManifest& m, const std::string& split) {
  Split which;
  try {
    which = parse_split(split);
  } catch (const FormatError& e) {
    throw InvalidArgument(std::string("--split: ") + e.what());
  }
  std::vector<ManifestRecord> rows = m.rows(which);
  if (rows.empty()) throw DataError("manifest has no '" + split + "' rows");
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tinyreid: tiny re-identification networks with an integer-only backend"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  int threads = 0;
  app.add_option("--config", config_path, "key=value config file; flags override it");
  app.add_option("--threads", threads, "Worker threads (default: all cores)")
      ->check(CLI::PositiveNumber);

  ConfigFlags cf;
  std::map<std::string, std::string> s;  // string flags, keyed by "<sub>.<flag>"
  std::map<std::string, uint64_t> u;
  auto str = [&](CLI::App* sub, const std::string& flag, const std::string& help, bool required,
                 const std::string& def = "") {
    std::string& slot = s[sub->get_name() + "." + flag];
    slot = def;
    CLI::Option* o = sub->add_option("--" + flag, slot, help);
    if (required) o->required();
    if (!def.empty()) o->capture_default_str();
  };
  auto get = [&](CLI::App* sub, const std::string& flag) { return s[sub->get_name() + "." + flag]; };

  CLI::App* build = app.add_subcommand("build", "Build an architecture and print its size summary");
  add_arch_flags(cf, build);

  CLI::App* export_spec = app.add_subcommand("export-spec", "Print the per-layer table");
  add_arch_flags(cf, export_spec);
  str(export_spec, "dtype", "Activation type for byte counts: int8 or f32", false, "int8");

  CLI::App* gen = app.add_subcommand("gen-random-model", "Write a randomly initialized FP32 model");
  add_arch_flags(cf, gen);
  cf.add(gen, "seed", "--seed", "RNG seed (default 0)");
  str(gen, "out", "Output model path", true);

  CLI::App* quant = app.add_subcommand("quantize", "Calibrate and quantize an FP32 model to INT8");
  str(quant, "model", "FP32 model path", true);
  str(quant, "manifest", "Dataset manifest; calibration uses its train rows", true);
  str(quant, "split", "Manifest split used for calibration", false, "train");
  cf.add(quant, "calib_count", "--calib-count", "Calibration images (default 100)");
  cf.add(quant, "seed", "--seed", "Seed for choosing calibration images (default 0)");
  str(quant, "out", "Output INT8 model path", true);

  CLI::App* plan = app.add_subcommand("plan-memory", "Plan activation memory against device budgets");
  add_arch_flags(cf, plan);
  str(plan, "dtype", "Activation type: int8 or f32", false, "int8");
  uint64_t sram_budget = 262144, flash_budget = 983040;
  plan->add_option("--sram-budget", sram_budget, "SRAM budget in bytes")->capture_default_str();
  plan->add_option("--flash-budget", flash_budget, "Flash budget in bytes")->capture_default_str();

  CLI::App* split = app.add_subcommand("split-dataset", "Identity-disjoint train/gallery/query split");
  str(split, "root", "Dataset root: one sub-directory per identity", true);
  cf.add(split, "ratio", "--ratio", "Fraction of identities used for training (default 0.8)");
  cf.add(split, "seed", "--seed", "RNG seed (default 0)");
  str(split, "out", "Output manifest CSV", true);

  CLI::App* emb = app.add_subcommand("embed", "Print embeddings of images as CSV");
  str(emb, "model", "Model path (FP32 or INT8)", true);
  std::vector<std::string> embed_images;
  emb->add_option("--image,images", embed_images, "Image files (PPM or TRIM)")->required();
  str(emb, "out", "Write CSV here instead of stdout", false);

  CLI::App* enr = app.add_subcommand("enroll", "Embed gallery rows into a gallery file");
  str(enr, "model", "Model path (FP32 or INT8)", true);
  str(enr, "manifest", "Dataset manifest", true);
  str(enr, "split", "Manifest split to enroll", false, "gallery");
  str(enr, "out", "Output gallery path", true);

  CLI::App* qry = app.add_subcommand("query", "Rank gallery identities for one image");
  str(qry, "model", "Model path (FP32 or INT8)", true);
  str(qry, "gallery", "Gallery path", true);
  str(qry, "image", "Query image", true);
  cf.add(qry, "top_k", "--top-k", "Matches to print (default 5)");
  str(qry, "out", "Write CSV here instead of stdout", false);

  CLI::App* ev = app.add_subcommand("eval", "mAP and CMC of query rows against a gallery");
  str(ev, "model", "Model path (FP32 or INT8)", true);
  str(ev, "gallery", "Gallery path", true);
  str(ev, "manifest", "Dataset manifest", true);
  str(ev, "split", "Manifest split used as queries", false, "query");
  str(ev, "out", "Also write the CSV report here", false);

  CLI::App* ft = app.add_subcommand("finetune", "Few-shot triplet fine-tuning of the embedding layer");
  str(ft, "model", "FP32 model path", true);
  str(ft, "manifest", "Dataset manifest", true);
  str(ft, "split", "Manifest split providing the labelled few-shot images", false, "gallery");
  u["shots"] = 3;
  ft->add_option("--shots", u["shots"], "Images per identity")->check(CLI::PositiveNumber)->capture_default_str();
  cf.add(ft, "margin", "--margin", "Triplet margin (default 0.2)");
  cf.add(ft, "lr", "--lr", "Learning rate (default 0.01)");
  cf.add(ft, "epochs", "--epochs", "Epochs (default 100)");
  cf.add(ft, "seed", "--seed", "Seed for shot selection (default 0)");
  str(ft, "out", "Output FP32 model path", true);
  str(ft, "loss-csv", "Write the per-epoch loss history here", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (threads > 0) omp_set_num_threads(threads);
    const RunConfig cfg = cf.resolve(sub, config_path);
    auto spec_from_cfg = [&] { return build_spec(cfg.alpha, cfg.n_blocks, cfg.embed_dim); };

    if (sub == build) {
      const ModelSpec spec = spec_from_cfg();
      std::printf("key,value\n");
      std::printf("alpha,%g\nn_blocks,%d\nembed_dim,%d\n", spec.alpha, spec.n_blocks, spec.embed_dim);
      std::printf("layers,%zu\nparams,%zu\nbackbone_params,%zu\n", spec.layers.size(),
                  param_count(spec), backbone_param_count(spec));
      std::printf("fp32_bytes,%zu\nint8_bytes,%zu\n", serialized_size_f32(spec), serialized_size_i8(spec));
    } else if (sub == export_spec) {
      std::fputs(format_layer_table(spec_from_cfg(), bytes_per_element(get(sub, "dtype"))).c_str(), stdout);
    } else if (sub == gen) {
      save_model(get(sub, "out"), generate_random_model(spec_from_cfg(), cfg.seed));
    } else if (sub == quant) {
      const ModelWeightsF32 model = load_model_f32(get(sub, "model"));
      const DatasetManifest manifest = load_manifest(get(sub, "manifest"));
      const auto rows = sample_rows(rows_of(manifest, get(sub, "split")),
                                    static_cast<size_t>(cfg.calib_count), cfg.seed);
      const CalibrationStats stats = calibrate(model, load_images(rows));
      save_model(get(sub, "out"), quantize_model(model, stats));
      std::printf("calibration_images,%zu\n", rows.size());
    } else if (sub == plan) {
      const ModelSpec spec = spec_from_cfg();
      const ArenaPlan p = plan_arena(spec, bytes_per_element(get(sub, "dtype")));
      std::printf("layer,kind,bytes\n");
      for (const LayerBytes& lb : p.per_layer_bytes) {
        std::printf("%zu,%s,%zu\n", lb.layer, to_string(spec.layers[lb.layer].kind), lb.bytes);
      }
      std::printf("input,%zu\n", p.input_bytes);
      std::printf("peak,%zu\n", p.peak_bytes);
      std::printf("flash,%zu\n", p.flash_bytes);
      const bool sram_ok = p.peak_bytes <= sram_budget;
      const bool flash_ok = p.flash_bytes <= flash_budget;
      std::printf("%s sram %zu <= %llu\n", sram_ok ? "PASS" : "FAIL", p.peak_bytes,
                  static_cast<unsigned long long>(sram_budget));
      std::printf("%s flash %zu <= %llu\n", flash_ok ? "PASS" : "FAIL", p.flash_bytes,
                  static_cast<unsigned long long>(flash_budget));
    } else if (sub == split) {
      const DatasetManifest m = split_dataset(scan_dataset_dir(get(sub, "root")), cfg.ratio, cfg.seed);
      save_manifest(get(sub, "out"), m);
      for (Split sp : {Split::Train, Split::Gallery, Split::Query}) {
        std::printf("%s,%zu\n", to_string(sp), m.rows(sp).size());
      }
    } else if (sub == emb) {
      const Model model = load_any_model(get(sub, "model"));
      std::vector<TensorF> images;
      for (const auto& path : embed_images) images.push_back(load_image(path));
      const auto embs = embed_batch(model, images);
      std::string out;
      for (size_t i = 0; i < embs.size(); ++i) out += embed_images[i] + format_floats(embs[i]) + "\n";
      if (get(sub, "out").empty()) std::fputs(out.c_str(), stdout);
      else write_text(get(sub, "out"), out);
    } else if (sub == enr) {
      const Model model = load_any_model(get(sub, "model"));
      const DatasetManifest manifest = load_manifest(get(sub, "manifest"));
      const GalleryDB db = enroll(rows_of(manifest, get(sub, "split")), model);
      save_gallery(get(sub, "out"), db);
      std::printf("enrolled,%zu\n", db.size());
    } else if (sub == qry) {
      const Model model = load_any_model(get(sub, "model"));
      const GalleryDB db = load_gallery(get(sub, "gallery"));
      const std::vector<float> q = embed(model, load_image(get(sub, "image")));
      std::string out = "rank,identity,index,distance\n";
      char buf[64];
      const auto matches = query(db, q, static_cast<size_t>(cfg.top_k));
      for (size_t r = 0; r < matches.size(); ++r) {
        std::snprintf(buf, sizeof buf, ",%zu,%.6f\n", matches[r].index, matches[r].distance);
        out += std::to_string(r + 1) + "," + matches[r].identity + buf;
      }
      if (get(sub, "out").empty()) std::fputs(out.c_str(), stdout);
      else write_text(get(sub, "out"), out);
    } else if (sub == ev) {
      const Model model = load_any_model(get(sub, "model"));
      const GalleryDB db = load_gallery(get(sub, "gallery"));
      const DatasetManifest manifest = load_manifest(get(sub, "manifest"));
      const auto rows = rows_of(manifest, get(sub, "split"));
      const auto embs = embed_batch(model, load_images(rows));
      std::vector<LabeledEmbedding> queries;
      for (size_t i = 0; i < rows.size(); ++i) queries.push_back({rows[i].identity, embs[i]});
      const EvalReport report = evaluate(db, queries);
      const std::string csv = format_report_csv(report);
      std::fputs(format_report_text(report).c_str(), stdout);
      std::fputs(csv.c_str(), stdout);
      if (!get(sub, "out").empty()) write_text(get(sub, "out"), csv);
    } else if (sub == ft) {
      ModelWeightsF32 model = load_model_f32(get(sub, "model"));
      const DatasetManifest manifest = load_manifest(get(sub, "manifest"));
      const auto rows = select_shots(rows_of(manifest, get(sub, "split")), u["shots"], cfg.seed);
      std::map<std::string, int> label_of;
      std::vector<int> labels;
      for (const auto& r : rows) {
        labels.push_back(label_of.emplace(r.identity, static_cast<int>(label_of.size())).first->second);
      }
      FinetuneConfig fc;
      fc.margin = cfg.margin;
      fc.lr = cfg.lr;
      fc.epochs = cfg.epochs;
      fc.seed = cfg.seed;
      const FeatureSet features = extract_features(model, load_images(rows));
      const FinetuneResult result = finetune_head(head_from_model(model), features, labels, fc);
      apply_head(model, result.head);
      save_model(get(sub, "out"), model);
      std::string csv = "epoch,loss\n";
      char buf[64];
      for (size_t e = 0; e < result.loss_history.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", e, result.loss_history[e]);
        csv += buf;
      }
      if (!get(sub, "loss-csv").empty()) write_text(get(sub, "loss-csv"), csv);
      std::printf("images,%zu\nbest_epoch,%d\ninitial_loss,%.6f\nbest_loss,%.6f\n", rows.size(),
                  result.best_epoch, result.loss_history.front(),
                  result.loss_history[static_cast<size_t>(result.best_epoch)]);
    }
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
