// Copyright 2026 The mst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mst/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "mst/balance.hpp"
#include "mst/checkpoint.hpp"
#include "mst/error.hpp"
#include "mst/pipeline.hpp"
#include "mst/plot.hpp"

namespace fs = std::filesystem;

namespace mst {

namespace {

// Raised for bad invocations (exit 2) as opposed to runtime failures.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file");
  cmd->add_option("--seed", c.seed, "override every seed in the config");
  cmd->add_flag("--force", c.force, "overwrite existing outputs");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg;
  if (c.config_path.empty()) {
    cfg = run_config_from_json(nlohmann::json::object());
  } else {
    if (!fs::exists(c.config_path)) throw UsageError("config file " + c.config_path + " not found");
    cfg = load_run_config(c.config_path);
  }
  if (c.seed) {
    cfg.pipeline.seed = *c.seed;
    cfg.synthetic.seed = *c.seed;
    cfg.trainer.seed = *c.seed;
  }
  return cfg;
}

// Refuses to clobber unless --force.
void claim_output(const std::string& path, bool force) {
  if (path.empty()) throw UsageError("--out is required");
  if (fs::exists(path)) {
    if (!force) throw UsageError("output " + path + " already exists (use --force to overwrite)");
    fs::remove_all(path);
  }
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  write_text_file(path.string(), j.dump(2) + "\n");
}

StepCallback progress(std::ostream& out, int every = 50) {
  return [&out, every](const StepRecord& r) {
    if (r.step % every == 0) out << "  [" << r.phase << "] step " << r.step << " loss " << r.loss << "\n";
  };
}

// ---- commands -------------------------------------------------------------

int cmd_gen_data(const Common& c, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const auto registry = registry_for(cfg);
  claim_output(out_dir, c.force);
  const Corpus corpus = make_corpus(cfg, registry);
  fs::create_directories(out_dir);
  write_manifest((fs::path(out_dir) / "corpus.jsonl").string(), corpus.all);
  write_manifest((fs::path(out_dir) / "train.jsonl").string(), corpus.train);
  write_manifest((fs::path(out_dir) / "test.jsonl").string(), corpus.test);
  out << "wrote " << corpus.all.size() << " records (" << corpus.train.size() << " train, " << corpus.test.size()
      << " test) to " << out_dir << "\n";
  return kExitOk;
}

int cmd_train(const Common& c, const std::string& phase, const std::string& from, const std::string& manifest,
              const std::string& out_dir, std::ostream& out) {
  RunConfig cfg = resolve_config(c);
  const auto registry = registry_for(cfg);
  if (manifest.empty()) throw UsageError("--manifest is required");
  const auto train = load_manifest(manifest, registry);
  claim_output(out_dir, c.force);

  SpeechTranslationModel source;
  std::string source_label = "init";
  if (from.empty()) {
    out << "building M0 (LLM text pretraining, " << cfg.schedule.llm_pretrain_steps << " steps)\n";
    source = prepare_initial_model(cfg, train, registry, progress(out, 250));
  } else {
    Checkpoint ck = load_checkpoint(from);
    cfg.pipeline = ck.config.pipeline;
    cfg.lora = ck.config.lora;
    source = std::move(ck.model);
    source_label = ck.meta.phase;
  }

  if (phase == "init") {
    PhaseMeta meta;
    meta.phase = "init";
    save_checkpoint(out_dir, cfg, source, meta, c.force);
    out << "saved M0 to " << out_dir << " (" << meta.state_hash.substr(0, 12) << ")\n";
    return kExitOk;
  }
  const auto plan = default_plan(cfg, registry, languages_of(train, registry), count_per_language(train));
  const PhaseSpec& spec = find_phase(plan, phase);
  const fs::path metrics_tmp = fs::path(out_dir).string() + ".metrics.csv";
  fs::remove(metrics_tmp);
  MetricsCsv csv(metrics_tmp.string());
  auto log_step = [&](const StepRecord& r) {
    csv.write(r);
    progress(out)(r);
  };
  EncoderCache cache(cfg.synthetic.words_per_lang);
  PhaseResult res = run_phase(spec, std::move(source), train, cfg, cache, log_step);
  for (const auto& w : res.warnings) out << "warning: " << w << "\n";
  save_checkpoint(out_dir, cfg, res.model, res.meta, c.force);
  fs::rename(metrics_tmp, fs::path(out_dir) / "metrics.csv");
  out << "phase " << phase << " (from " << source_label << "): " << res.meta.steps << " steps, final loss "
      << res.meta.final_loss << ", saved to " << out_dir << "\n";
  return kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& ckpt, const std::string& manifest, const std::string& dirs,
                 const std::string& out_dir, std::ostream& out) {
  const RunConfig base = resolve_config(c);
  if (ckpt.empty() || manifest.empty()) throw UsageError("--ckpt and --manifest are required");
  Checkpoint ck = load_checkpoint(ckpt);
  const auto registry = registry_for(ck.config);
  const auto test = load_manifest(manifest, registry);
  claim_output(out_dir, c.force);
  EncoderCache cache(base.synthetic.words_per_lang);
  const EvalReport report = evaluate_matrix(ck.model, cache, test, parse_directions(dirs), base.eval_batch);
  fs::create_directories(out_dir);
  write_json_file(fs::path(out_dir) / "matrix.json", to_json(report));
  write_text_file((fs::path(out_dir) / "bins.csv").string(),
                  bins_csv({{"spBLEU", report.spbleu_bins}, {"exact-match", report.exact_match_bins}}));
  out << "directions " << report.spbleu.scores.size() << ", samples " << report.samples << ", mean spBLEU "
      << report.spbleu.mean() << ", exact-match " << report.mean_exact_match << "%\n";
  return kExitOk;
}

int cmd_bench(const Common& c, const std::string& ckpt, const std::string& manifest, int samples,
              const BenchOptions& opts, const std::string& out_path, std::ostream& out) {
  const RunConfig base = resolve_config(c);
  if (ckpt.empty() || manifest.empty()) throw UsageError("--ckpt and --manifest are required");
  if (samples <= 0) throw UsageError("--samples must be > 0");
  Checkpoint ck = load_checkpoint(ckpt);
  const auto records = load_manifest(manifest, registry_for(ck.config));
  if (!out_path.empty()) claim_output(out_path, c.force);
  EncoderCache cache(base.synthetic.words_per_lang);
  const auto prompts = bench_prompts(ck.model, cache, records, samples);
  const BenchResult res = bench_decode(GenerationEngine(ck.model.llm), prompts, opts);
  const auto j = to_json(res);
  if (!out_path.empty()) write_json_file(out_path, j);
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_count_params(const Common& c, const std::string& lora, std::ostream& out) {
  RunConfig cfg = resolve_config(c);
  if (lora == "off") cfg.lora.enabled = false;
  else if (lora == "on") cfg.lora.enabled = true;
  else if (!lora.empty()) throw UsageError("--lora must be on or off");
  const ParamBudget b = pipeline_param_budget(cfg.pipeline, cfg.lora);
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %16s %16s  %s\n", "component", "total", "trainable", "details");
  out << line;
  for (const auto& e : b.entries) {
    std::snprintf(line, sizeof(line), "%-10s %16lld %16lld  %s\n", e.name.c_str(), static_cast<long long>(e.total),
                  static_cast<long long>(e.trainable), e.details.c_str());
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-10s %16lld %16lld\n", "total", static_cast<long long>(b.total()),
                static_cast<long long>(b.trainable()));
  out << line;
  const int short_len = cfg.pipeline.prompt_len();
  out << "audio prompt tokens: " << short_len << " (vs " << 25 * short_len << " uncompressed, 25x compression)\n";
  return kExitOk;
}

int cmd_ablate(const Common& c, const std::string& variant, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const auto registry = registry_for(cfg);
  std::vector<Ablation> variants;
  if (variant == "all") {
    variants = {Ablation{}, Ablation{true, false, false}, Ablation{false, true, false}, Ablation{false, false, true}};
  } else {
    Ablation a;
    if (variant == "skip_asr") a.skip_asr = true;
    else if (variant == "skip_smt_srt") a.skip_smt_srt = true;
    else if (variant == "no_lora") a.no_lora = true;
    else if (variant != "full") throw UsageError("unknown ablation variant " + variant);
    variants = {a};
  }
  claim_output(out_dir, c.force);
  fs::create_directories(out_dir);
  const Corpus corpus = make_corpus(cfg, registry);
  out << "building M0\n";
  const SpeechTranslationModel m0 = prepare_initial_model(cfg, corpus.train, registry, progress(out, 250));
  EncoderCache cache(cfg.synthetic.words_per_lang);
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& a : variants) {
    out << "variant " << a.tag() << "\n";
    ExperimentResult r = run_experiment(cfg, registry, m0, corpus, a, cache, "", false, progress(out, 100));
    write_json_file(fs::path(out_dir) / (r.variant + ".json"), to_json(r.eval));
    summary[r.variant] = {{"srt_exact_match", r.eval.mean_exact_match}, {"spbleu", r.eval.spbleu.mean()}};
    out << "  exact-match " << r.eval.mean_exact_match << "%, spBLEU " << r.eval.spbleu.mean() << "\n";
  }
  write_json_file(fs::path(out_dir) / "summary.json", summary);
  return kExitOk;
}

DirectionMatrix matrix_from_json(const nlohmann::json& j) {
  DirectionMatrix m;
  m.metric = j.value("metric", "score");
  for (const auto& [key, v] : j.at("scores").items()) {
    const auto dirs = parse_directions(key);
    m.set(dirs.at(0), v.get<double>());
  }
  return m;
}

int cmd_plot(const Common& c, const std::string& matrix_path, const std::string& out_dir, std::ostream& out) {
  (void)resolve_config(c);
  if (matrix_path.empty()) throw UsageError("--matrix is required");
  std::ifstream f(matrix_path);
  if (!f) throw UsageError("cannot read " + matrix_path);
  const auto doc = nlohmann::json::parse(f);
  claim_output(out_dir, c.force);
  fs::create_directories(out_dir);
  for (const char* key : {"spbleu", "exact_match"}) {
    if (!doc.contains(key)) continue;
    const DirectionMatrix m = matrix_from_json(doc.at(key));
    write_text_file((fs::path(out_dir) / (std::string(key) + "_heatmap.svg")).string(),
                    heatmap_svg(m, m.languages(), m.metric + " by direction"));
    write_text_file((fs::path(out_dir) / (std::string(key) + "_by_source.svg")).string(),
                    bar_chart_svg(per_source_mean(m), m.metric + " mean by source language"));
  }
  out << "plots written to " << out_dir << "\n";
  return kExitOk;
}

int cmd_run_all(const Common& c, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = resolve_config(c);
  const auto registry = registry_for(cfg);
  claim_output(out_dir, c.force);
  const fs::path root(out_dir);
  fs::create_directories(root / "data");
  const Corpus corpus = make_corpus(cfg, registry);
  write_manifest((root / "data" / "train.jsonl").string(), corpus.train);
  write_manifest((root / "data" / "test.jsonl").string(), corpus.test);
  out << "corpus: " << corpus.train.size() << " train / " << corpus.test.size() << " test records\n";

  SpeechTranslationModel m0 = prepare_initial_model(cfg, corpus.train, registry, progress(out, 250));
  PhaseMeta init_meta;
  init_meta.phase = "init";
  save_checkpoint((root / "phase-init").string(), cfg, m0, init_meta);

  EncoderCache cache(cfg.synthetic.words_per_lang);
  MetricsCsv csv((root / "metrics.csv").string());
  auto on_step = [&](const StepRecord& r) {
    csv.write(r);
    progress(out, 100)(r);
  };
  ExperimentResult exp = run_experiment(cfg, registry, m0, corpus, Ablation{}, cache, root.string(), false, on_step);

  bool ok = true;
  // Chain integrity: every phase starts from the state its source saved.
  std::string prev = init_meta.state_hash;
  for (const auto& p : exp.phases) {
    const Checkpoint ck = load_checkpoint((root / ("phase-" + p.spec.name)).string());
    if (ck.meta.source_hash != prev) {
      out << "FAIL chain: phase " << p.spec.name << " source hash does not match its predecessor\n";
      ok = false;
    }
    prev = ck.meta.state_hash;
  }
  // Frozen tensors must match M0 bit for bit.
  auto& final_model = exp.phases.back().model;
  auto frozen_a = m0.encoder_parameters();
  auto frozen_b = final_model.encoder_parameters();
  for (auto* p : m0.llm_parameters()) frozen_a.push_back(p);
  for (auto* p : final_model.llm_parameters()) frozen_b.push_back(p);
  for (std::size_t i = 0; i < frozen_a.size(); ++i) {
    if (frozen_a[i]->value() != frozen_b[i]->value()) {
      out << "FAIL freeze: " << frozen_a[i]->name() << " changed\n";
      ok = false;
    }
  }

  fs::create_directories(root / "eval");
  write_json_file(root / "eval" / "matrix.json", to_json(exp.eval));
  write_text_file((root / "eval" / "bins.csv").string(),
                  bins_csv({{"spBLEU", exp.eval.spbleu_bins}, {"exact-match", exp.eval.exact_match_bins}}));
  fs::create_directories(root / "plots");
  write_text_file((root / "plots" / "spbleu_heatmap.svg").string(),
                  heatmap_svg(exp.eval.spbleu, languages_of(corpus.test, registry), "spBLEU by direction"));
  write_text_file((root / "plots" / "spbleu_by_source.svg").string(),
                  bar_chart_svg(per_source_mean(exp.eval.spbleu), "spBLEU mean by source language"));

  BenchOptions opts;
  opts.long_tokens = 25 * cfg.pipeline.prompt_len();
  opts.model_tag = cfg.profile;
  const BenchResult bench =
      bench_decode(GenerationEngine(final_model.llm), bench_prompts(final_model, cache, corpus.test, 64), opts);
  write_json_file(root / "bench.json", to_json(bench));
  if (!(bench.speedup > 1.0)) {
    out << "FAIL bench: short prompt not faster (speedup " << bench.speedup << ")\n";
    ok = false;
  }
  out << "eval: mean spBLEU " << exp.eval.spbleu.mean() << ", SRT exact-match " << exp.eval.mean_exact_match
      << "%; bench speedup " << bench.speedup << "x\n";
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mst: speech-to-text translation with a compressed audio prompt"};
  app.require_subcommand(1);
  Common common;
  std::string out_dir, phase, from, manifest, ckpt, directions = "all", lora, variant = "all", matrix;
  int samples = 64;
  BenchOptions bench;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic corpus (corpus/train/test JSONL)");
  add_common(gen, common);
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "run one curriculum phase");
  add_common(train, common);
  train->add_option("--phase", phase, "init, 1, 2, 3-smt, 3-srt or 4")
      ->required()
      ->check(CLI::IsMember({"init", "1", "2", "3-smt", "3-srt", "4"}));
  train->add_option("--from", from, "source checkpoint (omit to build M0)");
  train->add_option("--manifest", manifest, "training manifest")->required();
  train->add_option("--out", out_dir, "checkpoint directory")->required();

  auto* eval = app.add_subcommand("evaluate", "score SRT outputs per direction");
  add_common(eval, common);
  eval->add_option("--ckpt", ckpt, "checkpoint")->required();
  eval->add_option("--manifest", manifest, "test manifest")->required();
  eval->add_option("--directions", directions, "all or src-tgt[,src-tgt...]");
  eval->add_option("--out", out_dir, "output directory")->required();

  auto* bn = app.add_subcommand("bench", "compare decode time for short and long audio prompts");
  add_common(bn, common);
  bn->add_option("--ckpt", ckpt, "checkpoint")->required();
  bn->add_option("--manifest", manifest, "records to draw prompts from")->required();
  bn->add_option("--samples", samples, "number of prompts");
  bn->add_option("--batch", bench.batch, "decode batch size");
  bn->add_option("--repeats", bench.repeats, "timed repeats (median reported)");
  bn->add_option("--decode-tokens", bench.decode_tokens, "tokens decoded per prompt");
  bn->add_option("--long-tokens", bench.long_tokens, "audio rows of the uncompressed arm");
  bn->add_option("--out", out_dir, "JSON report path");

  auto* cp = app.add_subcommand("count-params", "print the parameter budget");
  add_common(cp, common);
  cp->add_option("--lora", lora, "on or off");

  auto* ab = app.add_subcommand("ablate", "train and evaluate curriculum variants");
  add_common(ab, common);
  ab->add_option("--variant", variant, "full, skip_asr, skip_smt_srt, no_lora or all");
  ab->add_option("--out", out_dir, "output directory")->required();

  auto* pl = app.add_subcommand("plot", "render score matrices as SVG");
  add_common(pl, common);
  pl->add_option("--matrix", matrix, "matrix.json from evaluate")->required();
  pl->add_option("--out", out_dir, "output directory")->required();

  auto* ra = app.add_subcommand("run-all", "gen-data, four-phase training, evaluation and bench");
  add_common(ra, common);
  ra->add_option("--out", out_dir, "output directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  bench.model_tag = "ckpt";
  try {
    if (gen->parsed()) return cmd_gen_data(common, out_dir, out);
    if (train->parsed()) return cmd_train(common, phase, from, manifest, out_dir, out);
    if (eval->parsed()) return cmd_evaluate(common, ckpt, manifest, directions, out_dir, out);
    if (bn->parsed()) return cmd_bench(common, ckpt, manifest, samples, bench, out_dir, out);
    if (cp->parsed()) return cmd_count_params(common, lora, out);
    if (ab->parsed()) return cmd_ablate(common, variant, out_dir, out);
    if (pl->parsed()) return cmd_plot(common, matrix, out_dir, out);
    if (ra->parsed()) return cmd_run_all(common, out_dir, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace mst
