// rrgat: reactivity-ratio prediction from monomer SMILES with a
// multi-input graph attention network. Subcommands cover the pipeline end
// to end: preprocess, gen-copolymer, train, evaluate, predict, inspect,
// grad-check.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrgat/checkpoint.hpp"
#include "rrgat/errors.hpp"
#include "rrgat/grad_check.hpp"
#include "rrgat/interpret.hpp"
#include "rrgat/model.hpp"
#include "rrgat/pipeline.hpp"
#include "rrgat/run_io.hpp"
#include "rrgat/smiles.hpp"
#include "rrgat/trainer.hpp"

namespace {

using namespace rrgat;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Seed for all randomized steps")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--config", opts.config_file, "key=value configuration file");
  cmd->add_option("--set", opts.overrides, "Inline config override key=value");
  cmd->add_option("--threads", opts.threads,
                  "Worker threads (recorded; compute is single-threaded)");
}

// Defaults, then config file, then --set overrides, then --seed.
void resolve_configs(const CommonOpts& opts, ModelConfig& model, TrainConfig& train) {
  if (!opts.config_file.empty()) apply_config_file(opts.config_file, model, train);
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw data_error("--set expects key=value, got: " + kv);
    apply_config_entry(kv.substr(0, eq), kv.substr(eq + 1), model, train);
  }
  if (opts.seed_set) {
    train.seed = opts.seed;
    model.seed = opts.seed;
  }
  model.dropout = train.dropout;
  model.validate();
  train.validate();
}

MimoGat load_model_checkpoint(const std::string& path, CheckpointConfig* cfg_out) {
  const Checkpoint ck = load_checkpoint(path);
  CheckpointConfig cfg = parse_checkpoint_config(ck.config_json);
  if (cfg_out) *cfg_out = cfg;
  return MimoGat::from_checkpoint(ck);
}

int run_preprocess(const std::string& in_path, const std::string& out_dir,
                   const CommonOpts& opts) {
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  resolve_configs(opts, model_cfg, train_cfg);
  const std::uint64_t seed = train_cfg.seed;

  const CleanResult cleaned = ingest_csv(in_path);
  if (cleaned.accepted.empty()) throw data_error("no records survived cleaning");

  SkewnessSummary skew;
  for (int task = 0; task < 2; ++task) {
    std::vector<double> raw, rooted;
    for (const RawRecord& r : cleaned.accepted) {
      const double v = task == 0 ? r.r1 : r.r2;
      raw.push_back(v);
      rooted.push_back(sqrt_transform(v));
    }
    skew.before[task] = skewness(raw);
    skew.after[task] = skewness(rooted);
  }

  const SplitIndices idx = shuffle_split(static_cast<int>(cleaned.accepted.size()), seed);
  const PreparedDataset ds = prepare_dataset(cleaned.accepted, idx, seed);
  write_preprocess_outputs(out_dir, cleaned, idx, ds, skew, file_digest_hex(in_path),
                           seed);

  std::printf("accepted %zu, rejected %zu (see rejections.csv)\n",
              cleaned.accepted.size(), cleaned.rejected.size());
  std::printf("split %zu/%zu/%zu, seed %llu\n", ds.train.size(), ds.val.size(),
              ds.test.size(), static_cast<unsigned long long>(seed));
  for (int task = 0; task < 2; ++task)
    std::printf("r%d skewness %.4f -> %.4f\n", task + 1, skew.before[task],
                skew.after[task]);
  return kExitOk;
}

int run_gen_copolymer(const std::string& m1, const std::string& m2) {
  const std::string smiles = generate_copolymer(parse_smiles(m1), parse_smiles(m2));
  std::printf("%s\n", smiles.c_str());
  return kExitOk;
}

int run_train(const std::string& splits_dir, const std::string& out_dir,
              const CommonOpts& opts) {
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  resolve_configs(opts, model_cfg, train_cfg);

  const PreparedDataset ds = load_prepared_dataset(splits_dir);
  MimoGat model(model_cfg);
  const TrainResult result = train_model(model, ds, train_cfg);

  std::filesystem::create_directories(out_dir);
  model.params().load_values(result.best_params);
  save_checkpoint(out_dir + "/checkpoint.bin",
                  compose_checkpoint_config(model_cfg, train_cfg, &ds.scaler),
                  model.params().items());
  write_train_log_csv(out_dir + "/train_log.csv", result.log);
  write_text_file(out_dir + "/manifest.json",
                  compose_run_manifest(model_cfg, train_cfg, splits_dir,
                                       file_digest_hex(splits_dir + "/records.csv"),
                                       file_digest_hex(splits_dir + "/split_manifest.json"),
                                       result.best_epoch, result.best_val_loss,
                                       opts.threads));

  std::printf("epochs run %zu, best epoch %d, best val loss %.6g\n",
              result.log.size(), result.best_epoch, result.best_val_loss);
  std::printf("checkpoint %s/checkpoint.bin\n", out_dir.c_str());
  return kExitOk;
}

int run_evaluate(const std::string& checkpoint_path, const std::string& splits_dir,
                 const std::string& out_dir, const std::string& split) {
  CheckpointConfig cfg;
  const MimoGat model = load_model_checkpoint(checkpoint_path, &cfg);
  if (!cfg.has_scaler) throw data_error("checkpoint carries no scaler; run train first");

  const PreparedDataset ds = load_prepared_dataset(splits_dir);
  const std::vector<PreparedSample>* samples = nullptr;
  if (split == "train") samples = &ds.train;
  else if (split == "val") samples = &ds.val;
  else if (split == "test") samples = &ds.test;
  else throw data_error("unknown split: " + split);
  if (samples->empty()) throw data_error("split '" + split + "' is empty");

  const Metrics metrics =
      evaluate_model(model, *samples, cfg.scaler, cfg.train.batch_size);
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir + "/metrics_" + split + ".json", metrics_to_json(metrics));
  write_parity_csv(out_dir + "/parity_" + split + ".csv", metrics.parity);

  for (int task = 0; task < 2; ++task) {
    const TaskMetrics& t = metrics.transformed[task];
    const TaskMetrics& o = metrics.original[task];
    std::printf("r%d transformed rmse %.6g r2 %s | original rmse %.6g r2 %s\n",
                task + 1, t.rmse, t.r2_defined ? std::to_string(t.r2).c_str() : "nan",
                o.rmse, o.r2_defined ? std::to_string(o.r2).c_str() : "nan");
  }
  return kExitOk;
}

int run_predict(const std::string& m1, const std::string& m2,
                const std::string& checkpoint_path) {
  CheckpointConfig cfg;
  const MimoGat model = load_model_checkpoint(checkpoint_path, &cfg);
  if (!cfg.has_scaler) throw data_error("checkpoint carries no scaler; run train first");

  const MolGraph g1 = parse_smiles(m1);
  const MolGraph g2 = parse_smiles(m2);
  const std::string co = generate_copolymer(g1, g2);
  const auto y = model.predict_transformed(featurize_graph(g1), featurize_graph(g2),
                                           featurize_graph(parse_smiles(co)));
  const double r1 = sqrt_invert(cfg.scaler.invert(0, y[0]));
  const double r2 = sqrt_invert(cfg.scaler.invert(1, y[1]));
  std::printf("%.9g %.9g\n", r1, r2);
  return kExitOk;
}

int run_inspect(const std::string& checkpoint_path, const std::string& similarity,
                const std::string& attention, bool ablation,
                const std::string& splits_dir, const std::string& out_path) {
  const MimoGat model = load_model_checkpoint(checkpoint_path, nullptr);
  const int selected = (!similarity.empty() ? 1 : 0) + (!attention.empty() ? 1 : 0) +
                       (ablation ? 1 : 0);
  if (selected != 1)
    throw data_error("inspect needs exactly one of --similarity, --attention, --ablation");

  if (!similarity.empty()) {
    write_similarity_csv(out_path, atom_similarity(model, parse_smiles(similarity)));
  } else if (!attention.empty()) {
    write_attention_csv(out_path, dump_attention(model, parse_smiles(attention)));
  } else {
    if (splits_dir.empty()) throw data_error("--ablation needs --splits");
    const PreparedDataset ds = load_prepared_dataset(splits_dir);
    if (ds.train.empty()) throw data_error("no training samples for ablation");
    write_ablation_csv(out_path, feature_ablation_report(model, ds.train));
  }
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

// Finite-difference suite: elementary ops, then the full network on a
// seeded triple of small molecules. Hidden width stays small so the
// coordinate sweep finishes quickly.
int run_grad_check(std::uint64_t seed) {
  SplitRng rng(seed);
  double worst = 0.0;

  {
    std::vector<double> av(12), bv(8);
    for (auto& v : av) v = rng.uniform(-1.5, 1.5);
    for (auto& v : bv) v = rng.uniform(-1.5, 1.5);
    auto a = Tensor::values(3, 4, std::move(av), true);
    auto b = Tensor::values(4, 2, std::move(bv), true);
    const auto ops = grad_check(
        [&](Tape& t) {
          return t.mean(t.elu(t.leaky_relu(t.tanh_op(t.sigmoid(t.matmul(a, b))))));
        },
        {a, b}, 1e-5);
    std::printf("elementary ops: max rel err %.3g over %zu coords (%zu skipped)\n",
                ops.max_rel_err, ops.checked, ops.skipped);
    worst = std::max(worst, ops.max_rel_err);
  }

  static const std::vector<std::string> pool = {
      "C=CC", "CC(C)=O", "C=C", "CCO", "C1CC1", "C=CC#N", "CC(N)=O", "COC"};
  const std::string s1 = pool[rng.next_below(pool.size())];
  const std::string s2 = pool[rng.next_below(pool.size())];
  const std::string s3 = pool[rng.next_below(pool.size())];

  ModelConfig cfg;
  cfg.fingerprint_dim = 8;
  cfg.radius = 3;
  cfg.readout_steps = 3;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  const MimoGat model(cfg);

  const FeaturizedGraph f1 = featurize_graph(parse_smiles(s1));
  const FeaturizedGraph f2 = featurize_graph(parse_smiles(s2));
  const FeaturizedGraph f3 = featurize_graph(parse_smiles(s3));
  const BatchGraph b1 = build_batch({&f1}), b2 = build_batch({&f2}),
                   b3 = build_batch({&f3});
  auto target = Tensor::values(1, 2, {rng.uniform(-1, 1), rng.uniform(-1, 1)});

  std::vector<TensorPtr> params;
  for (const auto& [name, t] : model.params().items()) params.push_back(t);

  const auto report = grad_check(
      [&](Tape& t) {
        return t.mse(model.forward(t, b1, b2, b3, false, nullptr), target);
      },
      params, 1e-4);
  std::printf("full model (%s, %s, %s): max rel err %.3g over %zu coords (%zu skipped)\n",
              s1.c_str(), s2.c_str(), s3.c_str(), report.max_rel_err, report.checked,
              report.skipped);
  worst = std::max(worst, report.max_rel_err);

  if (worst < 1e-4) {
    std::printf("max rel err < 1e-4\n");
    return kExitOk;
  }
  std::printf("gradient check FAILED: max rel err %.3g >= 1e-4\n", worst);
  return kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copolymerization reactivity ratio prediction (MIMO graph attention)"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // --seed, --config and --threads are accepted by every subcommand; they
  // only influence commands with randomized or configurable work.
  CommonOpts preprocess_opts, train_opts, gen_opts, eval_opts, predict_opts,
      inspect_opts, grad_opts;
  std::string in_path, out_dir, splits_dir, checkpoint_path;
  std::string m1, m2;

  auto* preprocess = app.add_subcommand(
      "preprocess", "Clean a reactivity CSV, generate copolymers, fit scaling, split");
  preprocess->add_option("--in", in_path, "Input CSV")->required();
  preprocess->add_option("--out", out_dir, "Output directory")->required();
  add_common(preprocess, preprocess_opts);

  auto* gen = app.add_subcommand("gen-copolymer",
                                 "Print the head-to-tail single-unit dimer SMILES");
  gen->add_option("--m1", m1, "Monomer 1 SMILES")->required();
  gen->add_option("--m2", m2, "Monomer 2 SMILES")->required();
  add_common(gen, gen_opts);

  auto* train = app.add_subcommand("train", "Train on a preprocess output directory");
  train->add_option("--splits", splits_dir, "Preprocess output directory")->required();
  train->add_option("--out", out_dir, "Run output directory")->required();
  add_common(train, train_opts);

  std::string eval_split = "test";
  auto* evaluate = app.add_subcommand("evaluate", "Metrics and parity CSV for a split");
  evaluate->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  evaluate->add_option("--splits", splits_dir, "Preprocess output directory")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  evaluate->add_option("--split", eval_split, "train|val|test (default test)");
  add_common(evaluate, eval_opts);

  auto* predict = app.add_subcommand("predict", "Predict r1, r2 for a monomer pair");
  predict->add_option("--m1", m1, "Monomer 1 SMILES")->required();
  predict->add_option("--m2", m2, "Monomer 2 SMILES")->required();
  predict->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  add_common(predict, predict_opts);

  std::string similarity_smiles, attention_smiles, inspect_out;
  bool ablation = false;
  auto* inspect = app.add_subcommand("inspect", "Interpretability CSV exports");
  inspect->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  inspect->add_option("--similarity", similarity_smiles,
                      "Atom similarity matrix for a SMILES");
  inspect->add_option("--attention", attention_smiles, "Attention weights for a SMILES");
  inspect->add_flag("--ablation", ablation, "Feature-group ablation report");
  inspect->add_option("--splits", splits_dir, "Preprocess directory (ablation samples)");
  inspect->add_option("--out", inspect_out, "Output CSV path")->required();
  add_common(inspect, inspect_opts);

  auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient suite");
  add_common(grad, grad_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (preprocess->parsed())
      return run_preprocess(in_path, out_dir, preprocess_opts);
    if (gen->parsed()) return run_gen_copolymer(m1, m2);
    if (train->parsed()) return run_train(splits_dir, out_dir, train_opts);
    if (evaluate->parsed())
      return run_evaluate(checkpoint_path, splits_dir, out_dir, eval_split);
    if (predict->parsed()) return run_predict(m1, m2, checkpoint_path);
    if (inspect->parsed())
      return run_inspect(checkpoint_path, similarity_smiles, attention_smiles,
                         ablation, splits_dir, inspect_out);
    if (grad->parsed()) return run_grad_check(grad_opts.seed);
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const parse_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const data_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
