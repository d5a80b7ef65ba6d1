#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rrgat/model.hpp"
#include "rrgat/pipeline.hpp"
#include "rrgat/trainer.hpp"

namespace rrgat {

inline constexpr const char* kToolVersion = "rrgat 0.1.0";
inline constexpr int kManifestVersion = 1;

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a 64 over the raw bytes, as 16 hex digits.
std::string file_digest_hex(const std::string& path);

// Flat key=value overrides ('#' starts a comment). `dropout` and `seed`
// apply to both configs. Unknown keys throw data_error.
void apply_config_entry(const std::string& key, const std::string& value,
                        ModelConfig& model, TrainConfig& train);
void apply_config_file(const std::string& path, ModelConfig& model, TrainConfig& train);

struct SkewnessSummary {
  std::array<double, 2> before{0.0, 0.0};
  std::array<double, 2> after{0.0, 0.0};
};

// records.csv, rejections.csv, skewness.csv and split_manifest.json.
void write_preprocess_outputs(const std::string& out_dir, const CleanResult& cleaned,
                              const SplitIndices& idx, const PreparedDataset& ds,
                              const SkewnessSummary& skew,
                              const std::string& input_digest, std::uint64_t seed);

// Rebuilds the prepared dataset from a preprocess output directory using
// the stored scaler and row ids (no refitting).
PreparedDataset load_prepared_dataset(const std::string& splits_dir);

void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log);
void write_parity_csv(const std::string& path, const std::vector<ParityPoint>& parity);
std::string metrics_to_json(const Metrics& metrics);

// Config block embedded in checkpoints: model + train + fitted scaler.
std::string compose_checkpoint_config(const ModelConfig& model, const TrainConfig& train,
                                      const TargetScaler* scaler);

struct CheckpointConfig {
  ModelConfig model;
  TrainConfig train;
  bool has_scaler = false;
  TargetScaler scaler;
};
CheckpointConfig parse_checkpoint_config(const std::string& config_json);

std::string compose_run_manifest(const ModelConfig& model, const TrainConfig& train,
                                 const std::string& splits_dir,
                                 const std::string& records_digest,
                                 const std::string& manifest_digest, int best_epoch,
                                 double best_val_loss, int threads);

}  // namespace rrgat
