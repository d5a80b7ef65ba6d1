#include "rrgat/run_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rrgat/errors.hpp"
#include "rrgat/rng.hpp"
#include "rrgat/smiles.hpp"

namespace rrgat {

using nlohmann::json;

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json task_metrics_json(const TaskMetrics& m) {
  json j;
  j["rmse"] = m.rmse;
  j["r2"] = m.r2_defined ? json(m.r2) : json(nullptr);
  return j;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw data_error("cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw data_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw data_error("write failed: " + path);
}

std::string file_digest_hex(const std::string& path) {
  const std::string bytes = read_text_file(path);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(bytes));
  return buf;
}

void apply_config_entry(const std::string& key, const std::string& value,
                        ModelConfig& model, TrainConfig& train) {
  auto as_int = [&](int& dst) { dst = std::stoi(value); };
  auto as_double = [&](double& dst) { dst = std::stod(value); };
  try {
    if (key == "fingerprint_dim") as_int(model.fingerprint_dim);
    else if (key == "radius") as_int(model.radius);
    else if (key == "readout_steps") as_int(model.readout_steps);
    else if (key == "batch_size") as_int(train.batch_size);
    else if (key == "epochs") as_int(train.epochs);
    else if (key == "lr") as_double(train.lr);
    else if (key == "min_lr") as_double(train.min_lr);
    else if (key == "gamma") as_double(train.gamma);
    else if (key == "patience") as_int(train.patience);
    else if (key == "weight_decay") as_double(train.weight_decay);
    else if (key == "stop_below_train_loss") as_double(train.stop_below_train_loss);
    else if (key == "dropout") {
      as_double(train.dropout);
      model.dropout = train.dropout;
    } else if (key == "seed") {
      train.seed = std::stoull(value);
      model.seed = train.seed;
    } else {
      throw data_error("unknown config key: " + key);
    }
  } catch (const data_error&) {
    throw;
  } catch (...) {
    throw data_error("bad value for config key " + key + ": " + value);
  }
}

void apply_config_file(const std::string& path, ModelConfig& model, TrainConfig& train) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r\n");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw data_error("config line " + std::to_string(line_no) + " is not key=value");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    apply_config_entry(strip(line.substr(0, eq)), strip(line.substr(eq + 1)), model, train);
  }
}

void write_preprocess_outputs(const std::string& out_dir, const CleanResult& cleaned,
                              const SplitIndices& idx, const PreparedDataset& ds,
                              const SkewnessSummary& skew,
                              const std::string& input_digest, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ostringstream os;
    os << "row_id,monomer1_smiles,monomer2_smiles,copolymer_smiles,r1,r2\n";
    for (const RawRecord& r : cleaned.accepted)
      os << r.row_id << "," << r.monomer1_smiles << "," << r.monomer2_smiles << ","
         << r.copolymer_smiles << "," << g17(r.r1) << "," << g17(r.r2) << "\n";
    write_text_file(out_dir + "/records.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "row_id,reason\n";
    for (const Rejection& r : cleaned.rejected)
      os << r.row_id << ",\"" << r.reason << "\"\n";
    write_text_file(out_dir + "/rejections.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "target,skew_before,skew_after\n";
    for (int task = 0; task < 2; ++task)
      os << "r" << task + 1 << "," << g17(skew.before[task]) << ","
         << g17(skew.after[task]) << "\n";
    write_text_file(out_dir + "/skewness.csv", os.str());
  }
  {
    json j;
    j["version"] = kManifestVersion;
    j["tool"] = kToolVersion;
    j["seed"] = seed;
    j["input_digest"] = input_digest;
    auto ids_of = [&](const std::vector<int>& positions) {
      std::vector<int> ids;
      for (int p : positions)
        ids.push_back(cleaned.accepted.at(static_cast<std::size_t>(p)).row_id);
      return ids;
    };
    j["train_ids"] = ids_of(idx.train);
    j["val_ids"] = ids_of(idx.val);
    j["test_ids"] = ids_of(idx.test);
    j["counts"] = {{"train", idx.train.size()},
                   {"val", idx.val.size()},
                   {"test", idx.test.size()},
                   {"rejected", cleaned.rejected.size()}};
    j["scaler"] = {{"center", ds.scaler.center}, {"scale", ds.scaler.scale}};
    j["skewness"] = {{"before", skew.before}, {"after", skew.after}};
    write_text_file(out_dir + "/split_manifest.json", j.dump(2) + "\n");
  }
}

PreparedDataset load_prepared_dataset(const std::string& splits_dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(splits_dir + "/split_manifest.json"));
  } catch (const json::exception& e) {
    throw data_error(std::string("bad split manifest: ") + e.what());
  }
  if (manifest.value("version", 0) != kManifestVersion)
    throw data_error("unsupported split manifest version");

  // records.csv rows were already cleaned; read them back verbatim.
  std::ifstream is(splits_dir + "/records.csv");
  if (!is) throw data_error("cannot open " + splits_dir + "/records.csv");
  std::string line;
  if (!std::getline(is, line)) throw data_error("records.csv is empty");
  std::vector<RawRecord> records;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw data_error("records.csv: malformed row");
    RawRecord r;
    r.row_id = std::stoi(cells[0]);
    r.monomer1_smiles = cells[1];
    r.monomer2_smiles = cells[2];
    r.copolymer_smiles = cells[3];
    r.r1 = std::stod(cells[4]);
    r.r2 = std::stod(cells[5]);
    records.push_back(std::move(r));
  }

  PreparedDataset ds;
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.scaler.center = manifest.at("scaler").at("center").get<std::array<double, 2>>();
  ds.scaler.scale = manifest.at("scaler").at("scale").get<std::array<double, 2>>();

  auto fill = [&](const char* key, std::vector<PreparedSample>& out) {
    for (int row_id : manifest.at(key).get<std::vector<int>>()) {
      const RawRecord* found = nullptr;
      for (const RawRecord& r : records)
        if (r.row_id == row_id) {
          found = &r;
          break;
        }
      if (!found)
        throw data_error("split manifest references missing row " + std::to_string(row_id));
      out.push_back(prepare_sample(*found, ds.scaler));
    }
  };
  fill("train_ids", ds.train);
  fill("val_ids", ds.val);
  fill("test_ids", ds.test);
  return ds;
}

void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << "epoch,lr,train_loss,val_loss,val_rmse1,val_rmse2,val_r21,val_r22\n";
  for (const EpochLog& e : log)
    os << e.epoch << "," << g17(e.lr) << "," << g17(e.train_loss) << ","
       << g17(e.val_loss) << "," << g17(e.val_rmse[0]) << "," << g17(e.val_rmse[1])
       << "," << g17(e.val_r2[0]) << "," << g17(e.val_r2[1]) << "\n";
  write_text_file(path, os.str());
}

void write_parity_csv(const std::string& path, const std::vector<ParityPoint>& parity) {
  std::ostringstream os;
  os << "row_id,task,actual,predicted\n";
  for (const ParityPoint& p : parity)
    os << p.row_id << "," << p.task << "," << g17(p.actual) << ","
       << g17(p.predicted) << "\n";
  write_text_file(path, os.str());
}

std::string metrics_to_json(const Metrics& metrics) {
  json j;
  j["transformed"] = {{"r1", task_metrics_json(metrics.transformed[0])},
                      {"r2", task_metrics_json(metrics.transformed[1])}};
  j["original"] = {{"r1", task_metrics_json(metrics.original[0])},
                   {"r2", task_metrics_json(metrics.original[1])}};
  return j.dump(2) + "\n";
}

std::string compose_checkpoint_config(const ModelConfig& model, const TrainConfig& train,
                                      const TargetScaler* scaler) {
  json j;
  j["model"] = json::parse(model_config_to_json(model));
  j["train"] = json::parse(train_config_to_json(train));
  if (scaler) j["scaler"] = {{"center", scaler->center}, {"scale", scaler->scale}};
  return j.dump();
}

CheckpointConfig parse_checkpoint_config(const std::string& config_json) {
  json j;
  try {
    j = json::parse(config_json);
  } catch (const json::exception& e) {
    throw data_error(std::string("bad checkpoint config: ") + e.what());
  }
  CheckpointConfig out;
  if (!j.contains("model")) throw data_error("checkpoint config lacks a model block");
  out.model = model_config_from_json(j["model"].dump());
  if (j.contains("train")) out.train = train_config_from_json(j["train"].dump());
  if (j.contains("scaler")) {
    out.has_scaler = true;
    out.scaler.center = j["scaler"]["center"].get<std::array<double, 2>>();
    out.scaler.scale = j["scaler"]["scale"].get<std::array<double, 2>>();
  }
  return out;
}

std::string compose_run_manifest(const ModelConfig& model, const TrainConfig& train,
                                 const std::string& splits_dir,
                                 const std::string& records_digest,
                                 const std::string& manifest_digest, int best_epoch,
                                 double best_val_loss, int threads) {
  json j;
  j["version"] = kManifestVersion;
  j["tool"] = kToolVersion;
  j["seed"] = train.seed;
  j["threads"] = threads;
  j["model"] = json::parse(model_config_to_json(model));
  j["train"] = json::parse(train_config_to_json(train));
  j["inputs"] = {{"splits_dir", splits_dir},
                 {"records_digest", records_digest},
                 {"split_manifest_digest", manifest_digest}};
  j["artifacts"] = {{"checkpoint", "checkpoint.bin"}, {"log", "train_log.csv"}};
  j["best_epoch"] = best_epoch;
  j["best_val_loss"] = best_val_loss;
  return j.dump(2) + "\n";
}

}  // namespace rrgat
