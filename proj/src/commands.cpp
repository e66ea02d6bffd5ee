#include "catnet/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "catnet/checkpoint.hpp"
#include "catnet/runconfig.hpp"
#include "catnet/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace catnet {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open file: " + path);
  return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

// Write-then-rename so a crashed run never leaves a half-written artifact.
void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open for writing: " + tmp.string());
    file.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!file) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct LoadedData {
  Dataset dataset;
  DatasetManifest manifest;
};

LoadedData obtain_dataset(const RunConfig& cfg) {
  LoadedData data;
  if (cfg.synthetic) {
    data.dataset = generate_synthetic(cfg.synthetic->spec);
    data.manifest = split_by_group(data.dataset, cfg.synthetic->train_fraction,
                                   cfg.synthetic->validation_fraction,
                                   cfg.synthetic->test_fraction, cfg.synthetic->split_seed);
    return data;
  }
  data.dataset = load_dataset(cfg.dataset_path);
  data.manifest = load_manifest(cfg.dataset_path + ".manifest");
  return data;
}

json matrix_to_json(const AccuracyMatrix& r) {
  json rows = json::array();
  for (std::size_t i = 0; i < r.n_tasks(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < r.n_tasks(); ++j) {
      const auto v = r.get(i, j);
      row.push_back(v ? json(*v) : json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

AccuracyMatrix matrix_from_json(const json& rows) {
  AccuracyMatrix r(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (!rows[i][j].is_null()) r.set(i, j, rows[i][j].get<double>());
    }
  }
  return r;
}

json metrics_json(const RunConfig& cfg, const RunResult& result) {
  const std::string digest = config_digest(cfg);
  json j;
  j["run_id"] = digest;
  j["config_digest"] = digest;
  j["method"] = method_name(cfg.options.method);
  j["mode"] = mode_name(cfg.options.mode, cfg.options.stream_index);
  j["inference"] = result.final_means.empty() ? "softmax" : "nme";
  j["n_tasks"] = result.matrix.n_tasks();
  j["r_matrix"] = matrix_to_json(result.matrix);
  if (result.matrix.n_tasks() >= 2) {
    j["bwt"] = compute_bwt(result.matrix);
    j["bwt_delta"] = compute_bwt_delta(result.matrix);
  } else {
    j["bwt"] = nullptr;
    j["bwt_delta"] = nullptr;
  }
  j["mean_accuracy"] = compute_mean_accuracy(result.matrix);
  j["mean_accuracy_micro"] = result.mean_accuracy_micro;
  j["initial_accuracy"] = initial_accuracy(result.matrix);
  json final_row = json::array();
  const std::size_t last = result.matrix.n_tasks() - 1;
  for (std::size_t col = 0; col <= last; ++col) {
    final_row.push_back(*result.matrix.get(last, col));
  }
  j["per_task_final"] = final_row;
  j["lr_traces"] = result.lr_traces;
  j["feature_norm_max_deviation"] = result.feature_stats.max_norm_deviation;
  j["zero_norm_features"] = result.feature_stats.zero_norm_count;
  j["feature_count"] = result.feature_stats.feature_count;
  j["classify_skipped"] = result.classify_skipped;
  j["learned_class_order"] = result.learned_class_order;
  j["stream_feature_dims"] = result.stream_feature_dims;
  if (!result.final_means.empty()) {
    json means = json::object();
    for (std::uint32_t cls : result.final_means.class_order) {
      means[std::to_string(cls)] = result.final_means.means.at(cls);
    }
    j["feature_means"] = std::move(means);
  }
  if (result.softmax_accuracy) j["softmax_accuracy"] = *result.softmax_accuracy;
  return j;
}

json exemplars_json(const ExemplarStore& store) {
  json classes = json::array();
  for (std::uint32_t cls : store.class_order) {
    json ids = json::array();
    for (const Sample& s : store.per_class.at(cls)) ids.push_back(s.id);
    classes.push_back({{"class", cls},
                       {"sample_ids", std::move(ids)},
                       {"under_capacity", store.under_capacity.count(cls) > 0}});
  }
  return {{"capacity_k", store.capacity_k}, {"classes", std::move(classes)}};
}

void print_summary(const json& metrics, std::ostream& out) {
  out << "run " << metrics.at("run_id").get<std::string>()
      << " method=" << metrics.at("method").get<std::string>()
      << " mode=" << metrics.at("mode").get<std::string>()
      << " inference=" << metrics.at("inference").get<std::string>()
      << " tasks=" << metrics.at("n_tasks").get<std::size_t>() << "\n";
  out << "  initial_accuracy    " << fmt6(metrics.at("initial_accuracy").get<double>()) << "\n";
  out << "  mean_accuracy       " << fmt6(metrics.at("mean_accuracy").get<double>()) << "\n";
  out << "  mean_accuracy_micro " << fmt6(metrics.at("mean_accuracy_micro").get<double>())
      << "\n";
  out << "  bwt                 "
      << (metrics.at("bwt").is_null() ? std::string("n/a")
                                      : fmt6(metrics.at("bwt").get<double>()))
      << "\n";
  out << "  bwt_delta           "
      << (metrics.at("bwt_delta").is_null() ? std::string("n/a")
                                            : fmt6(metrics.at("bwt_delta").get<double>()))
      << "\n";
  if (metrics.contains("softmax_accuracy")) {
    out << "  softmax_accuracy    " << fmt6(metrics.at("softmax_accuracy").get<double>())
        << "\n";
  }
  out << "  per_task_final     ";
  for (const auto& v : metrics.at("per_task_final")) out << " " << fmt6(v.get<double>());
  out << "\n";
}

int usage_error(std::ostream& err, const std::string& message) {
  err << "error: " << message << "\n";
  return kExitConfig;
}

}  // namespace

int cmd_gen(const std::string& spec_path, const std::string& out_path, bool force,
            std::ostream& out, std::ostream& err) {
  try {
    const GenSpecConfig cfg = parse_gen_spec(load_json_file(spec_path));
    if (fs::exists(out_path) && !force) {
      return usage_error(err, "output " + out_path + " exists; pass --force to overwrite");
    }
    const Dataset dataset = generate_synthetic(cfg.spec);
    const DatasetManifest manifest =
        split_by_group(dataset, cfg.train_fraction, cfg.validation_fraction,
                       cfg.test_fraction, cfg.split_seed);
    save_dataset(dataset, out_path);
    save_manifest(manifest, out_path + ".manifest");
    const std::string digest = hex64(fnv1a64(read_file(out_path)));
    out << "dataset " << out_path << " classes=" << dataset.num_classes
        << " samples=" << dataset.samples.size() << " digest=" << digest << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    return usage_error(err, e.what());
  } catch (const std::invalid_argument& e) {
    return usage_error(err, e.what());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool force,
            std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  LoadedData data;
  TaskSchedule schedule;
  try {
    cfg = parse_run_config(load_json_file(config_path));
    data = obtain_dataset(cfg);
    schedule = cfg.bind_schedule(data.dataset.num_classes);
    if (cfg.options.mode == Mode::kTwoStream && data.dataset.modality_dims.size() != 2) {
      throw ConfigError("mode two_stream requires a 2-modality dataset");
    }
    if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force) {
      throw ConfigError("run directory " + out_dir + " exists; pass --force to overwrite");
    }
  } catch (const ConfigError& e) {
    return usage_error(err, e.what());
  } catch (const std::invalid_argument& e) {
    return usage_error(err, e.what());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  const fs::path run_dir(out_dir);
  const fs::path marker = run_dir / ".partial";
  try {
    fs::create_directories(run_dir / "checkpoints");
    {
      std::ofstream m(marker, std::ios::trunc);
      m << "run in progress\n";
    }
    write_file_atomic(run_dir / "config.json", canonical_run_config(cfg).dump(2) + "\n");

    const TaskBoundaryHook hook = [&](std::size_t task, const std::vector<Network>& nets,
                                      const ExemplarStore& store) {
      for (std::size_t s = 0; s < nets.size(); ++s) {
        save_network(nets[s], (run_dir / "checkpoints" /
                               ("task" + std::to_string(task) + "_stream" + std::to_string(s) +
                                ".catn"))
                                  .string());
      }
      if (!store.empty()) {
        write_file_atomic(
            run_dir / "checkpoints" / ("task" + std::to_string(task) + "_exemplars.json"),
            exemplars_json(store).dump(2) + "\n");
      }
    };

    const RunResult result = run_schedule(data.dataset, data.manifest, schedule, cfg.options, hook);

    std::ostringstream log_lines;
    for (const TrainLogEntry& e : result.log) {
      json line{{"task", e.task},       {"epoch", e.epoch},
                {"step", e.step},       {"lr", e.lr},
                {"loss_ce", e.loss_ce}, {"loss_distill", e.loss_distill}};
      log_lines << line.dump() << "\n";
    }
    write_file_atomic(run_dir / "train_log.jsonl", log_lines.str());

    {
      std::ostringstream csv;
      csv.precision(17);
      for (std::size_t i = 0; i < result.matrix.n_tasks(); ++i) {
        for (std::size_t j = 0; j < result.matrix.n_tasks(); ++j) {
          if (j > 0) csv << ",";
          const auto v = result.matrix.get(i, j);
          if (v) csv << *v;
        }
        csv << "\n";
      }
      write_file_atomic(run_dir / "R.csv", csv.str());
    }

    const json metrics = metrics_json(cfg, result);
    write_file_atomic(run_dir / "metrics.json", metrics.dump(2) + "\n");

    if (!result.final_means.empty()) {
      const auto adapters =
          make_input_adapters(data.dataset, cfg.options.mode, cfg.options.stream_index);
      const Extractor extractor = make_extractor(result.nets, adapters, nullptr);
      std::vector<const Sample*> all_test;
      for (std::size_t t = 0; t < result.matrix.n_tasks(); ++t) {
        const auto test = task_test_samples(data.dataset, data.manifest, schedule, t);
        all_test.insert(all_test.end(), test.begin(), test.end());
      }
      const BatchResult batch = classify_batch(
          all_test, extractor, result.final_means,
          required_modalities(data.dataset, cfg.options.mode, cfg.options.stream_index));
      write_predictions_csv(batch, (run_dir / "predictions.csv").string());
    }

    fs::remove(marker);
    print_summary(metrics, out);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    err << "run left incomplete; marker " << marker.string() << " remains\n";
    return kExitRuntime;
  }
}

namespace {

// Per-class scalar summary of the final feature means, one block per stream.
void write_mean_summary(const json& metrics, const fs::path& path) {
  if (!metrics.contains("feature_means")) return;
  const auto& means = metrics.at("feature_means");
  const std::vector<std::size_t> stream_dims =
      metrics.at("stream_feature_dims").get<std::vector<std::size_t>>();

  std::ostringstream csv;
  csv << "class,stream,mean_over_features\n";
  std::vector<std::pair<std::uint32_t, std::vector<double>>> rows;
  for (const auto& [key, value] : means.items()) {
    rows.emplace_back(static_cast<std::uint32_t>(std::stoul(key)),
                      value.get<std::vector<double>>());
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& [cls, mean] : rows) {
    std::size_t begin = 0;
    for (std::size_t s = 0; s < stream_dims.size(); ++s) {
      const std::size_t end = begin + stream_dims[s];
      double sum = 0.0;
      for (std::size_t d = begin; d < end; ++d) sum += mean[d];
      csv << cls << "," << s << "," << fmt6(sum / static_cast<double>(end - begin)) << "\n";
      begin = end;
    }
  }
  write_file_atomic(path, csv.str());
}

json load_metrics(const std::string& run_dir) {
  const fs::path path = fs::path(run_dir) / "metrics.json";
  if (!fs::exists(path)) throw ConfigError("missing file: " + path.string());
  return load_json_file(path.string());
}

std::string metric_cell(const json& metrics, const char* key) {
  if (!metrics.contains(key) || metrics.at(key).is_null()) return "n/a";
  return fmt6(metrics.at(key).get<double>());
}

}  // namespace

int cmd_report(const std::string& run_dir, const std::string& compare_dir, std::ostream& out,
               std::ostream& err) {
  try {
    const json metrics = load_metrics(run_dir);
    if (compare_dir.empty()) {
      print_summary(metrics, out);
      const AccuracyMatrix r = matrix_from_json(metrics.at("r_matrix"));
      write_heatmap_pgm(r, (fs::path(run_dir) / "heatmap.pgm").string());
      write_mean_summary(metrics, fs::path(run_dir) / "mean_summary.csv");
      out << "wrote " << (fs::path(run_dir) / "heatmap.pgm").string() << "\n";
      if (metrics.contains("feature_means")) {
        out << "wrote " << (fs::path(run_dir) / "mean_summary.csv").string() << "\n";
      }
      return kExitOk;
    }

    const json other = load_metrics(compare_dir);
    out << "metric              | " << metrics.at("run_id").get<std::string>() << " | "
        << other.at("run_id").get<std::string>() << "\n";
    for (const char* key : {"initial_accuracy", "mean_accuracy", "mean_accuracy_micro", "bwt",
                            "bwt_delta"}) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-19s | %16s | %16s\n", key,
                    metric_cell(metrics, key).c_str(), metric_cell(other, key).c_str());
      out << buf;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    return usage_error(err, e.what());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace catnet
