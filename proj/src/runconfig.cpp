#include "catnet/runconfig.hpp"

#include <fstream>
#include <set>

namespace catnet {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open file: " + path);
  try {
    return nlohmann::json::parse(file);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError(where + ": unknown field '" + key + "'");
    }
  }
}

template <typename T>
T require(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const nlohmann::json& j, const std::string& key, T fallback,
                 const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

TrainConfig parse_train_config(const nlohmann::json& j, const TrainConfig& defaults,
                               const std::string& where) {
  reject_unknown_keys(j,
                      {"batch_size", "epochs", "lr_initial", "lr_drop_epoch", "lr_drop_factor",
                       "momentum", "weight_decay"},
                      where);
  TrainConfig cfg = defaults;
  cfg.batch_size = optional_field<std::size_t>(j, "batch_size", defaults.batch_size, where);
  cfg.epochs = optional_field<std::size_t>(j, "epochs", defaults.epochs, where);
  cfg.lr_initial = optional_field<double>(j, "lr_initial", defaults.lr_initial, where);
  cfg.lr_drop_epoch =
      optional_field<std::size_t>(j, "lr_drop_epoch", defaults.lr_drop_epoch, where);
  cfg.lr_drop_factor =
      optional_field<double>(j, "lr_drop_factor", defaults.lr_drop_factor, where);
  cfg.momentum = optional_field<double>(j, "momentum", defaults.momentum, where);
  cfg.weight_decay = optional_field<double>(j, "weight_decay", defaults.weight_decay, where);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return cfg;
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size},
          {"epochs", cfg.epochs},
          {"lr_initial", cfg.lr_initial},
          {"lr_drop_epoch", cfg.lr_drop_epoch},
          {"lr_drop_factor", cfg.lr_drop_factor},
          {"momentum", cfg.momentum},
          {"weight_decay", cfg.weight_decay}};
}

}  // namespace

GenSpecConfig parse_gen_spec(const nlohmann::json& j) {
  const std::string where = "gen spec";
  reject_unknown_keys(j,
                      {"classes", "modality_dims", "samples_per_class", "groups", "separation",
                       "seed", "group_noise", "split"},
                      where);
  GenSpecConfig cfg;
  cfg.spec.classes = require<std::uint32_t>(j, "classes", where);
  cfg.spec.modality_dims = require<std::vector<std::uint32_t>>(j, "modality_dims", where);
  cfg.spec.samples_per_class = require<std::uint32_t>(j, "samples_per_class", where);
  cfg.spec.groups = require<std::uint32_t>(j, "groups", where);
  cfg.spec.separation = optional_field<double>(j, "separation", 1.0, where);
  cfg.spec.seed = optional_field<std::uint64_t>(j, "seed", 0, where);
  cfg.spec.group_noise = optional_field<std::vector<std::vector<double>>>(
      j, "group_noise", {}, where);
  if (!cfg.spec.group_noise.empty()) {
    if (cfg.spec.group_noise.size() != cfg.spec.groups) {
      throw ConfigError(where + ": group_noise lists " +
                        std::to_string(cfg.spec.group_noise.size()) + " groups, expected " +
                        std::to_string(cfg.spec.groups));
    }
    for (const auto& row : cfg.spec.group_noise) {
      if (row.size() != cfg.spec.modality_dims.size()) {
        throw ConfigError(where + ": each group_noise row needs one multiplier per modality");
      }
    }
  }
  cfg.split_seed = cfg.spec.seed;
  if (j.contains("split")) {
    const auto& s = j.at("split");
    reject_unknown_keys(s, {"train", "validation", "test", "seed"}, where + ".split");
    cfg.train_fraction = optional_field<double>(s, "train", 0.8, where);
    cfg.validation_fraction = optional_field<double>(s, "validation", 0.0, where);
    cfg.test_fraction = optional_field<double>(s, "test", 0.2, where);
    cfg.split_seed = optional_field<std::uint64_t>(s, "seed", cfg.spec.seed, where);
  }
  return cfg;
}

nlohmann::json gen_spec_to_json(const GenSpecConfig& cfg) {
  nlohmann::json j{{"classes", cfg.spec.classes},
                   {"modality_dims", cfg.spec.modality_dims},
                   {"samples_per_class", cfg.spec.samples_per_class},
                   {"groups", cfg.spec.groups},
                   {"separation", cfg.spec.separation},
                   {"seed", cfg.spec.seed},
                   {"split",
                    {{"train", cfg.train_fraction},
                     {"validation", cfg.validation_fraction},
                     {"test", cfg.test_fraction},
                     {"seed", cfg.split_seed}}}};
  if (!cfg.spec.group_noise.empty()) j["group_noise"] = cfg.spec.group_noise;
  return j;
}

TaskSchedule RunConfig::bind_schedule(std::size_t dataset_classes) const {
  TaskSchedule schedule;
  schedule.initial_classes = initial_classes;
  schedule.increment = increment;
  schedule.num_increments = num_increments;
  if (class_order.empty()) {
    schedule.class_permutation.resize(dataset_classes);
    for (std::size_t i = 0; i < dataset_classes; ++i) {
      schedule.class_permutation[i] = static_cast<std::uint32_t>(i);
    }
  } else {
    schedule.class_permutation = class_order;
  }
  try {
    schedule.validate(dataset_classes);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  return schedule;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  const std::string where = "run config";
  reject_unknown_keys(j,
                      {"dataset", "synthetic", "schedule", "mode", "method", "exemplar_k",
                       "distillation", "renormalize_means", "hidden_layers", "task0",
                       "incremental", "seed"},
                      where);
  RunConfig cfg;
  const bool has_path = j.contains("dataset");
  const bool has_synth = j.contains("synthetic");
  if (has_path == has_synth) {
    throw ConfigError(where + ": exactly one of 'dataset' or 'synthetic' is required");
  }
  if (has_path) cfg.dataset_path = require<std::string>(j, "dataset", where);
  if (has_synth) cfg.synthetic = parse_gen_spec(j.at("synthetic"));

  const auto& sched = j.contains("schedule") ? j.at("schedule") : nlohmann::json::object();
  reject_unknown_keys(sched, {"initial_classes", "increment", "num_increments", "class_order"},
                      where + ".schedule");
  cfg.initial_classes = require<std::size_t>(sched, "initial_classes", where + ".schedule");
  cfg.increment = optional_field<std::size_t>(sched, "increment", 0, where);
  cfg.num_increments = optional_field<std::size_t>(sched, "num_increments", 0, where);
  cfg.class_order =
      optional_field<std::vector<std::uint32_t>>(sched, "class_order", {}, where);

  const std::string mode = optional_field<std::string>(j, "mode", "rgb_d_concat", where);
  if (mode == "rgb_d_concat") {
    cfg.options.mode = Mode::kInputConcat;
  } else if (mode == "two_stream") {
    cfg.options.mode = Mode::kTwoStream;
  } else if (mode.rfind("one_stream:", 0) == 0) {
    cfg.options.mode = Mode::kOneStream;
    try {
      cfg.options.stream_index = std::stoul(mode.substr(11));
    } catch (const std::exception&) {
      throw ConfigError(where + ": bad one_stream index in mode '" + mode + "'");
    }
  } else {
    throw ConfigError(where + ": unknown mode '" + mode +
                      "' (expected one_stream:<i>, rgb_d_concat or two_stream)");
  }

  const std::string method = optional_field<std::string>(j, "method", "catnet", where);
  if (method == "catnet") {
    cfg.options.method = Method::kCatnet;
  } else if (method == "finetune_only") {
    cfg.options.method = Method::kFinetuneOnly;
  } else if (method == "joint") {
    cfg.options.method = Method::kJoint;
  } else {
    throw ConfigError(where + ": unknown method '" + method +
                      "' (expected catnet, finetune_only or joint)");
  }

  cfg.options.exemplar_k = optional_field<std::size_t>(j, "exemplar_k", 20, where);
  cfg.options.distillation = optional_field<bool>(j, "distillation", true, where);
  cfg.options.renormalize_means =
      optional_field<bool>(j, "renormalize_means", false, where);
  cfg.options.hidden_layers =
      optional_field<std::vector<std::size_t>>(j, "hidden_layers", {128, 64}, where);
  if (cfg.options.hidden_layers.empty()) {
    throw ConfigError(where + ": hidden_layers must name at least one layer width");
  }

  TrainConfig task0_defaults;
  task0_defaults.epochs = 50;
  task0_defaults.lr_drop_epoch = 25;
  TrainConfig incr_defaults;  // 12 epochs, drop at 6
  cfg.options.task0 = parse_train_config(
      j.contains("task0") ? j.at("task0") : nlohmann::json::object(), task0_defaults,
      where + ".task0");
  cfg.options.incremental = parse_train_config(
      j.contains("incremental") ? j.at("incremental") : nlohmann::json::object(), incr_defaults,
      where + ".incremental");

  cfg.options.seed = optional_field<std::uint64_t>(j, "seed", 0, where);
  cfg.options.task0.seed = cfg.options.seed;
  cfg.options.incremental.seed = cfg.options.seed;
  return cfg;
}

std::string mode_name(Mode mode, std::size_t stream_index) {
  switch (mode) {
    case Mode::kOneStream: return "one_stream:" + std::to_string(stream_index);
    case Mode::kInputConcat: return "rgb_d_concat";
    case Mode::kTwoStream: return "two_stream";
  }
  return "?";
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kCatnet: return "catnet";
    case Method::kFinetuneOnly: return "finetune_only";
    case Method::kJoint: return "joint";
  }
  return "?";
}

nlohmann::json canonical_run_config(const RunConfig& cfg) {
  nlohmann::json j;
  if (cfg.synthetic) {
    j["synthetic"] = gen_spec_to_json(*cfg.synthetic);
  } else {
    j["dataset"] = cfg.dataset_path;
  }
  j["schedule"] = {{"initial_classes", cfg.initial_classes},
                   {"increment", cfg.increment},
                   {"num_increments", cfg.num_increments},
                   {"class_order", cfg.class_order}};
  j["mode"] = mode_name(cfg.options.mode, cfg.options.stream_index);
  j["method"] = method_name(cfg.options.method);
  j["exemplar_k"] = cfg.options.exemplar_k;
  j["distillation"] = cfg.options.distillation;
  j["renormalize_means"] = cfg.options.renormalize_means;
  j["hidden_layers"] = cfg.options.hidden_layers;
  j["task0"] = train_config_to_json(cfg.options.task0);
  j["incremental"] = train_config_to_json(cfg.options.incremental);
  j["seed"] = cfg.options.seed;
  return j;
}

std::string config_digest(const RunConfig& cfg) {
  return hex64(fnv1a64(canonical_run_config(cfg).dump()));
}

}  // namespace catnet
