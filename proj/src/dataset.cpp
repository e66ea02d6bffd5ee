#include "catnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "catnet/rng.hpp"
#include "catnet/tensor.hpp"

namespace catnet {

std::vector<std::uint32_t> Dataset::group_ids() const {
  std::set<std::uint32_t> groups;
  for (const Sample& s : samples) groups.insert(s.group);
  return {groups.begin(), groups.end()};
}

namespace {

std::vector<double> unit_sphere_vector(std::size_t dim, Rng& rng) {
  std::vector<double> v(dim);
  for (;;) {
    for (double& x : v) x = rng.gaussian();
    const double norm = l2_norm(v);
    if (norm > 1e-12) {
      for (double& x : v) x /= norm;
      return v;
    }
  }
}

double noise_multiplier(const SyntheticSpec& spec, std::uint32_t group, std::size_t modality) {
  if (spec.group_noise.empty()) return 1.0;
  if (group >= spec.group_noise.size() || modality >= spec.group_noise[group].size()) {
    throw std::invalid_argument("synthetic spec: group_noise missing entry for group " +
                                std::to_string(group) + " modality " +
                                std::to_string(modality));
  }
  return spec.group_noise[group][modality];
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes == 0) throw std::invalid_argument("synthetic spec: classes must be >= 1");
  if (spec.samples_per_class == 0) {
    throw std::invalid_argument("synthetic spec: samples_per_class must be >= 1");
  }
  if (spec.groups == 0) throw std::invalid_argument("synthetic spec: groups must be >= 1");
  if (spec.modality_dims.empty()) {
    throw std::invalid_argument("synthetic spec: at least one modality required");
  }
  for (std::uint32_t d : spec.modality_dims) {
    if (d == 0) throw std::invalid_argument("synthetic spec: modality dims must be >= 1");
  }
  if (!(spec.separation > 0.0)) {
    throw std::invalid_argument("synthetic spec: separation must be > 0");
  }
  for (const auto& row : spec.group_noise) {
    for (double m : row) {
      if (!(m >= 0.0) || !std::isfinite(m)) {
        throw std::invalid_argument("synthetic spec: noise multipliers must be finite and >= 0");
      }
    }
  }

  Rng center_rng = Rng(spec.seed).derive(0x63656e74);  // centers stream
  Rng sample_rng = Rng(spec.seed).derive(0x73616d70);  // sample-noise stream

  // centers[class][modality]
  std::vector<std::vector<std::vector<double>>> centers(spec.classes);
  for (std::uint32_t c = 0; c < spec.classes; ++c) {
    centers[c].resize(spec.modality_dims.size());
    for (std::size_t v = 0; v < spec.modality_dims.size(); ++v) {
      centers[c][v] = unit_sphere_vector(spec.modality_dims[v], center_rng);
      for (double& x : centers[c][v]) x *= spec.separation;
    }
  }

  Dataset dataset;
  dataset.num_classes = spec.classes;
  dataset.modality_dims = spec.modality_dims;
  dataset.samples.reserve(static_cast<std::size_t>(spec.classes) * spec.samples_per_class);
  std::uint64_t next_id = 0;
  for (std::uint32_t c = 0; c < spec.classes; ++c) {
    for (std::uint32_t s = 0; s < spec.samples_per_class; ++s) {
      Sample sample;
      sample.id = next_id++;
      sample.label = c;
      sample.group = s % spec.groups;
      sample.modalities.resize(spec.modality_dims.size());
      for (std::size_t v = 0; v < spec.modality_dims.size(); ++v) {
        const double mult = noise_multiplier(spec, sample.group, v);
        std::vector<double>& x = sample.modalities[v];
        x.resize(spec.modality_dims[v]);
        for (std::size_t d = 0; d < x.size(); ++d) {
          x[d] = centers[c][v][d] + mult * sample_rng.gaussian();
        }
      }
      dataset.samples.push_back(std::move(sample));
    }
  }
  return dataset;
}

bool DatasetManifest::is_train(std::uint32_t group) const {
  auto it = group_split.find(group);
  return it != group_split.end() && it->second == Split::kTrain;
}

bool DatasetManifest::is_test(std::uint32_t group) const {
  auto it = group_split.find(group);
  return it != group_split.end() && it->second == Split::kTest;
}

DatasetManifest split_by_group(const Dataset& dataset, double train_fraction,
                               double test_fraction, std::uint64_t seed) {
  return split_by_group(dataset, train_fraction, 0.0, test_fraction, seed);
}

DatasetManifest split_by_group(const Dataset& dataset, double train_fraction,
                               double validation_fraction, double test_fraction,
                               std::uint64_t seed) {
  if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  std::vector<std::uint32_t> groups = dataset.group_ids();
  const std::size_t n = groups.size();
  if (n < 2) throw std::invalid_argument("split requires at least 2 groups, dataset has " +
                                         std::to_string(n));

  Rng rng(seed);
  rng.shuffle(groups);

  std::size_t n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::size_t n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train + n_val >= n) {
    throw std::invalid_argument("split of " + std::to_string(n) +
                                " groups leaves an empty train or test split");
  }

  DatasetManifest manifest;
  manifest.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    Split split = Split::kTest;
    if (i < n_train) {
      split = Split::kTrain;
    } else if (i < n_train + n_val) {
      split = Split::kValidation;
    }
    manifest.group_split[groups[i]] = split;
  }
  return manifest;
}

namespace {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

}  // namespace

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open manifest for writing: " + path);
  file << "# catnet dataset manifest\n";
  file << "seed " << manifest.seed << "\n";
  for (const auto& [group, split] : manifest.group_split) {
    file << "group " << group << " " << split_name(split) << "\n";
  }
  if (!file) throw std::runtime_error("write failed for manifest: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open manifest: " + path);
  DatasetManifest manifest;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "seed") {
      is >> manifest.seed;
    } else if (key == "group") {
      std::uint32_t group;
      std::string name;
      is >> group >> name;
      if (!is) {
        throw std::runtime_error("manifest " + path + ": malformed line " +
                                 std::to_string(line_no));
      }
      Split split;
      if (name == "train") {
        split = Split::kTrain;
      } else if (name == "validation") {
        split = Split::kValidation;
      } else if (name == "test") {
        split = Split::kTest;
      } else {
        throw std::runtime_error("manifest " + path + ": unknown split '" + name +
                                 "' on line " + std::to_string(line_no));
      }
      manifest.group_split[group] = split;
    } else {
      throw std::runtime_error("manifest " + path + ": unknown key '" + key + "' on line " +
                               std::to_string(line_no));
    }
  }
  return manifest;
}

namespace {

constexpr char kMagic[4] = {'C', 'A', 'T', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(p[i]);
    return v;
  }

  std::uint64_t u64() {
    const char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(p[i]);
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw std::runtime_error("dataset " + path_ + " truncated: expected at least " +
                               std::to_string(pos_ + n) + " bytes, found " +
                               std::to_string(bytes_.size()));
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, dataset.num_classes);
  out.push_back(static_cast<char>(dataset.modality_dims.size()));
  for (std::uint32_t d : dataset.modality_dims) put_u32(out, d);
  put_u64(out, dataset.samples.size());
  for (const Sample& s : dataset.samples) {
    put_u64(out, s.id);
    put_u32(out, s.label);
    put_u32(out, s.group);
    for (std::size_t v = 0; v < dataset.modality_dims.size(); ++v) {
      if (s.modalities.size() <= v || s.modalities[v].size() != dataset.modality_dims[v]) {
        throw std::invalid_argument("sample " + std::to_string(s.id) + " modality " +
                                    std::to_string(v) + " does not match declared dim " +
                                    std::to_string(dataset.modality_dims[v]));
      }
      for (double x : s.modalities[v]) put_f64(out, x);
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open dataset for writing: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("write failed for dataset: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open dataset: " + path);
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  Reader reader(bytes, path);
  const char* magic = reader.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("dataset " + path + " has wrong magic bytes");
  }
  const std::uint32_t version = reader.u32();
  if (version != kVersion) {
    throw std::runtime_error("dataset " + path + " has unsupported version " +
                             std::to_string(version));
  }
  Dataset dataset;
  dataset.num_classes = reader.u32();
  const std::uint8_t modality_count = reader.u8();
  dataset.modality_dims.resize(modality_count);
  for (std::uint32_t& d : dataset.modality_dims) d = reader.u32();
  const std::uint64_t sample_count = reader.u64();
  dataset.samples.reserve(sample_count);
  std::set<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < sample_count; ++i) {
    Sample s;
    s.id = reader.u64();
    s.label = reader.u32();
    s.group = reader.u32();
    if (s.label >= dataset.num_classes) {
      throw std::runtime_error("dataset " + path + ": sample " + std::to_string(s.id) +
                               " has label " + std::to_string(s.label) + " but only " +
                               std::to_string(dataset.num_classes) + " classes declared");
    }
    if (!ids.insert(s.id).second) {
      throw std::runtime_error("dataset " + path + ": duplicate sample id " +
                               std::to_string(s.id));
    }
    s.modalities.resize(modality_count);
    for (std::size_t v = 0; v < modality_count; ++v) {
      s.modalities[v].resize(dataset.modality_dims[v]);
      for (double& x : s.modalities[v]) x = reader.f64();
    }
    dataset.samples.push_back(std::move(s));
  }
  if (reader.remaining() != 0) {
    throw std::runtime_error("dataset " + path + " has " + std::to_string(reader.remaining()) +
                             " trailing bytes");
  }
  return dataset;
}

std::vector<const Sample*> task_train_samples(const Dataset& dataset,
                                              const DatasetManifest& manifest,
                                              const TaskSchedule& schedule, std::size_t task) {
  const auto classes = schedule.task_classes(task);
  const std::set<std::uint32_t> wanted(classes.begin(), classes.end());
  std::vector<const Sample*> out;
  for (const Sample& s : dataset.samples) {
    if (wanted.count(s.label) && manifest.is_train(s.group)) out.push_back(&s);
  }
  return out;
}

std::vector<const Sample*> task_test_samples(const Dataset& dataset,
                                             const DatasetManifest& manifest,
                                             const TaskSchedule& schedule, std::size_t task) {
  const auto classes = schedule.task_classes(task);
  const std::set<std::uint32_t> wanted(classes.begin(), classes.end());
  std::vector<const Sample*> out;
  for (const Sample& s : dataset.samples) {
    if (wanted.count(s.label) && manifest.is_test(s.group)) out.push_back(&s);
  }
  return out;
}

}  // namespace catnet
