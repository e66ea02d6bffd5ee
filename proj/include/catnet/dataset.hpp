#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "catnet/schedule.hpp"

namespace catnet {

// One labeled instance: a fixed-length vector per modality plus the group
// (recording participant analogue) it came from.
struct Sample {
  std::uint64_t id = 0;
  std::uint32_t label = 0;
  std::uint32_t group = 0;
  std::vector<std::vector<double>> modalities;
};

struct Dataset {
  std::uint32_t num_classes = 0;
  std::vector<std::uint32_t> modality_dims;
  std::vector<Sample> samples;

  std::vector<std::uint32_t> group_ids() const;  // sorted, unique
};

// Per-class Gaussian clusters. Class centers are drawn once on the unit
// sphere and scaled by `separation`; sample noise is isotropic Gaussian
// scaled by the group/modality multiplier in `group_noise`. Samples are
// assigned to groups round-robin so every class occurs in every group.
struct SyntheticSpec {
  std::uint32_t classes = 0;
  std::vector<std::uint32_t> modality_dims;
  std::uint32_t samples_per_class = 0;
  std::uint32_t groups = 0;
  double separation = 1.0;
  std::uint64_t seed = 0;
  // group_noise[g][v] multiplies the noise std of modality v in group g.
  // Empty means 1.0 everywhere.
  std::vector<std::vector<double>> group_noise;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

enum class Split : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

struct DatasetManifest {
  std::map<std::uint32_t, Split> group_split;
  std::uint64_t seed = 0;

  bool is_train(std::uint32_t group) const;
  bool is_test(std::uint32_t group) const;
};

// Groups are shuffled with the seeded PRNG and partitioned by fraction; all
// samples of a group land in one split. Fractions must sum to 1 and both
// train and test must end up non-empty.
DatasetManifest split_by_group(const Dataset& dataset, double train_fraction,
                               double test_fraction, std::uint64_t seed);
DatasetManifest split_by_group(const Dataset& dataset, double train_fraction,
                               double validation_fraction, double test_fraction,
                               std::uint64_t seed);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Binary dataset file. Layout, all little-endian:
//   magic "CATD", version u32, num_classes u32, modality count u8,
//   per-modality dim u32, sample count u64; then per sample:
//   id u64, label u32, group u32, per-modality f64 vectors.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Train-split samples of the task's new classes.
std::vector<const Sample*> task_train_samples(const Dataset& dataset,
                                              const DatasetManifest& manifest,
                                              const TaskSchedule& schedule, std::size_t task);
// Test-split samples of the task's classes (one evaluation column).
std::vector<const Sample*> task_test_samples(const Dataset& dataset,
                                             const DatasetManifest& manifest,
                                             const TaskSchedule& schedule, std::size_t task);

}  // namespace catnet
