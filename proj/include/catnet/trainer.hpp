#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "catnet/classify.hpp"
#include "catnet/dataset.hpp"
#include "catnet/evaluate.hpp"
#include "catnet/exemplar.hpp"
#include "catnet/network.hpp"
#include "catnet/optimizer.hpp"
#include "catnet/schedule.hpp"

namespace catnet {

// Maps a sample to one network's input vector (modality selection or
// input-level concatenation).
using InputAdapter = std::function<std::vector<double>(const Sample&)>;

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 12;
  double lr_initial = 1e-3;
  std::size_t lr_drop_epoch = 6;   // 1-based; epochs >= this use the dropped rate
  double lr_drop_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
  double lr_for_epoch(std::size_t epoch) const {  // epoch is 1-based
    return epoch >= lr_drop_epoch ? lr_initial * lr_drop_factor : lr_initial;
  }
};

struct LabeledSample {
  const Sample* sample = nullptr;
  std::size_t class_index = 0;  // position in the learned class order
};

struct CachedTarget {
  const Sample* sample = nullptr;
  std::vector<double> q;  // old-class softmax from the pre-task snapshot
};

struct DistillationTargets {
  std::size_t old_classes = 0;
  std::uint64_t snapshot_update_count = 0;
  std::vector<CachedTarget> items;
};

// Evaluates the frozen snapshot on every cached exemplar and records the
// softmax over the first `old_classes` logits.
DistillationTargets snapshot_targets(const ModelSnapshot& snapshot, const ExemplarStore& store,
                                     const InputAdapter& adapter, std::size_t old_classes);

struct TaskLossResult {
  double ce = 0.0;       // new-class cross entropy, summed over the batch
  double distill = 0.0;  // old-class distillation, summed over the batch
  Gradients grads;
};

// Summed loss over one mixed batch:
//   -sum_new log softmax_y(x)  -  sum_cached sum_{j<n} q_j log p~_j(x)
// where p~ is the model softmax renormalized over the n old-class outputs.
// The distillation gradient on old coordinates is p~ - q and zero on new
// coordinates; with no cached batch this is plain cross entropy.
TaskLossResult task_loss(const Network& net, const std::vector<LabeledSample>& new_batch,
                         const std::vector<const CachedTarget*>& cached_batch,
                         std::size_t old_classes, const InputAdapter& adapter);

struct TrainLogEntry {
  std::size_t task = 0;
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;
  double lr = 0.0;
  double loss_ce = 0.0;
  double loss_distill = 0.0;
};

// Runs the configured epochs over the task's samples. When distillation
// targets are present, every step mixes batch_size/2 new samples with
// batch_size/2 cached exemplars (cycling with reshuffles). Deterministic
// given (rng, inputs); requires the targets snapshot to predate any update.
void train_task(Network& net, const std::vector<LabeledSample>& new_samples,
                const DistillationTargets* targets, const TrainConfig& config,
                const InputAdapter& adapter, Rng rng, std::size_t task_index,
                std::vector<TrainLogEntry>* log, std::vector<double>* lr_trace);

enum class Mode { kOneStream, kInputConcat, kTwoStream };
enum class Method { kCatnet, kFinetuneOnly, kJoint };

struct RunOptions {
  Mode mode = Mode::kInputConcat;
  std::size_t stream_index = 0;  // used by kOneStream
  Method method = Method::kCatnet;
  std::size_t exemplar_k = 20;
  bool distillation = true;
  bool renormalize_means = false;
  std::vector<std::size_t> hidden_layers = {128, 64};
  TrainConfig task0;
  TrainConfig incremental;
  std::uint64_t seed = 0;
};

struct FeatureStats {
  double max_norm_deviation = 0.0;
  std::size_t zero_norm_count = 0;
  std::size_t feature_count = 0;

  void record(const FeatureResult& result);
};

struct RunResult {
  AccuracyMatrix matrix{1};
  ExemplarStore store;
  std::vector<Network> nets;  // one per stream
  FeatureMeanMatrix final_means;
  std::vector<std::uint32_t> learned_class_order;
  std::vector<std::size_t> stream_feature_dims;
  std::vector<TrainLogEntry> log;
  std::vector<std::vector<double>> lr_traces;  // per task, per epoch
  FeatureStats feature_stats;
  double mean_accuracy_micro = 0.0;  // sample-weighted over the last row
  std::size_t classify_skipped = 0;
  std::optional<double> softmax_accuracy;  // joint runs report both routes
};

// One adapter per stream for the given mode (modality pick, input concat,
// or both modalities for two-stream).
std::vector<InputAdapter> make_input_adapters(const Dataset& dataset, Mode mode,
                                              std::size_t stream_index);
std::vector<std::size_t> stream_input_dims(const Dataset& dataset, Mode mode,
                                           std::size_t stream_index);
std::size_t required_modalities(const Dataset& dataset, Mode mode, std::size_t stream_index);

// Unit-norm penultimate feature; with two streams, the per-stream fusion.
// Captures `nets` and `adapters` by reference. `stats` may be null.
Extractor make_extractor(const std::vector<Network>& nets,
                         const std::vector<InputAdapter>& adapters, FeatureStats* stats);

using TaskBoundaryHook =
    std::function<void(std::size_t task, const std::vector<Network>& nets,
                       const ExemplarStore& store)>;

// Full incremental pipeline: per task, expand outputs, snapshot distillation
// targets, train, herd new exemplars, recompute means, then fill row i of
// the accuracy matrix on every task seen so far. Two-stream mode trains one
// network per modality and classifies on the fused features. With an empty
// exemplar store (K = 0) inference falls back to softmax argmax.
RunResult run_schedule(const Dataset& dataset, const DatasetManifest& manifest,
                       const TaskSchedule& schedule, const RunOptions& options,
                       const TaskBoundaryHook& on_task_boundary = nullptr);

}  // namespace catnet
