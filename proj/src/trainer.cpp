#include "catnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace catnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (lr_drop_epoch > epochs) {
    throw std::invalid_argument("train config: lr_drop_epoch " + std::to_string(lr_drop_epoch) +
                                " exceeds epochs " + std::to_string(epochs));
  }
  if (!(lr_initial > 0.0)) throw std::invalid_argument("train config: lr_initial must be > 0");
  if (!(lr_drop_factor > 0.0)) {
    throw std::invalid_argument("train config: lr_drop_factor must be > 0");
  }
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("train config: momentum must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
}

DistillationTargets snapshot_targets(const ModelSnapshot& snapshot, const ExemplarStore& store,
                                     const InputAdapter& adapter, std::size_t old_classes) {
  if (store.empty()) throw std::invalid_argument("snapshot_targets: store is empty");
  if (old_classes < 1 || old_classes > snapshot.net().output_classes()) {
    throw std::invalid_argument("snapshot_targets: old class count " +
                                std::to_string(old_classes) + " out of range for " +
                                std::to_string(snapshot.net().output_classes()) + " outputs");
  }
  DistillationTargets targets;
  targets.old_classes = old_classes;
  targets.snapshot_update_count = snapshot.update_count();
  for (std::uint32_t cls : store.class_order) {
    for (const Sample& sample : store.per_class.at(cls)) {
      const auto acts = forward_activations(snapshot.net(), adapter(sample));
      CachedTarget target;
      target.sample = &sample;
      target.q = stable_softmax_prefix(acts.back(), old_classes);
      targets.items.push_back(std::move(target));
    }
  }
  return targets;
}

TaskLossResult task_loss(const Network& net, const std::vector<LabeledSample>& new_batch,
                         const std::vector<const CachedTarget*>& cached_batch,
                         std::size_t old_classes, const InputAdapter& adapter) {
  if (new_batch.empty()) throw std::invalid_argument("task_loss: empty new-class batch");
  if (!cached_batch.empty() && old_classes < 1) {
    throw std::invalid_argument("task_loss: cached batch given but no old classes");
  }
  const std::size_t classes = net.output_classes();

  TaskLossResult result;
  result.grads = Gradients::zeros_like(net);

  for (const LabeledSample& item : new_batch) {
    if (item.class_index >= classes) {
      throw std::invalid_argument("task_loss: label index " + std::to_string(item.class_index) +
                                  " out of range for " + std::to_string(classes) + " outputs");
    }
    if (!cached_batch.empty() && item.class_index < old_classes) {
      throw std::invalid_argument("task_loss: new batch contains old-class label " +
                                  std::to_string(item.class_index));
    }
    const std::vector<double> x = adapter(*item.sample);
    const auto acts = forward_activations(net, x);
    const std::vector<double>& logits = acts.back();
    std::vector<double> p = stable_softmax(logits);
    result.ce += -std::log(std::max(p[item.class_index], 1e-300));
    p[item.class_index] -= 1.0;  // d loss / d logits
    result.grads.accumulate(backward(net, x, p));
  }

  for (const CachedTarget* target : cached_batch) {
    if (target->q.size() != old_classes) {
      throw std::invalid_argument("task_loss: target length " + std::to_string(target->q.size()) +
                                  " does not match old class count " +
                                  std::to_string(old_classes));
    }
    const std::vector<double> x = adapter(*target->sample);
    const auto acts = forward_activations(net, x);
    const std::vector<double> p_old = stable_softmax_prefix(acts.back(), old_classes);
    std::vector<double> grad(acts.back().size(), 0.0);
    for (std::size_t j = 0; j < old_classes; ++j) {
      result.distill += -target->q[j] * std::log(std::max(p_old[j], 1e-300));
      grad[j] = p_old[j] - target->q[j];
    }
    result.grads.accumulate(backward(net, x, grad));
  }
  return result;
}

void train_task(Network& net, const std::vector<LabeledSample>& new_samples,
                const DistillationTargets* targets, const TrainConfig& config,
                const InputAdapter& adapter, Rng rng, std::size_t task_index,
                std::vector<TrainLogEntry>* log, std::vector<double>* lr_trace) {
  config.validate();
  if (new_samples.empty()) {
    throw std::invalid_argument("train_task: task " + std::to_string(task_index) +
                                " has no training samples");
  }
  const bool use_cache = targets != nullptr && !targets->items.empty();
  if (use_cache && targets->snapshot_update_count != net.update_count) {
    throw std::logic_error("train_task: distillation targets were snapshot at update " +
                           std::to_string(targets->snapshot_update_count) +
                           " but the model is at update " + std::to_string(net.update_count));
  }

  OptimizerState optimizer =
      make_optimizer(net, config.lr_initial, config.momentum, config.weight_decay);

  // Half the batch carries new samples, half replays cached exemplars.
  const std::size_t batch_cached = use_cache ? config.batch_size / 2 : 0;
  const std::size_t batch_new = config.batch_size - batch_cached;

  std::vector<std::size_t> new_order(new_samples.size());
  std::iota(new_order.begin(), new_order.end(), 0u);
  std::vector<std::size_t> cached_order;
  std::size_t cached_cursor = 0;
  if (use_cache) {
    cached_order.resize(targets->items.size());
    std::iota(cached_order.begin(), cached_order.end(), 0u);
    rng.shuffle(cached_order);
  }

  const std::size_t steps_per_epoch = (new_samples.size() + batch_new - 1) / batch_new;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.lr_for_epoch(epoch);
    optimizer.learning_rate = lr;
    if (lr_trace) lr_trace->push_back(lr);
    rng.shuffle(new_order);

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<LabeledSample> new_batch;
      const std::size_t begin = step * batch_new;
      const std::size_t end = std::min(begin + batch_new, new_samples.size());
      for (std::size_t i = begin; i < end; ++i) new_batch.push_back(new_samples[new_order[i]]);

      std::vector<const CachedTarget*> cached_batch;
      for (std::size_t i = 0; i < batch_cached; ++i) {
        if (cached_cursor == cached_order.size()) {
          rng.shuffle(cached_order);
          cached_cursor = 0;
        }
        cached_batch.push_back(&targets->items[cached_order[cached_cursor++]]);
      }

      const TaskLossResult loss = task_loss(net, new_batch, cached_batch,
                                            use_cache ? targets->old_classes : 0, adapter);
      if (!std::isfinite(loss.ce) || !std::isfinite(loss.distill)) {
        throw std::runtime_error("train_task: non-finite loss at task " +
                                 std::to_string(task_index) + " epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(step));
      }
      sgd_step(optimizer, net, loss.grads);
      if (log) {
        log->push_back({task_index, epoch, step, lr, loss.ce, loss.distill});
      }
    }
  }
}

void FeatureStats::record(const FeatureResult& result) {
  ++feature_count;
  if (result.zero_norm) {
    ++zero_norm_count;
    return;
  }
  const double deviation = std::abs(l2_norm(result.feature) - 1.0);
  max_norm_deviation = std::max(max_norm_deviation, deviation);
}

namespace {

constexpr std::uint64_t kSaltModel = 0x6d6f64656cull;   // per-stream init + expansion stream
constexpr std::uint64_t kSaltTrain = 0x747261696eull;   // per (task, stream) batch order

std::vector<double> concat_inputs(const Sample& sample) {
  std::vector<double> x;
  std::size_t total = 0;
  for (const auto& m : sample.modalities) total += m.size();
  x.reserve(total);
  for (const auto& m : sample.modalities) x.insert(x.end(), m.begin(), m.end());
  return x;
}

void check_mode(const Dataset& dataset, Mode mode, std::size_t stream_index) {
  const std::size_t modalities = dataset.modality_dims.size();
  if (mode == Mode::kOneStream && stream_index >= modalities) {
    throw std::invalid_argument("one_stream mode needs modality " +
                                std::to_string(stream_index) + " but dataset has " +
                                std::to_string(modalities));
  }
  if (mode == Mode::kTwoStream && modalities != 2) {
    throw std::invalid_argument("two_stream mode needs a 2-modality dataset, got " +
                                std::to_string(modalities) + " modalities");
  }
}

}  // namespace

std::vector<InputAdapter> make_input_adapters(const Dataset& dataset, Mode mode,
                                              std::size_t stream_index) {
  check_mode(dataset, mode, stream_index);
  switch (mode) {
    case Mode::kOneStream:
      return {[stream_index](const Sample& s) { return s.modalities[stream_index]; }};
    case Mode::kInputConcat:
      return {concat_inputs};
    case Mode::kTwoStream:
      return {[](const Sample& s) { return s.modalities[0]; },
              [](const Sample& s) { return s.modalities[1]; }};
  }
  return {};
}

std::vector<std::size_t> stream_input_dims(const Dataset& dataset, Mode mode,
                                           std::size_t stream_index) {
  check_mode(dataset, mode, stream_index);
  switch (mode) {
    case Mode::kOneStream:
      return {dataset.modality_dims[stream_index]};
    case Mode::kInputConcat: {
      std::size_t total = 0;
      for (std::uint32_t d : dataset.modality_dims) total += d;
      return {total};
    }
    case Mode::kTwoStream:
      return {dataset.modality_dims[0], dataset.modality_dims[1]};
  }
  return {};
}

std::size_t required_modalities(const Dataset& dataset, Mode mode, std::size_t stream_index) {
  check_mode(dataset, mode, stream_index);
  return mode == Mode::kOneStream ? stream_index + 1 : dataset.modality_dims.size();
}

Extractor make_extractor(const std::vector<Network>& nets,
                         const std::vector<InputAdapter>& adapters, FeatureStats* stats) {
  if (nets.size() != adapters.size() || nets.empty() || nets.size() > 2) {
    throw std::invalid_argument("make_extractor: needs 1 or 2 (net, adapter) pairs");
  }
  return [&nets, &adapters, stats](const Sample& sample) -> FeatureVec {
    if (nets.size() == 1) {
      const FeatureResult f = extract_feature(nets[0], adapters[0](sample));
      if (stats) stats->record(f);
      return f.feature;
    }
    const FeatureResult f0 = extract_feature(nets[0], adapters[0](sample));
    const FeatureResult f1 = extract_feature(nets[1], adapters[1](sample));
    if (stats) {
      stats->record(f0);
      stats->record(f1);
    }
    if (!f0.zero_norm && !f1.zero_norm) return fuse(f0.feature, f1.feature);
    FeatureVec fused = f0.feature;  // flagged stream contributes zeros
    fused.insert(fused.end(), f1.feature.begin(), f1.feature.end());
    return fused;
  };
}

RunResult run_schedule(const Dataset& dataset, const DatasetManifest& manifest,
                       const TaskSchedule& schedule, const RunOptions& options,
                       const TaskBoundaryHook& on_task_boundary) {
  options.task0.validate();
  options.incremental.validate();

  RunOptions effective = options;
  if (options.method == Method::kFinetuneOnly) {
    effective.exemplar_k = 0;
    effective.distillation = false;
  }

  // Joint training collapses the stream into one task over every class.
  TaskSchedule run_sched = schedule;
  if (options.method == Method::kJoint) {
    run_sched.initial_classes = schedule.scheduled_classes();
    run_sched.increment = 0;
    run_sched.num_increments = 0;
  }
  run_sched.validate(dataset.num_classes);

  const std::vector<InputAdapter> adapters =
      make_input_adapters(dataset, effective.mode, effective.stream_index);
  const std::vector<std::size_t> input_dims =
      stream_input_dims(dataset, effective.mode, effective.stream_index);
  const std::size_t needed_modalities =
      required_modalities(dataset, effective.mode, effective.stream_index);
  const std::size_t n_streams = adapters.size();
  const std::size_t n_tasks = run_sched.num_tasks();

  RunResult result;
  result.matrix = AccuracyMatrix(n_tasks);
  result.store.capacity_k = effective.exemplar_k;
  result.lr_traces.resize(n_tasks);

  Rng master(effective.seed);
  std::vector<Rng> model_rngs;
  for (std::size_t s = 0; s < n_streams; ++s) {
    model_rngs.push_back(master.derive(Rng::mix(kSaltModel, s)));
  }

  for (std::size_t s = 0; s < n_streams; ++s) {
    result.nets.push_back(make_dense_network(input_dims[s], effective.hidden_layers,
                                             run_sched.initial_classes, model_rngs[s]));
    result.stream_feature_dims.push_back(result.nets[s].feature_dim());
  }

  // Herding, means and NME all see the same feature: the unit-norm
  // penultimate activation, or the per-stream fusion of both.
  const Extractor extractor = make_extractor(result.nets, adapters, &result.feature_stats);

  std::unordered_map<std::uint32_t, std::size_t> class_index;
  FeatureMeanMatrix means;

  // Softmax fallback when no exemplar means exist (K = 0 runs): argmax over
  // the streams' averaged class probabilities.
  const auto softmax_classify = [&](const Sample& sample) -> std::uint32_t {
    const std::size_t learned = result.learned_class_order.size();
    std::vector<double> avg(learned, 0.0);
    for (std::size_t s = 0; s < n_streams; ++s) {
      const auto acts = forward_activations(result.nets[s], adapters[s](sample));
      const std::vector<double> p = stable_softmax_prefix(acts.back(), learned);
      for (std::size_t j = 0; j < learned; ++j) avg[j] += p[j];
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < learned; ++j) {
      if (avg[j] > avg[best]) best = j;
    }
    return result.learned_class_order[best];
  };

  struct ColumnTally {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t counted = 0;
  };
  const auto evaluate_column = [&](std::size_t task_col) -> ColumnTally {
    const auto test = task_test_samples(dataset, manifest, run_sched, task_col);
    if (test.empty()) {
      throw std::runtime_error("task " + std::to_string(task_col) +
                               " has no test samples; check the group split");
    }
    std::vector<std::uint32_t> preds;
    std::vector<std::uint32_t> truths;
    if (!means.empty()) {
      const BatchResult batch =
          classify_batch(test, extractor, means, needed_modalities);
      result.classify_skipped += batch.skipped;
      for (const Prediction& p : batch.predictions) {
        preds.push_back(p.predicted);
        truths.push_back(p.true_label);
      }
    } else {
      for (const Sample* s : test) {
        preds.push_back(softmax_classify(*s));
        truths.push_back(s->label);
      }
    }
    ColumnTally tally;
    tally.counted = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == truths[i]) ++tally.correct;
    }
    tally.accuracy = accuracy(preds, truths);
    return tally;
  };

  for (std::size_t task = 0; task < n_tasks; ++task) {
    const std::vector<std::uint32_t> task_classes = run_sched.task_classes(task);
    const std::size_t old_classes = result.learned_class_order.size();

    if (task > 0) {
      for (std::size_t s = 0; s < n_streams; ++s) {
        expand_output(result.nets[s], task_classes.size(), model_rngs[s]);
      }
    }
    for (std::uint32_t cls : task_classes) {
      class_index.emplace(cls, result.learned_class_order.size());
      result.learned_class_order.push_back(cls);
    }

    const auto train_view = task_train_samples(dataset, manifest, run_sched, task);
    std::vector<LabeledSample> labeled;
    labeled.reserve(train_view.size());
    for (const Sample* s : train_view) {
      labeled.push_back({s, class_index.at(s->label)});
    }

    const TrainConfig& cfg = task == 0 ? effective.task0 : effective.incremental;
    const bool distill = effective.distillation && !result.store.empty() && task > 0;

    for (std::size_t s = 0; s < n_streams; ++s) {
      DistillationTargets targets;
      if (distill) {
        const ModelSnapshot snapshot(result.nets[s]);
        targets = snapshot_targets(snapshot, result.store, adapters[s], old_classes);
      }
      std::vector<double>* trace = s == 0 ? &result.lr_traces[task] : nullptr;
      train_task(result.nets[s], labeled, distill ? &targets : nullptr, cfg,
                 adapters[s], master.derive(Rng::mix(kSaltTrain, task * 16 + s)),
                 task, &result.log, trace);
    }

    if (effective.exemplar_k > 0) {
      std::vector<std::pair<std::uint32_t, std::vector<const Sample*>>> new_classes;
      for (std::uint32_t cls : task_classes) {
        std::vector<const Sample*> of_class;
        for (const Sample* s : train_view) {
          if (s->label == cls) of_class.push_back(s);
        }
        new_classes.emplace_back(cls, std::move(of_class));
      }
      update_store(result.store, new_classes, extractor);
      means = compute_mean_matrix(result.store, extractor, effective.renormalize_means);
    }

    std::size_t row_correct = 0;
    std::size_t row_counted = 0;
    for (std::size_t col = 0; col <= task; ++col) {
      const ColumnTally tally = evaluate_column(col);
      result.matrix.set(task, col, tally.accuracy);
      row_correct += tally.correct;
      row_counted += tally.counted;
    }
    if (task + 1 == n_tasks) {
      result.mean_accuracy_micro =
          static_cast<double>(row_correct) / static_cast<double>(row_counted);
    }

    if (on_task_boundary) on_task_boundary(task, result.nets, result.store);
  }

  result.final_means = means;

  if (options.method == Method::kJoint) {
    const auto test = task_test_samples(dataset, manifest, run_sched, 0);
    std::vector<std::uint32_t> preds;
    std::vector<std::uint32_t> truths;
    for (const Sample* s : test) {
      preds.push_back(softmax_classify(*s));
      truths.push_back(s->label);
    }
    result.softmax_accuracy = accuracy(preds, truths);
  }
  return result;
}

}  // namespace catnet
