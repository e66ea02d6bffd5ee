#pragma once

#include <cstdint>
#include <vector>

namespace catnet {

// Ordered class partitions: an initial block of `initial_classes`, then
// `num_increments` tasks of `increment` new classes each, consumed from
// `class_permutation` front to back.
struct TaskSchedule {
  std::size_t initial_classes = 0;
  std::size_t increment = 0;
  std::size_t num_increments = 0;
  std::vector<std::uint32_t> class_permutation;

  std::size_t num_tasks() const { return 1 + num_increments; }
  std::size_t scheduled_classes() const { return initial_classes + increment * num_increments; }
  // Classes learned once task `task` (0-based) has been trained.
  std::size_t classes_through(std::size_t task) const {
    return initial_classes + increment * task;
  }
  std::vector<std::uint32_t> task_classes(std::size_t task) const;

  void validate(std::size_t dataset_classes) const;
};

TaskSchedule identity_schedule(std::size_t initial_classes, std::size_t increment,
                               std::size_t num_increments, std::size_t total_classes);

}  // namespace catnet
