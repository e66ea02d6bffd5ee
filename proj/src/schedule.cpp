#include "catnet/schedule.hpp"

#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace catnet {

std::vector<std::uint32_t> TaskSchedule::task_classes(std::size_t task) const {
  if (task >= num_tasks()) {
    throw std::out_of_range("task index " + std::to_string(task) + " out of range for " +
                            std::to_string(num_tasks()) + " tasks");
  }
  const std::size_t begin = task == 0 ? 0 : initial_classes + increment * (task - 1);
  const std::size_t end = task == 0 ? initial_classes : begin + increment;
  return {class_permutation.begin() + static_cast<std::ptrdiff_t>(begin),
          class_permutation.begin() + static_cast<std::ptrdiff_t>(end)};
}

void TaskSchedule::validate(std::size_t dataset_classes) const {
  if (initial_classes == 0) throw std::invalid_argument("schedule: initial_classes must be > 0");
  if (num_increments > 0 && increment == 0) {
    throw std::invalid_argument("schedule: increment must be > 0 when num_increments > 0");
  }
  if (scheduled_classes() > dataset_classes) {
    throw std::invalid_argument("schedule requires " + std::to_string(scheduled_classes()) +
                                " classes but dataset has " + std::to_string(dataset_classes));
  }
  if (class_permutation.size() < scheduled_classes()) {
    throw std::invalid_argument("schedule permutation lists " +
                                std::to_string(class_permutation.size()) +
                                " classes, fewer than the " +
                                std::to_string(scheduled_classes()) + " scheduled");
  }
  std::set<std::uint32_t> seen;
  for (std::uint32_t c : class_permutation) {
    if (c >= dataset_classes) {
      throw std::invalid_argument("schedule permutation names class " + std::to_string(c) +
                                  " outside the dataset's " + std::to_string(dataset_classes) +
                                  " classes");
    }
    if (!seen.insert(c).second) {
      throw std::invalid_argument("schedule permutation repeats class " + std::to_string(c));
    }
  }
}

TaskSchedule identity_schedule(std::size_t initial_classes, std::size_t increment,
                               std::size_t num_increments, std::size_t total_classes) {
  TaskSchedule s;
  s.initial_classes = initial_classes;
  s.increment = increment;
  s.num_increments = num_increments;
  s.class_permutation.resize(total_classes);
  std::iota(s.class_permutation.begin(), s.class_permutation.end(), 0u);
  s.validate(total_classes);
  return s;
}

}  // namespace catnet
