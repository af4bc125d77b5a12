#pragma once

#include <string>
#include <vector>

#include "lifetensor/tensor.hpp"

namespace lifetensor {

/// Axis labels for an individuals x variables x days tensor.
struct AxisLabels {
  std::vector<std::string> individuals;
  std::vector<std::string> variables;
  std::vector<long> days;

  /// Labels u0.., v0.., 0.. for a tensor with no external naming.
  static AxisLabels generic(const Dims& dims) {
    AxisLabels l;
    auto pad = [](std::size_t i, std::size_t n) {
      std::string s = std::to_string(i);
      const std::size_t width = std::to_string(n - 1).size();
      return std::string(width - s.size(), '0') + s;
    };
    for (std::size_t i = 0; i < dims[0]; ++i) l.individuals.push_back("u" + pad(i, dims[0]));
    for (std::size_t j = 0; j < dims[1]; ++j) l.variables.push_back("v" + pad(j, dims[1]));
    for (std::size_t k = 0; k < dims[2]; ++k) l.days.push_back(static_cast<long>(k));
    return l;
  }

  bool matches(const Dims& dims) const {
    return individuals.size() == dims[0] && variables.size() == dims[1] && days.size() == dims[2];
  }

  friend bool operator==(const AxisLabels&, const AxisLabels&) = default;
};

/// Tensor plus the labels of its individual, variable and day axes.
struct TensorDataset {
  Tensor3 tensor;
  AxisLabels labels;

  void validate() const {
    if (!labels.matches(tensor.dims()))
      throw DataError("axis labels do not match tensor dimensions");
  }
};

}  // namespace lifetensor
