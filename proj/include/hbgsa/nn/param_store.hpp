//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hbgsa/nn/tensor.hpp"

namespace hbgsa::nn {

template <class T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  // Set when a backward pass reached this parameter since the last
  // zero_grad(); disabled branches leave it false.
  bool touched = false;
};

// Ordered registry of trainable tensors. Iteration order is insertion order;
// parameter addresses are stable for the lifetime of the store.
template <class T>
class ParamStore {
public:
  ParamStore() = default;
  ParamStore(const ParamStore &other);
  ParamStore &operator=(const ParamStore &other);
  ParamStore(ParamStore &&) noexcept = default;
  ParamStore &operator=(ParamStore &&) noexcept = default;

  Parameter<T> &add(std::string name, Tensor<T> value);

  // Uniform(-bound, bound) with bound = 1/sqrt(fan_in).
  Parameter<T> &add_fan_in_uniform(std::string name, Shape shape,
                                   std::size_t fan_in, std::mt19937_64 &rng);
  Parameter<T> &add_normal(std::string name, Shape shape, double stddev,
                           std::mt19937_64 &rng);
  Parameter<T> &add_constant(std::string name, Shape shape, T value);

  bool contains(std::string_view name) const;
  Parameter<T> &get(std::string_view name);
  const Parameter<T> &get(std::string_view name) const;

  std::size_t size() const noexcept { return params_.size(); }
  Parameter<T> &operator[](std::size_t i) { return *params_[i]; }
  const Parameter<T> &operator[](std::size_t i) const { return *params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

  // Total number of scalar entries across all parameters.
  std::size_t element_count() const;

  void zero_grad();

  // Copies values from `other` (same names and shapes, any precision).
  template <class U>
  void assign_from(const ParamStore<U> &other);

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto &p: params_)
      out.add(p->name, p->value.template cast<U>());
    return out;
  }

private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <class T>
template <class U>
void ParamStore<T>::assign_from(const ParamStore<U> &other) {
  if (other.size() != size())
    throw ShapeError("parameter store size mismatch: "
                     + std::to_string(other.size()) + " vs "
                     + std::to_string(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    auto &dst = *params_[i];
    const auto &src = other[i];
    if (dst.name != src.name || dst.value.shape() != src.value.shape())
      throw ShapeError("parameter mismatch at '" + dst.name + "' vs '"
                       + src.name + "'");
    for (std::size_t j = 0; j < dst.value.size(); ++j)
      dst.value[j] = static_cast<T>(src.value[j]);
  }
}

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace hbgsa::nn
