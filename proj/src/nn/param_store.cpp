//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/nn/param_store.hpp"

#include <cmath>

namespace hbgsa::nn {

template <class T>
ParamStore<T>::ParamStore(const ParamStore &other) {
  for (const auto &p: other.params_) {
    auto &q = add(p->name, p->value);
    q.grad = p->grad;
    q.touched = p->touched;
  }
}

template <class T>
ParamStore<T> &ParamStore<T>::operator=(const ParamStore &other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <class T>
Parameter<T> &ParamStore<T>::add(std::string name, Tensor<T> value) {
  if (index_.contains(name))
    throw ConfigError("duplicate parameter name '" + name + "'");
  index_.emplace(name, params_.size());
  auto p = std::make_unique<Parameter<T>>();
  p->name = std::move(name);
  p->value = std::move(value);
  params_.push_back(std::move(p));
  return *params_.back();
}

template <class T>
Parameter<T> &ParamStore<T>::add_fan_in_uniform(std::string name, Shape shape,
                                                std::size_t fan_in,
                                                std::mt19937_64 &rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> value(std::move(shape));
  for (auto &v: value.values())
    v = static_cast<T>(dist(rng));
  return add(std::move(name), std::move(value));
}

template <class T>
Parameter<T> &ParamStore<T>::add_normal(std::string name, Shape shape,
                                        double stddev, std::mt19937_64 &rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor<T> value(std::move(shape));
  for (auto &v: value.values())
    v = static_cast<T>(dist(rng));
  return add(std::move(name), std::move(value));
}

template <class T>
Parameter<T> &ParamStore<T>::add_constant(std::string name, Shape shape,
                                          T value) {
  return add(std::move(name), Tensor<T>(std::move(shape), value));
}

template <class T>
bool ParamStore<T>::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

template <class T>
Parameter<T> &ParamStore<T>::get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    throw NotFoundError("no parameter named '" + std::string(name) + "'");
  return *params_[it->second];
}

template <class T>
const Parameter<T> &ParamStore<T>::get(std::string_view name) const {
  return const_cast<ParamStore *>(this)->get(name);
}

template <class T>
std::size_t ParamStore<T>::element_count() const {
  std::size_t n = 0;
  for (const auto &p: params_)
    n += p->value.size();
  return n;
}

template <class T>
void ParamStore<T>::zero_grad() {
  for (auto &p: params_) {
    p->grad.fill(T(0));
    p->touched = false;
  }
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace hbgsa::nn
