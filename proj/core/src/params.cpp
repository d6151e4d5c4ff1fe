#include "csynth/params.hpp"

#include <stdexcept>

#include "csynth/errors.hpp"

namespace csynth::ad {

void ParamSet::add(const std::string& name, Tensor value) {
  if (name.empty()) throw std::invalid_argument("params: empty parameter name");
  if (!values_.emplace(name, std::move(value)).second) {
    throw std::invalid_argument("params: duplicate parameter '" + name + "'");
  }
}

void ParamSet::set(const std::string& name, Tensor value) {
  Tensor& slot = mutable_at(name);
  if (!slot.same_shape(value)) {
    throw ShapeError("params: cannot change shape of '" + name + "' from " +
                     shape_string(slot.shape()) + " to " + shape_string(value.shape()));
  }
  slot = std::move(value);
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("params: no parameter '" + name + "'");
  return it->second;
}

Tensor& ParamSet::mutable_at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("params: no parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : values_) n += v.size();
  return n;
}

}  // namespace csynth::ad
