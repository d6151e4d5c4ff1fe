#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csynth/tensor.hpp"

namespace csynth::ad {

/// Named trainable blocks. Names are unique and shapes never change after add().
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::uint64_t rng_seed) : rng_seed_(rng_seed) {}

  void add(const std::string& name, Tensor value);
  /// Replace the value of an existing block; the shape must be unchanged.
  void set(const std::string& name, Tensor value);

  [[nodiscard]] const Tensor& at(const std::string& name) const;
  [[nodiscard]] Tensor& mutable_at(const std::string& name);
  [[nodiscard]] bool contains(const std::string& name) const { return values_.count(name) != 0; }
  [[nodiscard]] std::vector<std::string> names() const;
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;

  [[nodiscard]] std::uint64_t rng_seed() const noexcept { return rng_seed_; }
  void set_rng_seed(std::uint64_t seed) noexcept { rng_seed_ = seed; }

  [[nodiscard]] auto begin() const { return values_.begin(); }
  [[nodiscard]] auto end() const { return values_.end(); }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::map<std::string, Tensor> values_;
  std::uint64_t rng_seed_ = 0;
};

}  // namespace csynth::ad
