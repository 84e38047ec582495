#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flowlhd/numerics/tensor.hpp"

namespace flowlhd::numerics {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value
};

// Owns every trainable tensor of a model. Entries keep stable addresses, so
// blocks hold raw Parameter pointers into the store. Iteration follows
// insertion order, which is also the checkpoint order.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter& add(std::string name, Tensor init);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name) noexcept;
  bool contains(std::string_view name) const noexcept;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const noexcept;
  void zero_grad() noexcept;
  double grad_norm() const noexcept;

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& p : entries_) fn(*p);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& p : entries_) fn(static_cast<const Parameter&>(*p));
  }

 private:
  std::vector<std::unique_ptr<Parameter>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace flowlhd::numerics
