#include "flowlhd/numerics/param_store.hpp"

#include <cmath>

#include "flowlhd/errors.hpp"

namespace flowlhd::numerics {

Parameter& ParamStore::add(std::string name, Tensor init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->grad = Tensor::zeros_like(init);
  p->value = std::move(init);
  p->name = name;
  index_.emplace(std::move(name), entries_.size());
  entries_.push_back(std::move(p));
  return *entries_.back();
}

Parameter* ParamStore::find(std::string_view name) noexcept {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : entries_[it->second].get();
}

bool ParamStore::contains(std::string_view name) const noexcept { return index_.count(std::string(name)) != 0; }

Parameter& ParamStore::get(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

const Parameter& ParamStore::get(std::string_view name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p->value.numel();
  return n;
}

void ParamStore::zero_grad() noexcept {
  for (auto& p : entries_) p->grad.fill(0.0);
}

double ParamStore::grad_norm() const noexcept {
  double s = 0.0;
  for (const auto& p : entries_) {
    for (double g : p->grad.values()) s += g * g;
  }
  return std::sqrt(s);
}

}  // namespace flowlhd::numerics
