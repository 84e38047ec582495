#include "flowlhd/errors.hpp"

namespace flowlhd {

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const FormatError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace flowlhd
