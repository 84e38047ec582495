#include <set>

#include "doctest.h"
#include "flowlhd/numerics/module.hpp"
#include "support/gradient_suite.hpp"

TEST_CASE("every registered block passes finite differences") {
  const auto reports = oracle::run_gradient_suite(3, 2024);
  std::set<std::string> covered;
  for (const auto& r : reports) {
    INFO(r.block, " param ", r.max_param_rel_err, " input ", r.max_input_rel_err);
    CHECK(r.max_param_rel_err < 1e-3);
    CHECK(r.max_input_rel_err < 1e-3);
    covered.insert(r.block);
  }
  for (const auto& b : flowlhd::numerics::block_registry()) {
    INFO(b.name);
    CHECK(covered.count(std::string(b.name)) == 1);
  }
}
