#include <doctest.h>

#include "modseg/opcheck.hpp"

using namespace modseg;

TEST_SUITE_BEGIN("gradsuite");

TEST_CASE("the full gradient suite passes under 1e-3") {
  const auto checks = run_gradcheck_suite(42);
  CHECK(checks.size() > 20);
  for (const OpCheck& c : checks) {
    INFO(c.name, " err=", c.err);
    CHECK(c.ok());
  }
}

TEST_SUITE_END();
