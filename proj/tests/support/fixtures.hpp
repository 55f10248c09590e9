#pragma once

#include <doctest.h>

#include <string>

#include "skillstate/graph_io.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
  return std::string(SKILLSTATE_FIXTURES_DIR) + "/" + name;
}

inline skillstate::SkillStateGraph load_fixture(const std::string& name) {
  auto loaded = skillstate::load_graph_file(fixture_path(name));
  if (!loaded.ok()) {
    FAIL(name << " did not load:\n"
              << skillstate::format_diagnostics(loaded.error()));
  }
  return std::move(loaded).take();
}

}  // namespace testsupport
