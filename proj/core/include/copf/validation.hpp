#pragma once

#include <string>
#include <vector>

#include "copf/model.hpp"

namespace copf {

struct Violation {
  std::string code;     // stable machine-readable key, e.g. "dangling_branch"
  std::string message;  // human-readable description
  std::string where;    // offending entity, e.g. "branch 3", "bus 7"
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every structural invariant of the data model plus graph connectivity.
/// Report-style: never throws, empty report iff the network is usable together
/// with the given time grid. Pure function, idempotent.
ValidationReport validate(const Network& network, const TimeGrid& grid);

}  // namespace copf
