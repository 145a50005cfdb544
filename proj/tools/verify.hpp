#pragma once

#include <ostream>
#include <string>

namespace ickd::tools {

// Runs the invariant battery, printing one PASS/FAIL line per check.
// inject_fault names a deliberate corruption used to prove the battery can
// fail ("kl_sign" flips the KL sign inside the equivalence check).
bool run_verify(std::ostream& out, const std::string& inject_fault);

} // namespace ickd::tools
