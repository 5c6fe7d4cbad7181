#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace ftrluq {

// Runs the ten acceptance criteria end to end, printing one PASS/FAIL line
// per criterion with the measured numbers and timing. Artifacts for the
// determinism criterion are written under out_dir. Returns true iff every
// criterion passed.
bool run_acceptance(std::uint64_t seed, const std::string& out_dir,
                    std::ostream& os);

}  // namespace ftrluq
