#pragma once

#include <string>

namespace medpipe {

// Runs an external judge command with payload_json on stdin. The command
// must exit 0 and print a JSON object {"score": s} with s in [0, 1] on
// stdout. Anything else raises Error("judge_failed"); scores are never
// fabricated on failure.
double invoke_judge(const std::string& command, const std::string& payload_json);

}  // namespace medpipe
