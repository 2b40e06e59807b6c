#pragma once
#include <iosfwd>

#include "json.hpp"
#include "kam/engine.hpp"

namespace kam {

// Nonfinite doubles become null.
nlohmann::ordered_json num(double x);

nlohmann::ordered_json step_json(const StepReport& s, int dim);
nlohmann::ordered_json summary_json(const ReductionTrace& t);
// One object per step, then one summary object.
void write_trace_jsonl(std::ostream& os, const ReductionTrace& t);

nlohmann::ordered_json error_json(const std::string& kind, const std::string& code,
                                  const std::string& message);

}  // namespace kam
