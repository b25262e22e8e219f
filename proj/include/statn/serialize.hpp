#pragma once

#include <string>

#include "statn/pipeline.hpp"

namespace statn {

// Self-describing text container (tag "statn-v1"): model dims, layer specs
// and every parameter tensor as decimal floats with 17 significant digits,
// which round-trip doubles bit-exactly.
void save_model(const StaTNModel& model, const std::string& path);
StaTNModel load_model(const std::string& path);

}  // namespace statn
