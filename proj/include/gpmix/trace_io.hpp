#pragma once

#include <string>

#include "gpmix/gibbs.hpp"

namespace gpmix {

// Line-delimited trace format: a versioned header object on the first line
// (model, run configuration, training data, transform), then one record
// object per line. Field names are embedded so the files stay diff-able
// and language-neutral.
void write_trace(const ChainTrace& trace, const std::string& path);

// Throws std::runtime_error with the offending line number on parse errors.
ChainTrace read_trace(const std::string& path);

}  // namespace gpmix
