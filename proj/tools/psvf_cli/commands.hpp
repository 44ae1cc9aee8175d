#pragma once

#include "config.hpp"

namespace psvf::cli {

// Exit codes: 0 success, 2 config error (raised as ConfigError by the
// caller), 3 partial failures recorded in the output manifest.
int cmd_simulate(const RunConfig& cfg, bool quiet);
int cmd_classify_fate(const RunConfig& cfg, bool quiet);
int cmd_cycles(const RunConfig& cfg, bool quiet);
int cmd_sliding_portrait(const RunConfig& cfg, bool quiet);
int cmd_return_map_iterate(const RunConfig& cfg, double x0, double y0, int n, bool quiet);
int cmd_return_map_linearize(const RunConfig& cfg, double x0, bool quiet);

}  // namespace psvf::cli
