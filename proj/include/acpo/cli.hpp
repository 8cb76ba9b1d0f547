#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "acpo/attribution.hpp"
#include "acpo/trace.hpp"

namespace acpo {

/// Per-step fields of one segments line; absent vectors are omitted.
struct SegmentAnnotations {
  const AttributionProfile* profile = nullptr;
  std::span<const double> weights;
};

/// One JSON line: {"id","statistic","boundaries","steps":[{"start","end",...}]}.
void write_segments(std::ostream& out, const SegmentedTrajectory& seg,
                    const SegmentAnnotations& annotations = {});

/// reward.dat, entropy.dat and length.dat from a metrics.csv, one
/// "iter value" row per metrics row with both fields copied verbatim, no header.
void write_report(const std::filesystem::path& metrics_csv, const std::filesystem::path& out_dir);

/// Runs one subcommand; args excludes the program name. Errors go to `err`
/// prefixed with "acpo-error:". Returns 0, 1 (validation) or 2 (runtime).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace acpo
