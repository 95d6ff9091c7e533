#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "graphnls/nls.hpp"

namespace graphnls::cli {

/// Exit codes: 0 success, 1 solver failure, 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSolver = 1;
inline constexpr int kExitUsage = 2;

int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct SweepRow {
  double mass = 0.0;
  GroundStateStatus status = GroundStateStatus::MaxIters;
  double energy = 0.0;
  double omega = 0.0;
  double residual = 0.0;
  double runaway_fraction = 0.0;
  std::optional<std::size_t> runaway_edge;
  std::size_t iterations = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;  // sorted by mass
  std::optional<double> largest_converged;
  std::optional<double> smallest_runaway;
};

/// Ground-state solves over a mass grid, run on up to `threads` workers.
SweepTable sweep(const LinearForm& form, const NlsParams& base, std::vector<double> masses, std::size_t threads);

/// Worker cap from GRAPHNLS_THREADS (default: hardware concurrency).
std::size_t thread_cap();

}  // namespace graphnls::cli
