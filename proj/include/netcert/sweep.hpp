#pragma once

// Grid sweeps over (theta1, theta2) per partition and multiplier mode, and
// the CSV / JSON / gnuplot outputs.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "netcert/certify.hpp"
#include "netcert/model.hpp"

namespace netcert {

struct PartitionReport {
  std::string name;
  bool admissible = false;
  std::vector<PartitionIssue> issues;
  std::vector<std::vector<int>> sets;
  std::vector<ElementSizes> sizes;
};

struct SweepPoint {
  std::string partition;
  MultiplierMode mode = MultiplierMode::Free;
  double theta1 = 0.0;
  double theta2 = 0.0;
  Verdict verdict = Verdict::NotEvaluated;
  double margin = 0.0;
  double seconds = 0.0;
  std::string message;
};

struct SweepResult {
  std::string model;
  StabilityReport nominal;
  std::vector<PartitionReport> partitions;
  std::vector<double> theta1;
  std::vector<double> theta2;
  std::vector<MultiplierMode> modes;
  /// Ordered by partition, mode, theta1, theta2.
  std::vector<SweepPoint> points;

  int certified(const std::string& partition, MultiplierMode mode) const;
  const SweepPoint* find(const std::string& partition, MultiplierMode mode, double theta1, double theta2) const;
};

struct SweepOptions {
  int jobs = 1;
  /// Restrict to these partition names (all when empty).
  std::vector<std::string> partitions;
  /// Override the model grid.
  std::optional<GridAxis> theta1;
  std::optional<GridAxis> theta2;
  std::optional<std::vector<MultiplierMode>> modes;
};

/// Admissibility and problem sizes of every partition in the model.
std::vector<PartitionReport> report_sizes(const ModelFile& model, const Network& network);

/// Throws NominalUnstable when the nominal network is unstable; inadmissible partitions are
/// reported and skipped.
SweepResult run_sweep(const ModelFile& model, const Network& network, const SweepOptions& options = {});

struct EmitOptions {
  /// Write 0 in the seconds column so reruns are byte-identical.
  bool timing = true;
  bool boundary = true;
};

void write_csv(const SweepResult& result, std::ostream& out, bool timing = true);
void write_summary(const SweepResult& result, std::ostream& out);
/// Feasible grid points with a non-feasible or missing 4-neighbour, one
/// gnuplot data block per (partition, mode).
void write_boundary(const SweepResult& result, std::ostream& out);

/// region.csv, summary.json and (optionally) boundary.dat under `dir`.
void emit_outputs(const SweepResult& result, const std::filesystem::path& dir, const EmitOptions& options = {});

}  // namespace netcert
