#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lftkit/analysis.hpp"
#include "lftkit/cfnn.hpp"
#include "lftkit/config.hpp"
#include "lftkit/falsify.hpp"
#include "lftkit/lpvlft.hpp"
#include "lftkit/sysid.hpp"

namespace lftkit {

NonlinearSystem make_system(const PipelineConfig& config);
Hyperrectangle make_envelope(const PipelineConfig& config, const NonlinearSystem& sys);

/// Replaces the full-count marker by l, drops duplicates and sorts.
/// Throws DomainError for entries above l.
std::vector<int> resolve_m_list(const std::vector<int>& m, int l);

/// Seeds derived from the run seed, one per randomized stage.
struct StageSeeds {
  std::uint64_t gendata = 0;
  std::uint64_t bound = 0;
  std::uint64_t cfnn(int m) const { return cfnn_base + static_cast<std::uint64_t>(m); }
  std::uint64_t cfnn_base = 0;
};
StageSeeds derive_seeds(std::uint64_t seed);

/// Parameters of a reduced candidate as a function of w = (x̄, ū).
std::function<Vector(const Vector&)> candidate_scheduler(const LpvModel& full, int m, const Cfnn* net);

struct InvariantCheck {
  std::string id;
  std::string description;
  bool passed = true;
  bool skipped = false;
  std::string detail;
};

/// Stage runner. Every stage reads its inputs from and writes its outputs
/// to the output directory and records itself in manifest.json.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::filesystem::path out_dir);

  static const std::vector<std::string>& stage_names();

  void identify();
  void lpvify();
  void lftize();
  void gendata();
  void reduce();
  void bound();
  void analyze();
  /// Runs the invariant suite on whatever artifacts exist.
  std::vector<InvariantCheck> validate();

  /// Runs the named stage.
  void run_stage(const std::string& name);
  /// Runs every stage from `from` (inclusive) to the end.
  void run_all(const std::string& from = "identify");

  const PipelineConfig& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_; }

 private:
  std::filesystem::path path(const std::string& file) const { return out_ / file; }
  void record(const std::string& stage, double seconds, const std::vector<std::string>& artifacts,
              io::Json extra = nullptr);
  std::vector<int> m_values(int l) const;

  PipelineConfig config_;
  std::filesystem::path out_;
};

}  // namespace lftkit
