#pragma once

// One replica of the event loop: sweeps, direct steps, leap attempts with
// fallback, volume rescaling, insertion bookkeeping, log-spaced sampling and
// checkpoint hooks.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "scd/config.hpp"
#include "scd/network.hpp"
#include "scd/rescale.hpp"
#include "scd/rng.hpp"
#include "scd/tau_leap.hpp"

namespace scd {

/// Concentrations (1/m^3) of the reported species classes.
struct ClassConcentrations {
  double v_all = 0.0;  // every vacancy-type cluster
  double v = 0.0;      // pure V_n
  double v_he = 0.0;   // V_n He_m
  double v_h = 0.0;    // V_n H_k
  double v_he_h = 0.0; // V_n He_m H_k
  double i_all = 0.0;  // every interstitial-type cluster
  double he1 = 0.0;
  double h1 = 0.0;
};

ClassConcentrations class_concentrations(const ReactionNetwork& net);

struct Counters {
  std::int64_t loop_steps = 0;    // iterations that advanced the clock
  std::int64_t direct_steps = 0;
  std::int64_t leaps = 0;
  std::int64_t leap_firings = 0;
  std::int64_t leap_criticals = 0;
  std::int64_t fallbacks = 0;
  std::int64_t halvings = 0;
  std::int64_t insertions = 0;
  std::int64_t rescales = 0;
  std::int64_t resyncs = 0;
  std::int64_t drift_recoveries = 0;
};

/// Per-constituent (V, I, He, H) unit ledger.
struct DefectLedger {
  std::array<std::int64_t, 4> inserted{};
  std::array<std::int64_t, 4> absorbed{};
  std::array<std::int64_t, 4> recombined{};
  std::array<std::int64_t, 4> thinned{};

  static std::array<std::int64_t, 4> in_volume(const ReactionNetwork& net);
  /// inserted == in_volume + absorbed + recombined + thinned, per constituent.
  bool balanced(const ReactionNetwork& net) const;
};

enum class StopReason { Running, Time, Dose, Frozen };
std::string_view to_string(StopReason r);

struct StepRecord {
  double t = 0.0;   // clock after the step
  double dt = 0.0;
  std::string_view mode;  // "direct", "leap", "critical", "rescale"
  std::string_view kind;  // reaction kind, empty for leaps and rescales
  std::int64_t count = 1;
};

class Simulation {
 public:
  Simulation(std::shared_ptr<const RunConfig> cfg, int replica);

  /// One loop iteration. Returns false once a stop condition is reached.
  bool step();
  void run();

  const RunConfig& config() const { return *cfg_; }
  int replica() const { return replica_; }
  double time() const { return t_; }
  double dose() const { return dose_; }
  StopReason stop_reason() const { return stop_; }
  const ReactionNetwork& network() const { return net_; }
  const LeapState& leap_state() const { return leap_; }
  const RngStream& rng() const { return rng_; }
  const Counters& counters() const { return counters_; }
  const DefectLedger& ledger() const { return ledger_; }

  static std::string csv_header();
  const std::vector<std::string>& sample_rows() const { return rows_; }
  std::string samples_csv() const;

  void set_step_callback(std::function<void(const StepRecord&)> cb) { on_step_ = std::move(cb); }
  /// Checkpoints are written here every run.checkpoint_every_steps loop steps.
  void set_checkpoint_dir(std::filesystem::path dir) { checkpoint_dir_ = std::move(dir); }
  /// Stop conditions may be changed on a resumed run.
  void set_stop(std::optional<double> until_time_s, std::optional<double> until_dose_dpa);

 private:
  friend struct CheckpointCodec;
  struct Resumed {};
  Simulation(std::shared_ptr<const RunConfig> cfg, int replica, Resumed);

  double sample_time(std::int64_t index) const;
  void emit_samples_before(double t_limit);
  void emit_final_samples();
  void push_row(double t);
  void stop(StopReason reason);

  void sweep_after_event();
  void maintenance();
  bool do_direct_step();
  void account(const ReactionEntry& e, std::int64_t count);
  void notify(double dt, std::string_view mode, std::string_view kind, std::int64_t count);

  std::shared_ptr<const RunConfig> cfg_;
  int replica_ = 0;
  std::optional<double> until_time_;
  std::optional<double> until_dose_;

  ReactionNetwork net_;
  LeapState leap_;
  RngStream rng_;

  double t_ = 0.0;
  double dose_ = 0.0;
  StopReason stop_ = StopReason::Running;
  std::int64_t ssa_budget_ = 0;  // forced direct steps left after a fallback
  std::int64_t since_rescale_ = 0;
  std::int64_t since_insertion_ = 0;
  std::int64_t since_resync_ = 0;
  std::int64_t last_checkpoint_step_ = -1;
  Counters counters_;
  DefectLedger ledger_;

  std::int64_t next_sample_ = 0;
  std::vector<std::string> rows_;

  std::function<void(const StepRecord&)> on_step_;
  std::filesystem::path checkpoint_dir_;
};

}  // namespace scd
