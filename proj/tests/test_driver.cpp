#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "scd/checkpoint.hpp"
#include "scd/config.hpp"
#include "scd/errors.hpp"
#include "scd/simulation.hpp"
#include "support.hpp"

using namespace scd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json desk_json() {
  std::ifstream in(fixtures::source_dir() / "configs" / "desk_triple_beam.json");
  return json::parse(in, nullptr, true, true);
}

/// The desk scenario shrunk to 1e-20 m^3 and 4.096 s so a run takes a moment.
json small_desk() {
  json j = desk_json();
  j["volume_m3"] = 1e-20;
  j["run"]["until_time_s"] = 4.096;
  return j;
}

std::shared_ptr<const RunConfig> make(const json& j) { return std::make_shared<const RunConfig>(parse_config(j)); }

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("scd_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, DeskScenarioLoadsAndRoundTrips) {
  const RunConfig cfg = fixtures::desk_config();
  EXPECT_EQ(cfg.model.source.beams.size(), 3u);
  EXPECT_EQ(cfg.model.materials.temperature_K, 783.0);
  EXPECT_EQ(cfg.leap.n_cr, 10);
  EXPECT_EQ(cfg.leap.epsilon, 0.03);
  const json once = to_json(cfg);
  EXPECT_EQ(to_json(parse_config(once)), once);
  EXPECT_EQ(physics_digest(parse_config(once)), physics_digest(cfg));
  EXPECT_EQ(physics_digest(cfg).size(), 16u);
}

TEST(Config, RepresentativeCatalogLoads) {
  const RunConfig cfg = load_config(fixtures::source_dir() / "configs" / "fe_783K_representative.json");
  EXPECT_TRUE(cfg.run.tau_leaping);
  EXPECT_EQ(cfg.model.source.beams.size(), 3u);
  Simulation sim(std::make_shared<const RunConfig>(cfg), 0);
  for (int i = 0; i < 2000; ++i) sim.step();
  EXPECT_TRUE(sim.ledger().balanced(sim.network()));
}

TEST(Config, DigestTracksPhysicsOnly) {
  json j = desk_json();
  const std::string d0 = physics_digest(parse_config(j));
  j["run"]["seed"] = 99;
  EXPECT_EQ(physics_digest(parse_config(j)), d0);
  j["temperature_K"] = 800.0;
  EXPECT_NE(physics_digest(parse_config(j)), d0);
}

TEST(Config, Errors) {
  json j = desk_json();
  j["bogus"] = 1;
  EXPECT_THROW(parse_config(j), ConfigError);

  j = desk_json();
  j["run"]["until_dose_dpa"] = 0.1;
  EXPECT_THROW(parse_config(j), ConfigError);

  j = desk_json();
  j["run"].erase("until_time_s");
  EXPECT_THROW(parse_config(j), ConfigError);

  j = desk_json();
  j["materials"]["mobile"][0]["species"] = "He2";
  EXPECT_THROW(parse_config(j), ConfigError);

  j = desk_json();
  j["leap"]["epsilon"] = 1.5;
  EXPECT_THROW(parse_config(j), ConfigError);

  j = desk_json();
  j["volume_m3"] = "big";
  EXPECT_THROW(parse_config(j), ConfigError);

  EXPECT_THROW(load_config("/nonexistent/scd.json"), ConfigError);
}

TEST(Dose, ZeroInsertionsGiveZeroDose) {
  json j = small_desk();
  for (auto& b : j["source"]["beams"]) b["event_rate_per_m3_s"] = 0.0;
  j["initial_species"] = {{"V1", 50}, {"I1", 40}};
  Simulation sim(make(j), 0);
  sim.run();
  EXPECT_EQ(sim.dose(), 0.0);
  EXPECT_TRUE(sim.ledger().balanced(sim.network()));
}

TEST(Dose, MatchesEventCountDefinition) {
  Simulation sim(make(small_desk()), 0);
  sim.run();
  const RunConfig& cfg = sim.config();
  // Only the Fe3+ beam inserts vacancies.
  std::int64_t v_per_event = 0;
  for (const auto& t : cfg.model.source.beams[0].inserts) {
    if (t.composition.point_defect > 0) v_per_event += t.count * t.composition.point_defect;
  }
  const double fe_events = double(sim.ledger().inserted[0]) / double(v_per_event);
  const double expected = fe_events * cfg.model.source.beams[0].displacements_per_event *
                          cfg.model.materials.atomic_volume_m3 / cfg.volume_m3;
  EXPECT_NEAR(sim.dose(), expected, 1e-12 * expected);
}

TEST(Dose, DeskRateReachesTenthDpaAt4096Seconds) {
  const RunConfig cfg = fixtures::desk_config();
  const Beam& fe = cfg.model.source.beams[0];
  const double rate = fe.event_rate_per_m3_s * fe.displacements_per_event * cfg.model.materials.atomic_volume_m3;
  EXPECT_NEAR(rate * 40.96, 0.1, 1e-12);
  // Stochastic check on the shrunk scenario: the event count is Poisson.
  Simulation sim(make(small_desk()), 0);
  sim.run();
  const double mean_events = fe.event_rate_per_m3_s * 1e-20 * 4.096;
  EXPECT_NEAR(sim.dose(), 0.01, 4.0 * 0.01 / std::sqrt(mean_events));
}

TEST(Dose, StopsOnDoseTarget) {
  json j = small_desk();
  j["run"].erase("until_time_s");
  j["run"]["until_dose_dpa"] = 0.002;
  Simulation sim(make(j), 0);
  sim.run();
  EXPECT_EQ(sim.stop_reason(), StopReason::Dose);
  EXPECT_GE(sim.dose(), 0.002);
  EXPECT_LT(sim.dose(), 0.002 + 2 * 10344.94 * 1.18e-29 / 1e-20);
}

TEST(Simulation, FrozenSystemTerminatesCleanly) {
  json j = small_desk();
  for (auto& b : j["source"]["beams"]) b["event_rate_per_m3_s"] = 0.0;
  j["sinks"] = json::array();
  j["materials"]["emission"] = json::object();
  j["initial_species"] = {{"V3", 5}};
  Simulation sim(make(j), 0);
  sim.run();
  EXPECT_EQ(sim.stop_reason(), StopReason::Frozen);
  EXPECT_EQ(sim.counters().loop_steps, 0);
}

TEST(Simulation, LedgerBalancesInEveryMode) {
  for (const bool leap : {false, true}) {
    for (const bool inc : {true, false}) {
      json j = small_desk();
      j["run"]["tau_leaping"] = leap;
      j["run"]["incremental_updates"] = inc;
      j["run"]["until_time_s"] = inc ? 4.096 : 0.2;
      Simulation sim(make(j), 3);
      sim.run();
      EXPECT_TRUE(sim.ledger().balanced(sim.network())) << leap << inc;
      EXPECT_EQ(sim.stop_reason(), StopReason::Time);
      EXPECT_EQ(sim.time(), j["run"]["until_time_s"].get<double>());
      if (leap) EXPECT_GT(sim.counters().leaps, 0);
    }
  }
}

TEST(Simulation, RescalingKeepsLedgerWithThinning) {
  json j = small_desk();
  j["volume_m3"] = 1e-19;
  j["run"]["until_time_s"] = 0.5;
  j["run"]["volume_rescaling"] = true;
  j["rescale"]["gamma"] = 0.9;
  j["rescale"]["cooldown_events"] = 100;
  j["rescale"]["suppress_after_insertion_events"] = 0;
  Simulation sim(make(j), 0);
  sim.run();
  EXPECT_GT(sim.counters().rescales, 0);
  EXPECT_LT(sim.network().volume(), 1e-19);
  EXPECT_TRUE(sim.ledger().balanced(sim.network()));
}

TEST(Samples, LogSpacedStateSnapshots) {
  Simulation sim(make(small_desk()), 0);
  sim.run();
  const auto& rows = sim.sample_rows();
  // 0.01 s .. 4.096 s at 16 per decade, plus the final row at 4.096 s
  std::size_t expected = 0;
  while (0.01 * std::pow(10.0, double(expected) / 16.0) < 4.096) ++expected;
  ASSERT_EQ(rows.size(), expected + 1);
  for (std::size_t i = 0; i < expected; ++i) {
    EXPECT_EQ(std::stod(rows[i].substr(0, rows[i].find(','))), 0.01 * std::pow(10.0, double(i) / 16.0));
  }
  EXPECT_EQ(std::stod(rows.back().substr(0, rows.back().find(','))), 4.096);
  EXPECT_EQ(sim.samples_csv().substr(0, sim.samples_csv().find('\n')), Simulation::csv_header());
}

TEST(Samples, ByteIdenticalForFixedSeed) {
  for (const bool leap : {false, true}) {
    json j = small_desk();
    j["run"]["tau_leaping"] = leap;
    Simulation a(make(j), 1), b(make(j), 1), c(make(j), 2);
    a.run();
    b.run();
    c.run();
    EXPECT_EQ(a.samples_csv(), b.samples_csv());
    EXPECT_NE(a.samples_csv(), c.samples_csv());
  }
}

TEST(StepLog, LeapingEmitsLeapRecords) {
  json j = small_desk();
  j["run"]["tau_leaping"] = true;
  Simulation sim(make(j), 0);
  std::int64_t leaps = 0, direct = 0, records = 0;
  double last_t = 0.0;
  sim.set_step_callback([&](const StepRecord& r) {
    ++records;
    if (r.mode == "leap") ++leaps;
    if (r.mode == "direct") ++direct;
    EXPECT_GE(r.t, last_t);
    last_t = r.t;
  });
  sim.run();
  EXPECT_EQ(leaps, sim.counters().leaps);
  EXPECT_EQ(direct, sim.counters().direct_steps);
  EXPECT_GT(leaps, 0);
}

TEST(Checkpoint, RoundTripIsFieldwiseEqual) {
  json j = small_desk();
  j["run"]["tau_leaping"] = true;
  Simulation sim(make(j), 2);
  for (int i = 0; i < 3000; ++i) sim.step();
  const auto bytes = encode_checkpoint(sim);
  const Simulation back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(back.time(), sim.time());
  EXPECT_EQ(back.dose(), sim.dose());
  EXPECT_EQ(back.replica(), 2);
  EXPECT_TRUE(back.rng() == sim.rng());
  EXPECT_EQ(back.counters().loop_steps, sim.counters().loop_steps);
  EXPECT_EQ(back.network().total_rate(), sim.network().total_rate());
  EXPECT_EQ(back.network().reaction_count(), sim.network().reaction_count());
  EXPECT_EQ(back.leap_state().reactions().size(), sim.leap_state().reactions().size());
  EXPECT_EQ(back.sample_rows(), sim.sample_rows());
}

TEST(Checkpoint, ResumeIsBitIdentical) {
  for (const bool leap : {false, true}) {
    json j = small_desk();
    j["run"]["tau_leaping"] = leap;
    Simulation whole(make(j), 0);
    whole.run();

    Simulation first(make(j), 0);
    for (int i = 0; i < 5000; ++i) first.step();
    const fs::path dir = scratch_dir("resume");
    write_checkpoint(dir / "mid.bin", first);
    Simulation second = read_checkpoint(dir / "mid.bin");
    second.run();
    EXPECT_EQ(second.samples_csv(), whole.samples_csv()) << "leap " << leap;
    EXPECT_EQ(second.counters().loop_steps, whole.counters().loop_steps);
    fs::remove_all(dir);
  }
}

TEST(Checkpoint, CorruptionIsRefused) {
  Simulation sim(make(small_desk()), 0);
  for (int i = 0; i < 100; ++i) sim.step();
  auto bytes = encode_checkpoint(sim);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), CheckpointError);

  auto bad_version = bytes;
  bad_version[8] = std::uint8_t(kCheckpointVersion + 1);
  try {
    decode_checkpoint(bad_version);
    FAIL() << "version mismatch accepted";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }

  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW(decode_checkpoint(truncated), CheckpointError);

  EXPECT_THROW(read_checkpoint("/nonexistent/ck.bin"), CheckpointError);
}

TEST(Checkpoint, PeriodicFilesAreWritten) {
  json j = small_desk();
  j["run"]["checkpoint_every_steps"] = 2000;
  Simulation sim(make(j), 0);
  const fs::path dir = scratch_dir("periodic");
  sim.set_checkpoint_dir(dir);
  sim.run();
  EXPECT_TRUE(fs::exists(dir / "checkpoint_r0_2000.bin"));
  const Simulation back = read_checkpoint(dir / "checkpoint_r0_2000.bin");
  EXPECT_EQ(back.counters().loop_steps, 2000);
  fs::remove_all(dir);
}

// --- command line -------------------------------------------------------------

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SCD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_json(const fs::path& dir, const json& j) {
  const fs::path p = dir / "cfg.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST(Cli, ExitCodesAndOutputs) {
  const fs::path dir = scratch_dir("cli");
  json j = small_desk();
  j["run"]["until_time_s"] = 0.5;
  const fs::path cfg = write_json(dir, j);

  EXPECT_EQ(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "out").string() +
                    " --replicas 2 --tau-leaping=on --step-log"),
            0);
  EXPECT_TRUE(fs::exists(dir / "out" / "samples_r0.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "samples_r1.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "steps_r0.log"));
  const json summary = json::parse(slurp(dir / "out" / "summary_r1.json"));
  EXPECT_TRUE(summary["ledger"]["balanced"].get<bool>());

  EXPECT_EQ(run_cli("--config /nonexistent.json"), 1);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --tau-leaping maybe"), 1);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --epsilon 2"), 1);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --seed notanumber"), 1);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("--resume /nonexistent.bin"), 3);
  std::ofstream(dir / "junk.bin") << "not a checkpoint";
  EXPECT_EQ(run_cli("--resume " + (dir / "junk.bin").string()), 3);
  fs::remove_all(dir);
}

TEST(Cli, FreshRunReplacesStepLog) {
  const fs::path dir = scratch_dir("cli_log");
  json j = small_desk();
  j["run"]["until_time_s"] = 0.2;
  const fs::path cfg = write_json(dir, j);
  const std::string args = "--config " + cfg.string() + " --out-dir " + (dir / "out").string() + " --step-log";
  ASSERT_EQ(run_cli(args), 0);
  const std::string first = slurp(dir / "out" / "steps_r0.log");
  ASSERT_EQ(run_cli(args), 0);
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(slurp(dir / "out" / "steps_r0.log"), first);
  fs::remove_all(dir);
}

TEST(Cli, EnvironmentOverridesOutputDirectory) {
  const fs::path dir = scratch_dir("cli_env");
  json j = small_desk();
  j["run"]["until_time_s"] = 0.1;
  const fs::path cfg = write_json(dir, j);
  const std::string cmd = "SCD_OUT_DIR=" + (dir / "env").string() + " " + SCD_CLI_PATH + " --config " + cfg.string() +
                          " >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "env" / "samples_r0.csv"));
  fs::remove_all(dir);
}

TEST(Cli, ResumeSplitReproducesSamples) {
  const fs::path dir = scratch_dir("cli_resume");
  json j = small_desk();
  j["run"]["until_time_s"] = 1.0;
  const fs::path cfg = write_json(dir, j);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "whole").string()), 0);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "split").string() + " --checkpoint-every 1000"),
            0);
  ASSERT_TRUE(fs::exists(dir / "split" / "checkpoint_r0_1000.bin"));
  ASSERT_EQ(run_cli("--resume " + (dir / "split" / "checkpoint_r0_1000.bin").string() + " --out-dir " +
                    (dir / "resumed").string()),
            0);
  EXPECT_EQ(slurp(dir / "resumed" / "samples_r0.csv"), slurp(dir / "whole" / "samples_r0.csv"));
  fs::remove_all(dir);
}
