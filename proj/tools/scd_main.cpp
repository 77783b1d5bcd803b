// scd: run stochastic cluster dynamics replicas from a JSON configuration.

#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scd/checkpoint.hpp"
#include "scd/config.hpp"
#include "scd/errors.hpp"
#include "scd/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kInvariant = 2, kCheckpoint = 3 };

bool parse_switch(const std::string& v, const std::string& flag) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw scd::ConfigError(flag + " expects on or off, got '" + v + "'");
}

json summary_of(const scd::Simulation& sim) {
  const auto& c = sim.counters();
  const auto& l = sim.ledger();
  return {{"replica", sim.replica()},
          {"stop_reason", std::string(scd::to_string(sim.stop_reason()))},
          {"time_s", sim.time()},
          {"dose_dpa", sim.dose()},
          {"volume_m3", sim.network().volume()},
          {"species", sim.network().species().size()},
          {"reactions", sim.network().reaction_count()},
          {"counters",
           {{"loop_steps", c.loop_steps},
            {"direct_steps", c.direct_steps},
            {"leaps", c.leaps},
            {"leap_firings", c.leap_firings},
            {"leap_criticals", c.leap_criticals},
            {"fallbacks", c.fallbacks},
            {"halvings", c.halvings},
            {"insertions", c.insertions},
            {"rescales", c.rescales},
            {"resyncs", c.resyncs}}},
          {"ledger",
           {{"order", {"V", "I", "He", "H"}},
            {"inserted", l.inserted},
            {"in_volume", scd::DefectLedger::in_volume(sim.network())},
            {"absorbed", l.absorbed},
            {"recombined", l.recombined},
            {"thinned", l.thinned},
            {"balanced", l.balanced(sim.network())}}}};
}

// A resumed run extends its step log; a fresh run starts a new one.
void run_one(scd::Simulation& sim, const fs::path& out_dir, bool step_log, bool resumed) {
  const std::string tag = "_r" + std::to_string(sim.replica());
  std::ofstream log;
  if (step_log) {
    log.open(out_dir / ("steps" + tag + ".log"), resumed ? std::ios::app : std::ios::trunc);
    log.precision(17);
    sim.set_step_callback([&log](const scd::StepRecord& r) {
      log << r.t << ',' << r.dt << ',' << r.mode << ',' << r.kind << ',' << r.count << '\n';
    });
  }
  sim.set_checkpoint_dir(out_dir);
  sim.run();
  std::ofstream(out_dir / ("samples" + tag + ".csv"), std::ios::trunc) << sim.samples_csv();
  std::ofstream(out_dir / ("summary" + tag + ".json"), std::ios::trunc) << summary_of(sim).dump(2) << '\n';
}

int classify(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const scd::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const scd::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kConfig;
  } catch (const scd::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kCheckpoint;
  } catch (const scd::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic cluster dynamics with incremental network updates, tau-leaping and volume rescaling"};
  std::string config_path, resume_path, out_dir, tau, rescale, incremental;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<double> until_time, until_dose, gamma, epsilon;
  std::optional<std::int64_t> ncr, checkpoint_every;
  bool step_log = false;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "Base random seed");
  app.add_option("--replicas", replicas, "Number of independent replicas");
  app.add_option("--until-time", until_time, "Stop at this simulated time [s]");
  app.add_option("--until-dose", until_dose, "Stop at this dose [dpa]");
  app.add_option("--tau-leaping", tau, "on|off");
  app.add_option("--rescale", rescale, "on|off");
  app.add_option("--incremental", incremental, "on|off (off = full network rebuild every event)");
  app.add_option("--gamma", gamma, "Volume ratio per rescale");
  app.add_option("--ncr", ncr, "Criticality threshold n_cr");
  app.add_option("--epsilon", epsilon, "Leap error-control parameter");
  app.add_option("--checkpoint-every", checkpoint_every, "Checkpoint interval in loop steps (0 = off)");
  app.add_option("--resume", resume_path, "Resume from a checkpoint file");
  app.add_option("--out-dir", out_dir, "Output directory");
  app.add_flag("--step-log", step_log, "Write one line per loop step");
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (config_path.empty() == resume_path.empty()) {
      throw scd::ConfigError("exactly one of --config and --resume is required");
    }
    fs::path dir = out_dir;
    if (dir.empty()) {
      if (const char* env = std::getenv("SCD_OUT_DIR"); env && *env) dir = env;
    }

    if (!resume_path.empty()) {
      scd::Simulation sim = scd::read_checkpoint(resume_path);
      if (until_time || until_dose) sim.set_stop(until_time, until_dose);
      if (dir.empty()) dir = sim.config().run.out_dir.empty() ? "scd_out" : sim.config().run.out_dir;
      fs::create_directories(dir);
      run_one(sim, dir, step_log || sim.config().run.step_log, true);
      std::cout << "replica " << sim.replica() << ": stopped (" << scd::to_string(sim.stop_reason()) << ") at t = "
                << sim.time() << " s\n";
      return kOk;
    }

    scd::RunConfig cfg = scd::load_config(config_path);
    if (seed) cfg.run.seed = *seed;
    if (replicas) cfg.run.replicas = *replicas;
    if (until_time) {
      cfg.run.until_time_s = until_time;
      if (!until_dose) cfg.run.until_dose_dpa.reset();
    }
    if (until_dose) {
      cfg.run.until_dose_dpa = until_dose;
      if (!until_time) cfg.run.until_time_s.reset();
    }
    if (!tau.empty()) cfg.run.tau_leaping = parse_switch(tau, "--tau-leaping");
    if (!rescale.empty()) cfg.run.volume_rescaling = parse_switch(rescale, "--rescale");
    if (!incremental.empty()) cfg.run.incremental_updates = parse_switch(incremental, "--incremental");
    if (gamma) cfg.rescale.gamma = *gamma;
    if (ncr) cfg.leap.n_cr = *ncr;
    if (epsilon) cfg.leap.epsilon = *epsilon;
    if (checkpoint_every) cfg.run.checkpoint_every_steps = *checkpoint_every;
    if (step_log) cfg.run.step_log = true;
    cfg.validate();
    if (dir.empty()) dir = cfg.run.out_dir.empty() ? "scd_out" : cfg.run.out_dir;
    fs::create_directories(dir);

    auto shared = std::make_shared<const scd::RunConfig>(std::move(cfg));
    std::vector<std::exception_ptr> errors(shared->run.replicas);
    std::vector<std::thread> workers;
    std::mutex io;
    for (int r = 0; r < shared->run.replicas; ++r) {
      workers.emplace_back([&, r] {
        try {
          scd::Simulation sim(shared, r);
          run_one(sim, dir, shared->run.step_log, false);
          std::lock_guard lock(io);
          std::cout << "replica " << r << ": stopped (" << scd::to_string(sim.stop_reason()) << ") at t = "
                    << sim.time() << " s, " << sim.counters().loop_steps << " loop steps\n";
        } catch (...) {
          errors[r] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    int code = kOk;
    for (const auto& e : errors) {
      if (e) code = std::max(code, classify(e));
    }
    return code;
  } catch (...) {
    return classify(std::current_exception());
  }
}
