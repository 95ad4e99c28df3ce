#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "parasim/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInvalid = 2;
constexpr int kCapped = 3;

void report(const parasim::RunResult& r) {
  std::cout << "artifacts: " << r.dir.string() << '\n';
  for (const auto& o : r.manifest.at("outputs")) {
    std::cout << "  " << o.at("file").get<std::string>() << "  " << o.at("sha256").get<std::string>() << '\n';
  }
  if (r.cap_flagged) std::cout << "cap flagged: partial results (max_cells reached)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching cell population with parasite dynamics: experiments and checks"};
  app.set_version_flag("--version", std::string(parasim::kToolVersion));
  app.require_subcommand(1);

  std::string config_path, manifest_path, out_dir;
  unsigned workers = 0;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  auto* workers_opt = run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "Master seed override");

  auto* rep = app.add_subcommand("replay", "Re-run a manifest and compare output checksums");
  rep->add_option("manifest", manifest_path, "manifest.json of a previous run")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", out_dir, "Output directory (default: <manifest dir>/replay)");
  auto* rep_workers = rep->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  parasim::RunOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  try {
    if (run->parsed()) {
      if (*workers_opt) opts.workers = workers;
      if (*seed_opt) opts.master_seed = seed;
      const auto cfg = parasim::load_config(config_path);
      const auto r = parasim::run_experiment(cfg, opts);
      report(r);
      return r.cap_flagged ? kCapped : kOk;
    }
    if (*rep_workers) opts.workers = workers;
    const auto r = parasim::replay(manifest_path, opts);
    report(r.run);
    if (r.identical) {
      std::cout << "replay: identical checksums\n";
    } else {
      std::cout << "replay: checksum mismatch, reported as a fresh run; differing files:\n";
      for (const auto& f : r.mismatched) std::cout << "  " << f << '\n';
    }
    return r.run.cap_flagged ? kCapped : kOk;
  } catch (const parasim::VersionMismatch& e) {
    std::cerr << "refusing to replay: manifest version " << e.manifest_version << ", tool version "
              << e.tool_version << '\n';
    return kInvalid;
  } catch (const parasim::SpecError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
