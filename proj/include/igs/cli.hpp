#pragma once

// Command-line front end.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "igs/channel.hpp"
#include "igs/experiments.hpp"
#include "igs/verify.hpp"

namespace igs::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kUsage = 1, kNumerical = 2, kViolations = 3 };

/// JSON config: {"region": {"fixture": "H1", "snr-db": 10}, ...}; values given on the command line win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::ConversionError("config", std::string("invalid JSON config: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config", "config root must be an object");
    std::vector<CLI::ConfigItem> items;
    walk(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const nlohmann::json& obj, const std::vector<std::string>& parents,
                   std::vector<CLI::ConfigItem>& items) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        walk(*it, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array())
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(*it));
      items.push_back(std::move(item));
    }
  }
};

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  double tol = 1e-4;
  double tau_tol = 1e-8;
  double rank_tol = 1e-6;
  Index samples = 1000;
  double ratio_floor = 1e-6;

  ExperimentParams params() const {
    ExperimentParams p;
    p.seed = seed;
    p.jobs = jobs;
    p.proper.tol = tol;
    p.pseudo.tau_tol = tau_tol;
    p.pseudo.rank_tol = rank_tol;
    p.pseudo.samples = samples;
    p.ratio_floor = ratio_floor;
    return p;
  }

  nlohmann::json manifest_params() const {
    return {{"seed", seed},         {"jobs", jobs},         {"tol", tol},
            {"tau_tol", tau_tol},   {"rank_tol", rank_tol}, {"samples", samples},
            {"ratio_floor", ratio_floor}, {"socp_slack_tol", conic::SocpOptions{}.slack_tol},
            {"cone_feastol", conic::ConeOptions{}.feastol}, {"cone_max_iterations", conic::ConeOptions{}.max_iterations},
            {"sdr_feas_tol", PseudoOptions{}.feas_tol}};
  }
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "base seed")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "worker threads (output does not depend on it)")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--tol", c.tol, "proper bisection tolerance (bits)")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--tau-tol", c.tau_tol, "SDR bisection tolerance (bits)")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--rank-tol", c.rank_tol, "rank-1 test threshold eig2/eig1")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--samples", c.samples, "randomization draws L")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--ratio-floor", c.ratio_floor, "tau_sdr below which a realization leaves the ratio statistics")->capture_default_str();
}

struct RegionArgs {
  std::string channels;
  std::string fixture;
  double snr_db = std::nan("");
  Index profiles = 33;
};

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) throw CLI::ValidationError("list", "not a number: '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("list", "empty list");
  return out;
}

inline std::vector<std::pair<Index, Index>> parse_pairs(const std::string& s) {
  std::vector<std::pair<Index, Index>> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto x = tok.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument(tok);
      std::size_t p1 = 0, p2 = 0;
      const long K = std::stol(tok.substr(0, x), &p1);
      const long M = std::stol(tok.substr(x + 1), &p2);
      if (p1 != x || p2 != tok.size() - x - 1 || K < 1 || M < 1) throw std::invalid_argument(tok);
      out.push_back({K, M});
    } catch (const std::exception&) {
      throw CLI::ValidationError("--pairs", "expected KxM entries such as 2x1, got '" + tok + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError("--pairs", "no pairs given");
  return out;
}

class Runner {
 public:
  explicit Runner(std::vector<std::string> argv) : argv_(std::move(argv)) {}

  int run(std::ostream& out, std::ostream& err) {
    CLI::App app{"Improper Gaussian signaling for MISO interference and broadcast channels", "igs"};
    app.set_version_flag("--version", kVersion);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file supplying any flag; command-line values take precedence");
    app.require_subcommand(1);

    Common common;
    RegionArgs region;
    auto* r = app.add_subcommand("region", "rate-region sweep on an interference channel");
    auto* b = app.add_subcommand("bc-region", "rate-region sweep on a broadcast channel with sum power");
    for (auto* s : {r, b}) {
      add_common(s, common);
      auto* ch = s->add_option("--channels", region.channels, "channel JSON file");
      s->add_option("--fixture", region.fixture, "fixed reference channel: " + CLI::detail::join(fixture_names(), ", "))
          ->excludes(ch);
      s->add_option("--snr-db", region.snr_db, "transmit SNR P/sigma^2 in dB (default: the file's budget)");
      s->add_option("--profiles", region.profiles, "number of rate profiles")->capture_default_str()->check(CLI::PositiveNumber);
    }

    Index k = 2, m = 1, realizations = 200;
    std::string snr_list = "0,5,10,15,20,25,30";
    auto* mm = app.add_subcommand("maxmin", "average max-min rate versus SNR");
    add_common(mm, common);
    mm->add_option("--k", k, "users")->capture_default_str()->check(CLI::PositiveNumber);
    mm->add_option("--m", m, "antennas per transmitter")->capture_default_str()->check(CLI::PositiveNumber);
    mm->add_option("--snr-list", snr_list, "comma-separated SNRs in dB")->capture_default_str();
    mm->add_option("--realizations", realizations, "channel realizations")->capture_default_str()->check(CLI::PositiveNumber);

    std::string pairs = "2x1,2x2,3x1,3x2,4x1,4x2,5x1,5x2,6x1,6x2";
    double snr_db = 10.0;
    auto* ar = app.add_subcommand("approx-ratio", "SDR approximation-ratio statistics");
    add_common(ar, common);
    ar->add_option("--pairs", pairs, "comma-separated KxM pairs")->capture_default_str();
    ar->add_option("--snr-db", snr_db, "SNR in dB")->capture_default_str();
    ar->add_option("--realizations", realizations, "channel realizations")->capture_default_str()->check(CLI::PositiveNumber);

    VerifyConfig vcfg;
    auto* vf = app.add_subcommand("verify", "oracle suites; exit 3 when any check is violated");
    add_common(vf, common);
    vf->add_option("--lemma-trials", vcfg.lemma_trials)->capture_default_str();
    vf->add_option("--theorem-trials", vcfg.theorem_trials)->capture_default_str();
    vf->add_option("--zf-instances", vcfg.zf_instances)->capture_default_str();
    vf->add_option("--grid-k2", vcfg.grid_k2, "K=2 grid-oracle instances")->capture_default_str();
    vf->add_option("--grid-k3", vcfg.grid_k3, "K=3 grid-oracle instances")->capture_default_str();
    vf->add_option("--resolution-k2", vcfg.resolution_k2)->capture_default_str()->check(CLI::Range(32, 4096));
    vf->add_option("--resolution-k3", vcfg.resolution_k3)->capture_default_str()->check(CLI::Range(32, 4096));

    double noise = 1.0;
    auto* gc = app.add_subcommand("gen-channels", "write an i.i.d. Rayleigh channel set to channels.json");
    add_common(gc, common);
    gc->add_option("--k", k, "users")->capture_default_str()->check(CLI::PositiveNumber);
    gc->add_option("--m", m, "antennas")->capture_default_str()->check(CLI::PositiveNumber);
    gc->add_option("--snr-db", snr_db, "per-transmitter SNR of the stored budget")->capture_default_str();
    gc->add_option("--noise", noise, "noise variance")->capture_default_str()->check(CLI::PositiveNumber);

    // Seed default differs for verify.
    vf->get_option("--seed")->default_val(7);

    try {
      std::vector<std::string> args(argv_.rbegin(), argv_.rend());
      app.parse(args);
    } catch (const CLI::CallForHelp& e) {
      app.exit(e, out, err);
      return kOk;
    } catch (const CLI::CallForAllHelp& e) {
      app.exit(e, out, err);
      return kOk;
    } catch (const CLI::CallForVersion&) {
      out << kVersion << "\n";
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n\n" << app.help();
      return kUsage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["argv"] = argv_;
    manifest["parameters"] = common.manifest_params();
    std::vector<std::string> outputs;
    int code = kOk;
    try {
      std::filesystem::create_directories(common.out);
      const auto dir = std::filesystem::path(common.out);
      const auto params = common.params();
      if (r->parsed() || b->parsed()) {
        const bool bc = b->parsed();
        manifest["command"] = bc ? "bc-region" : "region";
        auto inst = load_instance(region, bc);
        if (!std::isnan(region.snr_db))
          inst.second = with_power(inst.second, inst.first.noise_variance() * snr_db_to_power(region.snr_db));
        const auto pts = bc ? bc_region(inst.first, inst.second, region.profiles, params)
                            : sweep_region(inst.first, inst.second, region.profiles, params);
        detail::write_text((dir / "region_proper.csv").string(), region_proper_csv(pts));
        detail::write_text((dir / "region_improper.csv").string(), region_improper_csv(pts));
        outputs = {"region_proper.csv", "region_improper.csv"};
        manifest["parameters"]["profiles"] = region.profiles;
        manifest["parameters"]["source"] = region.channels.empty() ? "fixture:" + default_fixture(region, bc) : region.channels;
        manifest["parameters"]["power"] = to_json(inst.first, inst.second)["power"];
        out << "wrote " << pts.size() << " profiles to " << dir.string() << "\n";
      } else if (mm->parsed()) {
        manifest["command"] = "maxmin";
        const auto snrs = parse_list(snr_list);
        const auto rows = maxmin_curve(k, m, snrs, realizations, params);
        detail::write_text((dir / "maxmin.csv").string(), maxmin_csv(rows));
        outputs = {"maxmin.csv"};
        manifest["parameters"].update({{"K", k}, {"M", m}, {"snr_list_db", snrs}, {"realizations", realizations}});
        out << maxmin_csv(rows);
      } else if (ar->parsed()) {
        manifest["command"] = "approx-ratio";
        const auto pl = parse_pairs(pairs);
        const auto rows = approx_ratio_table(pl, snr_db, realizations, params);
        detail::write_text((dir / "approx_ratio.csv").string(), approx_ratio_csv(rows));
        outputs = {"approx_ratio.csv"};
        manifest["parameters"].update({{"pairs", pairs}, {"snr_db", snr_db}, {"realizations", realizations}});
        out << approx_ratio_csv(rows);
      } else if (vf->parsed()) {
        manifest["command"] = "verify";
        vcfg.seed = common.seed;
        vcfg.params = params;
        const auto res = run_verification(vcfg);
        const auto report = to_json(res);
        detail::write_text((dir / "verify.json").string(), report.dump(2) + "\n");
        outputs = {"verify.json"};
        manifest["parameters"].update({{"lemma_trials", vcfg.lemma_trials},
                                       {"theorem_trials", vcfg.theorem_trials},
                                       {"zf_instances", vcfg.zf_instances},
                                       {"grid_k2", vcfg.grid_k2},
                                       {"grid_k3", vcfg.grid_k3},
                                       {"resolution_k2", vcfg.resolution_k2},
                                       {"resolution_k3", vcfg.resolution_k3}});
        out << report.dump(2) << "\n";
        if (res.violations() > 0) code = kViolations;
      } else if (gc->parsed()) {
        manifest["command"] = "gen-channels";
        const auto ch = generate_iid(k, m, common.seed, noise);
        const auto P = PowerBudget::per_transmitter(k, noise * snr_db_to_power(snr_db));
        save_channels((dir / "channels.json").string(), ch, P);
        outputs = {"channels.json"};
        manifest["parameters"].update({{"K", k}, {"M", m}, {"snr_db", snr_db}, {"noise", noise}});
        out << "wrote " << (dir / "channels.json").string() << "\n";
      }
      manifest["outputs"] = outputs;
      manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      detail::write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    } catch (const NumericalFailure& e) {
      err << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    } catch (const FixtureNotFound& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const CLI::Error& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const std::filesystem::filesystem_error& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
    return code;
  }

 private:
  static std::string default_fixture(const RegionArgs& a, bool bc) {
    return a.fixture.empty() ? (bc ? "BC-FIG6" : "H1") : a.fixture;
  }

  static std::pair<ChannelSet, PowerBudget> load_instance(const RegionArgs& a, bool bc) {
    std::pair<ChannelSet, PowerBudget> inst =
        a.channels.empty() ? fixture(default_fixture(a, bc)) : load_channels(a.channels);
    if (bc && inst.first.topology() != Topology::BroadcastChannel)
      throw PreconditionError("bc-region needs a broadcast channel set");
    if (bc && inst.second.mode() != PowerMode::SumPower) throw PreconditionError("bc-region needs a sum-power budget");
    return inst;
  }

  std::vector<std::string> argv_;
};

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return Runner(args).run(out, err);
}

inline int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace igs::cli
