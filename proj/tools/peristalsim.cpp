// Copyright 2026 The Peristalsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// peristalsim: characterization, transport and optimizer experiments, and the
// virtual-device service.

#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "peristalsim/config.hpp"
#include "peristalsim/errors.hpp"
#include "peristalsim/experiments.hpp"
#include "peristalsim/protocol.hpp"
#include "peristalsim/service.hpp"

namespace {

using namespace peristalsim;

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kInfeasible = 3, kNetwork = 4 };

DeviceConfig read_config(const std::string& path) {
  return path.empty() ? DeviceConfig{} : load_config(path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string read_text(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw ConfigError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> json_number_list(const nlohmann::json& doc, const char* key,
                                     std::vector<double> fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_array()) throw ConfigError(std::string("grid.") + key + " must be a list");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(std::string("grid.") + key + " entries must be numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital twin of a peristaltic wearable compression device"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "peristalsim 1.0.0");

  std::string config_path;
  std::string out_path;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Device config (JSON); defaults when omitted")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "Output file; stdout when omitted");
  };

  auto* characterize = app.add_subcommand("characterize", "Actuator P-V and frequency sweeps");
  add_common(characterize);
  std::string sweep = "pv";
  characterize->add_option("--sweep", sweep, "pv or freq")
      ->check(CLI::IsMember({"pv", "freq"}))
      ->capture_default_str();

  auto* transport_cmd = app.add_subcommand("transport", "Flow sweep over onset delay, frequency and glycerin fraction");
  add_common(transport_cmd);
  std::string grid_path;
  std::vector<double> delays_ms;
  std::vector<double> freqs;
  std::vector<double> cms;
  transport_cmd->add_option("--grid", grid_path,
                            "Grid JSON {onset_delay_s, frequency_hz, glycerin_mass_fraction}; "
                            "empty lists give a header-only CSV")
      ->check(CLI::ExistingFile);
  transport_cmd->add_option("--delays-ms", delays_ms, "Onset delays in ms (comma separated)")
      ->delimiter(',');
  transport_cmd->add_option("--freqs-hz", freqs, "Frequencies in Hz (comma separated)")
      ->delimiter(',');
  transport_cmd->add_option("--cm", cms, "Glycerin mass fractions (comma separated)")
      ->delimiter(',');

  auto* optimize = app.add_subcommand("optimize", "Search driving regimes for maximum mean flow");
  add_common(optimize);
  std::string constraints_path;
  std::string summary_path;
  optimize->add_option("--constraints", constraints_path, "Constraint JSON; defaults when omitted")
      ->check(CLI::ExistingFile);
  optimize->add_option("--summary", summary_path, "Summary JSON file; stdout when omitted");

  auto* serve = app.add_subcommand("serve", "Run the virtual device behind a TCP (and optional WebSocket) endpoint");
  add_common(serve);
  service::ServeOptions serve_opts;
  serve->add_option("--bind", serve_opts.address, "Listen address")->capture_default_str();
  serve->add_option("--port", serve_opts.port, "Listen port (0 picks a free port)")
      ->capture_default_str();
  std::optional<std::uint16_t> ws_port;
  serve->add_option("--ws-port", ws_port, "Also accept WebSocket clients on this port");
  serve->add_flag("--real-time", serve_opts.real_time, "Pace the simulation by the wall clock");
  serve->add_option("--record", serve_opts.record_path, "Record every frame as CSV");

  auto* replay = app.add_subcommand("replay", "Run a command script offline and record frames");
  add_common(replay);
  std::string script_path;
  replay->add_option("--script", script_path, "Newline-delimited commands ('-' for stdin)")
      ->required();

  auto* pattern = app.add_subcommand("pattern", "Validate a pattern draft and print its canonical document");
  add_common(pattern);
  std::string draft_path;
  pattern->add_option("--draft", draft_path, "Pattern draft JSON ('-' for stdin)")->required();

  auto* config_cmd = app.add_subcommand("config", "Print the effective device config");
  add_common(config_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    const auto config = read_config(config_path);

    if (*characterize) {
      Output out(out_path);
      if (sweep == "pv") {
        experiments::write_pv_csv(out.stream(), experiments::pv_sweep(config));
      } else {
        experiments::write_freq_csv(out.stream(), experiments::freq_sweep(config));
      }
      return kOk;
    }

    if (*transport_cmd) {
      auto grid = experiments::default_transport_grid();
      if (!grid_path.empty()) {
        const auto doc = read_json_file(grid_path);
        if (!doc.is_object()) throw ConfigError("grid must be an object");
        for (const auto& [key, _] : doc.items()) {
          if (key != "onset_delay_s" && key != "frequency_hz" && key != "glycerin_mass_fraction") {
            throw ConfigError("grid: unknown field '" + key + "'");
          }
        }
        grid.onset_delay_s = json_number_list(doc, "onset_delay_s", grid.onset_delay_s);
        grid.frequency_hz = json_number_list(doc, "frequency_hz", grid.frequency_hz);
        grid.glycerin_mass_fraction =
            json_number_list(doc, "glycerin_mass_fraction", grid.glycerin_mass_fraction);
      }
      if (!delays_ms.empty()) {
        grid.onset_delay_s.clear();
        for (double ms : delays_ms) grid.onset_delay_s.push_back(ms * 1e-3);
      }
      if (!freqs.empty()) grid.frequency_hz = freqs;
      if (!cms.empty()) grid.glycerin_mass_fraction = cms;
      Output out(out_path);
      experiments::write_transport_csv(out.stream(), experiments::transport_sweep(config, grid));
      return kOk;
    }

    if (*optimize) {
      const auto constraints =
          constraints_path.empty()
              ? experiments::default_constraints(config)
              : experiments::constraints_from_json(config, read_json_file(constraints_path));
      const auto result = experiments::run_optimizer(config, constraints);
      if (!out_path.empty()) {
        Output out(out_path);
        experiments::write_optimizer_grid_csv(out.stream(), result);
      }
      Output summary(summary_path);
      summary.stream() << experiments::optimizer_summary(config, constraints, result).dump(2)
                       << '\n';
      return kOk;
    }

    if (*serve) {
      serve_opts.ws_port = ws_port;
      service::Server server(config, serve_opts);
      std::cerr << "peristalsim: listening on " << serve_opts.address << ':' << server.port();
      if (const auto wp = server.ws_port()) std::cerr << ", websocket " << *wp;
      std::cerr << (serve_opts.real_time ? " (real time)" : " (fast)") << std::endl;
      server.run();
      std::cerr << "peristalsim: shut down" << std::endl;
      return kOk;
    }

    if (*replay) {
      const auto script = read_text(script_path);
      Output out(out_path);
      const auto log = service::replay(config, script, &out.stream());
      for (const auto& entry : log) {
        if (entry.error) std::cerr << entry.command << " -> " << *entry.error << '\n';
      }
      return kOk;
    }

    if (*pattern) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_text(draft_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("draft: ") + e.what());
      }
      const auto draft = protocol::draft_from_json(doc);
      const auto schedule = protocol::build_schedule(draft, config);
      session::validate_schedule(config, schedule);
      Output out(out_path);
      out.stream() << protocol::to_canonical_json(draft) << '\n';
      return kOk;
    }

    if (*config_cmd) {
      Output out(out_path);
      out.stream() << config_to_json(config).dump(2) << '\n';
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const service::NetworkError& e) {
    std::cerr << "network error: " << e.what() << '\n';
    return kNetwork;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
