#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "curvemvg/commands.hpp"
#include "curvemvg/errors.hpp"

int main(int argc, char** argv) {
  using namespace curvemvg::scene;
  CLI::App app{"Multi-view geometry of space curves"};
  app.require_subcommand(1, 1);

  CliRequest request;
  std::string config, out, csv, d_range, m_range;
  std::uint64_t seed = 0;
  double noise = 0.0;

  for (const std::string& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "scene configuration (JSON)");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--noise", noise, "override noise_sigma");
    sub->add_option("--out", out, "write the JSON report here");
    sub->add_option("--export-csv", csv, "write CSV tables into this directory");
    if (name == "consistency-tables") {
      sub->add_option("--d", d_range, "curve degrees, lo..hi");
      sub->add_option("--m", m_range, "dual classes, lo..hi");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  request.command = sub->get_name();
  if (!config.empty()) request.config_path = config;
  if (sub->count("--seed") > 0) request.flags.seed = seed;
  if (sub->count("--noise") > 0) request.flags.noise = noise;
  if (!out.empty()) request.out = out;
  if (!csv.empty()) request.csv_dir = csv;
  try {
    if (!d_range.empty()) request.flags.d_range = parse_range(d_range, "--d");
    if (!m_range.empty()) request.flags.m_range = parse_range(m_range, "--m");
  } catch (const curvemvg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return run(request);
}
