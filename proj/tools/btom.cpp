// btom: train policy stores, run experiments, sweep parameters, summarize output.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "btom/harness.hpp"

namespace {

void fail(const std::string& kind, const std::string& msg) {
  std::string one = msg;
  std::replace(one.begin(), one.end(), '\n', ' ');
  std::cerr << "error\t" << kind << "\t" << one << "\n";
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  for (const auto& v : btom::detail::split(s, ',')) out.push_back(btom::detail::parse_double(v));
  if (out.empty()) throw btom::Error("no values given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian policy reuse with theory-of-mind agents"};
  app.require_subcommand(1);

  std::string game_name;
  std::uint64_t seed = 1;
  std::string store_dir = "store";
  std::string layout_file;
  btom::TrainParams tp;
  auto* train = app.add_subcommand("train", "Build libraries and performance models for a game");
  train->add_option("--game", game_name, "rps | soccer | thieves")->required();
  train->add_option("--seed", seed, "Random seed")->required();
  train->add_option("--store", store_dir, "Store directory")->capture_default_str();
  train->add_option("--layout", layout_file, "Layout file overriding the default grid");
  train->add_option("--q-episodes", tp.q_episodes, "Q-learning episodes per response (0: game default)")
      ->capture_default_str();
  train->add_option("--perf-episodes", tp.perf_episodes, "Episodes per pair for performance models")
      ->capture_default_str();

  std::string config_file;
  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("--config", config_file, "Experiment config")->required();

  std::string param, values;
  auto* sweep = app.add_subcommand("sweep", "Sweep one agent parameter");
  sweep->add_option("--config", config_file, "Experiment config")->required();
  sweep->add_option("--param", param, "l | delta | h")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();

  std::string dir;
  auto* summarize = app.add_subcommand("summarize", "Summarize run CSVs in a directory");
  summarize->add_option("dir", dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return 2;
  }

  try {
    if (*train) {
      btom::GameSpec spec = btom::default_spec(btom::parse_game_id(game_name));
      if (!layout_file.empty()) {
        std::ifstream in(layout_file);
        if (!in) throw btom::Error("cannot read layout '" + layout_file + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        spec = btom::parse_layout(ss.str());
        if (spec.id != btom::parse_game_id(game_name)) throw btom::Error("layout is for a different game");
      }
      const auto st = btom::train(spec, seed, tp);
      const auto path = btom::store_path(store_dir, spec.id);
      btom::save_store(path, st);
      const auto bad = btom::closure_violations(st.perf);
      std::cout << "wrote " << path.string() << " (" << st.opponents.size() << " strategies, " << st.responses.size()
                << " policies, delta bound " << btom::delta_upper_bound(st.win_rate) << ")\n";
      if (!bad.empty()) std::cout << "warning: " << bad.size() << " responses are not uniquely best\n";
    } else if (*run) {
      const auto cfg = btom::load_config(config_file);
      const auto store = btom::load_store_for(cfg);
      const double bound = btom::delta_upper_bound(store.win_rate);
      if (cfg.params.delta > bound)
        std::cerr << "warning: delta " << cfg.params.delta << " exceeds the library bound " << bound << "\n";
      const auto cell = btom::write_outputs(cfg, btom::run_all(cfg, store));
      btom::write_summary_csv(std::cout, {cell});
    } else if (*sweep) {
      const auto cfg = btom::load_config(config_file);
      const auto rows = btom::sweep(cfg, param, parse_values(values));
      std::filesystem::create_directories(cfg.output);
      const auto path = std::filesystem::path(cfg.output) / ("sweep_" + param + ".csv");
      std::ofstream f(path, std::ios::binary);
      btom::write_sweep_csv(f, rows);
      btom::write_sweep_csv(std::cout, rows);
      std::cout << "trend," << (btom::non_increasing(rows) ? "non-increasing" : "not-monotone") << "\n";
    } else if (*summarize) {
      btom::write_summary_csv(std::cout, btom::summarize(dir));
    }
  } catch (const btom::Error& e) {
    fail("btom", e.what());
    return 1;
  } catch (const std::exception& e) {
    fail("internal", e.what());
    return 1;
  }
  return 0;
}
