#include <CLI11.hpp>

#include <iostream>

#include "qmpc/errors.hpp"
#include "qmpc/experiment.hpp"

using namespace qmpc;

namespace {

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : list) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quorum-based secure multiparty computation simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Key-value config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out-dir", out_dir, "Override the output directory");
  };

  CLI::App* run = app.add_subcommand("run", "Run the protocol and write metrics.json, transcript.log, verdict.txt");
  common(run);

  CLI::App* sw = app.add_subcommand("sweep", "Sweep one axis and write sweep.csv");
  common(sw);
  std::string axis_text, values_text;
  sw->add_option("--axis", axis_text, "n, m or bad_fraction")->required();
  sw->add_option("--values", values_text, "Comma-separated axis values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;

    if (run->parsed()) {
      const ExperimentReport rep = run_experiment(cfg);
      for (std::size_t i = 0; i < rep.runs.size(); ++i) {
        const RunOutcome& o = rep.runs[i];
        std::cout << "run " << i << " seed " << o.seed << ": "
                  << (o.error.empty() ? (o.pass ? "pass" : "fail") : "error: " + o.error);
        if (o.result) {
          std::cout << " output " << o.result->expected.value() << " max_messages "
                    << o.result->metrics.max_messages() << " digest " << o.result->transcript_digest.substr(0, 16);
        }
        std::cout << "\n";
      }
      std::cout << (rep.pass() ? "PASS" : "FAIL") << " " << rep.runs.size() - rep.failures << "/" << rep.runs.size()
                << " (" << cfg.out_dir << ")\n";
      return rep.pass() ? 0 : 1;
    }

    const auto axis = parse_axis(axis_text);
    if (!axis) {
      std::cerr << "unknown axis '" << axis_text << "' (use n, m or bad_fraction)\n";
      return 2;
    }
    const auto values = split_values(values_text);
    if (values.empty()) {
      std::cerr << "--values is empty\n";
      return 2;
    }
    const auto rows = sweep(cfg, *axis, values);
    std::size_t bad = 0;
    for (const auto& r : rows) bad += r.verdict == "pass" ? 0 : 1;
    std::cout << sweep_csv(rows, *axis);
    std::cout << rows.size() - bad << "/" << rows.size() << " rows passed (" << cfg.out_dir << "/sweep.csv)\n";
    return bad == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
