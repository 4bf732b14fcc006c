#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "lftkit/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kDependency = 2, kValidation = 3 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string stage = "identify";
  std::string m;
};

lftkit::PipelineConfig resolve(const Options& opt) {
  lftkit::PipelineConfig config;
  if (!opt.config.empty()) {
    config = lftkit::load_config(opt.config);
  } else {
    config.identify.sigma_grid = lftkit::default_sigma_grid();
  }
  if (opt.seed) config.seed = *opt.seed;
  if (!opt.m.empty()) config.cfnn.m = lftkit::parse_m_list(opt.m);
  if (!opt.out.empty()) config.output_dir = opt.out;
  config.validate();
  return config;
}

int report_checks(const std::vector<lftkit::InvariantCheck>& checks) {
  int failed = 0;
  for (const auto& c : checks) {
    const char* status = c.skipped ? "skip" : (c.passed ? "ok" : "FAIL");
    std::cout << status << "  " << c.id << "  " << c.description;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << "\n";
    if (!c.skipped && !c.passed) {
      std::cerr << "error: invariant '" << c.id << "' violated\n";
      ++failed;
    }
  }
  return failed ? kValidation : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear model to uncertain LFT conversion pipeline"};
  app.set_version_flag("--version", LFTKIT_VERSION);
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Pipeline config (TOML, or JSON / run manifest)")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory (overrides the config)");
    sub->add_option("--seed", opt.seed, "Run seed (overrides the config)");
    sub->add_option("--m", opt.m, "Reduced parameter counts, e.g. 0,1,l");
  };
  std::vector<CLI::App*> stage_cmds;
  const std::vector<std::pair<std::string, std::string>> stages{
      {"identify", "Fit the polynomial residual model and the LQR controller"},
      {"lpvify", "Factor the residual into an LPV model"},
      {"lftize", "Realize the LPV model as an LFT"},
      {"gendata", "Generate scheduling training data by falsification"},
      {"reduce", "Train the reduction networks and build reduced LFTs"},
      {"bound", "Falsify the dynamic uncertainty bound per candidate"},
      {"analyze", "Robust gain trade-off report"}};
  for (const auto& [name, help] : stages) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    stage_cmds.push_back(sub);
  }
  auto* pipeline = app.add_subcommand("pipeline", "Run all stages in order");
  add_common(pipeline);
  pipeline->add_option("--stage", opt.stage, "Resume from this stage")
      ->check(CLI::IsMember(lftkit::Pipeline::stage_names()));
  auto* validate = app.add_subcommand("validate", "Check the invariants of stored artifacts");
  add_common(validate);

  CLI11_PARSE(app, argc, argv);

  try {
    const lftkit::PipelineConfig config = resolve(opt);
    lftkit::Pipeline p(config, config.output_dir);
    if (pipeline->parsed()) {
      p.run_all(opt.stage);
      return report_checks(p.validate());
    }
    if (validate->parsed()) return report_checks(p.validate());
    for (auto* sub : stage_cmds) {
      if (sub->parsed()) p.run_stage(sub->get_name());
    }
    return kOk;
  } catch (const lftkit::DependencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDependency;
  } catch (const lftkit::ValidationError& e) {
    std::cerr << "error: invariant '" << e.invariant() << "' violated: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
