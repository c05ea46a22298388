#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "polyirl/error.hpp"
#include "polyirl/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Feature-selecting maximum-entropy IRL pipeline"};
  app.require_subcommand(1);

  polyirl::CommandOptions opts;
  std::string config, dataset, manifest, selection, out;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--seed", seed, "Override the master seed");
    sub->add_option("--out", out, "Output directory (default: config output_dir)");
  };

  auto* gen = app.add_subcommand("gen-expert", "Train an expert on the true reward and record demonstrations");
  add_common(gen);

  auto* sel = app.add_subcommand("select-features", "Rank candidate features against KDE trajectory labels");
  add_common(sel);
  sel->add_option("--dataset", dataset, "Expert trajectories (JSONL)");
  sel->add_option("--selection", selection, "Where to write the selection (default: <out>/selection.json)");

  auto* irl = app.add_subcommand("train-irl", "Run MaxEnt IRL on the selected features");
  add_common(irl);
  irl->add_option("--dataset", dataset, "Expert trajectories (JSONL)");
  irl->add_option("--selection", selection, "Selection file (default: <out>/selection.json)");
  irl->add_option("--manifest", manifest, "Where to write the manifest (default: <out>/manifest.json)");

  auto* ev = app.add_subcommand("eval", "Evaluate a feature set and append to results.csv");
  add_common(ev);
  ev->add_option("--dataset", dataset, "Expert trajectories (JSONL)");
  ev->add_option("--manifest", manifest, "Manifest of the proposed run (default: <out>/manifest.json)");
  ev->add_option("--label", opts.label, "linear | all | random | hand-picked | proposed");

  auto* plot = app.add_subcommand("plot-data", "Emit CSV series for learning curves and Wasserstein bars");
  add_common(plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  opts.config = config;
  if (!dataset.empty()) opts.dataset = dataset;
  if (!manifest.empty()) opts.manifest = manifest;
  if (!selection.empty()) opts.selection = selection;
  if (!out.empty()) opts.out = out;
  for (auto* sub : app.get_subcommands())
    if (sub->count("--seed")) opts.seed = seed;

  try {
    if (gen->parsed()) return polyirl::cmd_gen_expert(opts);
    if (sel->parsed()) return polyirl::cmd_select_features(opts);
    if (irl->parsed()) return polyirl::cmd_train_irl(opts);
    if (ev->parsed()) return polyirl::cmd_eval(opts);
    if (plot->parsed()) return polyirl::cmd_plot_data(opts);
  } catch (const polyirl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return polyirl::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
