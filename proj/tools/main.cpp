// snapfit: dataset generation, training, evaluation sweeps, and closed-loop
// recovery episodes against the synthetic snap-assembly plant.
//
// Exit codes: 0 success, 1 usage, 2 data/config error, 3 training/eval failure.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "snapfit/commands.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"snap-assembly failure prediction and recovery toolkit"};
  app.require_subcommand(1);

  snapfit::GenerateOptions generate;
  CLI::App* gen = app.add_subcommand("generate", "synthesize a training/validation dataset");
  gen->add_option("--out", generate.out_dir, "dataset output directory")->required();
  gen->add_option("--plant-config", generate.plant_config_path, "plant config JSON");
  gen->add_option("--seed", generate.seed, "dataset seed");
  gen->add_option("--lattice-points", generate.grid.lattice_points_per_axis,
                  "lattice points per axis");
  gen->add_option("--lattice-extent", generate.grid.lattice_extent, "half-range in mm/deg");
  gen->add_flag("!--no-supplementary", generate.grid.supplementary_points,
                "drop the 10 supplementary in-tolerance offsets");
  gen->add_option("--validation-trials", generate.grid.validation_trials,
                  "recordings per validation anchor");
  gen->add_flag("--quiet", generate.quiet, "suppress progress output");

  snapfit::TrainOptions train;
  CLI::App* tr = app.add_subcommand("train", "fit fPCA models and build the decision trees");
  tr->add_option("--dataset", train.dataset_dir, "dataset directory")->required();
  tr->add_option("--t-span", train.t_span, "prediction horizon in seconds");
  tr->add_option("--out", train.out_model_path, "model bundle output path")->required();
  tr->add_option("--fpca-components", train.fpca_components, "principal components per channel");
  tr->add_option("--svm-c", train.svm_c, "SVM regularization");
  tr->add_flag("--eq1-corrected", train.eq1_corrected,
               "use the regrouped accuracy formula at tree nodes");
  tr->add_option("--threads", train.num_threads, "split-search threads (0 = auto)");
  tr->add_flag("--quiet", train.quiet, "suppress the node accuracy table");

  snapfit::EvalOptions eval;
  std::string mode = "assembly_only";
  CLI::App* ev = app.add_subcommand("eval", "run an identification mode over the validation set");
  ev->add_option("--model", eval.model_path, "model bundle path")->required();
  ev->add_option("--dataset", eval.dataset_dir, "dataset directory")->required();
  ev->add_option("--mode", mode, "assembly_only | probe_only | probe_after_assembly");
  ev->add_option("--threshold", eval.probability_threshold, "probing trigger threshold");
  ev->add_option("--out", eval.out_report_path, "report JSON output path");
  ev->add_flag("--quiet", eval.quiet, "suppress the summary table");

  snapfit::EpisodeOptions episode;
  CLI::App* ep = app.add_subcommand("episode", "closed-loop identification and recovery");
  ep->add_option("--model", episode.model_path, "model bundle path")->required();
  ep->add_option("--plant-config", episode.plant_config_path, "plant config JSON");
  ep->add_option("--dx", episode.offset_dx, "true x offset in mm")->required();
  ep->add_option("--dtheta", episode.offset_dtheta, "true z rotation offset in deg")->required();
  ep->add_option("--seed", episode.seed, "episode seed");
  ep->add_option("--threshold", episode.probability_threshold, "probing trigger threshold");
  ep->add_option("--max-retries", episode.max_retries, "recovery retry budget");
  ep->add_option("--out", episode.out_path, "episode log JSON output path");
  ep->add_flag("--quiet", episode.quiet, "suppress the step summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      snapfit::cmd_generate(generate);
    } else if (tr->parsed()) {
      snapfit::cmd_train(train);
    } else if (ev->parsed()) {
      eval.mode = snapfit::eval_mode_from_name(mode);
      snapfit::cmd_eval(eval);
    } else if (ep->parsed()) {
      snapfit::cmd_episode(episode);
    }
  } catch (const snapfit::TrainingError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const snapfit::EvalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const snapfit::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
