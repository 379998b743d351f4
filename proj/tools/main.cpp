#include "coordmotion/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"coordmotion: skeleton motion prediction with coordination-aware relation modeling"};
    app.require_subcommand(1);

    coordmotion::SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic motion files");
    synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
    synth_cmd->add_option("--joints", synth.joints, "joint count (22 = human skeleton)");
    synth_cmd->add_option("--frames", synth.frames, "frames per sequence");
    synth_cmd->add_option("--fps", synth.fps, "frames per second");
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_option("--count", synth.count, "number of sequences");
    synth_cmd->add_option("--label", synth.label, "action label / file prefix");
    synth_cmd->add_option("--spec", synth.spec_path, "per-joint 'amplitude frequency phase' file");

    coordmotion::TrainCliOptions train;
    auto* train_cmd = app.add_subcommand("train", "train a model on a motion dataset");
    train_cmd->add_option("--data-dir", train.data_dir, "directory of .motion.txt files")->required();
    train_cmd->add_option("--config", train.config_path, "key=value config file");
    train_cmd->add_option("--out", train.out_dir, "output directory")->required();
    train_cmd->add_option("--epochs", train.epochs, "override epochs");
    train_cmd->add_option("--batch", train.batch, "override batch size");
    train_cmd->add_option("--seed", train.seed, "override model and shuffle seed");
    train_cmd->add_option("--stride", train.stride, "window stride (default: predicted frames)");
    train_cmd->add_option("--val-frac", train.val_frac, "held-out window fraction");
    train_cmd->add_flag("--keep-translation", train.keep_translation,
                        "skip root-trajectory removal");

    coordmotion::EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint, with baselines");
    eval_cmd->add_option("--data-dir", eval.data_dir, "directory of .motion.txt files")->required();
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--horizons", eval.horizons_ms, "horizons in ms")->delimiter(',');
    eval_cmd->add_option("--csv", eval.csv_path, "write the table as CSV");
    eval_cmd->add_flag("--per-action", eval.per_action, "per-action breakdown");
    eval_cmd->add_option("--stride", eval.stride, "window stride (default: predicted frames)");
    eval_cmd->add_option("--samples-per-action", eval.samples_per_action,
                         "random sub-sample size per action (0 = all)");
    eval_cmd->add_option("--seed", eval.seed, "sub-sample seed");
    eval_cmd->add_flag("--keep-translation", eval.keep_translation,
                       "skip root-trajectory removal");

    coordmotion::PredictOptions predict;
    auto* predict_cmd = app.add_subcommand("predict", "predict future frames for one sequence");
    predict_cmd->add_option("--checkpoint", predict.checkpoint, "checkpoint file")->required();
    predict_cmd->add_option("--input", predict.input, "input .motion.txt")->required();
    predict_cmd->add_option("--out", predict.out, "output .motion.txt")->required();
    predict_cmd->add_flag("--keep-translation", predict.keep_translation,
                          "skip root-trajectory removal");

    coordmotion::SvgOptions svg;
    auto* svg_cmd = app.add_subcommand("export-svg", "render a motion file as a stick-figure strip");
    svg_cmd->add_option("--motion", svg.motion, "input .motion.txt")->required();
    svg_cmd->add_option("--out", svg.out, "output .svg")->required();

    coordmotion::GradcheckOptions gradcheck;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gradcheck_cmd->add_option("--module", gradcheck.module, "all|mtde|gce|lie|affm|net");
    gradcheck_cmd->add_option("--tol", gradcheck.tol, "max relative error tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) return coordmotion::run_synth(synth);
        if (*train_cmd) return coordmotion::run_train(train);
        if (*eval_cmd) return coordmotion::run_eval(eval);
        if (*predict_cmd) return coordmotion::run_predict(predict);
        if (*svg_cmd) return coordmotion::run_export_svg(svg);
        if (*gradcheck_cmd) return coordmotion::run_gradcheck(gradcheck);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
