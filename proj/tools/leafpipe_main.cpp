#include <cstdio>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "leafpipe/pipeline.hpp"

namespace lp = leafpipe::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"leafpipe: deterministic leaf-disease dataset pipeline"};
    app.require_subcommand(1);

    lp::CommandOptions options;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", options.config_path, "Pipeline config JSON")->required();
        sub->add_option("--seed", options.seed_override, "Override master_seed");
        sub->add_option("--out", options.out_override, "Override output directory");
    };

    std::function<int()> selected;

    auto* prepare = app.add_subcommand("prepare", "Relabel, mask, and resize the raw dataset");
    add_common(prepare);
    prepare->callback([&] { selected = [&] { return lp::cmd_prepare(options); }; });

    auto* split = app.add_subcommand("split", "Assign train/dev/test splits");
    add_common(split);
    split->add_option("--manifest", options.manifest_override, "Input manifest override");
    split->callback([&] { selected = [&] { return lp::cmd_split(options); }; });

    auto* balance = app.add_subcommand("balance", "Equalize class counts from the synthetic pool");
    add_common(balance);
    balance->add_option("--manifest", options.manifest_override, "Input manifest override");
    balance->callback([&] { selected = [&] { return lp::cmd_balance(options); }; });

    auto* resplit = app.add_subcommand("resplit", "Re-split the augmented train+dev pool");
    add_common(resplit);
    resplit->add_option("--manifest", options.manifest_override, "Input manifest override");
    resplit->callback([&] { selected = [&] { return lp::cmd_resplit(options); }; });

    auto* train = app.add_subcommand("train", "Train the reference classifier");
    add_common(train);
    train->add_option("--manifest", options.manifest_override, "Input manifest override");
    train->add_option("--aug", options.aug_spec,
                      "Online augmentations, e.g. rotflip+fmix (none, rotflip, mixup, cutmix, "
                      "cutout, fmix)");
    train->callback([&] { selected = [&] { return lp::cmd_train(options); }; });

    auto* eval_matrix =
        app.add_subcommand("eval-matrix", "Run the TRTR/TRTS/TSTR/TSTS evaluation matrix");
    add_common(eval_matrix);
    eval_matrix->add_option("--manifest", options.manifest_override, "Real split manifest override");
    eval_matrix->add_option("--aug", options.aug_spec, "Online augmentations for both models");
    eval_matrix->callback([&] { selected = [&] { return lp::cmd_eval_matrix(options); }; });

    auto* tsne = app.add_subcommand("tsne", "Export 2-D embedding coordinates");
    add_common(tsne);
    tsne->add_option("--manifest", options.manifest_override, "Input manifest override");
    tsne->add_option("--features", options.features_csv, "Import features from CSV (id,f0,f1,...)");
    tsne->callback([&] { selected = [&] { return lp::cmd_tsne(options); }; });

    auto* gan_loss = app.add_subcommand("gan-loss", "Evaluate GAN objectives on a fixture");
    add_common(gan_loss);
    gan_loss->add_option("--fixture", options.fixture_dir, "Fixture directory")->required();
    gan_loss->callback([&] { selected = [&] { return lp::cmd_gan_loss(options); }; });

    auto* preview = app.add_subcommand("augment-preview", "Emit augmented PNGs plus a replay sidecar");
    add_common(preview);
    preview->add_option("--manifest", options.manifest_override, "Input manifest override");
    preview->add_option("--aug", options.aug_spec, "Augmentation to preview");
    preview->add_option("--count", options.preview_count, "Batch size for the preview");
    preview->add_option("--replay", options.replay_path, "Replay a recorded event sidecar");
    preview->callback([&] { selected = [&] { return lp::cmd_augment_preview(options); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return lp::kExitConfig;
    }
    return selected ? selected() : lp::kExitConfig;
}
