// redraw: dataset generation, training, clustering, evaluation and frame redrawing.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "redraw/pipeline/commands.hpp"

namespace rp = redraw::pipeline;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, corpus;

    std::optional<int> productions, designs, patches, size;
    std::optional<std::string> manifest, frames, color_guide, classes, embeddings;
    std::optional<int> steps, batch;
    std::optional<double> lr, cut;
};

template <typename T, typename U>
void set_if(const std::optional<T>& v, U& dst) {
    if (v) dst = *v;
}

rp::RunConfig resolve(const Overrides& o, const std::string& stage) {
    rp::RunConfig c = o.config.empty() ? rp::RunConfig{} : rp::load_config(o.config);
    set_if(o.seed, c.seed);
    set_if(o.out, c.out);
    set_if(o.corpus, c.corpus);
    set_if(o.productions, c.synth.productions);
    set_if(o.designs, c.synth.designs);
    set_if(o.patches, c.synth.patches_per_level);
    set_if(o.size, c.synth.patch_size);
    set_if(o.cut, c.cluster.cut);
    set_if(o.classes, c.redrawer.classes);
    set_if(o.frames, c.redraw.frames);
    set_if(o.color_guide, c.redraw.color_guide);
    if (stage == "ingest") set_if(o.manifest, c.ingest.manifest);
    if (stage == "redraw") set_if(o.manifest, c.redraw.manifest);
    if (stage == "train-encoder") {
        set_if(o.steps, c.encoder.steps);
        set_if(o.batch, c.encoder.batch);
        set_if(o.lr, c.encoder.lr);
    }
    if (stage == "train-redrawer") {
        set_if(o.steps, c.redrawer.steps);
        set_if(o.batch, c.redrawer.batch);
        set_if(o.lr, c.redrawer.lr_generator);
    }
    return c;
}

int run(const std::string& stage, const Overrides& o) {
    const rp::RunConfig c = resolve(o, stage);
    const rp::Console io{std::cout, std::cerr};
    if (stage == "synth") rp::cmd_synth(c, io);
    else if (stage == "ingest") rp::cmd_ingest(c, io);
    else if (stage == "train-encoder") rp::cmd_train_encoder(c, io);
    else if (stage == "embed") rp::cmd_embed(c, io);
    else if (stage == "cluster") rp::cmd_cluster(c, io, o.embeddings.value_or(""));
    else if (stage == "train-redrawer") rp::cmd_train_redrawer(c, io);
    else if (stage == "eval") rp::cmd_eval(c, io);
    else if (stage == "redraw") rp::cmd_redraw(c, io);
    else if (stage == "print-config") {
        rp::validate(c);
        std::cout << rp::dump_config(c);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"redraw: redraw low-detail eyes in animation frames"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config, "JSON run config");
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--corpus", o.corpus, "corpus directory");

    auto* synth = app.add_subcommand("synth", "generate a synthetic labelled corpus");
    synth->add_option("--productions", o.productions);
    synth->add_option("--designs", o.designs);
    synth->add_option("--patches", o.patches, "patches per design and detail level");
    synth->add_option("--size", o.size, "patch side in pixels");

    auto* ingest = app.add_subcommand("ingest", "build a corpus from an annotated frame manifest");
    ingest->add_option("--manifest", o.manifest);
    ingest->add_option("--size", o.size, "patch side in pixels");

    auto* enc = app.add_subcommand("train-encoder", "train the style-aware encoder");
    enc->add_option("--steps", o.steps);
    enc->add_option("--batch", o.batch);
    enc->add_option("--lr", o.lr);

    app.add_subcommand("embed", "embed every corpus patch with the trained encoder");

    auto* cluster = app.add_subcommand("cluster", "UPGMA clustering of embeddings");
    cluster->add_option("--embeddings", o.embeddings, "embeddings file (default <out>/embeddings.tsv)");
    cluster->add_option("--cut", o.cut, "dendrogram cut distance; negative picks it by silhouette");

    auto* red = app.add_subcommand("train-redrawer", "adversarial training of the redrawer");
    red->add_option("--steps", o.steps);
    red->add_option("--batch", o.batch);
    red->add_option("--lr", o.lr, "generator learning rate");
    red->add_option("--classes", o.classes, "clusters or designs");

    app.add_subcommand("eval", "evaluate the trained redrawer and encoder on the corpus");

    auto* redraw = app.add_subcommand("redraw", "redraw annotated regions of frames");
    redraw->add_option("--manifest", o.manifest);
    redraw->add_option("--frames", o.frames, "directory of frames to pass through");
    redraw->add_option("--color-guide", o.color_guide);

    app.add_subcommand("print-config", "print the resolved config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        return run(stage, o);
    } catch (const redraw::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const redraw::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
