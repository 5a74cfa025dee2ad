// Regenerates the bundled fixture corpus (see fixturegen). The committed
// fixtures came from: gen-fixture --out fixtures --seed 7

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "leafpipe/fixturegen.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gen-fixture: regenerate the bundled fixture corpus"};
    std::string out_dir = "fixtures";
    uint64_t seed = 7;
    leafpipe::fixturegen::CorpusCounts counts;
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Generator seed");
    app.add_option("--per-class", counts.synthetic_per_class,
                   "Synthetic pool size per diseased class");
    CLI11_PARSE(app, argc, argv);

    leafpipe::fixturegen::write_corpus(out_dir, seed, counts);
    std::printf("fixture corpus written to %s\n", out_dir.c_str());
    return 0;
}
