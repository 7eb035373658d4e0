#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "synth.hpp"

// Regenerates the synthetic evaluation corpus. The same seed always yields
// byte-identical files.
int main(int argc, char** argv) {
  CLI::App app{"Synthetic corpus generator"};
  std::string out_dir;
  uint64_t seed = 2024;
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    entkit::synth::MiniCorpus mini = entkit::synth::make_mini_corpus(seed);
    entkit::synth::write_mini_corpus(mini, out_dir);
    std::cerr << "wrote " << mini.corpus.size() << " paragraphs, "
              << mini.lexicon.entities().size() << " entities, "
              << mini.mentions.size() << " planted mentions to " << out_dir
              << "\n";
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
