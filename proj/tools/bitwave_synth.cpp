// Writes the synthetic two-class dataset (sweeps vs. noise bursts) as WAV files
// plus manifest.csv.
#include <CLI11.hpp>
#include <iostream>

#include "bitwave/error.hpp"
#include "bitwave/train.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bitwave_synth: write the synthetic sweep / noise-burst dataset"};
  bitwave::train::SyntheticSpec spec;
  std::string dir;
  app.add_option("dir", dir, "Output directory")->required();
  app.add_option("--clips", spec.clips, "Total clips");
  app.add_option("--train", spec.train_clips, "Clips in the training split");
  app.add_option("--seconds", spec.seconds, "Clip duration");
  app.add_option("--rate", spec.sample_rate, "Sample rate");
  app.add_option("--seed", spec.seed, "Generator seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    std::cout << bitwave::train::write_synthetic(spec, dir).string() << "\n";
  } catch (const bitwave::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bitwave::exit_code_for(e.kind());
  }
  return 0;
}
