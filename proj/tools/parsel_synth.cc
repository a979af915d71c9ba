#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "parsel/synthetic.h"

int main(int argc, char** argv) {
  CLI::App app{"two-family synthetic treebank fixture generator"};

  std::string dir = "fixture";
  parsel::FixtureSpec spec;
  app.add_option("--dir", dir, "output directory");
  app.add_option("--seed", spec.seed, "fixture seed");
  app.add_option("--train-sentences", spec.train_sentences,
                 "sentences per source treebank");
  app.add_option("--target-sentences", spec.target_sentences,
                 "sentences per target treebank");

  CLI11_PARSE(app, argc, argv);

  try {
    parsel::write_fixture(dir, spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "fixture written to " << dir << "\n";
  return 0;
}
