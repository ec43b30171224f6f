// Regenerates the replay fixtures: fixturegen <output-dir>
#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: fixturegen <output-dir>\n";
    return 2;
  }
  try {
    qta::synth::generate_all(argv[1]);
  } catch (const std::exception& e) {
    std::cerr << "fixturegen: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
