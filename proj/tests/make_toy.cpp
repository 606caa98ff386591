// Writes the synthetic toy data set used by the tests into a directory.
#include <cstdlib>
#include <iostream>

#include "support/toy.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_toy DIR [SEED]\n";
    return 2;
  }
  const auto seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0ULL;
  const auto paths = tunetext::toy::write_toy(argv[1], seed);
  std::cout << paths.corpus.string() << "\n";
  return 0;
}
