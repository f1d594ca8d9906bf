// Writes the bundled synthetic dataset and its golden evaluation report.
//
//   make_synthetic OUT_DIR
//
// The golden scores come from the brute-force oracles, not from the library
// metrics, so comparing `rvosfuse evaluate` against them is a real check.

#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_synthetic OUT_DIR\n";
    return 2;
  }
  const auto data = synthetic::Bundled();
  synthetic::WriteDataset(data, argv[1]);
  synthetic::WriteGolden(data, argv[1]);
  return 0;
}
