// Writes the synthetic marker-token corpus used by the tests as JSON Lines.
#include <CLI11.hpp>

#include <iostream>

#include "fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate the synthetic fixture corpus"};
  rltg::fixtures::FixtureSpec spec;
  std::string out;
  app.add_option("--n-items", spec.n_items, "number of items (even)")->capture_default_str();
  app.add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  app.add_option("--marker-rate", spec.marker_rate, "probability a fake item carries the marker")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--marker-density", spec.marker_density, "per-token marker insertion chance in marked items")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--out", out, "output path")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    rltg::write_corpus(out, rltg::fixtures::make_fixture(spec));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
