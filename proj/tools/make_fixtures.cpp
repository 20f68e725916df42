// Writes the bundled regression fixtures: y = 1 + 2x + eps, x ~ U(0, 10).

#include <fstream>
#include <iostream>
#include <string>

#include "hnorm/io.hpp"
#include "hnorm/noise.hpp"
#include "hnorm/simulator.hpp"

int main(int argc, char** argv) {
  using namespace hnorm;
  const std::string dir = argc > 1 ? argv[1] : "data";
  constexpr Eigen::Index n = 5000;
  constexpr std::uint64_t seed = 20240601;

  const struct {
    const char* file;
    NoiseSpec noise;
  } fixtures[] = {
      {"uniform_noise.csv", NoiseSpec{noise::Uniform{1.0}, noise::FixedWeights{}}},
      {"normal_noise.csv", NoiseSpec{noise::Single{noise::SingleKind::normal, 1.0}, noise::FixedWeights{}}},
  };

  const MatrixXd X = simulation_design(seed, n);
  std::uint64_t stream = 0;
  for (const auto& f : fixtures) {
    Rng rng = make_stream(seed, stream++);
    const VectorXd y = X * simulation_beta() + sample_noise(f.noise, n, rng);
    MatrixXd table(n, 2);
    table.col(0) = y;
    table.col(1) = X.col(1);
    const std::string path = dir + "/" + f.file;
    std::ofstream out(path);
    if (!out) {
      std::cerr << "cannot write " << path << '\n';
      return 1;
    }
    io::write_table(out, {"y", "x"}, table);
  }
  return 0;
}
