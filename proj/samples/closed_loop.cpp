// Receding-horizon control of the scalar fixture against an uncontrolled run
// on the same noise.

#include <iostream>

#include "fos/io.hpp"
#include "fos/mpc.hpp"

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : SAMPLE_DATA_DIR "/jansen_rit.json";
    const auto plant = fos::io::fos_model_from_json(fos::io::parse_json(fos::io::read_file(path), path));

    fos::MpcProblem pb;
    pb.depth = 15;
    pb.horizon = 20;
    pb.control_horizon = 10;
    pb.Q = {fos::Matrix::Identity(plant.n(), plant.n())};
    pb.R = {fos::Matrix::Identity(plant.m(), plant.m())};
    pb.u_lo = fos::Vector::Constant(plant.m(), -5.0);
    pb.u_hi = fos::Vector::Constant(plant.m(), 5.0);

    const fos::Index K = 1000;
    const fos::Matrix w = fos::gaussian_noise(42, K, plant.p(), 1.0);
    const fos::Vector x0 = fos::Vector::Zero(plant.n());
    const auto run = fos::run_closed_loop(plant, pb, x0, K, w);
    const auto base = fos::uncontrolled_baseline(plant, x0, K, w);

    const double ec = fos::energy(run.trajectory.states);
    const double eb = fos::energy(base.states);
    std::cout << "solves            " << run.solve_steps.size() << "\n"
              << "controlled energy " << ec << "\n"
              << "baseline energy   " << eb << "\n"
              << "ratio             " << ec / eb << "\n";
}
