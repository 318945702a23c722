#pragma once

// Shared fixtures for the test binaries.

#include <cmath>
#include <string>

#include "fos/estimate.hpp"
#include "fos/io.hpp"
#include "fos/simulate.hpp"

#ifndef FOS_SAMPLE_DATA
#define FOS_SAMPLE_DATA "samples/data"
#endif

namespace fixture {

using fos::Index;
using fos::Matrix;
using fos::Vector;

inline std::string data_path(const std::string& name) { return std::string(FOS_SAMPLE_DATA) + "/" + name; }

inline fos::FosModel load_model(const std::string& name) {
    return fos::io::fos_model_from_json(fos::io::parse_json(fos::io::read_file(data_path(name)), name));
}

inline fos::MultiTermNetwork load_network(const std::string& name) {
    return fos::io::network_from_json(fos::io::parse_json(fos::io::read_file(data_path(name)), name));
}

inline fos::FosModel scalar(double A, double alpha) {
    return fos::FosModel::make(Vector::Constant(1, alpha), Matrix::Constant(1, 1, A), Matrix::Zero(1, 0));
}

inline fos::FosModel two_channel() {
    Matrix A(2, 2);
    A << -0.2, 0.05, 0.1, -0.3;
    Vector alpha(2);
    alpha << 0.5, 0.8;
    return fos::FosModel::make(alpha, A, Matrix::Zero(2, 0));
}


// Four-channel network, two measured outputs; mean error over the last 100 of 400 steps.
inline double network_terminal_error(Index v) {
    const auto net = load_network("network4.json");
    const Index K = 400;
    Matrix u(K, 1);
    for (Index k = 0; k < K; ++k) u(k, 0) = std::sin(0.05 * static_cast<double>(k));
    Vector x0(4);
    x0 << 1.0, -1.0, 0.5, 0.8;
    const auto traj = fos::simulate_network(net, x0, u, fos::gaussian_noise(7, K, 4, 1.0),
                                            fos::gaussian_noise(8, K + 1, 2, 0.02), K);
    const Index d = 5 * v;
    const auto cfg = fos::EstimatorConfig::constant(0.0025 * Matrix::Identity(4, 4), 0.0004 * Matrix::Identity(2, 2),
                                                    Matrix::Identity(d, d), Vector::Zero(d));
    const auto run = fos::run_estimator(net, v, cfg, traj);
    return run.errors->tail(100).mean();
}

}  // namespace fixture
