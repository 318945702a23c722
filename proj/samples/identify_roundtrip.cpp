// Simulate a two-channel fractional model, then recover its orders and
// coupling matrix from the state trajectory.

#include <iostream>

#include "fos/io.hpp"
#include "fos/sysid.hpp"

int main() {
    fos::Vector alpha(2);
    alpha << 0.5, 0.8;
    fos::Matrix A(2, 2);
    A << -0.2, 0.05, 0.1, -0.3;
    const auto model = fos::FosModel::make(alpha, A, fos::Matrix::Zero(2, 0));

    fos::Vector x0(2);
    x0 << 1.0, -0.5;
    const auto traj = fos::simulate_fos(model, x0, fos::Matrix(), 7, 0.01, 400);

    fos::IdentifyOptions opts;
    opts.window = {0, 300};
    const auto fit = fos::identify(traj, opts);

    std::cout << "alpha_hat " << fit.alpha_hat.transpose() << "\n";
    std::cout << "A_hat\n" << fit.A_hat << "\n";
    for (std::size_t i = 0; i < fit.channels.size(); ++i)
        std::cout << "channel " << i + 1 << ": " << fit.channels[i].iterations << " iterations, "
                  << fos::flag_string(fit.channels[i].flags) << "\n";
    std::cout << fos::io::dump(fos::io::to_json(fit.model()));
}
