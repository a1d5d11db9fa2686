#include "remest/plant.hpp"

#include <stdexcept>
#include <string>

namespace remest::plant {

namespace {

Eigen::MatrixXd random_gaussian(int rows, int cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

// One step of the prediction Riccati recursion:
// P <- A (P - P C^T (C P C^T + V)^-1 C P) A^T + W
Eigen::MatrixXd riccati_step(const PlantModel& p, const Eigen::MatrixXd& prior) {
    const Eigen::MatrixXd innov = p.C * prior * p.C.transpose() + p.V;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(innov);
    if (!lu.isInvertible())
        throw std::runtime_error("riccati_step: singular innovation matrix");
    const Eigen::MatrixXd gain = prior * p.C.transpose() * lu.inverse();
    const Eigen::MatrixXd posterior = prior - gain * p.C * prior;
    Eigen::MatrixXd next = p.A * posterior * p.A.transpose() + p.W;
    next = 0.5 * (next + next.transpose().eval());  // keep symmetric
    return next;
}

Eigen::MatrixXd posterior_from_prior(const PlantModel& p, const Eigen::MatrixXd& prior) {
    const Eigen::MatrixXd innov = p.C * prior * p.C.transpose() + p.V;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(innov);
    if (!lu.isInvertible())
        throw std::runtime_error("steady-state covariance: singular innovation matrix");
    Eigen::MatrixXd post = prior - prior * p.C.transpose() * lu.inverse() * p.C * prior;
    post = 0.5 * (post + post.transpose().eval());
    return post;
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

PlantModel generate_random_plant(int state_dim, int meas_dim, double radius_lo,
                                 double radius_hi, Rng& rng) {
    if (state_dim < 1 || meas_dim < 1)
        throw std::invalid_argument("generate_random_plant: dimensions must be >= 1");
    if (radius_lo <= 0.0 || radius_hi < radius_lo)
        throw std::invalid_argument("generate_random_plant: bad radius range");

    constexpr int kMaxRetries = 100;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        const double target = rng.uniform(radius_lo, radius_hi);
        Eigen::MatrixXd a = random_gaussian(state_dim, state_dim, rng);
        const double rho = spectral_radius(a);
        if (rho <= 0.0) continue;  // measure-zero degenerate sample
        a *= target / rho;

        PlantModel model;
        model.A = a;
        model.C = random_gaussian(meas_dim, state_dim, rng);
        model.W = Eigen::MatrixXd::Identity(state_dim, state_dim);
        model.V = Eigen::MatrixXd::Identity(meas_dim, meas_dim);

        try {
            solve_steady_state_covariance(model);
        } catch (const std::runtime_error&) {
            continue;  // undetectable pair, resample
        }
        return model;
    }
    throw std::runtime_error(
        "generate_random_plant: no detectable plant found in 100 attempts");
}

SteadyStateCov solve_steady_state_covariance(const PlantModel& plant, double tol,
                                             long max_iter) {
    if (tol <= 0.0) throw std::invalid_argument("solve_steady_state_covariance: tol must be > 0");

    Eigen::MatrixXd prior = plant.W;
    double change = std::numeric_limits<double>::infinity();
    for (long it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd next = riccati_step(plant, prior);
        change = (next - prior).norm();
        prior = std::move(next);
        if (change <= tol) {
            SteadyStateCov out;
            out.p_bar = posterior_from_prior(plant, prior);
            out.residual = change;
            return out;
        }
        if (!prior.allFinite())
            throw std::runtime_error("steady-state covariance: iteration diverged");
    }
    throw std::runtime_error(
        "steady-state covariance: no convergence in " + std::to_string(max_iter) +
        " iterations (undetectable or unstabilizable model)");
}

Eigen::MatrixXd error_covariance_at_aoi(const PlantModel& plant,
                                        const SteadyStateCov& cov, int aoi) {
    if (aoi < 1) throw std::invalid_argument("error_covariance_at_aoi: aoi must be >= 1");
    Eigen::MatrixXd p = cov.p_bar;
    for (int k = 1; k < aoi; ++k) p = plant.A * p * plant.A.transpose() + plant.W;
    if (!p.allFinite())
        throw std::runtime_error("error_covariance_at_aoi: overflow, aoi beyond representable range");
    return p;
}

double estimation_cost(const PlantModel& plant, const SteadyStateCov& cov, int aoi) {
    return error_covariance_at_aoi(plant, cov, aoi).trace();
}

}  // namespace remest::plant
