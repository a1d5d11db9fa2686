#pragma once

#include <Eigen/Dense>

#include "remest/rng.hpp"

namespace remest::plant {

// Discrete-time LTI plant x(t+1) = A x(t) + w(t), y(t) = C x(t) + v(t).
// Only the matrices matter here: state/measurement trajectories are never
// simulated, the estimation cost depends on AoI and the steady-state
// covariance alone.
struct PlantModel {
    Eigen::MatrixXd A;  // l x l state transition
    Eigen::MatrixXd C;  // r x l measurement
    Eigen::MatrixXd W;  // l x l process noise covariance (PSD)
    Eigen::MatrixXd V;  // r x r measurement noise covariance (PD)

    int state_dim() const { return static_cast<int>(A.rows()); }
    int meas_dim() const { return static_cast<int>(C.rows()); }
};

// Steady-state posterior error covariance of the local Kalman filter.
struct SteadyStateCov {
    Eigen::MatrixXd p_bar;  // l x l, symmetric PSD
    double residual = 0.0;  // final Frobenius change of the prediction recursion
};

double spectral_radius(const Eigen::MatrixXd& m);

// Random plant with spectral radius drawn uniformly from [radius_lo, radius_hi]:
// A is an i.i.d. standard-normal sample rescaled to the target radius, C is
// i.i.d. standard normal, W = V = I. Pairs whose Riccati recursion does not
// converge are resampled (at most 100 retries).
PlantModel generate_random_plant(int state_dim, int meas_dim, double radius_lo,
                                 double radius_hi, Rng& rng);

// Fixed-point iteration of the prediction Riccati recursion starting from
// P = W, stopping when the successive Frobenius change is <= tol. Throws on
// non-convergence (undetectable/unstabilizable model).
SteadyStateCov solve_steady_state_covariance(const PlantModel& plant,
                                             double tol = 1e-9,
                                             long max_iter = 1000000);

// Remote error covariance after aoi slots without a delivery:
// f^{aoi-1}(p_bar) with f(X) = A X A^T + W. aoi = 1 is p_bar itself.
Eigen::MatrixXd error_covariance_at_aoi(const PlantModel& plant,
                                        const SteadyStateCov& cov, int aoi);

// Sum estimation MSE of the plant state at the given AoI: Tr(f^{aoi-1}(p_bar)).
double estimation_cost(const PlantModel& plant, const SteadyStateCov& cov, int aoi);

}  // namespace remest::plant
