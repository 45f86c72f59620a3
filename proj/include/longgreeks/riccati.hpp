#pragma once

#include "longgreeks/models.hpp"

#include <complex>
#include <string_view>

namespace longgreeks {

// 2 V a V - B^T V - V B - Gamma = 0 with a and Gamma symmetric positive definite.
struct CareProblem {
    Matrix a;
    Matrix B;
    Matrix gamma;
};

struct CareSolution {
    Matrix V;
    Matrix closed_loop;  // B - 2 a V
    Eigen::VectorXcd closed_loop_eigenvalues;
    double residual_norm = 0.0;
    bool stable = false;
};

Matrix care_residual(const CareProblem& problem, const Matrix& V);

// Stabilizing solution from the ordered real Schur form of the Hamiltonian
// [[B, -2a], [-Gamma, -B^T]].
CareSolution solve_care(const CareProblem& problem);

struct QtsmExtractionInputs {
    CareSolution care;
    Matrix V;
    Vector u;
    double lambda = 0.0;
};

QtsmExtractionInputs qtsm_extraction_inputs(const QtsmParams& params);

struct LambdaDerivative {
    double value = 0.0;    // central difference with step h
    double refined = 0.0;  // Richardson combination of steps h and h/2
    double h = 0.0;
};

// d lambda / d param for a QTSM model by re-solving the Riccati equation at
// param +- h. h <= 0 selects 1e-5 (1 + |param|).
LambdaDerivative lambda_prime_numeric(const ModelSpec& model, std::string_view param, double h = 0.0);

}  // namespace longgreeks
