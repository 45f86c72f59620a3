#pragma once

// High-precision values from tests/oracles/oracles.py (mpmath, 40 digits),
// computed independently of the library and frozen here.

namespace refs {

inline constexpr double kGbmForward = 116.18342427282831;  // 100 exp(0.03 * 5)

// CIR theta 0.1, a 0.5, sigma 0.2, r0 0.04.
inline constexpr double kCirKappa = 1.8614066163450716;
// phi(xi) exp(-lambda T) for the CIR bond at T = 10 with unit expectation.
inline constexpr double kCirDecompositionT10 = 0.14429970161726451;
inline constexpr double kCirBondT5 = 0.50397440561404421;
inline constexpr double kCirBondT1 = 0.92884391096285873;
inline constexpr double kCirLimitA = 0.32402930055377702;
inline constexpr double kCirLimitSigma = 0.12063005678809327;
inline constexpr double kCirDensityQ = 5.9917717861107555;  // t 1, r 0.05
inline constexpr double kCirDensityP = 6.7259090136206931;  // t 1, r 0.05

inline constexpr double kBesselI_2_5_3 = 1.5153394466819651;
inline constexpr double kBesselI_0_7_40 = 14802660243771215.0;
inline constexpr double kLogBesselI_4_1000 = 995.61930489622782;
inline constexpr double kLogGamma_0_3 = 1.0957979948180755;
inline constexpr double kLogGamma_150_5 = 602.51395487058541;

// 3/2: theta 2, a 1, sigma 0.5, alpha 0.5, leverage 2.
inline constexpr double kEll32 = 0.10977222864644366;
inline constexpr double kLambda32 = 0.21954445729288731;
inline constexpr double kLimit32A = 0.19050351852837781;
inline constexpr double kLimit32Sigma = -0.76201407411351123;

// Two-factor QTSM preset.
inline constexpr double kQtsmV[4] = {0.4858801424741719, 0.17837892921715192, 0.17837892921715192,
                                     0.51588894076846463};
inline constexpr double kQtsmU[2] = {0.10237033474070667, 0.23732628181876518};
inline constexpr double kQtsmLambda = 0.083435220783412435;
inline constexpr double kQtsmDeltaLimit[2] = {-0.27089793492240182, -0.47935764396958143};
inline constexpr double kQtsmLimitB0 = -0.10298404303272531;

// Heston mu 0.08, gamma 0.09, beta 2, delta 0.3, rho -0.5, alpha 0.5, x0 1, v0 0.04.
inline constexpr double kHestonMu = 0.5;
inline constexpr double kHestonGamma = -0.060162468185052874;
inline constexpr double kHestonBeta = 0.0026026649106579352;
inline constexpr double kHestonDelta = 0.00069764105112962726;
inline constexpr double kHestonRho = -0.00039039973659869028;
inline constexpr double kHestonV0 = -0.060162468185052874;
inline constexpr double kHestonX0 = 0.5;

inline constexpr double kScalarCareV = 0.70710678118654752;

}  // namespace refs
