//! Quadrature on the reference triangle `{xi, eta >= 0, xi + eta <= 1}` and on `[0, 1]`.

/// Seven-point rule exact for polynomials of degree 5. Weights sum to the
/// reference area 1/2.
pub const TRI7_POINTS: [[f64; 2]; 7] = {
    const A1: f64 = 0.059_715_871_789_769_8;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    [
        [1.0 / 3.0, 1.0 / 3.0],
        [B1, B1],
        [A1, B1],
        [B1, A1],
        [B2, B2],
        [A2, B2],
        [B2, A2],
    ]
};

pub const TRI7_WEIGHTS: [f64; 7] = {
    const W0: f64 = 0.225 / 2.0;
    const W1: f64 = 0.132_394_152_788_506_2 / 2.0;
    const W2: f64 = 0.125_939_180_544_827_1 / 2.0;
    [W0, W1, W1, W1, W2, W2, W2]
};

/// Three-point Gauss-Legendre rule on `[0, 1]`, exact to degree 5.
pub const GAUSS3_POINTS: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];

pub const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
