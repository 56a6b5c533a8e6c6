//! Truncated harmonic-oscillator operators on `d` Fock levels.

use crate::quantum::{ComplexMatrix, C64};

/// `a` with `<f-1|a|f> = sqrt(f)`.
pub fn annihilation(d: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(d, d);
    for f in 1..d {
        a[(f - 1, f)] = C64::new((f as f64).sqrt(), 0.0);
    }
    a
}

pub fn creation(d: usize) -> ComplexMatrix {
    annihilation(d).dagger()
}

/// `diag(0, 1, ..., d-1)`
pub fn number(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&(0..d).map(|f| C64::new(f as f64, 0.0)).collect::<Vec<_>>())
}

/// Dimensionless position `Q = (a + a^+) / sqrt 2`.
pub fn position(d: usize) -> ComplexMatrix {
    let a = annihilation(d);
    a.add(&a.dagger())
        .expect("same shape")
        .scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
}
