#![allow(dead_code)]

use mqb_core::quantum::{ComplexMatrix, DensityMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(dim: usize, seed: u64) -> ComplexMatrix {
    let mut r = rng(seed);
    ComplexMatrix::from_fn(dim, dim, |_, _| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    random_matrix(dim, seed).hermitian_part()
}

/// `A A^+ / tr`, full rank with probability one.
pub fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let a = random_matrix(dim, seed);
    let m = a.matmul_adjoint(&a).unwrap();
    let tr = m.trace().unwrap().re;
    DensityMatrix::new(m.scale(C64::new(1.0 / tr, 0.0))).unwrap()
}

pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    mqb_core::quantum::matrix_exponential(&random_hermitian(dim, seed), 1.0).unwrap()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Random Hermitian VC model with O(1) coefficients; `coupled = false` leaves only c0 diagonal.
pub fn random_model(electronic: usize, modes: usize, seed: u64, coupled: bool) -> mqb_core::model::VCModel {
    use mqb_core::model::{ModeSpec, VCModel};
    let mut r = rng(seed);
    let specs = (0..modes).map(|_| ModeSpec::new(r.gen_range(0.5..2.0)).unwrap()).collect();
    let mut m = VCModel::new(electronic, specs).unwrap();
    let c = |r: &mut ChaCha8Rng, diag: bool| {
        let re = r.gen_range(-1.0..1.0);
        C64::new(re, if diag { 0.0 } else { r.gen_range(-1.0..1.0) })
    };
    for n in 0..electronic {
        m.set_c0(n, n, c(&mut r, true)).unwrap();
    }
    if !coupled {
        return m;
    }
    for n in 0..electronic {
        for k in n..electronic {
            if k != n {
                m.set_c0(n, k, c(&mut r, false)).unwrap();
            }
            for j in 0..modes {
                m.set_c1(n, k, j, c(&mut r, k == n)).unwrap();
                for l in j..modes {
                    m.set_c2(n, k, j, l, c(&mut r, k == n)).unwrap();
                }
            }
        }
    }
    m
}

/// Fixed-seed proptest configuration so reruns see the same cases.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Default::default()
    }
}

/// Random sum of `terms` strings on `n` plain qubits; real coefficients when `hermitian`.
pub fn random_pauli_sum(n: usize, terms: usize, seed: u64, hermitian: bool) -> mqb_core::encoding::PauliSum {
    use mqb_core::encoding::{PauliString, PauliSum};
    use mqb_core::quantum::RegisterLayout;
    let mut r = rng(seed);
    let list = (0..terms)
        .map(|_| {
            let x = r.gen_range(0..1u64 << n);
            let z = r.gen_range(0..1u64 << n);
            let im = if hermitian { 0.0 } else { r.gen_range(-1.0..1.0) };
            (C64::new(r.gen_range(-1.0..1.0), im), PauliString::from_masks(n, x, z))
        })
        .collect();
    PauliSum::from_terms(RegisterLayout::qubits(n).unwrap(), list).unwrap().grouped()
}
