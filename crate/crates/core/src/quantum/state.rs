
use super::{ComplexMatrix, RegisterLayout, C64};
use crate::error::{invalid, Error, Result};

const NORM_TOL: f64 = 1e-10;
const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
const DENSITY_TRACE_TOL: f64 = 1e-8;
const DENSITY_EIG_TOL: f64 = 1e-8;

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Checked constructor; the norm must be 1 within 1e-10.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(invalid("state vector must have positive dimension"));
        }
        let norm = norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        for a in &mut amps {
            *a /= n;
        }
        Self::new(amps)
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("inner product".into()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies a unitary and checks that the norm survives.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        let out = u.apply(&self.amps)?;
        let n = norm(&out);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("operator is not unitary: norm became {n}")));
        }
        Ok(Self { amps: out })
    }

    pub fn to_density(&self) -> DensityMatrix {
        let n = self.dim();
        let m = ComplexMatrix::from_fn(n, n, |r, c| self.amps[r] * self.amps[c].conj());
        DensityMatrix { m }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    /// Checked constructor: Hermitian within 1e-10, unit trace within 1e-8,
    /// eigenvalues no lower than -1e-8.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let rho = Self { m };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        Self { m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.m.is_square() || self.m.rows() == 0 {
            return Err(invalid("density matrix must be square and non-empty"));
        }
        let defect = self.m.hermiticity_defect();
        if defect > DENSITY_HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(invalid(format!("density matrix trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue()?;
        if min < -DENSITY_EIG_TOL {
            return Err(invalid(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    /// Real part of the trace.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let vals = eigenvalues(&self.m.hermitian_part())?;
        Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// `<psi|rho|psi>`
    pub fn expectation_pure(&self, psi: &StateVector) -> Result<f64> {
        let v = self.m.apply(psi.amplitudes())?;
        Ok(psi
            .amplitudes()
            .iter()
            .zip(&v)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re)
    }

    /// `U rho U^+`
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        let m = u.matmul(&self.m)?.matmul_adjoint(u)?;
        Ok(Self { m })
    }
}

fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    super::matrix::hermitian_eigenvalues(a)
}

/// Traces out every register of `layout` not listed in `keep`.
///
/// Register dimensions are taken as `2^width`. The kept registers stay in layout order.
pub fn partial_trace(rho: &DensityMatrix, layout: &RegisterLayout, keep: &[usize]) -> Result<DensityMatrix> {
    partial_trace_dims(rho, &layout.qubit_dims(), keep)
}

/// Partial trace over a tensor product with factor dimensions `dims` (first most significant).
pub fn partial_trace_dims(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "layout dimension {total} vs density matrix dimension {}",
            rho.dim()
        )));
    }
    if keep.is_empty() {
        return Err(invalid("keep set is empty"));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(invalid(format!("register {k} not in layout")));
        }
        kept[k] = true;
    }
    let keep_dim: usize = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let trace_dim = total / keep_dim;

    // full[t * keep_dim + a] is the full index with kept part a and traced part t.
    let mut full = vec![0usize; total];
    for i in 0..total {
        let (mut rem, mut a, mut t) = (i, 0usize, 0usize);
        let (mut sa, mut st) = (1usize, 1usize);
        for (k, &d) in dims.iter().enumerate().rev() {
            let digit = rem % d;
            rem /= d;
            if kept[k] {
                a += digit * sa;
                sa *= d;
            } else {
                t += digit * st;
                st *= d;
            }
        }
        full[t * keep_dim + a] = i;
    }

    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
    for t in 0..trace_dim {
        let idx = &full[t * keep_dim..(t + 1) * keep_dim];
        for (a, &ia) in idx.iter().enumerate() {
            let row = m.row(ia);
            for (b, &ib) in idx.iter().enumerate() {
                out[(a, b)] += row[ib];
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, clamped to [0, 1].
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch("fidelity".into()));
    }
    let eig = rho.matrix().hermitian_part().eigh()?;
    let vmax = eig.values.iter().fold(0.0_f64, |m, &x| m.max(x));
    // sqrt(rho) sigma sqrt(rho) is unitarily similar to
    // L^{1/2} V^+ sigma V L^{1/2}, restricted to the support of rho.
    let support: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > 1e-15 * vmax)
        .collect();
    if support.is_empty() {
        return Ok(0.0);
    }
    let n = rho.dim();
    let r = support.len();
    let vr = ComplexMatrix::from_fn(n, r, |i, c| eig.vectors[(i, support[c])]);
    let sv = sigma.matrix().matmul(&vr)?;
    let w = vr.dagger().matmul(&sv)?;
    let sq: Vec<f64> = support.iter().map(|&i| eig.values[i].sqrt()).collect();
    let a = ComplexMatrix::from_fn(r, r, |i, j| w[(i, j)] * (sq[i] * sq[j]));
    let mu = eigenvalues(&a.hermitian_part())?;
    let s: f64 = mu.iter().map(|&x| x.max(0.0).sqrt()).sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// Fidelity of a mixed state with a pure state, `<psi|sigma|psi>`.
pub fn fidelity_pure(psi: &StateVector, sigma: &DensityMatrix) -> Result<f64> {
    if psi.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch("fidelity".into()));
    }
    Ok(sigma.expectation_pure(psi)?.clamp(0.0, 1.0))
}
