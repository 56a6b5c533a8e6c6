//! Product-formula evolution of Pauli sums and CNOT-ladder resource counts.

use serde::{Deserialize, Serialize};

use crate::dynamics::{step_times, TimeGrid, Trajectory};
use crate::encoding::PauliSum;
use crate::error::{invalid, Error, Result};
use crate::quantum::{check_budget, ComplexMatrix, RegisterLayout, StateVector, HERMITIAN_TOL, C64};

/// Accumulated unitarity defect tolerated over a full run.
pub const UNITARITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrotterOrder {
    First,
    Second,
}

impl TrotterOrder {
    pub fn from_int(p: u32) -> Result<Self> {
        match p {
            1 => Ok(TrotterOrder::First),
            2 => Ok(TrotterOrder::Second),
            _ => Err(invalid(format!("Trotter order must be 1 or 2, got {p}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            TrotterOrder::First => 1,
            TrotterOrder::Second => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterPlan {
    pub order: TrotterOrder,
    pub steps: usize,
    pub t_final: f64,
}

impl TrotterPlan {
    pub fn new(order: TrotterOrder, steps: usize, t_final: f64) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("Trotter step count must be at least 1"));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(invalid(format!("final time must be positive, got {t_final}")));
        }
        Ok(Self { order, steps, t_final })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }
}

/// `exp(-i theta P)` for a single Pauli string.
#[derive(Clone, Copy, Debug)]
struct Rotation {
    x: usize,
    z: usize,
    y_phase: C64,
    cos: f64,
    sin: f64,
}

impl Rotation {
    fn phase(&self, c: usize) -> C64 {
        if (c & self.z).count_ones() % 2 == 0 {
            self.y_phase
        } else {
            -self.y_phase
        }
    }

    /// `psi <- cos(theta) psi - i sin(theta) P psi`, using `P|c> = phase(c) |c ^ x>`.
    fn apply(&self, psi: &mut [C64]) {
        let msin = C64::new(0.0, -self.sin);
        if self.x == 0 {
            let plus = C64::new(self.cos, 0.0) + msin * self.y_phase;
            let minus = C64::new(self.cos, 0.0) - msin * self.y_phase;
            for (c, v) in psi.iter_mut().enumerate() {
                *v *= if (c & self.z).count_ones() % 2 == 0 { plus } else { minus };
            }
            return;
        }
        let hb = 1usize << (usize::BITS - 1 - self.x.leading_zeros());
        let dim = psi.len();
        let mut hi = 0;
        while hi < dim {
            for c in hi..hi + hb {
                let d = c ^ self.x;
                let (a, b) = (psi[c], psi[d]);
                psi[c] = a * self.cos + msin * self.phase(d) * b;
                psi[d] = b * self.cos + msin * self.phase(c) * a;
            }
            hi += 2 * hb;
        }
    }
}

/// The ordered per-term exponentials of one Trotter step.
#[derive(Clone, Debug)]
pub struct TrotterStepper {
    dim: usize,
    rotations: Vec<Rotation>,
}

impl TrotterStepper {
    /// Rotations `exp(-i alpha_k P_k scale)` in term order.
    ///
    /// Identity terms are kept as exact global phases.
    pub fn pass(ps: &PauliSum, scale: f64) -> Result<Self> {
        let dim = ps.layout().dim();
        check_budget(dim)?;
        if !ps.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian {
                defect: ps.max_relative_imag(),
            });
        }
        let rotations = ps
            .terms()
            .iter()
            .map(|(a, p)| {
                let theta = a.re * scale;
                Rotation {
                    x: p.x_mask() as usize,
                    z: p.z_mask() as usize,
                    y_phase: p.phase(0),
                    cos: theta.cos(),
                    sin: theta.sin(),
                }
            })
            .collect();
        Ok(Self { dim, rotations })
    }

    pub fn new(ps: &PauliSum, dt: f64, order: TrotterOrder) -> Result<Self> {
        match order {
            TrotterOrder::First => Self::pass(ps, dt),
            TrotterOrder::Second => {
                let mut s = Self::pass(ps, 0.5 * dt)?;
                let back: Vec<Rotation> = s.rotations.iter().rev().copied().collect();
                s.rotations.extend(back);
                Ok(s)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of per-term exponentials applied per step.
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn apply(&self, psi: &mut [C64]) -> Result<()> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch("Trotter step applied to wrong dimension".into()));
        }
        for r in &self.rotations {
            r.apply(psi);
        }
        Ok(())
    }

    /// The step as a dense matrix, column by column.
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let mut u = ComplexMatrix::zeros(self.dim, self.dim);
        let mut col = vec![C64::new(0.0, 0.0); self.dim];
        for c in 0..self.dim {
            col.fill(C64::new(0.0, 0.0));
            col[c] = C64::new(1.0, 0.0);
            self.apply(&mut col)?;
            for (r, v) in col.iter().enumerate() {
                u[(r, c)] = *v;
            }
        }
        Ok(u)
    }
}

/// One Trotter step `U(dt)` as a dense unitary.
pub fn trotter_step(ps: &PauliSum, dt: f64, order: TrotterOrder) -> Result<ComplexMatrix> {
    TrotterStepper::new(ps, dt, order)?.to_matrix()
}

/// Trotterized evolution of a qubit-space state, sampled at the snapped grid boundaries.
///
/// The trajectory is kept in the qubit basis of `ps`.
pub fn simulate_trotter(ps: &PauliSum, plan: &TrotterPlan, psi0: &StateVector, grid: &TimeGrid) -> Result<Trajectory> {
    simulate_trotter_with(ps, plan, psi0, grid, true)
}

pub fn simulate_trotter_with(
    ps: &PauliSum,
    plan: &TrotterPlan,
    psi0: &StateVector,
    grid: &TimeGrid,
    keep_states: bool,
) -> Result<Trajectory> {
    if (grid.t_final() - plan.t_final).abs() > 1e-12 * plan.t_final {
        return Err(Error::GridMismatch("grid and plan final times differ".into()));
    }
    if psi0.dim() != ps.layout().dim() {
        return Err(Error::DimensionMismatch("initial state is not on the qubit layout".into()));
    }
    let stepper = TrotterStepper::new(ps, plan.dt(), plan.order)?;
    let indices = grid.snap(plan.steps)?;
    let times = step_times(plan.t_final, plan.steps, &indices);
    let mut traj = Trajectory::in_qubit_basis(ps.layout().system());
    let mut psi = psi0.amplitudes().to_vec();
    let mut done = 0;
    for (&idx, &t) in indices.iter().zip(&times) {
        while done < idx {
            stepper.apply(&mut psi)?;
            done += 1;
        }
        let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > UNITARITY_TOL {
            return Err(invalid(format!("Trotter evolution lost unitarity: |psi|^2 - 1 = {:e}", norm2 - 1.0)));
        }
        traj.push_pure(t, StateVector::normalized(psi.clone())?, keep_states);
    }
    Ok(traj)
}

/// Per-step and total gate tallies under the CNOT-ladder model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCount {
    pub qubits: usize,
    pub rz_per_step: u64,
    pub cnot_raw_per_step: u64,
    pub cnot_opt_per_step: u64,
    #[serde(rename = "N")]
    pub steps: u64,
    pub totals: ResourceTotals,
    /// `qubits * totals.cnot_opt`
    pub volume: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceTotals {
    pub rz: u64,
    pub cnot_raw: u64,
    /// Per-step ceiling times `N`.
    pub cnot_opt: u64,
    /// `ceil(cnot_raw * N / 3)`, dividing once over the whole circuit.
    pub cnot_opt_global: u64,
}

impl ResourceCount {
    /// Counts from a multiset of string weights; identity strings cost nothing.
    pub fn from_weights(weights: &[usize], steps: u64, qubits: usize) -> Self {
        let rz = weights.iter().filter(|&&p| p > 0).count() as u64;
        let raw: u64 = weights.iter().filter(|&&p| p > 0).map(|&p| 2 * (p as u64 - 1)).sum();
        let opt = raw.div_ceil(3);
        Self {
            qubits,
            rz_per_step: rz,
            cnot_raw_per_step: raw,
            cnot_opt_per_step: opt,
            steps: 0,
            totals: ResourceTotals::default(),
            volume: 0,
        }
        .with_steps(steps)
    }

    /// The same per-step tallies over `steps` steps.
    pub fn with_steps(&self, steps: u64) -> Self {
        let totals = ResourceTotals {
            rz: self.rz_per_step * steps,
            cnot_raw: self.cnot_raw_per_step * steps,
            cnot_opt: self.cnot_opt_per_step * steps,
            cnot_opt_global: (self.cnot_raw_per_step * steps).div_ceil(3),
        };
        Self {
            steps,
            volume: self.qubits as u64 * totals.cnot_opt,
            totals,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("resource counts serialize")
    }
}

/// First-order resource counts of `N` steps of `ps` on `layout`.
pub fn count_resources(ps: &PauliSum, steps: u64, layout: &RegisterLayout) -> ResourceCount {
    ResourceCount::from_weights(&ps.weights(), steps, layout.total_qubits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{encode_vc_model, PauliString, Prune};
    use crate::model::pyrazine_lvc;
    use crate::quantum::matrix_exponential;

    fn sum(n: usize, terms: &[(f64, &str)]) -> PauliSum {
        PauliSum::from_terms(
            RegisterLayout::qubits(n).unwrap(),
            terms
                .iter()
                .map(|&(a, s)| (C64::new(a, 0.0), PauliString::from_letters(s).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_term_is_exact() {
        for s in ["X", "Y", "Z"] {
            let ps = sum(1, &[(0.7, s)]);
            for dt in [0.01, 0.3, 2.5] {
                let u = trotter_step(&ps, dt, TrotterOrder::First).unwrap();
                let e = matrix_exponential(&ps.to_matrix().unwrap(), dt).unwrap();
                assert!(u.max_abs_diff(&e).unwrap() < 1e-14);
            }
        }
        let ps = sum(3, &[(-1.3, "XYZ")]);
        let u = trotter_step(&ps, 0.4, TrotterOrder::Second).unwrap();
        let e = matrix_exponential(&ps.to_matrix().unwrap(), 0.4).unwrap();
        assert!(u.max_abs_diff(&e).unwrap() < 1e-13);
    }

    #[test]
    fn error_orders_on_x_plus_z() {
        let ps = sum(1, &[(1.0, "X"), (1.0, "Z")]);
        let h = ps.to_matrix().unwrap();
        let err = |dt: f64, o| {
            let u = trotter_step(&ps, dt, o).unwrap();
            u.max_abs_diff(&matrix_exponential(&h, dt).unwrap()).unwrap()
        };
        // |[X, Z]| / 2 = 1 in max-entry norm.
        let e1 = err(0.1, TrotterOrder::First);
        assert!(e1 > 0.5e-2 && e1 < 2e-2, "{e1}");
        let slope1 = (err(0.01, TrotterOrder::First) / e1).log10() / -1.0;
        let slope2 = (err(0.01, TrotterOrder::Second) / err(0.1, TrotterOrder::Second)).log10() / -1.0;
        assert!((slope1 - 2.0).abs() < 0.05, "{slope1}");
        assert!((slope2 - 3.0).abs() < 0.05, "{slope2}");
    }

    #[test]
    fn strang_step_is_reversible() {
        let ps = sum(2, &[(0.4, "XY"), (-0.9, "ZI"), (0.3, "IX"), (0.2, "YY")]);
        let f = trotter_step(&ps, 0.37, TrotterOrder::Second).unwrap();
        let b = trotter_step(&ps, -0.37, TrotterOrder::Second).unwrap();
        let id = ComplexMatrix::identity(4);
        assert!(f.matmul(&b).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
    }

    #[test]
    fn commuting_terms_exact_in_one_step() {
        let ps = sum(3, &[(0.4, "ZZI"), (-0.9, "IZZ"), (0.3, "ZIZ"), (1.1, "IIZ"), (0.5, "III")]);
        let plan = TrotterPlan::new(TrotterOrder::First, 1, 2.0).unwrap();
        let u = trotter_step(&ps, plan.dt(), plan.order).unwrap();
        let e = matrix_exponential(&ps.to_matrix().unwrap(), 2.0).unwrap();
        assert!(u.max_abs_diff(&e).unwrap() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut ps = sum(1, &[(1.0, "X")]);
        ps.push(C64::new(0.0, 1.0), PauliString::from_letters("Z").unwrap());
        assert!(matches!(trotter_step(&ps, 0.1, TrotterOrder::First), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn pyrazine_d8_matches_brute_force_product() {
        let model = pyrazine_lvc();
        let ps = encode_vc_model(&model, &[8, 8], Prune::default()).unwrap();
        let dim = ps.layout().dim();
        let t = 150e-15;
        let n = 256;
        let plan = TrotterPlan::new(TrotterOrder::First, n, t).unwrap();
        let dt = plan.dt();
        // Dense product of cos I - i sin P built from the string matrices.
        let mut step = ComplexMatrix::identity(dim);
        for (a, p) in ps.terms() {
            let pm = p.to_matrix().unwrap();
            let th = a.re * dt;
            let uk = ComplexMatrix::identity(dim)
                .scale(C64::new(th.cos(), 0.0))
                .add(&pm.scale(C64::new(0.0, -th.sin())))
                .unwrap();
            step = uk.matmul(&step).unwrap();
        }
        let mut psi = StateVector::basis(dim, 1 << 6).unwrap();
        let psi0 = psi.clone();
        for _ in 0..n {
            psi = psi.evolve(&step).unwrap();
        }
        let grid = TimeGrid::new(t, 2).unwrap();
        let traj = simulate_trotter(&ps, &plan, &psi0, &grid).unwrap();
        let last = match traj.state(1).unwrap() {
            crate::dynamics::SampleState::Pure(s) => s.clone(),
            _ => unreachable!(),
        };
        let diff = psi
            .amplitudes()
            .iter()
            .zip(last.amplitudes())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn weight_census_counts() {
        let c = ResourceCount::from_weights(&[3, 3, 5], 10, 7);
        assert_eq!(c.rz_per_step, 3);
        assert_eq!(c.cnot_raw_per_step, 16);
        assert_eq!(c.cnot_opt_per_step, 6);
        assert_eq!(c.totals.cnot_opt, 60);
        assert_eq!(c.totals.cnot_opt_global, 54);
        assert_eq!(c.volume, 420);
        let one = count_resources(&sum(2, &[(1.0, "IX")]), 1, &RegisterLayout::qubits(2).unwrap());
        assert_eq!((one.rz_per_step, one.cnot_raw_per_step), (1, 0));
        let j = one.to_json();
        assert_eq!(j["N"], 1);
        assert_eq!(j["totals"]["rz"], 1);
    }
}
