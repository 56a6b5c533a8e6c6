//! Reference dynamics: exact unitary propagation, Lindblad integration and MQB emulation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::encoding::GrayCode;
use crate::error::{invalid, Error, Result};
use crate::model::{build_hamiltonian, build_hamiltonian_sparse, build_jump_operator_sparse, electronic_populations, LindbladChannel, VCModel};
use crate::ode::{Dopri5, OdeStats, Tolerances};
use crate::quantum::{ComplexMatrix, CsrMatrix, DensityMatrix, HermitianEigen, RegisterLayout, StateVector, C64};

/// Largest accepted drift of the trace during a Lindblad run.
pub const TRACE_TOL: f64 = 1e-7;
const POPULATION_TOL: f64 = 1e-8;

/// `K` uniform samples on `[0, T]`, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    samples: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, samples: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(invalid(format!("final time must be positive, got {t_final}")));
        }
        if samples < 2 {
            return Err(invalid("a time grid needs at least two samples"));
        }
        Ok(Self { t_final, samples })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        let last = (self.samples - 1) as f64;
        (0..self.samples)
            .map(|k| if k + 1 == self.samples { self.t_final } else { self.t_final * k as f64 / last })
            .collect()
    }

    /// Step indices nearest to each sample for `steps` steps of `T / steps`, deduplicated.
    pub fn snap(&self, steps: usize) -> Result<Vec<usize>> {
        if steps == 0 {
            return Err(invalid("step count must be positive"));
        }
        let last = (self.samples - 1) as f64;
        let mut idx: Vec<usize> = (0..self.samples)
            .map(|k| (k as f64 * steps as f64 / last).round() as usize)
            .collect();
        idx.dedup();
        Ok(idx)
    }

    /// Times of the snapped step boundaries.
    pub fn snapped_times(&self, steps: usize) -> Result<Vec<f64>> {
        Ok(step_times(self.t_final, steps, &self.snap(steps)?))
    }
}

/// `index * (T / steps)`, with the final step landing exactly on `T`.
pub fn step_times(t_final: f64, steps: usize, indices: &[usize]) -> Vec<f64> {
    let dt = t_final / steps as f64;
    indices
        .iter()
        .map(|&i| if i == steps { t_final } else { i as f64 * dt })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampleState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl SampleState {
    pub fn dim(&self) -> usize {
        match self {
            SampleState::Pure(s) => s.dim(),
            SampleState::Mixed(r) => r.dim(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            SampleState::Pure(s) => s.to_density(),
            SampleState::Mixed(r) => r.clone(),
        }
    }
}

/// Sampled states and diabatic populations in the truncated Fock basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    electronic: usize,
    times: Vec<f64>,
    populations: Vec<Vec<f64>>,
    traces: Vec<f64>,
    states: Vec<Option<SampleState>>,
    qubit_layout: Option<RegisterLayout>,
}

impl Trajectory {
    /// A trajectory whose states live in the truncated Fock basis.
    pub fn new(electronic: usize) -> Self {
        Self {
            electronic,
            ..Default::default()
        }
    }

    /// A trajectory whose states live in the Gray-coded qubit space of `layout`.
    pub fn in_qubit_basis(layout: RegisterLayout) -> Self {
        Self {
            electronic: layout.registers()[0].levels,
            qubit_layout: Some(layout),
            ..Default::default()
        }
    }

    pub fn electronic_states(&self) -> usize {
        self.electronic
    }

    /// `None` for the Fock basis.
    pub fn qubit_layout(&self) -> Option<&RegisterLayout> {
        self.qubit_layout.as_ref()
    }

    fn populations_of(&self, diagonal: &[f64]) -> Vec<f64> {
        match &self.qubit_layout {
            Some(l) => qubit_electronic_populations(diagonal, l),
            None => electronic_populations(diagonal, self.electronic),
        }
    }

    pub fn push_pure(&mut self, t: f64, psi: StateVector, keep: bool) {
        let pops = self.populations_of(&psi.probabilities());
        self.push_populations(t, pops, psi.norm().powi(2));
        self.states.pop();
        self.states.push(keep.then_some(SampleState::Pure(psi)));
    }

    pub fn push_mixed(&mut self, t: f64, rho: DensityMatrix, keep: bool) {
        let pops = self.populations_of(&rho.diagonal());
        self.push_populations(t, pops, rho.trace());
        self.states.pop();
        self.states.push(keep.then_some(SampleState::Mixed(rho)));
    }

    /// Records a sample without a state.
    pub fn push_populations(&mut self, t: f64, populations: Vec<f64>, trace: f64) {
        self.times.push(t);
        self.populations.push(populations);
        self.traces.push(trace);
        self.states.push(None);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Per-sample populations `P_n`.
    pub fn populations(&self) -> &[Vec<f64>] {
        &self.populations
    }

    /// The time series of `P_n`.
    pub fn population(&self, n: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[n]).collect()
    }

    pub fn traces(&self) -> &[f64] {
        &self.traces
    }

    pub fn state(&self, index: usize) -> Option<&SampleState> {
        self.states.get(index).and_then(|s| s.as_ref())
    }

    pub fn has_states(&self) -> bool {
        self.states.iter().all(|s| s.is_some())
    }

    /// Populations lie in `[-1e-8, 1 + 1e-8]` and sum to the trace within 1e-8.
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.populations.iter().enumerate() {
            if p.iter().any(|&x| !(-POPULATION_TOL..=1.0 + POPULATION_TOL).contains(&x)) {
                return Err(invalid(format!("population out of range at sample {i}")));
            }
            let s: f64 = p.iter().sum();
            if (s - self.traces[i]).abs() > POPULATION_TOL {
                return Err(invalid(format!("populations do not sum to the trace at sample {i}")));
            }
        }
        Ok(())
    }

    /// CSV with columns `time_s, P_0, ..., P_{D-1}`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["time_s".to_string()];
        header.extend((0..self.electronic).map(|n| format!("P_{n}")));
        out.write_record(&header).map_err(csv_err)?;
        for (t, p) in self.times.iter().zip(&self.populations) {
            let mut rec = vec![format!("{t:e}")];
            rec.extend(p.iter().map(|x| format!("{x:e}")));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }
}

/// Electronic populations from a qubit-space diagonal; unused electronic codewords are dropped.
pub fn qubit_electronic_populations(diagonal: &[f64], layout: &RegisterLayout) -> Vec<f64> {
    let e = layout.registers()[0];
    let shift = layout.total_qubits() - e.width;
    let gray = GrayCode::new(e.width);
    let mut pops = vec![0.0; e.levels];
    for (c, &p) in diagonal.iter().enumerate() {
        let n = gray.decode(c >> shift);
        if n < e.levels {
            pops[n] += p;
        }
    }
    pops
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Exact propagation through the eigendecomposition of a dense Hamiltonian.
pub struct UnitaryPropagator {
    eig: HermitianEigen,
    electronic: usize,
}

impl UnitaryPropagator {
    pub fn new(model: &VCModel, cutoffs: &[usize]) -> Result<Self> {
        let (h, _) = build_hamiltonian(model, cutoffs)?;
        Self::from_hamiltonian(&h, model.electronic_states())
    }

    pub fn from_hamiltonian(h: &ComplexMatrix, electronic: usize) -> Result<Self> {
        if electronic == 0 || h.rows() % electronic != 0 {
            return Err(Error::DimensionMismatch("electronic register does not divide the dimension".into()));
        }
        Ok(Self { eig: h.eigh()?, electronic })
    }

    pub fn dim(&self) -> usize {
        self.eig.values.len()
    }

    pub fn unitary(&self, t: f64) -> ComplexMatrix {
        self.eig.map(|l| C64::from_polar(1.0, -l * t))
    }

    pub fn state_at(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        match self.trajectory_at(psi0, &[t], true)?.states.pop().flatten() {
            Some(SampleState::Pure(p)) => Ok(p),
            _ => unreachable!("pure sample kept"),
        }
    }

    pub fn trajectory_at(&self, psi0: &StateVector, times: &[f64], keep: bool) -> Result<Trajectory> {
        let n = self.dim();
        if psi0.dim() != n {
            return Err(Error::DimensionMismatch("initial state does not match the Hamiltonian".into()));
        }
        let v = &self.eig.vectors;
        // Coefficients in the eigenbasis.
        let coef = v.dagger().apply(psi0.amplitudes())?;
        let mut traj = Trajectory::new(self.electronic);
        for &t in times {
            let rotated: Vec<C64> = coef
                .iter()
                .zip(&self.eig.values)
                .map(|(c, &l)| c * C64::from_polar(1.0, -l * t))
                .collect();
            let psi = StateVector::new(v.apply(&rotated)?)?;
            traj.push_pure(t, psi, keep);
        }
        Ok(traj)
    }
}

pub fn propagate_unitary(model: &VCModel, cutoffs: &[usize], psi0: &StateVector, grid: &TimeGrid) -> Result<Trajectory> {
    UnitaryPropagator::new(model, cutoffs)?.trajectory_at(psi0, &grid.times(), true)
}

/// Jump operator with `sqrt(gamma)` absorbed, stored in the cheapest applicable form.
#[derive(Clone, Debug)]
enum Jump {
    Gather(Vec<Option<(usize, C64)>>),
    General(CsrMatrix),
}

/// Largest dimension for which the summed diagonal-jump weights are stored densely.
const DENSE_WEIGHT_DIM: usize = 4096;

/// The Lindblad generator acting on row-major density matrices.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    // -iH - 1/2 sum_i gamma_i V_i^+ V_i
    k: CsrMatrix,
    // Diagonal jumps: V_i rho V_i^+ = (v_i v_i^+) o rho.
    diagonal: Vec<Vec<C64>>,
    weights: Option<Vec<C64>>,
    jumps: Vec<Jump>,
}

impl Liouvillian {
    /// `jumps` are `(gamma, bare V)` pairs; zero-rate channels are dropped.
    pub fn new(h: &CsrMatrix, jumps: &[(f64, CsrMatrix)]) -> Result<Self> {
        let dim = h.rows();
        if h.cols() != dim {
            return Err(Error::DimensionMismatch("Hamiltonian must be square".into()));
        }
        let mut k = h.scale(C64::new(0.0, -1.0));
        let mut diagonal = Vec::new();
        let mut stored = Vec::new();
        for (gamma, v) in jumps {
            if !(*gamma >= 0.0 && gamma.is_finite()) {
                return Err(invalid(format!("rate must be non-negative, got {gamma}")));
            }
            if v.rows() != dim || v.cols() != dim {
                return Err(Error::DimensionMismatch("jump operator".into()));
            }
            if *gamma == 0.0 {
                continue;
            }
            let v = v.scale(C64::new(gamma.sqrt(), 0.0));
            let vv = v.dagger().matmul(&v)?;
            k = k.add(&vv.scale(C64::new(-0.5, 0.0)))?;
            if v.is_diagonal() {
                diagonal.push(v.diagonal());
            } else if let Some(rows) = v.single_entry_rows() {
                stored.push(Jump::Gather(rows));
            } else {
                stored.push(Jump::General(v));
            }
        }
        let weights = (!diagonal.is_empty() && dim <= DENSE_WEIGHT_DIM).then(|| {
            let mut w = vec![C64::new(0.0, 0.0); dim * dim];
            for l in &diagonal {
                for a in 0..dim {
                    for b in 0..dim {
                        w[a * dim + b] += l[a] * l[b].conj();
                    }
                }
            }
            w
        });
        Ok(Self {
            dim,
            k,
            diagonal,
            weights,
            jumps: stored,
        })
    }

    pub fn from_model(model: &VCModel, channels: &[LindbladChannel], cutoffs: &[usize]) -> Result<(Self, RegisterLayout)> {
        let (h, layout) = build_hamiltonian_sparse(model, cutoffs)?;
        let jumps = channels
            .iter()
            .map(|c| Ok((c.rate, build_jump_operator_sparse(c, model, cutoffs)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok((Self::new(&h, &jumps)?, layout))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = L[rho]` for Hermitian `rho`.
    pub fn apply(&self, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        let zero = C64::new(0.0, 0.0);
        // (K rho) in column tiles so that the rows of rho it touches stay in cache.
        const TILE: usize = 64;
        out.fill(zero);
        for c0 in (0..n).step_by(TILE) {
            let c1 = (c0 + TILE).min(n);
            for a in 0..n {
                let row = &mut out[a * n + c0..a * n + c1];
                for (k, v) in self.k.row(a) {
                    for (o, x) in row.iter_mut().zip(&rho[k * n + c0..k * n + c1]) {
                        *o += v * x;
                    }
                }
            }
        }
        // rho K^+ = (K rho)^+ for Hermitian rho.
        const BLOCK: usize = 32;
        for ab in (0..n).step_by(BLOCK) {
            for bb in (ab..n).step_by(BLOCK) {
                for a in ab..(ab + BLOCK).min(n) {
                    let start = if ab == bb { a } else { bb };
                    for b in start..(bb + BLOCK).min(n) {
                        let x = out[a * n + b];
                        let y = out[b * n + a];
                        out[a * n + b] = x + y.conj();
                        out[b * n + a] = y + x.conj();
                    }
                }
            }
        }
        for a in 0..n {
            let row = &mut out[a * n..(a + 1) * n];
            let rho_a = &rho[a * n..(a + 1) * n];
            if let Some(w) = &self.weights {
                for ((o, x), wv) in row.iter_mut().zip(rho_a).zip(&w[a * n..(a + 1) * n]) {
                    *o += wv * x;
                }
            } else {
                for l in &self.diagonal {
                    let la = l[a];
                    for ((o, x), lb) in row.iter_mut().zip(rho_a).zip(l) {
                        *o += la * lb.conj() * x;
                    }
                }
            }
        }
        for jump in &self.jumps {
            match jump {
                Jump::Gather(rows) => {
                    let cols: Vec<(usize, usize, C64)> = rows
                        .iter()
                        .enumerate()
                        .filter_map(|(b, e)| e.map(|(c, v)| (b, c, v.conj())))
                        .collect();
                    for (a, entry) in rows.iter().enumerate() {
                        let Some((ca, la)) = *entry else { continue };
                        let src = &rho[ca * n..(ca + 1) * n];
                        let row = &mut out[a * n..(a + 1) * n];
                        for &(b, cb, lb) in &cols {
                            row[b] += la * lb * src[cb];
                        }
                    }
                }
                Jump::General(v) => {
                    let mut y = vec![zero; n * n];
                    v.mul_dense_into(rho, n, &mut y);
                    // V rho V^+ = (V (V rho)^+)^+
                    let yd = ComplexMatrix::from_vec(n, n, y).expect("square").dagger();
                    let mut w = vec![zero; n * n];
                    v.mul_dense_into(yd.as_slice(), n, &mut w);
                    for a in 0..n {
                        for b in 0..n {
                            out[a * n + b] += w[b * n + a].conj();
                        }
                    }
                }
            }
        }
    }
}

/// A Lindblad problem on the truncated Fock space of a model.
pub struct LindbladProblem {
    liouvillian: Liouvillian,
    electronic: usize,
}

impl LindbladProblem {
    pub fn new(model: &VCModel, channels: &[LindbladChannel], cutoffs: &[usize]) -> Result<Self> {
        for c in channels {
            c.validate(model)?;
        }
        let (liouvillian, _) = Liouvillian::from_model(model, channels, cutoffs)?;
        Ok(Self {
            liouvillian,
            electronic: model.electronic_states(),
        })
    }

    pub fn from_liouvillian(liouvillian: Liouvillian, electronic: usize) -> Result<Self> {
        if electronic == 0 || liouvillian.dim() % electronic != 0 {
            return Err(Error::DimensionMismatch("electronic register does not divide the dimension".into()));
        }
        Ok(Self { liouvillian, electronic })
    }

    pub fn liouvillian(&self) -> &Liouvillian {
        &self.liouvillian
    }

    /// Integrates from `rho0` at `t = 0`, handing every sample to `observe`.
    ///
    /// Fails with [`Error::TraceDrift`] if the trace moves by more than [`TRACE_TOL`].
    pub fn solve_observe<O>(&self, rho0: &DensityMatrix, times: &[f64], tol: Tolerances, mut observe: O) -> Result<OdeStats>
    where
        O: FnMut(usize, f64, DensityMatrix) -> Result<()>,
    {
        let n = self.liouvillian.dim();
        if rho0.dim() != n {
            return Err(Error::DimensionMismatch("initial state does not match the generator".into()));
        }
        let tr0 = rho0.trace();
        let mut y = rho0.matrix().as_slice().to_vec();
        let mut ode = Dopri5::new(tol);
        let l = &self.liouvillian;
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| l.apply(y, dy);
        ode.integrate(&mut f, 0.0, &mut y, times, |i, t, y| {
            let rho = DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_vec(n, n, y.to_vec())?);
            let defect = (rho.trace() - tr0).abs();
            if defect > TRACE_TOL {
                return Err(Error::TraceDrift { time: t, defect });
            }
            observe(i, t, rho)
        })?;
        log::debug!("lindblad dim {n}: {:?}", ode.stats);
        Ok(ode.stats)
    }

    pub fn solve(&self, rho0: &DensityMatrix, times: &[f64], tol: Tolerances, keep: bool) -> Result<Trajectory> {
        let mut traj = Trajectory::new(self.electronic);
        self.solve_observe(rho0, times, tol, |_, t, rho| {
            traj.push_mixed(t, rho, keep);
            Ok(())
        })?;
        Ok(traj)
    }
}

pub fn solve_lindblad(
    model: &VCModel,
    channels: &[LindbladChannel],
    cutoffs: &[usize],
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    LindbladProblem::new(model, channels, cutoffs)?.solve(rho0, &grid.times(), Tolerances::default(), true)
}

/// Simulator noise for MQB emulation.
///
/// Usable channels carry molecular-frame rates and are part of the target dynamics. Error
/// channels carry simulator-frame rates in 1/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MQBNoiseModel {
    pub scaling: f64,
    pub usable: Vec<LindbladChannel>,
    pub errors: Vec<LindbladChannel>,
}

impl MQBNoiseModel {
    pub fn new(scaling: f64, usable: Vec<LindbladChannel>, errors: Vec<LindbladChannel>) -> Result<Self> {
        let m = Self { scaling, usable, errors };
        m.check()?;
        Ok(m)
    }

    /// Scaling chosen so that a native simulator rate fully reproduces a molecular rate.
    pub fn harnessing(native_rate: f64, usable: LindbladChannel, errors: Vec<LindbladChannel>) -> Result<Self> {
        if !(usable.rate > 0.0) {
            return Err(invalid("a harnessed channel needs a positive molecular rate"));
        }
        Self::new(native_rate / usable.rate, vec![usable], errors)
    }

    fn check(&self) -> Result<()> {
        if !(self.scaling > 0.0 && self.scaling.is_finite()) {
            return Err(invalid(format!("scaling factor must be positive, got {}", self.scaling)));
        }
        for c in self.usable.iter().chain(&self.errors) {
            if !(c.rate >= 0.0 && c.rate.is_finite()) {
                return Err(invalid(format!("channel rate must be non-negative, got {}", c.rate)));
            }
        }
        Ok(())
    }

    pub fn validate(&self, model: &VCModel) -> Result<()> {
        self.check()?;
        for c in self.usable.iter().chain(&self.errors) {
            c.validate(model)?;
        }
        Ok(())
    }

    /// Injected rate `F gamma - gamma_nat` needed for usable channel `index`.
    pub fn injected_rate(&self, index: usize, native_rate: f64) -> Result<f64> {
        let c = self.usable.get(index).ok_or_else(|| invalid("usable channel index out of range"))?;
        let inj = self.scaling * c.rate - native_rate;
        // Allow round-off when the native rate is the whole budget.
        if inj < -1e-12 * native_rate.abs() {
            return Err(invalid(format!(
                "native rate {native_rate} exceeds the scaled molecular rate {}",
                self.scaling * c.rate
            )));
        }
        Ok(inj.max(0.0))
    }

    /// Error rates in the molecular frame, `gamma_err / F`.
    pub fn molecular_error_channels(&self) -> Vec<LindbladChannel> {
        self.errors.iter().map(|c| c.with_rate(c.rate / self.scaling)).collect()
    }

    /// Usable channels followed by molecular-frame error channels.
    pub fn molecular_channels(&self) -> Vec<LindbladChannel> {
        let mut out = self.usable.clone();
        out.extend(self.molecular_error_channels());
        out
    }
}

pub fn emulate_mqb_problem(model: &VCModel, noise: &MQBNoiseModel, cutoffs: &[usize]) -> Result<LindbladProblem> {
    noise.validate(model)?;
    LindbladProblem::new(model, &noise.molecular_channels(), cutoffs)
}

pub fn emulate_mqb(
    model: &VCModel,
    noise: &MQBNoiseModel,
    cutoffs: &[usize],
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    emulate_mqb_problem(model, noise, cutoffs)?.solve(rho0, &grid.times(), Tolerances::default(), true)
}

/// Simulator-frame parameters of a one-pulse MQB program, all in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MQBProgram {
    pub qudits: usize,
    pub bosons: usize,
    pub gates: usize,
    pub scaling: f64,
    /// Coefficient of `(1/2) a_j^+ a_j`.
    pub delta: Vec<f64>,
    /// Coefficient of `|n><n|`.
    pub chi: Vec<f64>,
    /// `((n, m), Omega_nm)` for `n != m`.
    pub omega: Vec<((usize, usize), C64)>,
    /// `((n, j), Theta'_nj)` multiplying `(a_j^+ + a_j) |n><n|`.
    pub theta_prime: Vec<((usize, usize), C64)>,
    /// `((n, m, j), Omega'_nmj)` multiplying `(a_j^+ + a_j) |n><m|` for `n != m`.
    pub omega_prime: Vec<((usize, usize, usize), C64)>,
    /// `((n, m, j, k), c)` multiplying `(a_j^+ + a_j)(a_k^+ + a_k) |n><m|`.
    pub quadratic: Vec<((usize, usize, usize, usize), C64)>,
}

impl MQBProgram {
    pub fn from_model(model: &VCModel, scaling: f64) -> Result<Self> {
        if !(scaling > 0.0 && scaling.is_finite()) {
            return Err(invalid(format!("scaling factor must be positive, got {scaling}")));
        }
        let d = model.electronic_states();
        let m = model.num_modes();
        let zero = C64::new(0.0, 0.0);
        let s2 = std::f64::consts::SQRT_2;
        let mut p = Self {
            qudits: 1,
            bosons: m,
            gates: 1,
            scaling,
            // omega (n + 1/2) = (1/2)(2 omega) n + const
            delta: model.modes().iter().map(|md| 2.0 * scaling * md.omega).collect(),
            chi: (0..d).map(|n| scaling * model.c0(n, n).re).collect(),
            omega: vec![],
            theta_prime: vec![],
            omega_prime: vec![],
            quadratic: vec![],
        };
        for n in 0..d {
            for k in 0..d {
                if n != k && model.c0(n, k) != zero {
                    p.omega.push(((n, k), model.c0(n, k) * scaling));
                }
                for j in 0..m {
                    let c = model.c1(n, k, j);
                    if c == zero {
                        continue;
                    }
                    // Q = (a + a^+) / sqrt 2
                    if n == k {
                        p.theta_prime.push(((n, j), c * (scaling / s2)));
                    } else {
                        p.omega_prime.push(((n, k, j), c * (scaling / s2)));
                    }
                    for l in j..m {
                        let c2 = model.c2(n, k, j, l);
                        if c2 != zero {
                            let mult = if l == j { 1.0 } else { 2.0 };
                            p.quadratic.push(((n, k, j, l), c2 * (mult * scaling / 2.0)));
                        }
                    }
                }
            }
        }
        Ok(p)
    }

    pub fn memory(&self) -> usize {
        self.qudits + self.bosons
    }
}

/// MQB memory, time and volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MqbCost {
    pub memory: usize,
    pub time: usize,
    pub volume: usize,
}

/// One qudit plus one boson per mode, one compound pulse.
pub fn mqb_cost(model: &VCModel) -> MqbCost {
    let memory = 1 + model.num_modes();
    MqbCost {
        memory,
        time: 1,
        volume: memory,
    }
}
