//! Open-system simulation on qubits through a dilated Hamiltonian with an ancilla register.

use crate::dynamics::{step_times, TimeGrid, Trajectory};
use crate::encoding::{encode_jump_operator, pauli_decompose, PauliSum, Prune};
use crate::error::{invalid, Error, Result};
use crate::model::{LindbladChannel, VCModel};
use crate::quantum::{check_budget, partial_trace_dims, ComplexMatrix, DensityMatrix, C64};
use crate::trotter::{count_resources, ResourceCount, TrotterStepper};

/// Trace drift tolerated per discrete step.
pub const STEP_TRACE_TOL: f64 = 1e-12;

/// Jump operators with `sqrt(gamma)` absorbed, on a common system layout.
#[derive(Clone, Debug)]
pub struct DilationPlan {
    jumps: Vec<PauliSum>,
    ancilla_width: usize,
    steps: usize,
    t_final: f64,
}

impl DilationPlan {
    pub fn new(jumps: Vec<(f64, PauliSum)>, t_final: f64, steps: usize) -> Result<Self> {
        if jumps.is_empty() {
            return Err(invalid("dilation needs at least one jump operator; use the closed-system path"));
        }
        if steps == 0 {
            return Err(invalid("step count must be positive"));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(invalid(format!("final time must be positive, got {t_final}")));
        }
        let layout = jumps[0].1.layout().clone();
        let mut out = Vec::with_capacity(jumps.len());
        for (rate, v) in jumps {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(invalid(format!("jump rate must be non-negative, got {rate}")));
            }
            if v.layout() != &layout {
                return Err(Error::DimensionMismatch("jump operators on different layouts".into()));
            }
            out.push(v.scale(C64::new(rate.sqrt(), 0.0)).pruned(Prune::Absolute(0.0)));
        }
        let ancilla_width = crate::quantum::ceil_log2(out.len() + 1);
        Ok(Self {
            jumps: out,
            ancilla_width,
            steps,
            t_final,
        })
    }

    /// Gray-encoded jump operators of `channels`.
    pub fn from_channels(
        channels: &[LindbladChannel],
        model: &VCModel,
        cutoffs: &[usize],
        t_final: f64,
        steps: usize,
    ) -> Result<Self> {
        let jumps = channels
            .iter()
            .map(|c| Ok((c.rate, encode_jump_operator(c, model, cutoffs)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(jumps, t_final, steps)
    }

    pub fn jumps(&self) -> &[PauliSum] {
        &self.jumps
    }

    pub fn ancilla_width(&self) -> usize {
        self.ancilla_width
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("step count must be positive"));
        }
        Ok(Self { steps, ..self.clone() })
    }
}

/// `|row><col|` on a binary register of `width` qubits as a Pauli sum.
fn ancilla_operator(width: usize, row: usize, col: usize) -> Result<Vec<(C64, crate::encoding::PauliString)>> {
    let mut m = ComplexMatrix::zeros(1 << width, 1 << width);
    m[(row, col)] = C64::new(1.0, 0.0);
    pauli_decompose(&m)
}

fn tensor_into(out: &mut PauliSum, sys: &PauliSum, anc: &[(C64, crate::encoding::PauliString)], scale: f64) {
    for (a, p) in sys.terms() {
        for (b, q) in anc {
            out.push(a * b * scale, p.tensor(q));
        }
    }
}

/// The dilated Hamiltonian on system (x) ancilla.
///
/// `sqrt(dt) H (x) |0><0| + sum_i (V_i (x) |i><0| + V_i^+ (x) |0><i|)`, so that the block
/// reached from ancilla 0 is `V_i` and `dt -> 0` reproduces the dissipator of `V_i`.
pub fn build_dilated_pauli_sum(h_qubits: &PauliSum, plan: &DilationPlan) -> Result<PauliSum> {
    if h_qubits.layout() != plan.jumps[0].layout() {
        return Err(Error::DimensionMismatch("Hamiltonian and jump operators on different layouts".into()));
    }
    let layout = h_qubits.layout().with_bath(plan.jumps.len() + 1)?;
    let w = plan.ancilla_width;
    let mut out = PauliSum::zero(layout);
    tensor_into(&mut out, h_qubits, &ancilla_operator(w, 0, 0)?, plan.dt().sqrt());
    for (i, v) in plan.jumps.iter().enumerate() {
        tensor_into(&mut out, v, &ancilla_operator(w, i + 1, 0)?, 1.0);
        tensor_into(&mut out, &v.dagger(), &ancilla_operator(w, 0, i + 1)?, 1.0);
    }
    Ok(out.grouped().pruned(Prune::default()).sorted())
}

/// One discrete Lindblad step as a Kraus map, `rho -> sum_b K_b rho K_b^+`.
///
/// `K_b = (I (x) <b|) U (I (x) |0>)` where `U` is one first-order product-formula pass of
/// `exp(-i sqrt(dt) H_dil)`; summing over every ancilla value is the trace-out.
#[derive(Clone, Debug)]
pub struct DilatedStep {
    system_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl DilatedStep {
    pub fn new(dilated: &PauliSum, plan: &DilationPlan) -> Result<Self> {
        if dilated.layout().registers().last().map(|r| r.width) != Some(plan.ancilla_width) {
            return Err(Error::DimensionMismatch("dilated sum does not carry the plan's ancilla".into()));
        }
        let stepper = TrotterStepper::pass(dilated, plan.dt().sqrt())?;
        let full = dilated.layout().dim();
        let blocks = 1usize << plan.ancilla_width;
        let sys = full / blocks;
        let mut kraus = vec![ComplexMatrix::zeros(sys, sys); blocks];
        let mut col = vec![C64::new(0.0, 0.0); full];
        for s in 0..sys {
            col.fill(C64::new(0.0, 0.0));
            col[s * blocks] = C64::new(1.0, 0.0);
            stepper.apply(&mut col)?;
            for (idx, v) in col.iter().enumerate() {
                kraus[idx % blocks][(idx / blocks, s)] = *v;
            }
        }
        kraus.retain(|k| k.max_abs() > 0.0);
        Ok(Self { system_dim: sys, kraus })
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.system_dim {
            return Err(Error::DimensionMismatch("density matrix is not on the system layout".into()));
        }
        let mut acc = ComplexMatrix::zeros(self.system_dim, self.system_dim);
        for k in &self.kraus {
            let kr = k.matmul(rho.matrix())?;
            acc.add_scaled(&kr.matmul_adjoint(k)?, C64::new(1.0, 0.0))?;
        }
        Ok(DensityMatrix::from_matrix_unchecked(acc.hermitian_part()))
    }
}

/// `rho_{m+1}`: embed with the ancilla in `|0>`, one Trotter pass, trace out the ancilla.
///
/// Dense reference path through the full system (x) ancilla space.
pub fn step_density(rho: &DensityMatrix, dilated: &PauliSum, plan: &DilationPlan) -> Result<DensityMatrix> {
    let layout = dilated.layout();
    let full = layout.dim();
    check_budget(full)?;
    let blocks = 1usize << plan.ancilla_width;
    let sys = full / blocks;
    if rho.dim() != sys {
        return Err(Error::DimensionMismatch("density matrix is not on the system layout".into()));
    }
    let mut big = ComplexMatrix::zeros(full, full);
    for r in 0..sys {
        for c in 0..sys {
            big[(r * blocks, c * blocks)] = rho.matrix()[(r, c)];
        }
    }
    let u = TrotterStepper::pass(dilated, plan.dt().sqrt())?.to_matrix()?;
    let evolved = u.matmul(&big)?.matmul_adjoint(&u)?;
    let out = partial_trace_dims(&DensityMatrix::from_matrix_unchecked(evolved), &[sys, blocks], &[0])?;
    let drift = (out.trace() - rho.trace()).abs();
    if drift > STEP_TRACE_TOL {
        return Err(Error::TraceDrift { time: plan.dt(), defect: drift });
    }
    Ok(out)
}

/// Iterates the discrete update for `plan.steps()` steps, sampling at the snapped grid.
///
/// `rho0` lives in the system qubit space; so does the returned trajectory.
pub fn simulate_open(
    h_qubits: &PauliSum,
    plan: &DilationPlan,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    keep_states: bool,
) -> Result<Trajectory> {
    if (grid.t_final() - plan.t_final).abs() > 1e-12 * plan.t_final {
        return Err(Error::GridMismatch("grid and plan final times differ".into()));
    }
    let dilated = build_dilated_pauli_sum(h_qubits, plan)?;
    let step = DilatedStep::new(&dilated, plan)?;
    let indices = grid.snap(plan.steps)?;
    let times = step_times(plan.t_final, plan.steps, &indices);
    let mut traj = Trajectory::in_qubit_basis(h_qubits.layout().clone());
    let mut rho = rho0.clone();
    let mut done = 0;
    for (&idx, &t) in indices.iter().zip(&times) {
        while done < idx {
            rho = step.apply(&rho)?;
            done += 1;
        }
        let drift = (rho.trace() - rho0.trace()).abs();
        if drift > STEP_TRACE_TOL * (done.max(1) as f64) {
            return Err(Error::TraceDrift { time: t, defect: drift });
        }
        traj.push_mixed(t, rho.clone(), keep_states);
    }
    Ok(traj)
}

/// Resource counts of `N` passes over the dilated sum.
pub fn count_resources_open(dilated: &PauliSum, steps: u64) -> ResourceCount {
    count_resources(dilated, steps, dilated.layout())
}
