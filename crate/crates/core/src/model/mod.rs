//! Vibronic-coupling Hamiltonians, dissipation channels and initial states.

mod file;
mod ops;

pub use file::{ChannelEntry, ModelFile, PYRAZINE_MODEL_TOML};
pub use ops::{annihilation, creation, number, position};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::{check_budget, ComplexMatrix, CsrMatrix, RegisterLayout, StateVector, C64};

/// `2 pi * 1e12`, the angular frequency of 1 THz.
pub const RAD_PER_THZ: f64 = 2.0 * std::f64::consts::PI * 1e12;

/// Largest tolerated norm lost when truncating a coherent state.
pub const COHERENT_LOSS_TOL: f64 = 1e-8;

/// Loss accepted at reduced cutoffs; the pyrazine wavepacket at `d = 4` loses about 1.5e-7.
pub const REDUCED_CUTOFF_LOSS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Angular frequency in rad/s.
    pub omega: f64,
}

impl ModeSpec {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid(format!("mode frequency must be positive, got {omega}")));
        }
        Ok(Self { omega })
    }

    pub fn from_thz(freq_over_2pi_thz: f64) -> Result<Self> {
        Self::new(freq_over_2pi_thz * RAD_PER_THZ)
    }
}

/// Vibronic-coupling model: harmonic modes plus a Taylor-expanded electronic potential.
///
/// All coefficients are angular frequencies (rad/s). The tensors are stored flat with
/// index order `[n][m]`, `[n][m][j]` and `[n][m][j][k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VCModel {
    electronic: usize,
    modes: Vec<ModeSpec>,
    c0: Vec<C64>,
    c1: Vec<C64>,
    c2: Vec<C64>,
}

impl VCModel {
    /// Model with all coupling tensors zero.
    pub fn new(electronic: usize, modes: Vec<ModeSpec>) -> Result<Self> {
        if electronic == 0 {
            return Err(invalid("at least one electronic state is required"));
        }
        let (d, m) = (electronic, modes.len());
        Ok(Self {
            electronic,
            modes,
            c0: vec![C64::new(0.0, 0.0); d * d],
            c1: vec![C64::new(0.0, 0.0); d * d * m],
            c2: vec![C64::new(0.0, 0.0); d * d * m * m],
        })
    }

    pub fn electronic_states(&self) -> usize {
        self.electronic
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    fn check_el(&self, n: usize, m: usize) -> Result<()> {
        if n >= self.electronic || m >= self.electronic {
            return Err(invalid(format!("electronic index ({n}, {m}) out of range")));
        }
        Ok(())
    }

    fn check_mode(&self, j: usize) -> Result<()> {
        if j >= self.modes.len() {
            return Err(invalid(format!("mode index {j} out of range")));
        }
        Ok(())
    }

    fn i0(&self, n: usize, m: usize) -> usize {
        n * self.electronic + m
    }

    fn i1(&self, n: usize, m: usize, j: usize) -> usize {
        self.i0(n, m) * self.modes.len() + j
    }

    fn i2(&self, n: usize, m: usize, j: usize, k: usize) -> usize {
        self.i1(n, m, j) * self.modes.len() + k
    }

    pub fn c0(&self, n: usize, m: usize) -> C64 {
        self.c0[self.i0(n, m)]
    }

    pub fn c1(&self, n: usize, m: usize, j: usize) -> C64 {
        self.c1[self.i1(n, m, j)]
    }

    pub fn c2(&self, n: usize, m: usize, j: usize, k: usize) -> C64 {
        self.c2[self.i2(n, m, j, k)]
    }

    /// Sets `c0[n][m]` and its Hermitian partner `c0[m][n]`.
    pub fn set_c0(&mut self, n: usize, m: usize, v: C64) -> Result<()> {
        self.check_el(n, m)?;
        if n == m && v.im != 0.0 {
            return Err(invalid("diagonal coefficients must be real"));
        }
        let (a, b) = (self.i0(n, m), self.i0(m, n));
        self.c0[a] = v;
        self.c0[b] = v.conj();
        Ok(())
    }

    pub fn set_c1(&mut self, n: usize, m: usize, j: usize, v: C64) -> Result<()> {
        self.check_el(n, m)?;
        self.check_mode(j)?;
        if n == m && v.im != 0.0 {
            return Err(invalid("diagonal coefficients must be real"));
        }
        let (a, b) = (self.i1(n, m, j), self.i1(m, n, j));
        self.c1[a] = v;
        self.c1[b] = v.conj();
        Ok(())
    }

    /// Sets the quadratic coefficient symmetrically in `(j, k)` and Hermitian in `(n, m)`.
    pub fn set_c2(&mut self, n: usize, m: usize, j: usize, k: usize, v: C64) -> Result<()> {
        self.check_el(n, m)?;
        self.check_mode(j)?;
        self.check_mode(k)?;
        if n == m && v.im != 0.0 {
            return Err(invalid("diagonal coefficients must be real"));
        }
        for (p, q) in [(j, k), (k, j)] {
            let (a, b) = (self.i2(n, m, p, q), self.i2(m, n, p, q));
            self.c2[a] = v;
            self.c2[b] = v.conj();
        }
        Ok(())
    }

    /// Checks the Hermiticity and symmetry invariants exactly.
    pub fn validate(&self) -> Result<()> {
        let (d, nm) = (self.electronic, self.modes.len());
        for n in 0..d {
            for m in 0..d {
                if self.c0(n, m) != self.c0(m, n).conj() {
                    return Err(invalid(format!("c0[{n}][{m}] breaks Hermiticity")));
                }
                for j in 0..nm {
                    if self.c1(n, m, j) != self.c1(m, n, j).conj() {
                        return Err(invalid(format!("c1[{n}][{m}][{j}] breaks Hermiticity")));
                    }
                    for k in 0..nm {
                        if self.c2(n, m, j, k) != self.c2(m, n, j, k).conj()
                            || self.c2(n, m, j, k) != self.c2(n, m, k, j)
                        {
                            return Err(invalid(format!("c2[{n}][{m}][{j}][{k}] breaks symmetry")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Decomposes H into products of single-register factors.
    ///
    /// Harmonic terms come first (one per mode, as `omega (n + 1/2)`), then the
    /// constant, linear and quadratic potential terms in index order. Quadratic
    /// terms with `j != k` are merged with their `(k, j)` partner.
    pub fn terms(&self) -> Vec<ProductTerm> {
        let zero = C64::new(0.0, 0.0);
        let (d, nm) = (self.electronic, self.modes.len());
        let mut out = Vec::new();
        for (j, mode) in self.modes.iter().enumerate() {
            out.push(ProductTerm {
                coef: C64::new(mode.omega, 0.0),
                electronic: None,
                factors: vec![(j, ModeFactor::Harmonic)],
            });
        }
        for n in 0..d {
            for m in 0..d {
                let c = self.c0(n, m);
                if c != zero {
                    out.push(ProductTerm {
                        coef: c,
                        electronic: Some((n, m)),
                        factors: vec![],
                    });
                }
            }
        }
        for n in 0..d {
            for m in 0..d {
                for j in 0..nm {
                    let c = self.c1(n, m, j);
                    if c != zero {
                        out.push(ProductTerm {
                            coef: c,
                            electronic: Some((n, m)),
                            factors: vec![(j, ModeFactor::Position)],
                        });
                    }
                }
            }
        }
        for n in 0..d {
            for m in 0..d {
                for j in 0..nm {
                    for k in j..nm {
                        let c = self.c2(n, m, j, k);
                        if c == zero {
                            continue;
                        }
                        let (coef, factors) = if j == k {
                            (c, vec![(j, ModeFactor::PositionSquared)])
                        } else {
                            (c * 2.0, vec![(j, ModeFactor::Position), (k, ModeFactor::Position)])
                        };
                        out.push(ProductTerm {
                            coef,
                            electronic: Some((n, m)),
                            factors,
                        });
                    }
                }
            }
        }
        out
    }

    /// Number of nonzero term groups: one harmonic group per mode plus one per nonzero
    /// coefficient slot (`c0`, each `c1[.][.][j]`, each `c2[.][.][j][k]` with `j <= k`),
    /// a slot counting once however many electronic entries it fills.
    pub fn term_group_count(&self) -> usize {
        let zero = C64::new(0.0, 0.0);
        let (d, nm) = (self.electronic, self.modes.len());
        let block = |f: &dyn Fn(usize, usize) -> C64| (0..d).any(|n| (0..d).any(|m| f(n, m) != zero));
        let mut count = nm + usize::from(block(&|n, m| self.c0(n, m)));
        for j in 0..nm {
            count += usize::from(block(&|n, m| self.c1(n, m, j)));
            for k in j..nm {
                count += usize::from(block(&|n, m| self.c2(n, m, j, k)));
            }
        }
        count
    }
}

/// Operator acting on a single mode register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeFactor {
    /// `n + 1/2`
    Harmonic,
    /// `Q = (a + a^+) / sqrt 2`
    Position,
    /// `Q Q` on the truncated space
    PositionSquared,
}

impl ModeFactor {
    pub fn matrix(self, d: usize) -> ComplexMatrix {
        match self {
            ModeFactor::Harmonic => {
                let mut h = number(d);
                for f in 0..d {
                    h[(f, f)] += C64::new(0.5, 0.0);
                }
                h
            }
            ModeFactor::Position => position(d),
            ModeFactor::PositionSquared => {
                let q = position(d);
                q.matmul(&q).expect("square")
            }
        }
    }
}

/// `coef * |n><m| (x) prod_j F_j`, identity on registers not mentioned.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTerm {
    pub coef: C64,
    /// `None` means the electronic identity.
    pub electronic: Option<(usize, usize)>,
    /// Distinct modes in increasing order.
    pub factors: Vec<(usize, ModeFactor)>,
}

/// Kinds of Lindblad jump operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChannelKind {
    /// `|to><from|`
    ElectronicRelaxation { to: usize, from: usize },
    /// `a_j^+`
    VibrationalHeating { mode: usize },
    /// `a_j`
    VibrationalCooling { mode: usize },
    /// `|n><n|`
    ElectronicDephasing { state: usize },
    /// `n_j = a_j^+ a_j`
    VibrationalDephasing { mode: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladChannel {
    pub kind: ChannelKind,
    /// Rate in 1/s.
    pub rate: f64,
}

impl LindbladChannel {
    pub fn new(kind: ChannelKind, rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(invalid(format!("channel rate must be non-negative, got {rate}")));
        }
        Ok(Self { kind, rate })
    }

    pub fn validate(&self, model: &VCModel) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(invalid(format!("channel rate must be non-negative, got {}", self.rate)));
        }
        match self.kind {
            ChannelKind::ElectronicRelaxation { to, from } => model.check_el(to, from),
            ChannelKind::ElectronicDephasing { state } => model.check_el(state, state),
            ChannelKind::VibrationalHeating { mode }
            | ChannelKind::VibrationalCooling { mode }
            | ChannelKind::VibrationalDephasing { mode } => model.check_mode(mode),
        }
    }

    /// Same channel at a different rate.
    pub fn with_rate(&self, rate: f64) -> Self {
        Self { kind: self.kind, rate }
    }
}

/// One channel of `kind` per mode, all at `rate`.
pub fn per_mode_channels(model: &VCModel, rate: f64, kind: fn(usize) -> ChannelKind) -> Vec<LindbladChannel> {
    (0..model.num_modes())
        .map(|j| LindbladChannel { kind: kind(j), rate })
        .collect()
}

pub fn vibrational_dephasing(mode: usize) -> ChannelKind {
    ChannelKind::VibrationalDephasing { mode }
}

pub fn vibrational_heating(mode: usize) -> ChannelKind {
    ChannelKind::VibrationalHeating { mode }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    pub electronic: usize,
    /// Coherent displacement per mode; missing entries are zero.
    pub displacements: Vec<C64>,
}

/// Constants of the two-state, two-mode pyrazine LVC model.
pub struct PyrazineParams;

impl PyrazineParams {
    pub const OMEGA1_THZ: f64 = 17.9;
    pub const OMEGA2_THZ: f64 = 28.5;
    pub const DELTA_E_THZ: f64 = 199.0;
    pub const KAPPA_THZ: f64 = -30.7;
    pub const LAMBDA_THZ: f64 = 63.3;
    pub const ALPHA: f64 = 0.210;
    /// Environment vibrational dephasing rate, 1/s.
    pub const GAMMA_D: f64 = 2.1e12;
    /// Index of the bright state.
    pub const BRIGHT: usize = 1;
}

/// Pyrazine LVC model with `sigma_z = |1><1| - |0><0|`, state 1 bright.
pub fn pyrazine_lvc() -> VCModel {
    extend_pyrazine(2).expect("two modes is valid")
}

/// Pyrazine with modes `3..=m` copies of mode 2 (same frequency, same `lambda sigma_x Q` coupling).
pub fn extend_pyrazine(m: usize) -> Result<VCModel> {
    if m < 2 {
        return Err(invalid(format!("extended pyrazine needs at least 2 modes, got {m}")));
    }
    let p = PyrazineParams::OMEGA1_THZ;
    let mut modes = vec![ModeSpec::from_thz(p)?];
    for _ in 1..m {
        modes.push(ModeSpec::from_thz(PyrazineParams::OMEGA2_THZ)?);
    }
    let mut model = VCModel::new(2, modes)?;
    let half_gap = 0.5 * PyrazineParams::DELTA_E_THZ * RAD_PER_THZ;
    let kappa = PyrazineParams::KAPPA_THZ * RAD_PER_THZ;
    let lambda = PyrazineParams::LAMBDA_THZ * RAD_PER_THZ;
    // -(dE/2) sigma_z
    model.set_c0(1, 1, C64::new(-half_gap, 0.0))?;
    model.set_c0(0, 0, C64::new(half_gap, 0.0))?;
    // kappa sigma_z Q_1
    model.set_c1(1, 1, 0, C64::new(kappa, 0.0))?;
    model.set_c1(0, 0, 0, C64::new(-kappa, 0.0))?;
    // lambda sigma_x Q_j for j >= 2
    for j in 1..m {
        model.set_c1(0, 1, j, C64::new(lambda, 0.0))?;
    }
    Ok(model)
}

/// The pyrazine Franck-Condon state: bright state, displacement on the first mode.
pub fn pyrazine_initial_state(model: &VCModel) -> InitialStateSpec {
    let mut displacements = vec![C64::new(0.0, 0.0); model.num_modes()];
    if let Some(first) = displacements.first_mut() {
        *first = C64::new(PyrazineParams::ALPHA, 0.0);
    }
    InitialStateSpec {
        electronic: PyrazineParams::BRIGHT,
        displacements,
    }
}

fn check_cutoffs(model: &VCModel, cutoffs: &[usize]) -> Result<RegisterLayout> {
    if cutoffs.len() != model.num_modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} cutoffs for {} modes",
            cutoffs.len(),
            model.num_modes()
        )));
    }
    if cutoffs.iter().any(|&d| d == 0) {
        return Err(invalid("cutoffs must be positive"));
    }
    let dim = cutoffs
        .iter()
        .try_fold(model.electronic, |acc: usize, &d| acc.checked_mul(d))
        .ok_or(Error::DimensionBudget {
            dim: usize::MAX,
            budget: crate::quantum::MAX_DIM,
        })?;
    check_budget(dim)?;
    RegisterLayout::vibronic(model.electronic, cutoffs)
}

fn electronic_op(d: usize, nm: Option<(usize, usize)>) -> CsrMatrix {
    match nm {
        None => CsrMatrix::identity(d),
        Some((n, m)) => CsrMatrix::from_triplets(d, d, &[(n, m, C64::new(1.0, 0.0))]).expect("in range"),
    }
}

/// Full-space sparse operator for one product term.
pub(crate) fn term_operator(term: &ProductTerm, electronic: usize, cutoffs: &[usize]) -> CsrMatrix {
    let mut op = electronic_op(electronic, term.electronic);
    for (j, &d) in cutoffs.iter().enumerate() {
        let f = match term.factors.iter().find(|(mode, _)| *mode == j) {
            Some((_, factor)) => CsrMatrix::from_dense(&factor.matrix(d)),
            None => CsrMatrix::identity(d),
        };
        op = op.kron(&f);
    }
    op.scale(term.coef)
}

/// Sparse Hamiltonian on the truncated Fock space, electronic register most significant.
pub fn build_hamiltonian_sparse(model: &VCModel, cutoffs: &[usize]) -> Result<(CsrMatrix, RegisterLayout)> {
    model.validate()?;
    let layout = check_cutoffs(model, cutoffs)?;
    let dim = layout.fock_dim();
    let mut triplets = Vec::new();
    for term in model.terms() {
        triplets.extend(term_operator(&term, model.electronic, cutoffs).triplets());
    }
    let h = CsrMatrix::from_triplets(dim, dim, &triplets)?;
    // Symmetrize so that H is Hermitian to the last bit.
    let h = h.add(&h.dagger())?.scale(C64::new(0.5, 0.0));
    Ok((h, layout))
}

/// Dense Hamiltonian on the truncated Fock space.
pub fn build_hamiltonian(model: &VCModel, cutoffs: &[usize]) -> Result<(ComplexMatrix, RegisterLayout)> {
    let (h, layout) = build_hamiltonian_sparse(model, cutoffs)?;
    Ok((h.to_dense(), layout))
}

/// Bare jump operator (rate not included) as a sparse full-space matrix.
pub fn build_jump_operator_sparse(channel: &LindbladChannel, model: &VCModel, cutoffs: &[usize]) -> Result<CsrMatrix> {
    channel.validate(model)?;
    check_cutoffs(model, cutoffs)?;
    let d = model.electronic;
    let (el, target): (CsrMatrix, Option<(usize, ComplexMatrix)>) = match channel.kind {
        ChannelKind::ElectronicRelaxation { to, from } => (electronic_op(d, Some((to, from))), None),
        ChannelKind::ElectronicDephasing { state } => (electronic_op(d, Some((state, state))), None),
        ChannelKind::VibrationalHeating { mode } => (electronic_op(d, None), Some((mode, creation(cutoffs[mode])))),
        ChannelKind::VibrationalCooling { mode } => (electronic_op(d, None), Some((mode, annihilation(cutoffs[mode])))),
        ChannelKind::VibrationalDephasing { mode } => (electronic_op(d, None), Some((mode, number(cutoffs[mode])))),
    };
    let mut op = el;
    for (j, &dj) in cutoffs.iter().enumerate() {
        let f = match &target {
            Some((mode, m)) if *mode == j => CsrMatrix::from_dense(m),
            _ => CsrMatrix::identity(dj),
        };
        op = op.kron(&f);
    }
    Ok(op)
}

pub fn build_jump_operator(channel: &LindbladChannel, model: &VCModel, cutoffs: &[usize]) -> Result<ComplexMatrix> {
    Ok(build_jump_operator_sparse(channel, model, cutoffs)?.to_dense())
}

/// Truncated coherent-state amplitudes `e^{-|a|^2/2} a^f / sqrt(f!)` for `f < d`, not renormalized.
pub fn coherent_amplitudes(alpha: C64, d: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(d);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for f in 0..d {
        out.push(c);
        c = c * alpha / ((f + 1) as f64).sqrt();
    }
    out
}

/// `|n> (x) prod_j |alpha_j>` with each coherent factor truncated and renormalized.
pub fn build_initial_state(spec: &InitialStateSpec, model: &VCModel, cutoffs: &[usize]) -> Result<StateVector> {
    build_initial_state_with_loss(spec, model, cutoffs, COHERENT_LOSS_TOL)
}

/// As [`build_initial_state`], accepting a truncation loss of up to `max_loss` per mode.
pub fn build_initial_state_with_loss(
    spec: &InitialStateSpec,
    model: &VCModel,
    cutoffs: &[usize],
    max_loss: f64,
) -> Result<StateVector> {
    let layout = check_cutoffs(model, cutoffs)?;
    if spec.electronic >= model.electronic {
        return Err(invalid(format!("initial electronic index {} out of range", spec.electronic)));
    }
    if spec.displacements.len() > model.num_modes() {
        return Err(invalid("more displacements than modes"));
    }
    let mut amps = vec![C64::new(0.0, 0.0); model.electronic];
    amps[spec.electronic] = C64::new(1.0, 0.0);
    for (j, &d) in cutoffs.iter().enumerate() {
        let alpha = spec.displacements.get(j).copied().unwrap_or(C64::new(0.0, 0.0));
        let mut coh = coherent_amplitudes(alpha, d);
        let kept: f64 = coh.iter().map(|c| c.norm_sqr()).sum();
        let loss = 1.0 - kept;
        if loss > max_loss {
            return Err(Error::CutoffTooSmall { loss });
        }
        let s = kept.sqrt();
        coh.iter_mut().for_each(|c| *c /= s);
        amps = amps
            .iter()
            .flat_map(|a| coh.iter().map(move |c| a * c))
            .collect();
    }
    debug_assert_eq!(amps.len(), layout.fock_dim());
    StateVector::normalized(amps)
}

/// Diabatic populations from the diagonal of a state on a space whose most significant
/// factor is the electronic register.
pub fn electronic_populations(diagonal: &[f64], electronic: usize) -> Vec<f64> {
    let block = diagonal.len() / electronic;
    (0..electronic)
        .map(|n| diagonal[n * block..(n + 1) * block].iter().sum())
        .collect()
}
