//! Gray-coded qubit encodings of truncated bosonic and electronic operators.

mod pauli;

pub use pauli::{Pauli, PauliString, PauliSum, Prune, MAX_QUBITS};

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::model::{LindbladChannel, ModeFactor, ProductTerm, VCModel};
use crate::quantum::{check_budget, ComplexMatrix, Register, RegisterLabel, RegisterLayout, StateVector, C64};

/// Reflected binary code on `width` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrayCode {
    pub width: usize,
}

impl GrayCode {
    pub fn new(width: usize) -> Self {
        Self { width }
    }

    pub fn encode(&self, f: usize) -> usize {
        f ^ (f >> 1)
    }

    pub fn decode(&self, g: usize) -> usize {
        let mut f = g;
        let mut shift = g >> 1;
        while shift != 0 {
            f ^= shift;
            shift >>= 1;
        }
        f
    }

    pub fn size(&self) -> usize {
        1 << self.width
    }
}

/// Embeds a `d x d` operator into `2^width` Gray-ordered basis states; unused codewords are zero.
pub fn gray_embed(a: &ComplexMatrix, width: usize) -> Result<ComplexMatrix> {
    let d = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch("register operator must be square".into()));
    }
    if width >= usize::BITS as usize || d > (1usize << width) {
        return Err(invalid(format!("{d} levels do not fit in {width} qubits")));
    }
    let g = GrayCode::new(width);
    let n = g.size();
    let mut e = ComplexMatrix::zeros(n, n);
    for r in 0..d {
        for c in 0..d {
            e[(g.encode(r), g.encode(c))] = a[(r, c)];
        }
    }
    Ok(e)
}

/// Pauli coefficients `Tr(P A) / 2^s` of a `2^s`-dimensional matrix, zero terms omitted.
pub fn pauli_decompose(e: &ComplexMatrix) -> Result<Vec<(C64, PauliString)>> {
    let dim = e.rows();
    if !e.is_square() || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch("decomposition needs a 2^s square matrix".into()));
    }
    let s = dim.trailing_zeros() as usize;
    if s > 8 {
        return Err(invalid("brute-force decomposition limited to 8 qubits"));
    }
    let mut out = Vec::new();
    for x in 0..dim as u64 {
        // Skip the whole X-mask when the matching off-diagonal band is empty.
        if (0..dim).all(|c| e[(c, c ^ x as usize)] == C64::new(0.0, 0.0)) {
            continue;
        }
        for z in 0..dim as u64 {
            let p = PauliString::from_masks(s, x, z);
            // Tr(P E) = sum_c <c ^ x| P |c> E[c][c ^ x]
            let tr: C64 = (0..dim).map(|c| p.phase(c) * e[(c, c ^ x as usize)]).sum();
            let coef = tr / dim as f64;
            if coef != C64::new(0.0, 0.0) {
                out.push((coef, p));
            }
        }
    }
    Ok(out)
}

/// Gray-encodes an operator on `d` levels into a Pauli sum over `width` qubits.
///
/// The identity component is kept. Rounding debris below `1e-14` of the largest
/// coefficient is dropped.
pub fn encode_operator(a: &ComplexMatrix, width: usize) -> Result<PauliSum> {
    let e = gray_embed(a, width)?;
    let layout = RegisterLayout::new(vec![Register {
        label: RegisterLabel::Mode(0),
        width,
        levels: a.rows(),
    }])?;
    Ok(PauliSum::from_terms(layout, pauli_decompose(&e)?)?
        .pruned(Prune::Relative(1e-14))
        .sorted())
}

/// Index map from the truncated Fock basis to the Gray-coded qubit basis of `layout`.
pub fn fock_to_qubit_map(layout: &RegisterLayout) -> Vec<usize> {
    let regs = layout.registers();
    let mut map = vec![0usize];
    for r in regs {
        let g = GrayCode::new(r.width);
        map = map
            .iter()
            .flat_map(|&hi| (0..r.levels).map(move |f| (hi << r.width) | g.encode(f)))
            .collect();
    }
    map
}

/// Places a Fock-space matrix into the qubit space; rows and columns of unused codewords stay zero.
pub fn embed_fock_matrix(m: &ComplexMatrix, layout: &RegisterLayout) -> Result<ComplexMatrix> {
    if m.rows() != layout.fock_dim() || !m.is_square() {
        return Err(Error::DimensionMismatch("matrix does not match layout".into()));
    }
    check_budget(layout.dim())?;
    let map = fock_to_qubit_map(layout);
    let mut out = ComplexMatrix::zeros(layout.dim(), layout.dim());
    for (r, &qr) in map.iter().enumerate() {
        for (c, &qc) in map.iter().enumerate() {
            out[(qr, qc)] = m[(r, c)];
        }
    }
    Ok(out)
}

pub fn embed_fock_state(psi: &StateVector, layout: &RegisterLayout) -> Result<StateVector> {
    if psi.dim() != layout.fock_dim() {
        return Err(Error::DimensionMismatch("state does not match layout".into()));
    }
    let mut out = vec![C64::new(0.0, 0.0); layout.dim()];
    for (i, &q) in fock_to_qubit_map(layout).iter().enumerate() {
        out[q] = psi.amplitudes()[i];
    }
    StateVector::new(out)
}

/// Per-register encodings, memoized by (register, operator).
///
/// Registers with unused codewords get the identity on their used levels wherever a term does
/// not act on them, so that the encoding is zero on unused codewords throughout.
struct RegisterEncoder<'a> {
    layout: &'a RegisterLayout,
    cache: HashMap<(usize, OpKey), PauliSum>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum OpKey {
    Projector(usize, usize),
    /// Identity on the used levels of a register.
    Identity,
    Mode(ModeFactor),
    Matrix(u64),
}

impl<'a> RegisterEncoder<'a> {
    fn new(layout: &'a RegisterLayout) -> Self {
        Self {
            layout,
            cache: HashMap::new(),
        }
    }

    fn encode(&mut self, reg: usize, key: OpKey, op: &ComplexMatrix) -> Result<PauliSum> {
        if let Some(s) = self.cache.get(&(reg, key)) {
            return Ok(s.clone());
        }
        let r = self.layout.registers()[reg];
        let offset = self.layout.registers()[..reg].iter().map(|x| x.width).sum();
        let full = encode_operator(op, r.width)?.embed(self.layout, offset)?;
        self.cache.insert((reg, key), full.clone());
        Ok(full)
    }

    /// Encoding of one register's operator, placed on the full layout.
    fn get(&mut self, reg: usize, key: OpKey) -> Result<PauliSum> {
        let levels = self.layout.registers()[reg].levels;
        let op = match key {
            OpKey::Projector(n, m) => {
                let mut p = ComplexMatrix::zeros(levels, levels);
                p[(n, m)] = C64::new(1.0, 0.0);
                p
            }
            OpKey::Identity => ComplexMatrix::identity(levels),
            OpKey::Mode(f) => f.matrix(levels),
            OpKey::Matrix(_) => unreachable!("matrix keys are encoded through `encode`"),
        };
        self.encode(reg, key, &op)
    }

    /// Multiplies in the used-level identity of every padded register not in `touched`.
    fn pad(&mut self, mut acc: PauliSum, touched: &[usize]) -> Result<PauliSum> {
        for (k, r) in self.layout.registers().iter().enumerate() {
            if r.levels < r.qubit_dim() && !touched.contains(&k) {
                acc = acc.mul(&self.get(k, OpKey::Identity)?)?;
            }
        }
        Ok(acc)
    }

    fn term(&mut self, term: &ProductTerm) -> Result<PauliSum> {
        let n = self.layout.total_qubits();
        let mut acc = PauliSum::from_terms(self.layout.clone(), vec![(term.coef, PauliString::identity(n))])?;
        let mut touched = Vec::new();
        if let Some((a, b)) = term.electronic {
            acc = acc.mul(&self.get(0, OpKey::Projector(a, b))?)?;
            touched.push(0);
        }
        for &(j, f) in &term.factors {
            acc = acc.mul(&self.get(j + 1, OpKey::Mode(f))?)?;
            touched.push(j + 1);
        }
        self.pad(acc, &touched)
    }
}

/// Gray-encoded Hamiltonian with every product term multiplied out symbolically.
///
/// Equal strings are grouped and the result sorted; the identity string is kept.
pub fn encode_vc_model_full(model: &VCModel, cutoffs: &[usize]) -> Result<PauliSum> {
    model.validate()?;
    if cutoffs.len() != model.num_modes() {
        return Err(Error::DimensionMismatch("one cutoff per mode required".into()));
    }
    let layout = RegisterLayout::vibronic(model.electronic_states(), cutoffs)?;
    if layout.total_qubits() > MAX_QUBITS {
        return Err(invalid("too many qubits"));
    }
    let mut enc = RegisterEncoder::new(&layout);
    let mut all = Vec::new();
    for t in model.terms() {
        all.extend_from_slice(enc.term(&t)?.terms());
    }
    Ok(PauliSum::from_terms(layout, all)?.grouped())
}

/// `H_qubits`: the Gray-encoded Hamiltonian without its identity component, pruned.
pub fn encode_vc_model(model: &VCModel, cutoffs: &[usize], prune: Prune) -> Result<PauliSum> {
    let (h, _) = encode_vc_model_full(model, cutoffs)?.strip_identity();
    Ok(h.pruned(prune).sorted())
}

/// Gray encoding of a bare jump operator on the system layout, identity component kept.
pub fn encode_jump_operator(channel: &LindbladChannel, model: &VCModel, cutoffs: &[usize]) -> Result<PauliSum> {
    // Jump operators act on a single register, so encode that factor alone.
    let layout = RegisterLayout::vibronic(model.electronic_states(), cutoffs)?;
    channel.validate(model)?;
    let (reg, op) = single_register_factor(channel, model, cutoffs)?;
    let mut enc = RegisterEncoder::new(&layout);
    let local = enc.encode(reg, OpKey::Matrix(0), &op)?;
    Ok(enc.pad(local, &[reg])?.grouped())
}

fn single_register_factor(channel: &LindbladChannel, model: &VCModel, cutoffs: &[usize]) -> Result<(usize, ComplexMatrix)> {
    use crate::model::{annihilation, creation, number, ChannelKind};
    let d = model.electronic_states();
    let proj = |n: usize, m: usize| {
        let mut p = ComplexMatrix::zeros(d, d);
        p[(n, m)] = C64::new(1.0, 0.0);
        p
    };
    Ok(match channel.kind {
        ChannelKind::ElectronicRelaxation { to, from } => (0, proj(to, from)),
        ChannelKind::ElectronicDephasing { state } => (0, proj(state, state)),
        ChannelKind::VibrationalHeating { mode } => (mode + 1, creation(cutoffs[mode])),
        ChannelKind::VibrationalCooling { mode } => (mode + 1, annihilation(cutoffs[mode])),
        ChannelKind::VibrationalDephasing { mode } => (mode + 1, number(cutoffs[mode])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, build_jump_operator, number, position, pyrazine_lvc, ChannelKind, ModeSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn jump_operator_reconstruction_error(channel: &LindbladChannel, model: &VCModel, cutoffs: &[usize]) -> Result<f64> {
        let layout = RegisterLayout::vibronic(model.electronic_states(), cutoffs)?;
        let dense = embed_fock_matrix(&build_jump_operator(channel, model, cutoffs)?, &layout)?;
        let enc = encode_jump_operator(channel, model, cutoffs)?.to_matrix()?;
        enc.max_abs_diff(&dense)
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn lt(s: &PauliSum) -> Vec<(f64, String)> {
        s.terms().iter().map(|(a, p)| (a.re, p.letters())).collect()
    }

    #[test]
    fn gray_code_properties() {
        for w in 1..8 {
            let g = GrayCode::new(w);
            let mut seen = vec![false; g.size()];
            for f in 0..g.size() {
                let e = g.encode(f);
                assert!(!seen[e]);
                seen[e] = true;
                assert_eq!(g.decode(e), f);
                if f + 1 < g.size() {
                    assert_eq!((e ^ g.encode(f + 1)).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn number_operator_two_levels() {
        let s = encode_operator(&number(2), 1).unwrap();
        assert_eq!(lt(&s), vec![(0.5, "I".into()), (-0.5, "Z".into())]);
    }

    #[test]
    fn position_two_levels() {
        let s = encode_operator(&position(2), 1).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.terms()[0].1.letters(), "X");
        assert!((s.terms()[0].0.re - 0.5_f64.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn position_four_levels_matches_trace_formula() {
        let q = position(4);
        let e = gray_embed(&q, 2).unwrap();
        let s = encode_operator(&q, 2).unwrap();
        let letters = ["I", "X", "Y", "Z"];
        for a in letters {
            for b in letters {
                let p = PauliString::from_letters(&format!("{a}{b}")).unwrap();
                let brute = p.to_matrix().unwrap().matmul(&e).unwrap().trace().unwrap() / 4.0;
                let got = s.terms().iter().find(|(_, t)| *t == p).map_or(c(0.0), |(v, _)| *v);
                assert!((brute - got).norm() < 1e-15, "{a}{b}");
            }
        }
    }

    #[test]
    fn padding_rule() {
        let s = encode_operator(&number(3), 2).unwrap();
        let m = s.to_matrix().unwrap();
        let g = GrayCode::new(2);
        assert!((m[(g.encode(2), g.encode(2))] - c(2.0)).norm() < 1e-15);
        // codeword g(3) = 2 is unused
        assert!(m[(2, 2)].norm() < 1e-15);
        assert!(encode_operator(&number(5), 2).is_err());
    }

    #[test]
    fn round_trip_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = ComplexMatrix::from_fn(8, 8, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).hermitian_part();
        let s = encode_operator(&a, 3).unwrap();
        let back = s.to_matrix().unwrap();
        assert!(back.max_abs_diff(&gray_embed(&a, 3).unwrap()).unwrap() < 1e-10);
        assert!(s.is_hermitian(1e-10));
    }

    #[test]
    fn diagonal_model_gives_z_strings() {
        let m = VCModel::new(1, vec![ModeSpec::new(2.0).unwrap()]).unwrap();
        let h = encode_vc_model(&m, &[8], Prune::default()).unwrap();
        assert!(!h.is_empty());
        assert!(h.terms().iter().all(|(_, p)| p.is_diagonal()));
    }

    #[test]
    fn pyrazine_reconstruction_small_cutoffs() {
        let model = pyrazine_lvc();
        for d in [2usize, 3, 4] {
            let (h, layout) = build_hamiltonian(&model, &[d, d]).unwrap();
            let emb = embed_fock_matrix(&h, &layout).unwrap();
            let id = emb.trace().unwrap() / layout.dim() as f64;
            let mut target = emb.clone();
            for i in 0..layout.dim() {
                target[(i, i)] -= id;
            }
            let ps = encode_vc_model(&model, &[d, d], Prune::default()).unwrap();
            let err = ps.to_matrix().unwrap().max_abs_diff(&target).unwrap();
            assert!(err <= 1e-10 * target.max_abs(), "d = {d}: {err}");
            assert!(ps.is_hermitian(1e-10));
        }
    }

    #[test]
    fn jump_operators_reconstruct() {
        let model = pyrazine_lvc();
        for kind in [
            ChannelKind::VibrationalDephasing { mode: 0 },
            ChannelKind::VibrationalHeating { mode: 1 },
            ChannelKind::VibrationalCooling { mode: 0 },
            ChannelKind::ElectronicRelaxation { to: 0, from: 1 },
            ChannelKind::ElectronicDephasing { state: 1 },
        ] {
            let ch = LindbladChannel::new(kind, 1.0).unwrap();
            let err = jump_operator_reconstruction_error(&ch, &model, &[4, 3]).unwrap();
            assert!(err < 1e-14, "{kind:?}");
        }
        let n = encode_jump_operator(
            &LindbladChannel::new(ChannelKind::VibrationalDephasing { mode: 0 }, 1.0).unwrap(),
            &model,
            &[32, 32],
        )
        .unwrap();
        assert!(n.terms().iter().any(|(_, p)| p.is_identity()));
        assert_eq!(n.len(), 6);
    }

    #[test]
    fn state_embedding() {
        let layout = RegisterLayout::vibronic(2, &[3]).unwrap();
        let map = fock_to_qubit_map(&layout);
        assert_eq!(map, vec![0, 1, 3, 4, 5, 7]);
        let psi = StateVector::basis(6, 2).unwrap();
        let q = embed_fock_state(&psi, &layout).unwrap();
        assert_eq!(q.amplitudes()[3], c(1.0));
    }
}
