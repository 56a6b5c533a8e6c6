use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::{check_budget, ComplexMatrix, RegisterLayout, C64};

/// Longest supported Pauli string.
pub const MAX_QUBITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-qubit Paulis, stored as X and Z bit masks.
///
/// Qubit 0 is the leftmost letter and maps to the most significant bit of a basis
/// index, so `x` and `z` line up with computational-basis indices directly.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        Self { n, x: 0, z: 0 }
    }

    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self {
            n,
            x: x & mask,
            z: z & mask,
        }
    }

    pub fn from_letters(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n > MAX_QUBITS {
            return Err(invalid(format!("Pauli string longer than {MAX_QUBITS}")));
        }
        let mut p = Self::identity(n);
        for (q, c) in s.chars().enumerate() {
            let l = Pauli::from_letter(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?}")))?;
            p.set(q, l);
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    fn bit(&self, q: usize) -> u64 {
        1u64 << (self.n - 1 - q)
    }

    pub fn get(&self, q: usize) -> Pauli {
        let b = self.bit(q);
        Pauli::from_bits(self.x & b != 0, self.z & b != 0)
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        let b = self.bit(q);
        let (x, z) = p.bits();
        self.x = if x { self.x | b } else { self.x & !b };
        self.z = if z { self.z | b } else { self.z & !b };
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `P|c> = phase(c) |c ^ x>` with `phase(c) = i^{#Y} (-1)^{|c & z|}`.
    pub fn phase(&self, c: usize) -> C64 {
        let sign = if (c as u64 & self.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        i_pow(self.y_count()) * sign
    }

    /// Product `self * other` as `(phase, string)`.
    pub fn mul(&self, other: &Self) -> (C64, Self) {
        assert_eq!(self.n, other.n, "Pauli strings of different lengths");
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // P = i^{|x&z|} X^x Z^z, and Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1.
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4 * 64
            - (x & z).count_ones();
        (i_pow(k), Self { n: self.n, x, z })
    }

    /// Places `self` on qubits `[offset, offset + len)` of an `n`-qubit string.
    pub fn embed(&self, n: usize, offset: usize) -> Self {
        assert!(offset + self.n <= n, "embedding out of range");
        let shift = n - offset - self.n;
        Self::from_masks(n, self.x << shift, self.z << shift)
    }

    /// Tensor product `self (x) other`, `self` on the left.
    pub fn tensor(&self, other: &Self) -> Self {
        let n = self.n + other.n;
        Self::from_masks(n, (self.x << other.n) | other.x, (self.z << other.n) | other.z)
    }

    /// Sort key realizing lexicographic order with `I < X < Y < Z`, leftmost first.
    pub fn sort_key(&self) -> u128 {
        let mut key = 0u128;
        for q in 0..self.n {
            let code = match self.get(q) {
                Pauli::I => 0,
                Pauli::X => 1,
                Pauli::Y => 2,
                Pauli::Z => 3,
            };
            key = (key << 2) | code;
        }
        key
    }

    pub fn letters(&self) -> String {
        (0..self.n).map(|q| self.get(q).letter()).collect()
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.n;
        check_budget(dim)?;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for c in 0..dim {
            m[(c ^ self.x as usize, c)] = self.phase(c);
        }
        Ok(m)
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.n, self.sort_key()).cmp(&(other.n, other.sort_key()))
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letters())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letters())
    }
}

fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Rule for discarding small coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "threshold")]
pub enum Prune {
    /// Drop `|alpha| < threshold * max |alpha|`.
    Relative(f64),
    /// Drop `|alpha| < threshold`.
    Absolute(f64),
}

impl Default for Prune {
    fn default() -> Self {
        Prune::Relative(1e-10)
    }
}

impl Prune {
    pub fn threshold(&self, max_abs: f64) -> f64 {
        match *self {
            Prune::Relative(r) => r * max_abs,
            Prune::Absolute(a) => a,
        }
    }
}

/// `sum_k alpha_k P_k` over a register layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    layout: RegisterLayout,
    terms: Vec<(C64, PauliString)>,
}

impl PauliSum {
    pub fn zero(layout: RegisterLayout) -> Self {
        Self { layout, terms: vec![] }
    }

    pub fn from_terms(layout: RegisterLayout, terms: Vec<(C64, PauliString)>) -> Result<Self> {
        let n = layout.total_qubits();
        if n > MAX_QUBITS {
            return Err(invalid(format!("layout has more than {MAX_QUBITS} qubits")));
        }
        if terms.iter().any(|(_, p)| p.len() != n) {
            return Err(Error::DimensionMismatch("Pauli string length differs from layout".into()));
        }
        Ok(Self { layout, terms })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.total_qubits()
    }

    pub fn terms(&self) -> &[(C64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, coef: C64, p: PauliString) {
        assert_eq!(p.len(), self.num_qubits(), "Pauli string length differs from layout");
        self.terms.push((coef, p));
    }

    /// Sums coefficients of equal strings; the result is sorted and drops exact zeros.
    pub fn grouped(&self) -> Self {
        let mut map: BTreeMap<PauliString, C64> = BTreeMap::new();
        for &(c, p) in &self.terms {
            *map.entry(p).or_insert(C64::new(0.0, 0.0)) += c;
        }
        Self {
            layout: self.layout.clone(),
            terms: map
                .into_iter()
                .filter(|(_, c)| *c != C64::new(0.0, 0.0))
                .map(|(p, c)| (c, p))
                .collect(),
        }
    }

    /// Removes the identity string, returning its coefficient.
    pub fn strip_identity(&self) -> (Self, C64) {
        let mut id = C64::new(0.0, 0.0);
        let mut terms = Vec::with_capacity(self.terms.len());
        for &(c, p) in &self.terms {
            if p.is_identity() {
                id += c;
            } else {
                terms.push((c, p));
            }
        }
        (
            Self {
                layout: self.layout.clone(),
                terms,
            },
            id,
        )
    }

    pub fn pruned(&self, rule: Prune) -> Self {
        let max = self.terms.iter().fold(0.0_f64, |m, (c, _)| m.max(c.norm()));
        let thr = rule.threshold(max);
        Self {
            layout: self.layout.clone(),
            terms: self.terms.iter().copied().filter(|(c, _)| c.norm() >= thr).collect(),
        }
    }

    /// Lexicographic order of the letter sequences.
    pub fn sorted(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|(_, p)| p.sort_key());
        Self {
            layout: self.layout.clone(),
            terms,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            layout: self.layout.clone(),
            terms: self.terms.iter().map(|&(c, p)| (c * factor, p)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.layout.total_qubits() != other.layout.total_qubits() {
            return Err(Error::DimensionMismatch("Pauli sums on different layouts".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(Self {
            layout: self.layout.clone(),
            terms,
        }
        .grouped())
    }

    /// Symbolic operator product, grouped.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::DimensionMismatch("Pauli sums on different layouts".into()));
        }
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for &(a, p) in &self.terms {
            for &(b, q) in &other.terms {
                let (ph, r) = p.mul(&q);
                terms.push((a * b * ph, r));
            }
        }
        Ok(Self {
            layout: self.layout.clone(),
            terms,
        }
        .grouped())
    }

    /// Hermitian conjugate: conjugated coefficients, same strings.
    pub fn dagger(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            terms: self.terms.iter().map(|&(c, p)| (c.conj(), p)).collect(),
        }
    }

    /// Re-targets every string onto a larger layout, placing it at qubit `offset`.
    pub fn embed(&self, layout: &RegisterLayout, offset: usize) -> Result<Self> {
        let n = layout.total_qubits();
        if offset + self.num_qubits() > n {
            return Err(Error::DimensionMismatch("embedding exceeds target layout".into()));
        }
        Ok(Self {
            layout: layout.clone(),
            terms: self.terms.iter().map(|&(c, p)| (c, p.embed(n, offset))).collect(),
        })
    }

    /// `(sum |alpha_k|, max |alpha_k|)`
    pub fn norms(&self) -> (f64, f64) {
        self.terms
            .iter()
            .fold((0.0, 0.0), |(s, m), (c, _)| (s + c.norm(), f64::max(m, c.norm())))
    }

    /// Largest imaginary part relative to the largest coefficient.
    pub fn max_relative_imag(&self) -> f64 {
        let (_, max) = self.norms();
        if max == 0.0 {
            return 0.0;
        }
        self.terms.iter().fold(0.0_f64, |m, (c, _)| m.max(c.im.abs())) / max
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_relative_imag() <= tol
    }

    pub fn weights(&self) -> Vec<usize> {
        self.terms.iter().map(|(_, p)| p.weight()).collect()
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let dim = self.layout.dim();
        check_budget(dim)?;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for &(a, p) in &self.terms {
            let x = p.x_mask() as usize;
            for c in 0..dim {
                m[(c ^ x, c)] += a * p.phase(c);
            }
        }
        Ok(m)
    }

    /// `sum_k alpha_k P_k v`
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        let dim = self.layout.dim();
        if v.len() != dim {
            return Err(Error::DimensionMismatch("Pauli sum applied to wrong dimension".into()));
        }
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for &(a, p) in &self.terms {
            let x = p.x_mask() as usize;
            for (c, &vc) in v.iter().enumerate() {
                out[c ^ x] += a * p.phase(c) * vc;
            }
        }
        Ok(out)
    }

    /// One term per line, `<coefficient> <letters>`.
    ///
    /// Real coefficients print as a bare number; complex ones as `re+imi`. Numbers use the
    /// shortest representation that reads back to the same double.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (c, p) in &self.terms {
            if c.im == 0.0 {
                s.push_str(&format!("{} {}\n", c.re, p));
            } else {
                s.push_str(&format!("{}{:+}i {}\n", c.re, c.im, p));
            }
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(c, p)| serde_json::json!({"re": c.re, "im": c.im, "string": p.letters()}))
            .collect();
        serde_json::json!({
            "layout": self.layout,
            "qubits": self.num_qubits(),
            "terms": terms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        PauliString::from_letters(s).unwrap()
    }

    fn dense(s: &str) -> ComplexMatrix {
        p(s).to_matrix().unwrap()
    }

    #[test]
    fn letters_round_trip() {
        for s in ["IXYZ", "ZZZ", "I", "YXIZY"] {
            assert_eq!(p(s).letters(), s);
        }
        assert!(PauliString::from_letters("IQ").is_err());
        assert_eq!(p("IXYZ").weight(), 3);
    }

    #[test]
    fn single_letter_matrices() {
        let z = dense("Z");
        assert_eq!(z, ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]));
        let y = dense("Y");
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        let xz = dense("XZ");
        assert_eq!(xz[(0, 2)], C64::new(1.0, 0.0));
        assert_eq!(xz[(1, 3)], C64::new(-1.0, 0.0));
    }

    #[test]
    fn products_match_dense() {
        let all = ["I", "X", "Y", "Z"];
        for a in all {
            for b in all {
                for c in all {
                    for d in all {
                        let (l, r) = (format!("{a}{b}"), format!("{c}{d}"));
                        let (ph, q) = p(&l).mul(&p(&r));
                        let expect = dense(&l).matmul(&dense(&r)).unwrap();
                        let got = q.to_matrix().unwrap().scale(ph);
                        assert!(got.max_abs_diff(&expect).unwrap() < 1e-15, "{l} * {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn lexicographic_order() {
        let mut v = vec![p("ZI"), p("IX"), p("XY"), p("II"), p("YZ"), p("XI")];
        v.sort_by_key(|s| s.sort_key());
        let got: Vec<String> = v.iter().map(|s| s.letters()).collect();
        assert_eq!(got, ["II", "IX", "XI", "XY", "YZ", "ZI"]);
    }

    #[test]
    fn embed_and_tensor() {
        assert_eq!(p("XY").embed(5, 2).letters(), "IIXYI");
        assert_eq!(p("XY").tensor(&p("ZI")).letters(), "XYZI");
    }

    #[test]
    fn sum_basics() {
        let layout = RegisterLayout::qubits(1).unwrap();
        let empty = PauliSum::zero(layout.clone());
        assert_eq!(empty.to_matrix().unwrap(), ComplexMatrix::zeros(2, 2));
        let s = PauliSum::from_terms(layout.clone(), vec![(C64::new(2.0, 0.0), p("X")), (C64::new(-1.0, 0.0), p("Z"))]).unwrap();
        assert_eq!(s.norms(), (3.0, 2.0));
        let single = PauliSum::from_terms(layout, vec![(C64::new(3.0, 0.0), p("Z"))]).unwrap();
        assert_eq!(single.norms(), (3.0, 3.0));
        assert_eq!(s.to_text(), "2 X\n-1 Z\n");
    }

    #[test]
    fn grouping_and_pruning() {
        let layout = RegisterLayout::qubits(2).unwrap();
        let c = |x: f64| C64::new(x, 0.0);
        let s = PauliSum::from_terms(
            layout,
            vec![(c(1.0), p("ZI")), (c(0.5), p("II")), (c(1.0), p("ZI")), (c(1e-12), p("XX")), (c(-1.0), p("IX")), (c(1.0), p("IX"))],
        )
        .unwrap();
        let g = s.grouped();
        assert_eq!(g.len(), 3);
        assert_eq!(g.grouped(), g);
        let (stripped, id) = g.strip_identity();
        assert_eq!(id, c(0.5));
        let pr = stripped.pruned(Prune::default());
        assert_eq!(pr.terms(), &[(c(2.0), p("ZI"))]);
        assert_eq!(stripped.pruned(Prune::Absolute(1e-13)).len(), 2);
    }

    #[test]
    fn apply_matches_matrix() {
        let layout = RegisterLayout::qubits(3).unwrap();
        let s = PauliSum::from_terms(
            layout,
            vec![(C64::new(0.3, 0.0), p("XYZ")), (C64::new(-1.1, 0.0), p("IZY")), (C64::new(0.7, 0.0), p("YYI"))],
        )
        .unwrap();
        let v: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let a = s.apply(&v).unwrap();
        let b = s.to_matrix().unwrap().apply(&v).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}
