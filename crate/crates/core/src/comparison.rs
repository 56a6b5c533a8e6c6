//! Error metrics, error curves, spline matching and volume reports.

use serde::{Deserialize, Serialize};

use crate::dynamics::{MqbCost, SampleState, Trajectory};
use crate::encoding::{embed_fock_matrix, embed_fock_state};
use crate::error::{invalid, Error, Result};
use crate::quantum::{fidelity, fidelity_pure, RegisterLayout};
use crate::trotter::ResourceCount;

/// Largest distance between fitted and expected tail slopes before extrapolation is refused.
pub const TAIL_SLOPE_TOL: f64 = 0.15;
/// Knots used for the tail fit.
pub const TAIL_POINTS: usize = 3;
/// Fewest points accepted by [`fit_and_extrapolate`].
pub const MIN_CURVE_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "state")]
pub enum Metric {
    /// Maximum infidelity over the grid.
    Infidelity,
    /// Maximum population error of one electronic state.
    Population(usize),
}

impl Metric {
    pub fn tag(&self) -> String {
        match self {
            Metric::Infidelity => "eps_F".to_string(),
            Metric::Population(n) => format!("eps_{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Simulated,
    Interpolated,
    Extrapolated,
}

fn grid_tol(a: &[f64]) -> f64 {
    1e-9 * a.iter().fold(0.0_f64, |m, &t| m.max(t.abs()))
}

fn check_grids(reference: &Trajectory, approx: &Trajectory) -> Result<()> {
    let (a, b) = (reference.times(), approx.times());
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} samples against {}", a.len(), b.len())));
    }
    let tol = grid_tol(a);
    if let Some(i) = (0..a.len()).find(|&i| (a[i] - b[i]).abs() > tol) {
        return Err(Error::GridMismatch(format!("sample {i}: t = {:e} s against {:e} s", a[i], b[i])));
    }
    Ok(())
}

/// Brings a Fock-basis state into the qubit basis of `layout`.
fn to_qubit_basis(s: &SampleState, layout: &RegisterLayout) -> Result<SampleState> {
    Ok(match s {
        SampleState::Pure(p) => SampleState::Pure(embed_fock_state(p, layout)?),
        SampleState::Mixed(r) => {
            SampleState::Mixed(crate::quantum::DensityMatrix::from_matrix_unchecked(embed_fock_matrix(r.matrix(), layout)?))
        }
    })
}

/// `1 - F(a, b)` for states given in the Fock basis (`None`) or a qubit basis.
pub fn state_infidelity(
    a: &SampleState,
    a_basis: Option<&RegisterLayout>,
    b: &SampleState,
    b_basis: Option<&RegisterLayout>,
) -> Result<f64> {
    let (a, b) = match (a_basis, b_basis) {
        (None, None) => (a.clone(), b.clone()),
        (Some(la), Some(lb)) if la == lb => (a.clone(), b.clone()),
        (None, Some(l)) => (to_qubit_basis(a, l)?, b.clone()),
        (Some(l), None) => (a.clone(), to_qubit_basis(b, l)?),
        _ => return Err(Error::DimensionMismatch("states live in different qubit layouts".into())),
    };
    let f = match (&a, &b) {
        (SampleState::Pure(x), SampleState::Pure(y)) => x.inner(y)?.norm_sqr(),
        (SampleState::Pure(x), SampleState::Mixed(r)) | (SampleState::Mixed(r), SampleState::Pure(x)) => {
            fidelity_pure(x, r)?
        }
        (SampleState::Mixed(r), SampleState::Mixed(s)) => fidelity(r, s)?,
    };
    Ok((1.0 - f).clamp(0.0, 1.0))
}

/// `max_t (1 - F(rho(t), rho~(t)))`; both trajectories must keep their states.
pub fn infidelity_max(reference: &Trajectory, approx: &Trajectory) -> Result<f64> {
    check_grids(reference, approx)?;
    let mut worst = 0.0_f64;
    for i in 0..reference.len() {
        let (Some(a), Some(b)) = (reference.state(i), approx.state(i)) else {
            return Err(invalid(format!("sample {i} has no stored state")));
        };
        worst = worst.max(state_infidelity(a, reference.qubit_layout(), b, approx.qubit_layout())?);
    }
    Ok(worst)
}

/// `max_t |P~_n(t) - P_n(t)|`
pub fn population_error_max(reference: &Trajectory, approx: &Trajectory, n: usize) -> Result<f64> {
    check_grids(reference, approx)?;
    if n >= reference.electronic_states() || n >= approx.electronic_states() {
        return Err(invalid(format!("no electronic state {n}")));
    }
    Ok(reference
        .populations()
        .iter()
        .zip(approx.populations())
        .fold(0.0_f64, |m, (p, q)| m.max((p[n] - q[n]).abs())))
}

/// Both error metrics of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunErrors {
    pub infidelity: f64,
    pub population: f64,
}

impl RunErrors {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Infidelity => self.infidelity,
            Metric::Population(_) => self.population,
        }
    }
}

/// Running maxima of both metrics against a stored reference, sample by sample.
///
/// Lets large runs compare states as they are produced instead of keeping them.
pub struct ErrorTracker<'a> {
    reference: &'a Trajectory,
    population: usize,
    seen: usize,
    errors: RunErrors,
}

impl<'a> ErrorTracker<'a> {
    pub fn new(reference: &'a Trajectory, population: usize) -> Result<Self> {
        if !reference.has_states() {
            return Err(invalid("reference trajectory must keep its states"));
        }
        if population >= reference.electronic_states() {
            return Err(invalid(format!("no electronic state {population}")));
        }
        Ok(Self {
            reference,
            population,
            seen: 0,
            errors: RunErrors::default(),
        })
    }

    /// Feeds sample `index`, taken at time `t`, with its electronic populations.
    pub fn observe(
        &mut self,
        index: usize,
        t: f64,
        state: &SampleState,
        basis: Option<&RegisterLayout>,
        populations: &[f64],
    ) -> Result<()> {
        let times = self.reference.times();
        if index >= times.len() || (times[index] - t).abs() > grid_tol(times) {
            return Err(Error::GridMismatch(format!("sample {index} at t = {t:e} s is not on the reference grid")));
        }
        let r = self.reference.state(index).expect("reference keeps states");
        let inf = state_infidelity(r, self.reference.qubit_layout(), state, basis)?;
        let dp = (self.reference.populations()[index][self.population] - populations[self.population]).abs();
        self.errors.infidelity = self.errors.infidelity.max(inf);
        self.errors.population = self.errors.population.max(dp);
        self.seen += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<RunErrors> {
        if self.seen != self.reference.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples observed, reference has {}",
                self.seen,
                self.reference.len()
            )));
        }
        Ok(self.errors)
    }
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(invalid("a spline needs at least two knots and one value per knot"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(invalid("spline knots must be finite and strictly increasing"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, u: f64) -> usize {
        match self.x.partition_point(|&k| k <= u) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        }
    }

    /// Value at `u`; outside the knots the end cubics are continued.
    pub fn eval(&self, u: f64) -> f64 {
        let i = self.segment(u);
        if u == self.x[i] {
            return self.y[i];
        }
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - u) / h;
        let b = (u - self.x[i]) / h;
        a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let i = self.segment(u);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - u) / h;
        let b = (u - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    /// Simulator error rate in 1/s.
    GammaErr,
    /// Trotter step count.
    TrotterSteps,
}

/// Error of one metric against a swept parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub abscissa: Abscissa,
    pub metric: Metric,
    x: Vec<f64>,
    eps: Vec<f64>,
}

impl ErrorCurve {
    pub fn new(abscissa: Abscissa, metric: Metric, x: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != eps.len() {
            return Err(invalid("error curve needs one error per abscissa"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("abscissas must be positive and strictly increasing"));
        }
        if eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(invalid("errors must lie in [0, 1]"));
        }
        Ok(Self { abscissa, metric, x, eps })
    }

    /// Builds a curve from unsorted points.
    pub fn from_points(abscissa: Abscissa, metric: Metric, mut points: Vec<(f64, f64)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (x, eps) = points.into_iter().unzip();
        Self::new(abscissa, metric, x, eps)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn logs(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some(i) = self.eps.iter().position(|&e| e <= 0.0) {
            return Err(invalid(format!("error is zero at x = {:e}; log-log fit impossible", self.x[i])));
        }
        Ok((self.x.iter().map(|v| v.ln()).collect(), self.eps.iter().map(|v| v.ln()).collect()))
    }
}

/// Least-squares line through the last knots in log-log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

fn fit_line(u: &[f64], v: &[f64]) -> TailFit {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let sxy: f64 = u.iter().zip(v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let sxx: f64 = u.iter().map(|a| (a - mu) * (a - mu)).sum();
    let slope = sxy / sxx;
    TailFit {
        slope,
        intercept: mv - slope * mu,
        points: u.len(),
    }
}

/// Log-log slope of the last `points` entries of a curve.
pub fn tail_slope(curve: &ErrorCurve, points: usize) -> Result<TailFit> {
    if points < 2 || points > curve.len() {
        return Err(invalid(format!("cannot fit {points} tail points on a curve of {}", curve.len())));
    }
    let (u, v) = curve.logs()?;
    let k = u.len() - points;
    Ok(fit_line(&u[k..], &v[k..]))
}

/// A curve in `(ln x, ln eps)`: spline inside the knots, straight tail beyond the last knot.
#[derive(Clone, Debug)]
pub struct LogCurve {
    spline: Option<CubicSpline>,
    knots_x: Vec<f64>,
    knots_eps: Vec<f64>,
    tail: std::result::Result<TailFit, String>,
}

impl LogCurve {
    pub fn tail(&self) -> std::result::Result<&TailFit, &str> {
        self.tail.as_ref().map_err(|s| s.as_str())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots_x[0], self.knots_x[self.knots_x.len() - 1])
    }

    fn ln_eval(&self, u: f64) -> f64 {
        match &self.spline {
            Some(s) => s.eval(u),
            None => self.knots_eps[0].ln(),
        }
    }

    /// `eps(x)`, flagged with where it came from.
    pub fn eval(&self, x: f64) -> Result<(f64, Provenance)> {
        if let Some(i) = self.knots_x.iter().position(|&k| k == x) {
            return Ok((self.knots_eps[i], Provenance::Simulated));
        }
        let (lo, hi) = self.range();
        if x > lo && x < hi {
            return Ok((self.ln_eval(x.ln()).exp(), Provenance::Interpolated));
        }
        if x > hi {
            let tail = self.tail.as_ref().map_err(|e| Error::ExtrapolationRefused(e.clone()))?;
            let last = self.knots_x.len() - 1;
            let v = self.knots_eps[last].ln() + tail.slope * (x.ln() - hi.ln());
            return Ok((v.exp(), Provenance::Extrapolated));
        }
        Err(invalid(format!("x = {x:e} lies outside the curve range [{lo:e}, {hi:e}]")))
    }

    /// Smallest-error branch solution of `eps(x) = target`.
    ///
    /// Targets below the last knot go to the tail; otherwise the rightmost interval bracketing
    /// the target is solved by bisection.
    pub fn invert(&self, target: f64) -> Result<(f64, Provenance)> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(invalid(format!("cannot match a non-positive error {target:e}")));
        }
        let n = self.knots_x.len();
        if let Some(i) = (0..n).rev().find(|&i| self.knots_eps[i] == target) {
            return Ok((self.knots_x[i], Provenance::Simulated));
        }
        let last_eps = self.knots_eps[n - 1];
        if target < last_eps {
            let tail = self.tail.as_ref().map_err(|e| {
                Error::ExtrapolationRefused(format!("error {target:e} lies below the simulated range: {e}"))
            })?;
            if tail.slope >= 0.0 {
                return Err(Error::ExtrapolationRefused(format!("tail slope {} does not decrease", tail.slope)));
            }
            let u = self.knots_x[n - 1].ln() + (target.ln() - last_eps.ln()) / tail.slope;
            return Ok((u.exp(), Provenance::Extrapolated));
        }
        let tv = target.ln();
        for i in (0..n.saturating_sub(1)).rev() {
            let (a, b) = (self.knots_eps[i].ln(), self.knots_eps[i + 1].ln());
            if (a - tv) * (b - tv) <= 0.0 {
                let (mut lo, mut hi) = (self.knots_x[i].ln(), self.knots_x[i + 1].ln());
                let f_lo = a - tv;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if (self.ln_eval(mid) - tv) * f_lo > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-15 * hi.abs().max(1.0) {
                        break;
                    }
                }
                return Ok((0.5 * (lo + hi), Provenance::Interpolated)).map(|(u, p)| (u.exp(), p));
            }
        }
        Err(invalid(format!(
            "error {target:e} exceeds every point of the curve; extend it to smaller abscissas"
        )))
    }
}

/// Spline in log-log space with a verified straight tail for extrapolation.
///
/// A tail slope further than [`TAIL_SLOPE_TOL`] from `expected_slope` leaves the curve usable
/// for interpolation only; any extrapolating call then fails with
/// [`Error::ExtrapolationRefused`].
pub fn fit_and_extrapolate(curve: &ErrorCurve, expected_slope: f64) -> Result<LogCurve> {
    if curve.len() < MIN_CURVE_POINTS {
        return Err(invalid(format!("extrapolation needs at least {MIN_CURVE_POINTS} points")));
    }
    let (u, v) = curve.logs()?;
    let fit = tail_slope(curve, TAIL_POINTS)?;
    let tail = if (fit.slope - expected_slope).abs() <= TAIL_SLOPE_TOL {
        Ok(fit)
    } else {
        Err(format!(
            "tail slope {:.3} over the last {TAIL_POINTS} points is not within {TAIL_SLOPE_TOL} of {expected_slope}",
            fit.slope
        ))
    };
    Ok(LogCurve {
        spline: Some(CubicSpline::new(u, v)?),
        knots_x: curve.x.clone(),
        knots_eps: curve.eps.clone(),
        tail,
    })
}

/// Log-log spline that never extrapolates.
pub fn fit_interpolant(curve: &ErrorCurve) -> Result<LogCurve> {
    let (u, v) = curve.logs()?;
    Ok(LogCurve {
        spline: if u.len() >= 2 { Some(CubicSpline::new(u, v)?) } else { None },
        knots_x: curve.x.clone(),
        knots_eps: curve.eps.clone(),
        tail: Err("curve is interpolation only".to_string()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub gamma_err: f64,
    pub epsilon: f64,
    pub epsilon_provenance: Provenance,
    /// Real-valued solution before rounding up.
    pub n_real: f64,
    #[serde(rename = "N")]
    pub steps: u64,
    pub extrapolated: bool,
}

/// Rounds up, ignoring representation noise just above an integer.
fn ceil_steps(n: f64) -> u64 {
    let r = n.round();
    if (n - r).abs() <= 1e-9 * n.abs().max(1.0) {
        r as u64
    } else {
        n.ceil() as u64
    }
}

/// Matches the MQB error at `gamma_err` to the Trotter step count giving the same error.
pub fn match_curves(mqb: &LogCurve, qubit: &LogCurve, gamma_err: f64) -> Result<MatchResult> {
    let (epsilon, epsilon_provenance) = mqb.eval(gamma_err)?;
    let (n_real, prov) = qubit.invert(epsilon)?;
    Ok(MatchResult {
        gamma_err,
        epsilon,
        epsilon_provenance,
        n_real,
        steps: ceil_steps(n_real).max(1),
        extrapolated: prov == Provenance::Extrapolated,
    })
}

/// [`match_curves`] on raw curves, with a first-order tail for the qubit side.
pub fn match_error(mqb: &ErrorCurve, qubit: &ErrorCurve, gamma_err: f64) -> Result<MatchResult> {
    match_curves(&fit_interpolant(mqb)?, &fit_and_extrapolate(qubit, -1.0)?, gamma_err)
}

/// Qubit-only against MQB volume at a matched step count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub mqb_memory: usize,
    pub mqb_time: usize,
    pub mqb_volume: usize,
    pub qubit_memory: usize,
    #[serde(rename = "N")]
    pub steps: u64,
    pub rz_total: u64,
    pub cnot_raw_total: u64,
    pub cnot_opt_total: u64,
    pub cnot_opt_global_total: u64,
    /// `qubit_memory * cnot_opt_total`
    pub qecv: f64,
    pub advantage: f64,
    pub provenance: Provenance,
}

/// Volumes and advantage for the matched step count; `counts` supplies the per-step tallies.
pub fn compute_advantage(m: &MatchResult, counts: &ResourceCount, mqb: &MqbCost) -> VolumeReport {
    let total = counts.with_steps(m.steps);
    let qecv = total.qubits as f64 * total.totals.cnot_opt as f64;
    VolumeReport {
        mqb_memory: mqb.memory,
        mqb_time: mqb.time,
        mqb_volume: mqb.volume,
        qubit_memory: total.qubits,
        steps: m.steps,
        rz_total: total.totals.rz,
        cnot_raw_total: total.totals.cnot_raw,
        cnot_opt_total: total.totals.cnot_opt,
        cnot_opt_global_total: total.totals.cnot_opt_global,
        qecv,
        advantage: qecv / mqb.volume as f64,
        provenance: if m.extrapolated {
            Provenance::Extrapolated
        } else if m.epsilon_provenance == Provenance::Simulated && m.n_real == m.steps as f64 {
            Provenance::Simulated
        } else {
            Provenance::Interpolated
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{DensityMatrix, StateVector, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pure_traj(states: &[StateVector], times: &[f64]) -> Trajectory {
        let mut t = Trajectory::new(2);
        for (s, &time) in states.iter().zip(times) {
            t.push_pure(time, s.clone(), true);
        }
        t
    }

    #[test]
    fn self_comparison_is_zero() {
        let s = StateVector::normalized(vec![C64::new(1.0, 0.0), C64::new(0.3, 0.2)]).unwrap();
        let a = pure_traj(&[s.clone(), s], &[0.0, 1.0]);
        assert_eq!(infidelity_max(&a, &a).unwrap(), 0.0);
        assert_eq!(population_error_max(&a, &a, 1).unwrap(), 0.0);
    }

    #[test]
    fn pure_against_maximally_mixed() {
        let a = pure_traj(&[StateVector::basis(2, 0).unwrap()], &[0.0]);
        let mut b = Trajectory::new(2);
        b.push_mixed(0.0, DensityMatrix::maximally_mixed(2), true);
        assert!((infidelity_max(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert!((infidelity_max(&b, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn population_offset_and_grid_checks() {
        let mut a = Trajectory::new(2);
        let mut b = Trajectory::new(2);
        for (k, t) in [0.0, 0.5, 1.0].iter().enumerate() {
            let p = 0.2 + 0.1 * k as f64;
            a.push_populations(*t, vec![1.0 - p, p], 1.0);
            b.push_populations(*t, vec![1.0 - p - 0.03, p + 0.03], 1.0);
        }
        assert!((population_error_max(&a, &b, 1).unwrap() - 0.03).abs() < 1e-15);
        let mut c = Trajectory::new(2);
        c.push_populations(0.0, vec![1.0, 0.0], 1.0);
        assert!(matches!(population_error_max(&a, &c, 1), Err(Error::GridMismatch(_))));
        let mut d = Trajectory::new(2);
        for t in [0.0, 0.5, 0.9] {
            d.push_populations(t, vec![1.0, 0.0], 1.0);
        }
        assert!(matches!(population_error_max(&a, &d, 1), Err(Error::GridMismatch(_))));
    }

    fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
        let a = crate::quantum::ComplexMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let m = a.matmul_adjoint(&a).unwrap();
        let t = m.trace().unwrap().re;
        DensityMatrix::new(m.scale(C64::new(1.0 / t, 0.0))).unwrap()
    }

    #[test]
    fn population_error_below_trace_distance_bound() {
        // |P~ - P| <= D(rho, sigma) <= sqrt(1 - F).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut a = Trajectory::new(2);
            let mut b = Trajectory::new(2);
            a.push_mixed(0.0, random_density(&mut rng, 4), true);
            b.push_mixed(0.0, random_density(&mut rng, 4), true);
            let e1 = population_error_max(&a, &b, 1).unwrap();
            let ef = infidelity_max(&a, &b).unwrap();
            assert!(e1 <= ef.sqrt() + 1e-12, "{e1} {ef}");
        }
    }

    #[test]
    fn fock_and_qubit_bases_compare() {
        let l = RegisterLayout::vibronic(2, &[3]).unwrap();
        let psi = StateVector::normalized((0..6).map(|k| C64::new(k as f64, 1.0)).collect()).unwrap();
        let q = embed_fock_state(&psi, &l).unwrap();
        let a = SampleState::Pure(psi.clone());
        let b = SampleState::Mixed(q.to_density());
        assert!(state_infidelity(&a, None, &b, Some(&l)).unwrap() < 1e-14);
        assert!(state_infidelity(&b, Some(&l), &a, None).unwrap() < 1e-14);
    }

    #[test]
    fn spline_hits_knots_and_keeps_lines() {
        let x = vec![0.0, 0.5, 1.7, 2.0, 3.5];
        let y = vec![1.0, -0.2, 0.4, 2.0, 0.1];
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(s.eval(*a), *b);
        }
        // Continuous first derivative across the knots.
        for &k in &x[1..4] {
            let l = s.derivative(k - 1e-9);
            let r = s.derivative(k + 1e-9);
            assert!((l - r).abs() < 1e-6, "{l} {r}");
        }
        let line = CubicSpline::new(x.clone(), x.iter().map(|v| 3.0 * v - 1.0).collect()).unwrap();
        for u in [0.1, 1.0, 2.7, 3.3] {
            assert!((line.eval(u) - (3.0 * u - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_matches_dense_solve() {
        // Second derivatives from a dense Gaussian elimination of the same system.
        let x = [0.0, 1.0, 1.5, 3.0, 4.0, 6.0];
        let y = [0.3, 1.0, -0.5, 0.2, 0.9, 0.0];
        let n = x.len();
        let mut a = vec![vec![0.0; n + 1]; n];
        a[0][0] = 1.0;
        a[n - 1][n - 1] = 1.0;
        for i in 1..n - 1 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            a[i][i - 1] = h0;
            a[i][i] = 2.0 * (h0 + h1);
            a[i][i + 1] = h1;
            a[i][n] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        for c in 0..n {
            let p = a[c][c];
            for r in 0..n {
                if r != c {
                    let f = a[r][c] / p;
                    for k in 0..=n {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        let m: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
        let s = CubicSpline::new(x.to_vec(), y.to_vec()).unwrap();
        for (p, q) in s.m.iter().zip(&m) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    fn steps_curve(ns: &[f64], f: impl Fn(f64) -> f64, metric: Metric) -> ErrorCurve {
        ErrorCurve::new(Abscissa::TrotterSteps, metric, ns.to_vec(), ns.iter().map(|&n| f(n)).collect()).unwrap()
    }

    #[test]
    fn straight_tail_extends_exactly() {
        let ns = [10.0, 20.0, 40.0, 80.0, 160.0];
        let c = steps_curve(&ns, |n| 0.3 / n, Metric::Population(1));
        let lc = fit_and_extrapolate(&c, -1.0).unwrap();
        assert!((lc.tail().unwrap().slope + 1.0).abs() < 1e-12);
        for n in [33.0, 500.0, 1e5] {
            let (e, _) = lc.eval(n).unwrap();
            assert!((e - 0.3 / n).abs() < 1e-12 * (0.3 / n) * 1e3);
        }
        assert_eq!(lc.eval(1e5).unwrap().1, Provenance::Extrapolated);
        assert_eq!(lc.eval(40.0).unwrap(), (0.3 / 40.0, Provenance::Simulated));
    }

    #[test]
    fn wrong_tail_slope_refuses_extrapolation() {
        let ns = [10.0, 20.0, 40.0, 80.0];
        let c = steps_curve(&ns, |n| 0.3 / (n * n), Metric::Infidelity);
        let lc = fit_and_extrapolate(&c, -1.0).unwrap();
        assert!(lc.tail().is_err());
        assert!(matches!(lc.eval(1000.0), Err(Error::ExtrapolationRefused(_))));
        assert!(matches!(lc.invert(1e-9), Err(Error::ExtrapolationRefused(_))));
        // Interpolation stays available.
        assert!(lc.invert(0.3 / 900.0).is_ok());
        assert!(fit_and_extrapolate(&steps_curve(&ns[..3], |n| 1.0 / n, Metric::Infidelity), -1.0).is_err());
    }

    #[test]
    fn knot_values_invert_to_their_step_count() {
        let ns = [30.0, 60.0, 120.0, 240.0, 480.0];
        let c = steps_curve(&ns, |n| 0.5 / n + 1.0 / (n * n), Metric::Population(1));
        let lc = fit_and_extrapolate(&c, -1.0).unwrap();
        for (n, e) in ns.iter().zip(c.eps()) {
            assert_eq!(lc.invert(*e).unwrap(), (*n, Provenance::Simulated));
        }
        let mqb = ErrorCurve::new(Abscissa::GammaErr, Metric::Population(1), vec![1.0, 10.0], vec![c.eps()[2], 0.5]).unwrap();
        let m = match_error(&mqb, &c, 1.0).unwrap();
        assert_eq!(m.steps, 120);
        assert!(!m.extrapolated);
    }

    #[test]
    fn linear_curves_match_in_closed_form() {
        let (a, b) = (2e-5, 3.0);
        let gammas = [0.1, 1.0, 10.0, 100.0];
        let mqb = ErrorCurve::new(Abscissa::GammaErr, Metric::Population(1), gammas.to_vec(), gammas.iter().map(|g| a * g).collect())
            .unwrap();
        let ns = [100.0, 200.0, 400.0, 800.0, 1600.0];
        let q = steps_curve(&ns, |n| b / n, Metric::Population(1));
        for g in [0.1, 0.37, 5.0, 100.0] {
            let m = match_error(&mqb, &q, g).unwrap();
            let expect = b / (a * g);
            assert!((m.n_real - expect).abs() < 1e-8 * expect, "{} {expect}", m.n_real);
            assert_eq!(m.extrapolated, expect > 1600.0);
        }
        assert_eq!(match_error(&mqb, &q, 0.1).unwrap().steps, 1_500_000);
        assert!(match_error(&mqb, &q, 1000.0).is_err());
    }

    #[test]
    fn advantage_reproduces_table_magnitudes() {
        let one_sig = |v: f64| {
            let p = 10f64.powf(v.log10().floor());
            (v / p).round() * p
        };
        let mqb = MqbCost { memory: 3, time: 1, volume: 3 };
        let m = |n: u64| MatchResult {
            gamma_err: 30.0,
            epsilon: 1e-3,
            epsilon_provenance: Provenance::Simulated,
            n_real: n as f64,
            steps: n,
            extrapolated: false,
        };
        // Isolated, matched infidelity: 11 qubits and 4e4 CNOT in total.
        let iso = ResourceCount::from_weights(&[2; 150], 1, 11);
        assert_eq!(iso.cnot_opt_per_step, 100);
        let r = compute_advantage(&m(400), &iso, &mqb);
        assert_eq!(r.cnot_opt_total, 40_000);
        assert_eq!(one_sig(r.qecv), 4e5);
        assert_eq!(one_sig(r.advantage), 1e5);
        // Open, matched population: 13 qubits, 1800 CNOT per step, about 1.4e8 in total.
        let open = ResourceCount::from_weights(&[4; 900], 1, 13);
        assert_eq!(open.cnot_opt_per_step, 1800);
        let r = compute_advantage(&m(77_778), &open, &mqb);
        assert_eq!(one_sig(r.qecv), 2e9);
        assert_eq!(one_sig(r.advantage), 6e8);
        // Equal volumes.
        let unit = ResourceCount::from_weights(&[2], 1, 1);
        let r = compute_advantage(&m(3), &unit, &MqbCost { memory: 3, time: 1, volume: 3 });
        assert_eq!(r.advantage, 1.0);
    }
}
