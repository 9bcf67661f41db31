//! Finite-dimensional system objects and the first-order weak-measurement
//! model: an outcome `f` drawn with probability `|<f|i>|²` and a Gaussian
//! meter reading centred on `x · O_w(f)`.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result, C64};

/// `|<f|i>|` at or below this is treated as orthogonal; the weak value is undefined there.
pub const OVERLAP_FLOOR: f64 = 1e-10;

/// Absolute tolerance on `M - M†` entries.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const NORM_TOL: f64 = 1e-12;

pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Relative tolerance on the imaginary part of a weak value.
pub const IMAG_TOL: f64 = 1e-8;

/// Weak-regime ratio `x · max|λ(O)| / σ` above which the first-order model is flagged.
pub const WEAK_REGIME_LIMIT: f64 = 0.1;

pub(crate) fn max_hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Hermitian observable on a `d`-dimensional system, `d ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: DMatrix<C64>,
}

impl Observable {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "observable must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() < 2 {
            return Err(Error::InvalidDimension {
                min: 2,
                got: matrix.nrows(),
            });
        }
        let deviation = max_hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&v| C64::new(v, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub fn pauli_z() -> Self {
        Self::from_real_diagonal(&[1.0, -1.0]).expect("valid")
    }

    pub fn pauli_x() -> Self {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        Self::new(DMatrix::from_row_slice(2, 2, &[o, l, l, o])).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn entry_scale(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }
}

/// Unit vector in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&v| C64::new(v, 0.0)),
        ))
    }

    /// Computational basis vector `|k>` in dimension `d`.
    pub fn basis_vector(d: usize, k: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[k] = C64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    /// `cos θ |0> + sin θ |1>` in dimension `d ≥ 2`.
    pub fn rotated(d: usize, theta: f64) -> Self {
        let mut v = DVector::zeros(d);
        v[0] = C64::new(theta.cos(), 0.0);
        v[1] = C64::new(theta.sin(), 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn with_phase(&self, alpha: f64) -> Self {
        Self {
            amplitudes: &self.amplitudes * C64::from_polar(1.0, alpha),
        }
    }
}

/// Orthonormal basis of `C^d`, stored as `d` states.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    vectors: Vec<PureState>,
}

impl OrthonormalBasis {
    pub fn new(vectors: Vec<PureState>) -> Result<Self> {
        let d = vectors.len();
        if let Some(bad) = vectors.iter().find(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch(format!(
                "basis of {d} vectors contains a vector of dimension {}",
                bad.dim()
            )));
        }
        let mut deviation = 0.0_f64;
        for (a, u) in vectors.iter().enumerate() {
            for (b, v) in vectors.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                deviation = deviation.max((u.inner(v) - C64::new(target, 0.0)).norm());
            }
        }
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { vectors })
    }

    pub fn computational(d: usize) -> Self {
        Self {
            vectors: (0..d).map(|k| PureState::basis_vector(d, k)).collect(),
        }
    }

    /// Rows of `m` are the basis vectors.
    pub fn from_rows(m: &DMatrix<C64>) -> Result<Self> {
        let vectors = m
            .row_iter()
            .map(|row| PureState::new(row.transpose()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vectors)
    }

    /// `{(|0> - |1>)/√2, (|0> + |1>)/√2}`.
    pub fn qubit_minus_plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(vec![
            PureState::from_real(&[h, -h]).expect("unit"),
            PureState::from_real(&[h, h]).expect("unit"),
        ])
        .expect("orthonormal")
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }
}

/// Gaussian meter with position spread `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterSpec {
    sigma: f64,
}

impl MeterSpec {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::BadParams(format!("meter sigma must be > 0, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `Re[<f|O|i> / <f|i>]`.
pub fn weak_value(observable: &Observable, initial: &PureState, fin: &PureState) -> Result<f64> {
    if observable.dim() != initial.dim() || initial.dim() != fin.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable {}, initial {}, final {}",
            observable.dim(),
            initial.dim(),
            fin.dim()
        )));
    }
    let overlap = fin.inner(initial);
    if overlap.norm() <= OVERLAP_FLOOR {
        return Err(Error::DegenerateOverlap {
            outcome: None,
            overlap: overlap.norm(),
        });
    }
    let numerator = fin.amplitudes().dotc(&(observable.matrix() * initial.amplitudes()));
    let w = numerator / overlap;
    if w.im.abs() > IMAG_TOL * (w.re.abs() + observable.entry_scale()) {
        return Err(Error::ComplexWeakValue {
            outcome: None,
            re: w.re,
            im: w.im,
        });
    }
    Ok(w.re)
}

/// Weak value for every element of `basis`, in basis order.
pub fn weak_value_vector(
    observable: &Observable,
    initial: &PureState,
    basis: &OrthonormalBasis,
) -> Result<Vec<f64>> {
    basis
        .vectors()
        .iter()
        .enumerate()
        .map(|(k, f)| weak_value(observable, initial, f).map_err(|e| e.at_outcome(k)))
        .collect()
}

/// `|<f|i>|²` for every basis element.
pub fn outcome_probs(initial: &PureState, basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    if initial.dim() != basis.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} vs basis dimension {}",
            initial.dim(),
            basis.dim()
        )));
    }
    Ok(basis
        .vectors()
        .iter()
        .map(|f| f.inner(initial).norm_sqr())
        .collect())
}

/// `<i|O²|i>`.
pub fn expected_o_squared(initial: &PureState, observable: &Observable) -> Result<f64> {
    if initial.dim() != observable.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} vs observable dimension {}",
            initial.dim(),
            observable.dim()
        )));
    }
    Ok((observable.matrix() * initial.amplitudes()).norm_squared())
}

/// Outcome probabilities paired with weak values. Outcomes whose overlap with
/// the initial state is below [`OVERLAP_FLOOR`] carry no weak value; their
/// probability is at most `OVERLAP_FLOOR²`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    pub probs: Vec<f64>,
    pub weak_values: Vec<Option<f64>>,
}

impl OutcomeTable {
    pub fn new(observable: &Observable, initial: &PureState, basis: &OrthonormalBasis) -> Result<Self> {
        let probs = outcome_probs(initial, basis)?;
        let weak_values = basis
            .vectors()
            .iter()
            .enumerate()
            .map(|(k, f)| match weak_value(observable, initial, f) {
                Ok(w) => Ok(Some(w)),
                Err(Error::DegenerateOverlap { .. }) => Ok(None),
                Err(e) => Err(e.at_outcome(k)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { probs, weak_values })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn weak_value(&self, outcome: usize) -> Result<f64> {
        self.weak_values[outcome].ok_or(Error::DegenerateOverlap {
            outcome: Some(outcome),
            overlap: self.probs[outcome].sqrt(),
        })
    }

    /// Weak values along an outcome sequence.
    pub fn weak_values_for(&self, outcomes: &[usize]) -> Result<DVector<f64>> {
        let mut v = DVector::zeros(outcomes.len());
        for (slot, &f) in v.iter_mut().zip(outcomes) {
            *slot = self.weak_value(f)?;
        }
        Ok(v)
    }
}

/// Everything needed to simulate the first-order joint likelihood.
#[derive(Debug, Clone)]
pub struct CouplingConfig {
    observable: Observable,
    initial: PureState,
    basis: OrthonormalBasis,
    meter: MeterSpec,
    x_true: f64,
    table: OutcomeTable,
}

impl CouplingConfig {
    pub fn new(
        observable: Observable,
        initial: PureState,
        basis: OrthonormalBasis,
        meter: MeterSpec,
        x_true: f64,
    ) -> Result<Self> {
        if !x_true.is_finite() {
            return Err(Error::BadParams(format!("x_true must be finite, got {x_true}")));
        }
        let table = OutcomeTable::new(&observable, &initial, &basis)?;
        Ok(Self {
            observable,
            initial,
            basis,
            meter,
            x_true,
            table,
        })
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn initial(&self) -> &PureState {
        &self.initial
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn meter(&self) -> MeterSpec {
        self.meter
    }

    pub fn sigma(&self) -> f64 {
        self.meter.sigma
    }

    pub fn x_true(&self) -> f64 {
        self.x_true
    }

    pub fn outcomes(&self) -> &OutcomeTable {
        &self.table
    }

    pub fn weak_regime_ratio(&self) -> f64 {
        self.x_true.abs() * self.observable.spectral_radius() / self.meter.sigma
    }

    /// Set when the first-order expansion of the coupling is doubtful.
    pub fn first_order_warning(&self) -> bool {
        self.weak_regime_ratio() > WEAK_REGIME_LIMIT
    }
}

/// Outcome indices and meter positions drawn from the joint likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub outcomes: Vec<usize>,
    pub meter: Vec<f64>,
}

/// Draws `n` pairs `(f_j, q_j)` with `f_j ~ |<f|i>|²` and
/// `q_j ~ N(x · O_w(f_j), σ²)`.
pub fn sample_joint<R: Rng + ?Sized>(config: &CouplingConfig, n: usize, rng: &mut R) -> Result<JointSample> {
    if n == 0 {
        return Err(Error::BadParams("sample size must be at least 1".into()));
    }
    let table = config.outcomes();
    let picker = WeightedIndex::new(&table.probs)
        .map_err(|e| Error::BadParams(format!("outcome distribution: {e}")))?;
    let sigma = config.sigma();
    let x = config.x_true();
    let mut outcomes = Vec::with_capacity(n);
    let mut meter = Vec::with_capacity(n);
    for _ in 0..n {
        let f = picker.sample(rng);
        let shift = x * table.weak_value(f)?;
        let z: f64 = StandardNormal.sample(rng);
        outcomes.push(f);
        meter.push(shift + sigma * z);
    }
    Ok(JointSample { outcomes, meter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8, PI};

    fn theta_state(theta: f64) -> PureState {
        PureState::rotated(2, theta)
    }

    // (cos θ + sin θ) / (cos θ - sin θ) and its reciprocal, from the 2x2 arithmetic.
    fn oracle_weak_values(theta: f64) -> (f64, f64) {
        let (c, s) = (theta.cos(), theta.sin());
        ((c + s) / (c - s), (c - s) / (c + s))
    }

    #[test]
    fn weak_value_examples() {
        let z = Observable::pauli_z();
        let zero = PureState::basis_vector(2, 0);
        let plus = PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_abs_diff_eq!(weak_value(&z, &zero, &zero).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(weak_value(&z, &plus, &plus).unwrap(), 0.0, epsilon = 1e-15);

        let init = theta_state(FRAC_PI_8);
        let minus = PureState::from_real(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap();
        let w = weak_value(&z, &init, &minus).unwrap();
        assert_abs_diff_eq!(w, oracle_weak_values(FRAC_PI_8).0, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 1.0 + 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn weak_value_vector_examples() {
        let z = Observable::pauli_z();
        let zero = PureState::basis_vector(2, 0);
        let pm = OrthonormalBasis::new(vec![
            PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap(),
            PureState::from_real(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap(),
        ])
        .unwrap();
        let v = weak_value_vector(&z, &zero, &pm).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-15);

        let err = weak_value_vector(&z, &zero, &OrthonormalBasis::computational(2)).unwrap_err();
        assert!(matches!(err, Error::DegenerateOverlap { outcome: Some(1), .. }), "{err:?}");
        assert!(err.to_string().starts_with("outcome 2:"));

        let v = weak_value_vector(&z, &theta_state(FRAC_PI_8), &OrthonormalBasis::qubit_minus_plus()).unwrap();
        let (a, b) = oracle_weak_values(FRAC_PI_8);
        assert_abs_diff_eq!(v[0], a, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], b, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 0.414214, epsilon = 1e-6);
    }

    #[test]
    fn complex_weak_value_is_rejected() {
        let z = Observable::pauli_z();
        let h = FRAC_1_SQRT_2;
        let init = PureState::new(DVector::from_vec(vec![C64::new(h, 0.0), C64::new(0.0, h)])).unwrap();
        let fin = PureState::from_real(&[0.6, 0.8]).unwrap();
        assert!(matches!(
            weak_value(&z, &init, &fin),
            Err(Error::ComplexWeakValue { .. })
        ));
    }

    #[test]
    fn outcome_prob_examples() {
        let c = OrthonormalBasis::computational(2);
        let plus = PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let p = outcome_probs(&plus, &c).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_eq!(outcome_probs(&PureState::basis_vector(2, 0), &c).unwrap(), vec![1.0, 0.0]);

        let p = outcome_probs(&theta_state(FRAC_PI_8), &OrthonormalBasis::qubit_minus_plus()).unwrap();
        let (cs, sn) = (FRAC_PI_8.cos(), FRAC_PI_8.sin());
        assert_abs_diff_eq!(p[0], (cs - sn).powi(2) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], (cs + sn).powi(2) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[0], 0.146447, epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 0.853553, epsilon = 1e-6);
    }

    #[test]
    fn expected_o_squared_examples() {
        let z = Observable::pauli_z();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let s = crate::random::random_state(2, &mut rng);
            assert_abs_diff_eq!(expected_o_squared(&s, &z).unwrap(), 1.0, epsilon = 1e-12);
        }
        let o = Observable::from_real_diagonal(&[2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(expected_o_squared(&PureState::basis_vector(2, 0), &o).unwrap(), 4.0);
        let plus = PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_abs_diff_eq!(expected_o_squared(&plus, &o).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn type_invariants() {
        assert!(matches!(
            Observable::from_real_diagonal(&[1.0]),
            Err(Error::InvalidDimension { .. })
        ));
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        );
        assert!(matches!(Observable::new(m), Err(Error::NotHermitian { .. })));
        assert!(matches!(PureState::from_real(&[1.0, 1.0]), Err(Error::NotNormalized { .. })));
        assert!(OrthonormalBasis::new(vec![
            PureState::from_real(&[1.0, 0.0]).unwrap(),
            PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap(),
        ])
        .is_err());
        assert!(MeterSpec::new(0.0).is_err());
    }

    #[test]
    fn first_order_warning_flag() {
        let mk = |x| {
            CouplingConfig::new(
                Observable::pauli_z(),
                theta_state(FRAC_PI_8),
                OrthonormalBasis::qubit_minus_plus(),
                MeterSpec::new(10.0).unwrap(),
                x,
            )
            .unwrap()
        };
        assert!(!mk(0.1).first_order_warning());
        assert_abs_diff_eq!(mk(0.1).weak_regime_ratio(), 0.01, epsilon = 1e-12);
        assert!(mk(2.0).first_order_warning());
    }

    #[test]
    fn first_and_second_moment_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2usize, 3, 4] {
            for _ in 0..20 {
                let o = crate::random::random_real_observable(d, &mut rng);
                let i = crate::random::random_real_state(d, &mut rng);
                let b = crate::random::random_real_basis(d, &mut rng);
                let p = outcome_probs(&i, &b).unwrap();
                let w = weak_value_vector(&o, &i, &b).unwrap();
                let first: f64 = p.iter().zip(&w).map(|(p, w)| p * w).sum();
                let second: f64 = p.iter().zip(&w).map(|(p, w)| p * w * w).sum();
                let mean_o = i.amplitudes().dotc(&(o.matrix() * i.amplitudes())).re;
                assert_abs_diff_eq!(first, mean_o, epsilon = 1e-10);
                assert_abs_diff_eq!(second, expected_o_squared(&i, &o).unwrap(), epsilon = 1e-10);
                assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn weak_value_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = Observable::pauli_z();
        let i = theta_state(0.3);
        let f = PureState::from_real(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap();
        let w = weak_value(&z, &i, &f).unwrap();
        for _ in 0..100 {
            let a: f64 = rng.random_range(0.0..2.0 * PI);
            let b: f64 = rng.random_range(0.0..2.0 * PI);
            assert_abs_diff_eq!(weak_value(&z, &i.with_phase(a), &f).unwrap(), w, epsilon = 1e-10);
            assert_abs_diff_eq!(weak_value(&z, &i, &f.with_phase(b)).unwrap(), w, epsilon = 1e-10);
        }
    }

    #[test]
    fn eigenstate_weak_value_is_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let o = Observable::from_real_diagonal(&[2.0, -0.5, 1.0]).unwrap();
        let i = PureState::basis_vector(3, 1);
        for _ in 0..50 {
            let f = crate::random::random_state(3, &mut rng);
            assert_abs_diff_eq!(weak_value(&o, &i, &f).unwrap(), -0.5, epsilon = 1e-10);
        }
    }

    fn pi8_config(sigma: f64, x: f64) -> CouplingConfig {
        CouplingConfig::new(
            Observable::pauli_z(),
            theta_state(FRAC_PI_8),
            OrthonormalBasis::qubit_minus_plus(),
            MeterSpec::new(sigma).unwrap(),
            x,
        )
        .unwrap()
    }

    #[test]
    fn sample_joint_zero_signal_mean() {
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = sample_joint(&pi8_config(10.0, 0.0), n, &mut rng).unwrap();
        let mean = s.meter.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 * 10.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn sample_joint_single_outcome_basis() {
        let cfg = CouplingConfig::new(
            Observable::pauli_z(),
            PureState::basis_vector(2, 0),
            OrthonormalBasis::computational(2),
            MeterSpec::new(1.0).unwrap(),
            0.5,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_joint(&cfg, 1000, &mut rng).unwrap();
        assert!(s.outcomes.iter().all(|&f| f == 0));
    }

    #[test]
    fn sample_joint_conditional_shift_and_frequencies() {
        let n = 100_000;
        let cfg = pi8_config(10.0, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let s = sample_joint(&cfg, n, &mut rng).unwrap();
        let picked: Vec<f64> = s
            .outcomes
            .iter()
            .zip(&s.meter)
            .filter(|(f, _)| **f == 0)
            .map(|(_, q)| *q)
            .collect();
        let m = picked.len() as f64;
        let mean = picked.iter().sum::<f64>() / m;
        let expected = 0.1 * oracle_weak_values(FRAC_PI_8).0;
        assert!((mean - expected).abs() < 4.0 * 10.0 / m.sqrt(), "mean {mean} vs {expected}");

        let p = &cfg.outcomes().probs;
        let tv: f64 = (0..2)
            .map(|k| (s.outcomes.iter().filter(|&&f| f == k).count() as f64 / n as f64 - p[k]).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 5.0 / (n as f64).sqrt(), "tv {tv}");
    }

    #[test]
    fn sample_joint_is_deterministic() {
        let cfg = pi8_config(1.0, 0.3);
        let a = sample_joint(&cfg, 50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = sample_joint(&cfg, 50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert!(sample_joint(&cfg, 0, &mut ChaCha8Rng::seed_from_u64(4)).is_err());
    }
}
