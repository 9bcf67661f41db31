//! Fisher information on a finite-dimensional system ⊗ meter model.
//!
//! The joint state `|ψ_AB(x)> = exp(-ixH)|i>⊗|φ>` is measured on `A` in the
//! basis `{|f>}`. Conditioning on outcome `f` leaves the meter in
//! `M_f|φ>/√p_f` with Kraus operator `M_f(x) = <f|U(x)|i>`. The information
//! left after the measurement splits into a classical part (from `p_f(x)`) and
//! the probability-weighted conditional quantum informations, and is bounded
//! by the joint quantum Fisher information:
//!
//! ```text
//! p_✓ I_✓ ≤ Σ_f p_f (∂ log p_f)² + Σ_f p_f I_f ≤ I_AB
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::quantum::{max_hermitian_deviation, OrthonormalBasis, PureState, HERMITIAN_TOL};
use crate::{Error, Result, C64};

/// Conditional states with probability at or below this are not evaluated.
pub const P_FLOOR: f64 = 1e-12;

/// Step for central finite-difference cross-checks.
pub const FD_STEP: f64 = 1e-5;

pub const MAX_METER_DIM: usize = 8;

const STATE_NORM_TOL: f64 = 1e-10;

fn minus_i() -> C64 {
    C64::new(0.0, -1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    hamiltonian: DMatrix<C64>,
    initial_a: PureState,
    initial_b: PureState,
    basis_a: OrthonormalBasis,
    x: f64,
}

impl JointModel {
    /// `hamiltonian` acts on `A ⊗ B` with index `a·d_B + b`.
    pub fn new(
        hamiltonian: DMatrix<C64>,
        initial_a: PureState,
        initial_b: PureState,
        basis_a: OrthonormalBasis,
        x: f64,
    ) -> Result<Self> {
        let (da, db) = (initial_a.dim(), initial_b.dim());
        if basis_a.dim() != da {
            return Err(Error::DimensionMismatch(format!(
                "system state has dimension {da} but the basis has {}",
                basis_a.dim()
            )));
        }
        if db > MAX_METER_DIM {
            return Err(Error::BadParams(format!(
                "meter dimension {db} exceeds {MAX_METER_DIM}"
            )));
        }
        if hamiltonian.nrows() != da * db || hamiltonian.ncols() != da * db {
            return Err(Error::DimensionMismatch(format!(
                "hamiltonian is {}x{}, expected {}x{} for d_A = {da}, d_B = {db}",
                hamiltonian.nrows(),
                hamiltonian.ncols(),
                da * db,
                da * db
            )));
        }
        let deviation = max_hermitian_deviation(&hamiltonian);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        if !x.is_finite() {
            return Err(Error::BadParams(format!("x must be finite, got {x}")));
        }
        Ok(Self {
            hamiltonian,
            initial_a,
            initial_b,
            basis_a,
            x,
        })
    }

    pub fn at(&self, x: f64) -> Self {
        Self { x, ..self.clone() }
    }

    pub fn dim_a(&self) -> usize {
        self.initial_a.dim()
    }

    pub fn dim_b(&self) -> usize {
        self.initial_b.dim()
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn hamiltonian(&self) -> &DMatrix<C64> {
        &self.hamiltonian
    }

    pub fn initial_a(&self) -> &PureState {
        &self.initial_a
    }

    pub fn initial_b(&self) -> &PureState {
        &self.initial_b
    }

    pub fn basis_a(&self) -> &OrthonormalBasis {
        &self.basis_a
    }

    /// `|i> ⊗ |φ>`.
    pub fn product_state(&self) -> DVector<C64> {
        self.initial_a.amplitudes().kronecker(self.initial_b.amplitudes())
    }

    /// `exp(-ixH)`.
    pub fn unitary(&self) -> DMatrix<C64> {
        (&self.hamiltonian * C64::new(0.0, -self.x)).exp()
    }
}

/// Evolved joint state and its analytic `x`-derivative `-iH|ψ>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub state: PureState,
    pub derivative: DVector<C64>,
}

pub fn evolve_joint(model: &JointModel) -> Evolution {
    let psi = model.unitary() * model.product_state();
    let derivative = (model.hamiltonian() * &psi) * minus_i();
    Evolution {
        state: PureState::normalized(psi).expect("unitary evolution of a unit vector"),
        derivative,
    }
}

/// `4(<∂ψ|∂ψ> - |<∂ψ|ψ>|²)`.
pub fn qfi_pure(state: &DVector<C64>, derivative: &DVector<C64>) -> Result<f64> {
    let norm = state.norm();
    if (norm - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    if state.len() != derivative.len() {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} with derivative of length {}",
            state.len(),
            derivative.len()
        )));
    }
    Ok(4.0 * (derivative.norm_squared() - derivative.dotc(state).norm_sqr()))
}

/// `M_f`, `∂_x M_f` and `p_f = <φ|M_f†M_f|φ>` for one system outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausTerm {
    pub m: DMatrix<C64>,
    pub dm: DMatrix<C64>,
    pub p: f64,
}

/// `(<f| ⊗ 1) G (|i> ⊗ 1)` as a `d_B × d_B` block.
fn partial_element(g: &DMatrix<C64>, f: &PureState, i: &PureState, db: usize) -> DMatrix<C64> {
    let da = f.dim();
    let mut out = DMatrix::zeros(db, db);
    for a_out in 0..da {
        let fa = f.amplitudes()[a_out].conj();
        if fa == C64::new(0.0, 0.0) {
            continue;
        }
        for a_in in 0..da {
            let coeff = fa * i.amplitudes()[a_in];
            if coeff == C64::new(0.0, 0.0) {
                continue;
            }
            let block = g.view((a_out * db, a_in * db), (db, db));
            out += block * coeff;
        }
    }
    out
}

pub fn kraus_family(model: &JointModel) -> Vec<KrausTerm> {
    let db = model.dim_b();
    let u = model.unitary();
    let du = (model.hamiltonian() * &u) * minus_i();
    let phi = model.initial_b().amplitudes();
    model
        .basis_a()
        .vectors()
        .iter()
        .map(|f| {
            let m = partial_element(&u, f, model.initial_a(), db);
            let dm = partial_element(&du, f, model.initial_a(), db);
            let p = (&m * phi).norm_squared();
            KrausTerm { m, dm, p }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalQfi {
    pub info: f64,
    pub prob: f64,
}

/// QFI of the post-selected meter state from the Kraus operator alone:
/// `4(<φ|∂M†∂M|φ>/p - |<φ|∂M†M|φ>|²/p²)`.
pub fn postselected_qfi(m: &DMatrix<C64>, dm: &DMatrix<C64>, phi: &PureState) -> Result<ConditionalQfi> {
    let m_phi = m * phi.amplitudes();
    let dm_phi = dm * phi.amplitudes();
    let p = m_phi.norm_squared();
    if p <= P_FLOOR {
        return Err(Error::NegligibleProbability { outcome: None, p });
    }
    let cross = m_phi.dotc(&dm_phi).norm_sqr();
    Ok(ConditionalQfi {
        info: 4.0 * (dm_phi.norm_squared() / p - cross / (p * p)),
        prob: p,
    })
}

/// Normalized post-selected state `M|φ>/√p` and its quotient-rule derivative.
pub fn conditional_state(m: &DMatrix<C64>, dm: &DMatrix<C64>, phi: &PureState) -> Result<Evolution> {
    let m_phi = m * phi.amplitudes();
    let dm_phi = dm * phi.amplitudes();
    let p = m_phi.norm_squared();
    if p <= P_FLOOR {
        return Err(Error::NegligibleProbability { outcome: None, p });
    }
    let sqrt_p = p.sqrt();
    let dp = 2.0 * m_phi.dotc(&dm_phi).re;
    let derivative = &dm_phi / C64::new(sqrt_p, 0.0) - &m_phi * C64::new(dp / (2.0 * p * sqrt_p), 0.0);
    Ok(Evolution {
        state: PureState::normalized(m_phi)?,
        derivative,
    })
}

/// What to do with outcomes whose probability is at or below [`P_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegligiblePolicy {
    /// Drop them from every sum and record their mass.
    #[default]
    Exclude,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiReport {
    pub x: f64,
    /// Joint pure-state QFI.
    pub i_ab: f64,
    pub p_f: Vec<f64>,
    /// Conditional QFI per outcome; 0 for excluded outcomes.
    pub i_cond: Vec<f64>,
    /// Classical FI of `p_f(x)`.
    pub i_classical: f64,
    /// QFI of the post-measurement state: `i_classical + Σ p_f i_cond`.
    pub i_rho: f64,
    pub excluded: Vec<usize>,
    pub excluded_mass: f64,
}

impl QfiReport {
    /// `p_✓ I_✓ ≤ I_AB` for every outcome.
    pub fn postselection_bound_holds(&self, slack: f64) -> bool {
        self.p_f
            .iter()
            .zip(&self.i_cond)
            .all(|(p, i)| p * i <= self.i_ab + slack)
    }

    /// `p_✓ I_✓ ≤ I_ρ ≤ I_AB` for every outcome.
    pub fn chain_holds(&self, slack: f64) -> bool {
        self.i_rho <= self.i_ab + slack
            && self
                .p_f
                .iter()
                .zip(&self.i_cond)
                .all(|(p, i)| p * i <= self.i_rho + slack)
    }
}

pub fn fi_decomposition(model: &JointModel, policy: NegligiblePolicy) -> Result<QfiReport> {
    let evolved = evolve_joint(model);
    let i_ab = qfi_pure(evolved.state.amplitudes(), &evolved.derivative)?;
    let phi = model.initial_b();

    let terms = kraus_family(model);
    let mut p_f = Vec::with_capacity(terms.len());
    let mut i_cond = Vec::with_capacity(terms.len());
    let mut excluded = Vec::new();
    let mut excluded_mass = 0.0;
    let mut i_classical = 0.0;
    let mut weighted = 0.0;
    for (k, term) in terms.iter().enumerate() {
        p_f.push(term.p);
        match postselected_qfi(&term.m, &term.dm, phi) {
            Ok(c) => {
                let m_phi = &term.m * phi.amplitudes();
                let dm_phi = &term.dm * phi.amplitudes();
                let dp = 2.0 * m_phi.dotc(&dm_phi).re;
                i_classical += dp * dp / c.prob;
                weighted += c.prob * c.info;
                i_cond.push(c.info);
            }
            Err(e @ Error::NegligibleProbability { .. }) => {
                if policy == NegligiblePolicy::Reject {
                    return Err(e.at_outcome(k));
                }
                excluded.push(k);
                excluded_mass += term.p;
                i_cond.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(QfiReport {
        x: model.x(),
        i_ab,
        p_f,
        i_cond,
        i_classical,
        i_rho: i_classical + weighted,
        excluded,
        excluded_mass,
    })
}

/// `exp(-n p δ² / (2 + δ))`, an upper bound on `Pr[X ≥ (1 + δ) n p]` for
/// `X ~ Binomial(n, p)`.
pub fn chernoff_bound(n: usize, p_check: f64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::BadParams("n must be at least 1".into()));
    }
    if !(p_check > 0.0 && p_check <= 1.0) {
        return Err(Error::BadParams(format!("probability must lie in (0, 1], got {p_check}")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::BadParams(format!("delta must be >= 0, got {delta}")));
    }
    Ok((-(n as f64) * p_check * delta * delta / (2.0 + delta)).exp())
}
