//! Fixed-support positive-definiteness repair by linear shrinkage.
//!
//! Given a symmetric estimate `m` whose smallest eigenvalue `gamma_1` falls
//! below a cut-point `epsilon`, the repair returns
//!
//! ```text
//! Phi(m) = alpha * m + (1 - alpha) * mu * I,   alpha = (mu - epsilon) / (mu - gamma_1)
//! ```
//!
//! which lifts the smallest eigenvalue to exactly `epsilon`, leaves every
//! off-diagonal zero in place and only rescales the nonzeros. The target `mu`
//! is picked to minimize the distance to `m`:
//!
//! * `mu_S = max(epsilon, (gamma_1 + gamma_p) / 2)` makes the spectral
//!   distance equal to its floor `epsilon - gamma_1`;
//! * `mu_F = gamma_1 + sum t_i^2 / sum t_i` with `t_i = gamma_i - gamma_1`
//!   minimizes the scaled Frobenius distance;
//! * `mu_SF = max(mu_S, mu_F)` keeps the spectral distance minimal while
//!   staying as close as possible in Frobenius norm;
//! * `mu = inf` degenerates into the diagonal shift `m + (epsilon - gamma_1) I`.
//!
//! The procedure works on any symmetric input, covariance or precision.

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, extreme_eigen, norm, NormKind, SpectralSummary, SymmetricMatrix, Which};

/// Default PD cut-point.
pub const DEFAULT_EPSILON: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuChoice {
    Spectral,
    Frobenius,
    SpectralFrobenius,
    Explicit(f64),
    Infinite,
}

impl std::str::FromStr for MuChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" | "mu_s" => Ok(MuChoice::Spectral),
            "f" | "mu_f" => Ok(MuChoice::Frobenius),
            "sf" | "mu_sf" => Ok(MuChoice::SpectralFrobenius),
            "inf" | "infinite" | "infinity" => Ok(MuChoice::Infinite),
            other => other
                .parse::<f64>()
                .map(MuChoice::Explicit)
                .map_err(|_| Error::Config(format!("unknown mu choice '{s}' (expected sf, s, f, inf or a number)"))),
        }
    }
}

/// Which rule produced the plan's `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuRule {
    MuS,
    MuF,
    MuSF,
    Explicit,
    Infinite,
}

impl MuRule {
    pub fn label(self) -> &'static str {
        match self {
            MuRule::MuS => "mu_S",
            MuRule::MuF => "mu_F",
            MuRule::MuSF => "mu_SF",
            MuRule::Explicit => "explicit",
            MuRule::Infinite => "infinite",
        }
    }
}

/// Everything needed to reproduce a repair.
#[derive(Debug, Clone, PartialEq)]
pub struct FspdPlan {
    pub epsilon: f64,
    /// `f64::INFINITY` for the shift sentinel.
    pub mu: f64,
    pub mu_rule: MuRule,
    pub alpha: f64,
    pub repaired: bool,
    pub gamma_min: f64,
    /// `mu_F` was undefined (input proportional to the identity) and `mu_S`
    /// was used in its place.
    pub mu_f_fallback: bool,
}

impl FspdPlan {
    /// Amount added to the smallest eigenvalue, `(epsilon - gamma_1)_+`.
    pub fn lift(&self) -> f64 {
        (self.epsilon - self.gamma_min).max(0.0)
    }
}

/// Outcome of the closed-form shrinkage weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaStar {
    /// `gamma_min >= epsilon`; nothing to repair.
    AlreadyPd,
    Shrink(f64),
}

/// `alpha* = (mu - epsilon) / (mu - gamma_min)`, with the limit `1` for
/// `mu = inf`.
pub fn alpha_star(gamma_min: f64, epsilon: f64, mu: f64) -> Result<AlphaStar> {
    if gamma_min >= epsilon {
        return Ok(AlphaStar::AlreadyPd);
    }
    if mu.is_nan() || mu < epsilon {
        return Err(Error::Config(format!("mu = {mu} must be at least epsilon = {epsilon}")));
    }
    if mu.is_infinite() {
        return Ok(AlphaStar::Shrink(1.0));
    }
    Ok(AlphaStar::Shrink(((mu - epsilon) / (mu - gamma_min)).clamp(0.0, 1.0)))
}

/// `max(epsilon, (gamma_min + gamma_max) / 2)`.
pub fn mu_spectral(summary: &SpectralSummary, epsilon: f64) -> f64 {
    epsilon.max(0.5 * (summary.gamma_max + summary.gamma_min))
}

/// Minimizer over `mu >= epsilon` of the scaled Frobenius distance
/// `(epsilon - gamma_1) / (mu - gamma_1) * ||mu I - m||_F`.
///
/// The unconstrained minimizer is `gamma_1 + sum t_i^2 / sum t_i` with
/// `t_i = gamma_i - gamma_1`; the objective is unimodal in `mu`, so values
/// below `epsilon` clamp to `epsilon`. `eigenvalues` must be ascending.
pub fn mu_frobenius(eigenvalues: &[f64], epsilon: f64) -> Result<f64> {
    let g1 = *eigenvalues.first().ok_or_else(|| Error::Dimension("empty spectrum".into()))?;
    let (mut st, mut st2) = (0.0, 0.0);
    for &g in eigenvalues {
        let t = g - g1;
        st += t;
        st2 += t * t;
    }
    if !(st > 0.0) || !(st2 > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(epsilon.max(g1 + st2 / st))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSf {
    pub mu: f64,
    /// `mu_F` was degenerate and `mu_S` alone was used.
    pub mu_f_fallback: bool,
}

/// `max(mu_S, mu_F)`, falling back to `mu_S` when `mu_F` is undefined.
pub fn mu_sf(summary: &SpectralSummary, eigenvalues: &[f64], epsilon: f64) -> MuSf {
    let mu_s = mu_spectral(summary, epsilon);
    match mu_frobenius(eigenvalues, epsilon) {
        Ok(mu_f) => MuSf { mu: mu_s.max(mu_f), mu_f_fallback: false },
        Err(_) => MuSf { mu: mu_s, mu_f_fallback: true },
    }
}

/// Repairs `m` so that its smallest eigenvalue is at least `epsilon`.
///
/// `mu_F` and `mu_SF` need the whole spectrum and run the dense eigenvalue
/// solver; `mu_S`, explicit and infinite targets only need the extreme
/// eigenvalues and use the Krylov path.
pub fn fspd_apply(m: &SymmetricMatrix, epsilon: f64, choice: MuChoice) -> Result<(SymmetricMatrix, FspdPlan)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    if let MuChoice::Explicit(mu) = choice {
        if !(mu >= epsilon) || !mu.is_finite() {
            return Err(Error::Config(format!("explicit mu = {mu} must be finite and at least epsilon = {epsilon}")));
        }
    }

    let spectrum = match choice {
        MuChoice::Frobenius | MuChoice::SpectralFrobenius => Some(eigenvalues(m)?),
        _ => None,
    };
    let (gamma_min, gamma_max) = match &spectrum {
        Some(v) => (v[0], v[v.len() - 1]),
        None => {
            let which = if choice == MuChoice::Spectral { Which::Both } else { Which::Smallest };
            let ex = extreme_eigen(m, which)?;
            (ex.smallest.expect("requested"), ex.largest.unwrap_or(f64::NAN))
        }
    };

    let mut plan = FspdPlan {
        epsilon,
        mu: f64::NAN,
        mu_rule: MuRule::Infinite,
        alpha: 1.0,
        repaired: false,
        gamma_min,
        mu_f_fallback: false,
    };
    if gamma_min >= epsilon {
        // Nothing to do; the plan still records which rule was asked for.
        plan.mu_rule = rule_of(choice);
        plan.mu = match choice {
            MuChoice::Explicit(mu) => mu,
            MuChoice::Infinite => f64::INFINITY,
            _ => f64::NAN,
        };
        return Ok((m.clone(), plan));
    }

    // Only extremes are needed for mu_S; mean and variance are unused.
    let summary = SpectralSummary { gamma_min, gamma_max, gamma_mean: f64::NAN, gamma_var: f64::NAN };
    let (mu, rule) = match choice {
        MuChoice::Spectral => (mu_spectral(&summary, epsilon), MuRule::MuS),
        MuChoice::Frobenius => {
            let spec = spectrum.as_deref().expect("computed above");
            match mu_frobenius(spec, epsilon) {
                Ok(mu) => (mu, MuRule::MuF),
                Err(Error::DegenerateSpectrum) => {
                    plan.mu_f_fallback = true;
                    (mu_spectral(&summary, epsilon), MuRule::MuS)
                }
                Err(e) => return Err(e),
            }
        }
        MuChoice::SpectralFrobenius => {
            let r = mu_sf(&summary, spectrum.as_deref().expect("computed above"), epsilon);
            plan.mu_f_fallback = r.mu_f_fallback;
            (r.mu, MuRule::MuSF)
        }
        MuChoice::Explicit(mu) => (mu, MuRule::Explicit),
        MuChoice::Infinite => (f64::INFINITY, MuRule::Infinite),
    };
    plan.mu = mu;
    plan.mu_rule = rule;
    plan.repaired = true;

    let out = if mu.is_infinite() {
        plan.alpha = 1.0;
        m.scale_and_shift(1.0, epsilon - gamma_min)?
    } else {
        let alpha = match alpha_star(gamma_min, epsilon, mu)? {
            AlphaStar::Shrink(a) => a,
            AlphaStar::AlreadyPd => unreachable!("gamma_min < epsilon checked above"),
        };
        plan.alpha = alpha;
        m.scale_and_shift(alpha, (1.0 - alpha) * mu)?
    };
    Ok((out, plan))
}

fn rule_of(choice: MuChoice) -> MuRule {
    match choice {
        MuChoice::Spectral => MuRule::MuS,
        MuChoice::Frobenius => MuRule::MuF,
        MuChoice::SpectralFrobenius => MuRule::MuSF,
        MuChoice::Explicit(_) => MuRule::Explicit,
        MuChoice::Infinite => MuRule::Infinite,
    }
}

/// `||Phi(m) - m||` reconstructed from the plan: `(1 - alpha)(mu I - m)`,
/// or `(epsilon - gamma_1) I` for the shift.
pub fn distance_to_input(plan: &FspdPlan, m: &SymmetricMatrix, kind: NormKind) -> Result<f64> {
    if !plan.repaired {
        return Ok(0.0);
    }
    let diff = if plan.mu.is_infinite() {
        SymmetricMatrix::identity(m.dim()).scale_and_shift(plan.lift(), 0.0)?
    } else {
        let w = 1.0 - plan.alpha;
        m.scale_and_shift(-w, w * plan.mu)?
    };
    norm(&diff, kind)
}

/// Class of repaired matrices a distance floor refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloorClass {
    /// `alpha m + (1 - alpha) mu I` with the PD constraint.
    LinearShrinkage,
    /// Every matrix with smallest eigenvalue at least `epsilon`.
    PositiveDefinite,
}

/// Smallest achievable `||Phi - m||` over `class`, from the ascending
/// spectrum of `m`. Only the spectral and scaled Frobenius norms have
/// closed forms.
pub fn distance_floor(eigenvalues: &[f64], epsilon: f64, kind: NormKind, class: FloorClass) -> Result<f64> {
    let g1 = *eigenvalues.first().ok_or_else(|| Error::Dimension("empty spectrum".into()))?;
    let lift = (epsilon - g1).max(0.0);
    if lift == 0.0 {
        return Ok(0.0);
    }
    let p = eigenvalues.len() as f64;
    match (kind, class) {
        (NormKind::Spectral, _) => Ok(lift),
        (NormKind::FrobeniusScaled, FloorClass::LinearShrinkage) => {
            let mean = eigenvalues.iter().sum::<f64>() / p;
            let centered: f64 = eigenvalues.iter().map(|g| (g - mean).powi(2)).sum();
            let shifted: f64 = eigenvalues.iter().map(|g| (g - g1).powi(2)).sum();
            if shifted == 0.0 {
                // m = cI: every admissible plan moves all eigenvalues by the lift.
                return Ok(lift);
            }
            Ok(lift * (centered / shifted).sqrt())
        }
        (NormKind::FrobeniusScaled, FloorClass::PositiveDefinite) => {
            let s: f64 = eigenvalues.iter().map(|g| (epsilon - g).max(0.0).powi(2)).sum();
            Ok((s / p).sqrt())
        }
        (other, _) => Err(Error::Config(format!("no closed-form distance floor for the {} norm", other.label()))),
    }
}
