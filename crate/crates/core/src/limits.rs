//! The logarithmic-class limit law `X_{kappa,c}` of `T_n / n`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::indep_process::TiltedParams;
use crate::numeric::{integrate, ln_gamma};
use crate::sampler::{sample_t_values, RngState};
use crate::structures::StructureSpec;
use crate::sumdist::prob_t_eq_n;

pub const EULER_GAMMA: f64 = 0.5772156649015329;

const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitLaw {
    pub kappa: f64,
    pub c: f64,
}

/// `int_0^1 (1 - e^{-s x}) e^{-c x} / x dx`.
fn laplace_exponent(s: f64, c: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let f = |x: f64| {
        if x == 0.0 {
            s
        } else {
            -(-s * x).exp_m1() / x * (-c * x).exp()
        }
    };
    Ok(integrate(f, 0.0, 1.0, QUAD_TOL)?.value)
}

impl LimitLaw {
    pub fn new(kappa: f64, c: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        if !c.is_finite() {
            return Err(Error::Domain(format!("c must be finite, got {c}")));
        }
        Ok(LimitLaw { kappa, c })
    }

    /// The law matching a logarithmic spec at given `n` and parameters:
    /// `kappa theta` and `c` from `x = e^{-c/n} / y`.
    pub fn for_spec(spec: &StructureSpec, n: usize, params: &TiltedParams) -> Result<Self> {
        let meta = spec
            .meta
            .ok_or_else(|| Error::Domain(format!("{} has no logarithmic metadata", spec.name)))?;
        let c = -(n as f64) * (params.x * meta.y).ln();
        LimitLaw::new(meta.kappa * params.theta, c)
    }

    /// `psi(s) = E e^{-s X_kappa}`.
    pub fn psi(&self, s: f64) -> Result<f64> {
        Ok((-self.kappa * laplace_exponent(s, 0.0)?).exp())
    }

    /// `psi_c(s) = E e^{-s X_{kappa,c}}`.
    pub fn laplace_psi(&self, s: f64) -> Result<f64> {
        if s < 0.0 {
            return Err(Error::Domain(format!("Laplace argument must be >= 0, got {s}")));
        }
        Ok((-self.kappa * laplace_exponent(s, self.c)?).exp())
    }

    /// `g_c(z)` without the `[0, 1]` check (the formula itself extends).
    pub fn density_closed_form(&self, z: f64) -> Result<f64> {
        let k = self.kappa;
        let ln_norm = -EULER_GAMMA * k - ln_gamma(k) - self.psi(self.c)?.ln();
        let power = if k == 1.0 { 0.0 } else { (k - 1.0) * z.ln() };
        Ok((ln_norm - self.c * z + power).exp())
    }

    /// Density of `X_{kappa,c}` on `[0, 1]`.
    pub fn density(&self, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain(format!("density is explicit only on [0, 1], got z = {z}")));
        }
        self.density_closed_form(z)
    }

    /// `P(X_{kappa,c} <= z)` for `z` in `[0, 1]`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain(format!("cdf is explicit only on [0, 1], got z = {z}")));
        }
        if z == 0.0 {
            return Ok(0.0);
        }
        let k = self.kappa;
        let mut sum = 0.0;
        let mut term = 1.0; // (-c z)^j / j!
        for j in 0..400 {
            let add = term / (j as f64 + k);
            sum += add;
            if j > 5 && add.abs() < 1e-17 * sum.abs() {
                break;
            }
            term *= -self.c * z / (j as f64 + 1.0);
        }
        let ln_norm = -EULER_GAMMA * k - ln_gamma(k) - self.psi(self.c)?.ln();
        Ok(ln_norm.exp() * z.powf(k) * sum)
    }

    /// `E X_{kappa,c} = kappa (1 - e^{-c}) / c`.
    pub fn mean(&self) -> f64 {
        if self.c == 0.0 {
            self.kappa
        } else {
            self.kappa * -(-self.c).exp_m1() / self.c
        }
    }

    /// `g_c'(1-) / g_c(1) = kappa - 1 - c`.
    pub fn log_derivative_at_one(&self) -> f64 {
        self.kappa - 1.0 - self.c
    }
}

/// Local and global comparison of `T_n / n` with the limit law.
#[derive(Debug, Clone)]
pub struct LimitCheck {
    pub law: LimitLaw,
    /// `n P_theta(T_n = n)`.
    pub n_prob_t: f64,
    /// `g_c(1)`.
    pub predicted: f64,
    pub rel_gap: f64,
    /// `(z, empirical P(T_n/n <= z), limit cdf)` rows, when sampled.
    pub cdf_rows: Vec<(f64, f64, f64)>,
}

pub fn limit_law_check<R: Rng + ?Sized>(
    spec: &StructureSpec,
    n: usize,
    params: &TiltedParams,
    sampled: Option<(usize, &mut R)>,
) -> Result<LimitCheck> {
    let law = LimitLaw::for_spec(spec, n, params)?;
    let n_prob_t = n as f64 * prob_t_eq_n(spec, n, params)?.recursion();
    let predicted = law.density(1.0)?;
    let mut cdf_rows = Vec::new();
    if let Some((count, rng)) = sampled {
        let mut t = sample_t_values(spec, n, params, count, rng)?;
        t.sort_unstable();
        for z in [0.25, 0.5, 0.75, 1.0] {
            let cut = (z * n as f64).floor() as u64;
            let below = t.partition_point(|&v| v <= cut);
            cdf_rows.push((z, below as f64 / count as f64, law.cdf(z)?));
        }
    }
    Ok(LimitCheck { law, n_prob_t, predicted, rel_gap: (n_prob_t / predicted - 1.0).abs(), cdf_rows })
}

/// Convenience wrapper seeding the empirical part from an [`RngState`]; no
/// sampling when `samples` is zero.
pub fn limit_law_check_seeded(
    spec: &StructureSpec,
    n: usize,
    params: &TiltedParams,
    samples: usize,
    state: RngState,
) -> Result<LimitCheck> {
    let mut rng = state.rng();
    let sampled = (samples > 0).then_some((samples, &mut rng));
    limit_law_check(spec, n, params, sampled)
}
