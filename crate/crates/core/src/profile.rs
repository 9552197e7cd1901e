//! Double-well potential, optimal profile θ₀, surface tension σ and the
//! cutoff ζ used to glue the profile onto the pure phases.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of sample points used for the sampled well checks.
const WELL_CHECK_SAMPLES: usize = 2001;

/// Default half-width of the profile table in the stretched coordinate.
pub const DEFAULT_Z_MAX: f64 = 12.0;
/// Default number of table samples (spacing 0.002 on `[-12, 12]`).
pub const DEFAULT_SAMPLES: usize = 12_001;
/// Tolerance on the profile ODE residual.
pub const PROFILE_RESIDUAL_TOL: f64 = 1e-8;

/// Smooth double-well potential with global minima at ±1.
#[derive(Clone)]
pub struct DoubleWell {
    potential: ScalarFn,
    f: ScalarFn,
    f_prime: ScalarFn,
    name: String,
}

impl fmt::Debug for DoubleWell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DoubleWell").field("name", &self.name).finish()
    }
}

impl DoubleWell {
    /// `F(c) = (1 − c²)²`, `f(c) = 4c³ − 4c`, `f'(c) = 12c² − 4`.
    pub fn quartic() -> Self {
        Self {
            potential: Arc::new(|c| {
                let a = 1.0 - c * c;
                a * a
            }),
            f: Arc::new(|c| 4.0 * c * (c * c - 1.0)),
            f_prime: Arc::new(|c| 12.0 * c * c - 4.0),
            name: "quartic".into(),
        }
    }

    /// Build a well from `F`, `f = F'` and `f'`, checking the well conditions on
    /// a sampled grid.
    pub fn new<P, D, S>(name: &str, potential: P, f: D, f_prime: S) -> Result<Self>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let well = Self {
            potential: Arc::new(potential),
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            name: name.to_string(),
        };
        well.validate()?;
        Ok(well)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn potential(&self, c: f64) -> f64 {
        (self.potential)(c)
    }

    pub fn f(&self, c: f64) -> f64 {
        (self.f)(c)
    }

    pub fn f_prime(&self, c: f64) -> f64 {
        (self.f_prime)(c)
    }

    /// Check `f(±1) = 0`, `f'(±1) > 0`, `F ≥ 0` with `F(±1) = 0`, and positivity
    /// of `∫_{-1}^u f` on the interior.
    pub fn validate(&self) -> Result<()> {
        for w in [-1.0, 1.0] {
            if self.f(w).abs() > 1e-12 {
                return Err(Error::InvalidWell(format!("f({w}) = {} != 0", self.f(w))));
            }
            if self.f_prime(w) <= 0.0 {
                return Err(Error::InvalidWell(format!("f'({w}) = {} <= 0", self.f_prime(w))));
            }
            if self.potential(w).abs() > 1e-12 {
                return Err(Error::InvalidWell(format!("F({w}) != 0")));
            }
        }
        let n = WELL_CHECK_SAMPLES;
        let dc = 2.0 / (n - 1) as f64;
        let mut integral = 0.0;
        let mut prev = self.f(-1.0);
        for k in 1..n {
            let c = -1.0 + k as f64 * dc;
            let fc = self.f(c);
            let pot = self.potential(c);
            if pot < -1e-14 {
                return Err(Error::InvalidWell(format!("F({c}) = {pot} < 0")));
            }
            integral += 0.5 * dc * (prev + fc);
            prev = fc;
            if k < n - 1 && integral <= 0.0 {
                return Err(Error::InvalidWell(format!(
                    "∫_(-1)^{c} f = {integral} is not positive"
                )));
            }
        }
        Ok(())
    }

    /// `max |f'|` on `[-1, 1]`, sampled.
    pub fn lipschitz(&self) -> f64 {
        let n = WELL_CHECK_SAMPLES;
        (0..n)
            .map(|k| self.f_prime(-1.0 + 2.0 * k as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Whether `F(-c) = F(c)` on a sampled grid.
    pub fn is_symmetric(&self) -> bool {
        (0..WELL_CHECK_SAMPLES).all(|k| {
            let c = k as f64 / (WELL_CHECK_SAMPLES - 1) as f64;
            (self.potential(c) - self.potential(-c)).abs() <= 1e-14
        })
    }

    /// Right-hand side of the first integral `θ₀' = sqrt(2 F(θ₀))`.
    fn slope(&self, c: f64) -> f64 {
        (2.0 * self.potential(c).max(0.0)).sqrt()
    }
}

/// Tabulated optimal profile θ₀ with `θ₀(0) = 0`, `θ₀(±∞) = ±1`.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    z_min: f64,
    dz: f64,
    theta0: Vec<f64>,
    theta0_prime: Vec<f64>,
    /// Surface tension `½∫(θ₀')²`.
    pub sigma: f64,
    /// Max residual of `−θ₀'' + f(θ₀)` measured on the table interior.
    pub residual: f64,
    well: DoubleWell,
}

/// Tabulate θ₀ on `[-z_max, z_max]` by integrating the first integral
/// `θ₀' = sqrt(2F(θ₀))` from `θ₀(0) = 0` in both directions.
///
/// `n_samples` is rounded up to an odd count so that `z = 0` is a node.
pub fn build_profile(well: &DoubleWell, z_max: f64, n_samples: usize) -> Result<ProfileTable> {
    well.validate()?;
    if !(z_max > 0.0) {
        return Err(Error::InvalidInput(format!("z_max must be positive, got {z_max}")));
    }
    if n_samples < 64 {
        return Err(Error::TooFewSamples { needed: 64, got: n_samples });
    }
    let n = n_samples | 1;
    let half = n / 2;
    let dz = z_max / half as f64;
    const SUBSTEPS: usize = 8;
    let step = dz / SUBSTEPS as f64;

    let rk4 = |c: f64, h: f64| {
        let k1 = well.slope(c);
        let k2 = well.slope(c + 0.5 * h * k1);
        let k3 = well.slope(c + 0.5 * h * k2);
        let k4 = well.slope(c + h * k3);
        c + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };

    let mut theta0 = vec![0.0; n];
    for (dir, sign) in [(1isize, 1.0), (-1isize, -1.0)] {
        let mut c = 0.0;
        for k in 1..=half {
            for _ in 0..SUBSTEPS {
                c = rk4(c, sign * step);
            }
            let idx = (half as isize + dir * k as isize) as usize;
            theta0[idx] = c;
        }
    }
    let theta0_prime: Vec<f64> = theta0.iter().map(|&c| well.slope(c)).collect();

    // Fourth-order centered second difference; the 3-point stencil cannot
    // reach 1e-8 in double precision (roundoff/truncation floor ≈ 3.6e-8).
    let mut residual: f64 = 0.0;
    for i in 2..n - 2 {
        let d2 = (-theta0[i + 2] + 16.0 * theta0[i + 1] - 30.0 * theta0[i] + 16.0 * theta0[i - 1]
            - theta0[i - 2])
            / (12.0 * dz * dz);
        residual = residual.max((-d2 + well.f(theta0[i])).abs());
    }
    if !(residual <= PROFILE_RESIDUAL_TOL) {
        return Err(Error::ProfileResidual { residual, tolerance: PROFILE_RESIDUAL_TOL });
    }

    let mut table = ProfileTable {
        z_min: -z_max,
        dz,
        theta0,
        theta0_prime,
        sigma: 0.0,
        residual,
        well: well.clone(),
    };
    table.sigma = surface_tension(&table)?;
    Ok(table)
}

/// `σ = ½ ∫ (θ₀')² dz` by the composite trapezoid rule over the table.
pub fn surface_tension(p: &ProfileTable) -> Result<f64> {
    let n = p.theta0_prime.len();
    let mut s = 0.0;
    for (i, d) in p.theta0_prime.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        s += w * d * d;
    }
    let sigma = 0.5 * s * p.dz;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::DegenerateProfile(format!("σ = {sigma}")));
    }
    Ok(sigma)
}

impl ProfileTable {
    /// Quartic well on `[-12, 12]` with the default sampling.
    pub fn quartic_default() -> Self {
        build_profile(&DoubleWell::quartic(), DEFAULT_Z_MAX, DEFAULT_SAMPLES)
            .expect("default quartic profile is valid")
    }

    pub fn well(&self) -> &DoubleWell {
        &self.well
    }

    pub fn z_max(&self) -> f64 {
        -self.z_min
    }

    pub fn len(&self) -> usize {
        self.theta0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta0.is_empty()
    }

    /// Table abscissae.
    pub fn z_grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.z_min + i as f64 * self.dz)
    }

    pub fn theta0_samples(&self) -> &[f64] {
        &self.theta0
    }

    pub fn theta0_prime_samples(&self) -> &[f64] {
        &self.theta0_prime
    }

    /// θ₀(z) by cubic Hermite interpolation; exactly ±1 beyond the table.
    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        let s = (z - self.z_min) / self.dz;
        if s <= 0.0 {
            return -1.0;
        }
        let last = self.theta0.len() - 1;
        if s >= last as f64 {
            return 1.0;
        }
        let i = s as usize;
        let t = s - i as f64;
        let (y0, y1) = (self.theta0[i], self.theta0[i + 1]);
        let (m0, m1) = (self.theta0_prime[i] * self.dz, self.theta0_prime[i + 1] * self.dz);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// θ₀'(z) from the first integral.
    pub fn derivative(&self, z: f64) -> f64 {
        if z.abs() >= self.z_max() {
            return 0.0;
        }
        self.well.slope(self.value(z))
    }

    /// θ₀''(z) = f(θ₀(z)).
    pub fn second_derivative(&self, z: f64) -> f64 {
        if z.abs() >= self.z_max() {
            return 0.0;
        }
        self.well.f(self.value(z))
    }

    /// Write the table as CSV with columns `z, theta0, dtheta0`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["z", "theta0", "dtheta0"])?;
        for (i, z) in self.z_grid().enumerate() {
            wtr.write_record([
                z.to_string(),
                self.theta0[i].to_string(),
                self.theta0_prime[i].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Smooth cutoff: 1 on `|z| < 1/2`, 0 on `|z| > 1`, quintic smoothstep between.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cutoff;

impl Cutoff {
    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        let a = z.abs();
        if a <= 0.5 {
            1.0
        } else if a >= 1.0 {
            0.0
        } else {
            let s = 2.0 * (a - 0.5);
            1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let a = z.abs();
        if a <= 0.5 || a >= 1.0 {
            return 0.0;
        }
        let s = 2.0 * (a - 0.5);
        let ds = 30.0 * s * s * (1.0 - s) * (1.0 - s);
        -2.0 * ds * z.signum()
    }
}

/// Free-function form of [`Cutoff::value`].
pub fn cutoff_value(c: &Cutoff, z: f64) -> f64 {
    c.value(z)
}

/// Layered order parameter from a level-set value `d`:
/// `ζ(d/δ) θ₀(d/ε) + (1 − ζ(d/δ)) (2[d ≥ 0] − 1)`.
#[inline]
pub fn layered_value(profile: &ProfileTable, cutoff: &Cutoff, d: f64, eps: f64, delta: f64) -> f64 {
    let sign = if d >= 0.0 { 1.0 } else { -1.0 };
    if d.abs() >= delta {
        return sign;
    }
    let z = cutoff.value(d / delta);
    z * profile.value(d / eps) + (1.0 - z) * sign
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ProfileTable {
        ProfileTable::quartic_default()
    }

    #[test]
    fn profile_matches_tanh() {
        let p = table();
        assert_eq!(p.value(0.0), 0.0);
        let mut worst: f64 = 0.0;
        for k in 0..=4000 {
            let z = -12.0 + 24.0 * k as f64 / 4000.0 + 1.3e-4;
            worst = worst.max((p.value(z) - (2f64.sqrt() * z).tanh()).abs());
        }
        assert!(worst < 1e-8, "worst {worst}");
        assert!((p.value(11.999) - 1.0).abs() < 1e-8);
        assert!((p.value(-11.999) + 1.0).abs() < 1e-8);
    }

    #[test]
    fn residual_and_first_integral() {
        let p = table();
        assert!(p.residual <= 1e-8);
        let w = DoubleWell::quartic();
        for (t, d) in p.theta0_samples().iter().zip(p.theta0_prime_samples()) {
            assert!((0.5 * d * d - w.potential(*t)).abs() < 1e-8);
            assert!(t.abs() < 1.0);
        }
        let th = p.theta0_samples();
        // Strictly increasing until the tails saturate at ±1 in double precision.
        assert!(th.windows(2).all(|w| w[1] >= w[0]));
        let z: Vec<f64> = p.z_grid().collect();
        assert!(th.windows(2).zip(&z).all(|(w, z)| z.abs() > 10.0 || w[1] > w[0]));
        assert!(*p.theta0_prime_samples().last().unwrap() < 1e-8);
    }

    #[test]
    fn antisymmetric_for_symmetric_well() {
        let p = table();
        let th = p.theta0_samples();
        let n = th.len();
        for i in 0..n {
            assert!((th[i] + th[n - 1 - i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn sigma_closed_form_and_convergence() {
        let p = table();
        let exact = 2.0 * 2f64.sqrt() / 3.0;
        assert!((p.sigma - exact).abs() < 1e-8, "{}", p.sigma);
        let w = DoubleWell::quartic();
        let fine = build_profile(&w, 12.0, 2 * DEFAULT_SAMPLES).unwrap();
        assert!((fine.sigma - p.sigma).abs() < 1e-8);
        let short = build_profile(&w, 6.0, DEFAULT_SAMPLES / 2).unwrap();
        assert!((short.sigma - p.sigma).abs() < 1e-8);
    }

    #[test]
    fn coarse_table_fails_residual() {
        let w = DoubleWell::quartic();
        match build_profile(&w, 12.0, 64) {
            Err(Error::ProfileResidual { .. }) => {}
            other => panic!("expected residual failure, got {other:?}"),
        }
        assert!(matches!(build_profile(&w, 12.0, 10), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn negative_potential_rejected() {
        let bad = DoubleWell::new(
            "bad",
            |c: f64| (1.0 - c * c).powi(2) - 0.1 * (1.0 - c * c),
            |c: f64| 4.0 * c * (c * c - 1.0) + 0.2 * c,
            |c: f64| 12.0 * c * c - 4.0 + 0.2,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn degenerate_sigma_rejected() {
        let mut p = table();
        p.theta0_prime.iter_mut().for_each(|d| *d = 0.0);
        assert!(matches!(surface_tension(&p), Err(Error::DegenerateProfile(_))));
    }

    #[test]
    fn quartic_lipschitz() {
        assert!((DoubleWell::quartic().lipschitz() - 8.0).abs() < 1e-12);
        assert!(DoubleWell::quartic().is_symmetric());
    }

    #[test]
    fn cutoff_plateaus_and_monotonicity() {
        let c = Cutoff;
        assert_eq!(cutoff_value(&c, 0.0), 1.0);
        assert_eq!(cutoff_value(&c, 2.0), 0.0);
        assert_eq!(c.value(-0.49), 1.0);
        let mid = c.value(0.75);
        assert!(mid > 0.0 && mid < 1.0);
        let h = 1e-6;
        for k in 0..=400 {
            let z = -1.2 + 2.4 * k as f64 / 400.0;
            let fd = (c.value(z + h) - c.value(z - h)) / (2.0 * h);
            assert!(z * fd <= 1e-9, "z ζ' > 0 at {z}");
            assert!((fd - c.derivative(z)).abs() < 1e-5);
        }
        for k in 0..100 {
            let z = 0.5 + 0.5 * k as f64 / 100.0;
            assert!(c.value(z + 0.005) <= c.value(z));
        }
    }

    proptest::proptest! {
        #[test]
        fn profile_is_odd_and_increasing(z in -10.0f64..10.0, dz in 1e-3f64..1.0) {
            let p = table();
            proptest::prop_assert!((p.value(-z) + p.value(z)).abs() < 1e-12);
            proptest::prop_assert!(p.value(z + dz) > p.value(z));
            proptest::prop_assert!(p.value(z).abs() < 1.0);
        }

        #[test]
        fn layered_value_is_bounded_and_signed(d in -0.3f64..0.3, eps in 0.01f64..0.1) {
            let v = layered_value(&table(), &Cutoff, d, eps, 0.125);
            proptest::prop_assert!(v.abs() <= 1.0);
            proptest::prop_assert!(v * d >= 0.0);
        }
    }
}
