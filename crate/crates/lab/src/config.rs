//! Experiment configuration in TOML.
//!
//! Parsing is total: unknown keys are rejected with their location, omitted
//! keys take the defaults below, and [`ExperimentConfig::canonical`] writes
//! every key back out so that a canonical file re-parses to an equal value.

use carleman_core::calculus::WEIGHT_IDENTITY_TOLERANCE;
use carleman_core::harness::{
    CONJUGATED_BOUND_TOLERANCE, CONJUGATION_TOLERANCE, GATE_TOLERANCE, GREEN_TOLERANCE,
    RELLICH_TOLERANCE,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("cannot write canonical form: {0}")]
    Emit(#[from] toml::ser::Error),
}

fn invalid<T>(key: impl Into<String>, reason: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed of every sampled point set.
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub field: FieldConfig,
    /// Empty means the two default bumps.
    #[serde(default)]
    pub test_functions: Vec<TestFunctionConfig>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub d: usize,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "one")]
    pub mu: f64,
    /// Claimed ellipticity constant; the field certificate when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    /// Claimed Lipschitz constant; the field certificate when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    #[default]
    Constant,
    Affine,
    Sinusoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default)]
    pub kind: FieldKind,
    /// `A(0)` as a list of rows; the identity when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<Vec<Vec<f64>>>,
    /// `G_1 … G_d`, each a list of rows; required for non-constant kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<Vec<Vec<f64>>>>,
    /// `ω` of the sinusoidal kind.
    #[serde(default = "one")]
    pub frequency: f64,
    /// Amplitude `a` of the drift `b(x) = a(cos x₁, sin x₁, 0, …)`.
    #[serde(default)]
    pub drift: f64,
    /// Amplitude `a` of the potential `c(x) = a cos x₁`.
    #[serde(default)]
    pub potential: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            kind: FieldKind::Constant,
            a0: None,
            slopes: None,
            frequency: 1.0,
            drift: 0.0,
            potential: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulationKind {
    #[default]
    None,
    Linear,
    PlaneWave,
    Cosine,
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionConfig {
    pub r0: f64,
    pub r1: f64,
    #[serde(default)]
    pub modulation: ModulationKind,
    /// `k` of the wave modulations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavevector: Option<Vec<f64>>,
    /// `offset + slopeᵀx` of the linear modulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per radial panel.
    #[serde(default = "default_panel_order")]
    pub panel_order: usize,
    #[serde(default = "default_angular_order")]
    pub angular_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            panel_order: default_panel_order(),
            angular_order: default_angular_order(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// The sweep runs geometrically from `α₀` to `factor·α₀`.
    #[serde(default = "default_factor")]
    pub factor: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Multiplies `C` before the comparison; anything but `1` is fault
    /// injection.
    #[serde(default = "one")]
    pub c_factor: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            factor: default_factor(),
            points: default_points(),
            c_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "default_samples")]
    pub assumption_samples: usize,
    #[serde(default = "default_samples")]
    pub sandwich_samples: usize,
    #[serde(default = "default_identity_points")]
    pub identity_points: usize,
    #[serde(default = "default_samples")]
    pub pointwise_points: usize,
    #[serde(default = "default_directions")]
    pub pointwise_directions: usize,
    /// Every n-th point also gets the generalized eigenvalue check.
    #[serde(default = "default_eigen_every")]
    pub pointwise_eigen_every: usize,
    #[serde(default = "default_conjugation_points")]
    pub conjugation_points: usize,
    #[serde(default = "default_small_alpha")]
    pub conjugation_alpha: f64,
    #[serde(default = "default_conjugated_bound_alphas")]
    pub conjugated_bound_alphas: Vec<f64>,
    /// Also check the integral inequality at `α₀`.
    #[serde(default = "yes")]
    pub conjugated_bound_at_alpha0: bool,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            assumption_samples: default_samples(),
            sandwich_samples: default_samples(),
            identity_points: default_identity_points(),
            pointwise_points: default_samples(),
            pointwise_directions: default_directions(),
            pointwise_eigen_every: default_eigen_every(),
            conjugation_points: default_conjugation_points(),
            conjugation_alpha: default_small_alpha(),
            conjugated_bound_alphas: default_conjugated_bound_alphas(),
            conjugated_bound_at_alpha0: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest relative change under grid doubling.
    #[serde(default = "gate")]
    pub gate: f64,
    #[serde(default = "weight_identities")]
    pub weight_identities: f64,
    #[serde(default = "conjugation")]
    pub conjugation: f64,
    #[serde(default = "green")]
    pub green: f64,
    #[serde(default = "rellich")]
    pub rellich: f64,
    /// Allowed negative slack relative to the left-hand side.
    #[serde(default = "conjugated_bound")]
    pub conjugated_bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gate: gate(),
            weight_identities: weight_identities(),
            conjugation: conjugation(),
            green: green(),
            rellich: rellich(),
            conjugated_bound: conjugated_bound(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for the report file and the sweep CSVs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_panel_order() -> usize {
    12
}
fn default_angular_order() -> usize {
    16
}
fn default_factor() -> f64 {
    8.0
}
fn default_points() -> usize {
    8
}
fn default_samples() -> usize {
    10_000
}
fn default_identity_points() -> usize {
    200
}
fn default_directions() -> usize {
    16
}
fn default_eigen_every() -> usize {
    100
}
fn default_conjugation_points() -> usize {
    100
}
fn default_small_alpha() -> f64 {
    10.0
}
fn default_conjugated_bound_alphas() -> Vec<f64> {
    vec![10.0]
}
fn gate() -> f64 {
    GATE_TOLERANCE
}
fn weight_identities() -> f64 {
    WEIGHT_IDENTITY_TOLERANCE
}
fn conjugation() -> f64 {
    CONJUGATION_TOLERANCE
}
fn green() -> f64 {
    GREEN_TOLERANCE
}
fn rellich() -> f64 {
    RELLICH_TOLERANCE
}
fn conjugated_bound() -> f64 {
    CONJUGATED_BOUND_TOLERANCE
}

/// Dimensions with coefficient fields, quadrature and integral checks.
pub const MAX_FIELD_DIMENSION: usize = 3;

/// TOML integers are `i64`.
pub const MAX_SEED: u64 = i64::MAX as u64;

impl ExperimentConfig {
    /// Parses, fills defaults and validates.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config: ExperimentConfig = toml::from_str(text)?;
        config.fill_defaults();
        config.validate()?;
        Ok(config)
    }

    /// Minimal configuration: the Laplacian in dimension `d` with defaults.
    pub fn laplacian(d: usize) -> Self {
        let mut config = ExperimentConfig {
            seed: 0,
            problem: ProblemConfig {
                d,
                rho: 1.0,
                mu: 1.0,
                theta1: None,
                theta2: None,
            },
            field: FieldConfig::default(),
            test_functions: Vec::new(),
            quadrature: QuadratureConfig::default(),
            sweep: SweepConfig::default(),
            checks: ChecksConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        };
        config.fill_defaults();
        config
    }

    /// Every key written out explicitly.
    pub fn canonical(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    fn fill_defaults(&mut self) {
        let d = self.problem.d;
        if self.field.a0.is_none() {
            self.field.a0 = Some(
                (0..d)
                    .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect(),
            );
        }
        if self.test_functions.is_empty() {
            let rho = self.problem.rho;
            self.test_functions.push(TestFunctionConfig {
                r0: 0.3 * rho,
                r1: 0.7 * rho,
                modulation: ModulationKind::None,
                wavevector: None,
                offset: None,
                slope: None,
            });
            let k = [2.0, 1.0, -1.0];
            self.test_functions.push(TestFunctionConfig {
                r0: 0.25 * rho,
                r1: 0.75 * rho,
                modulation: ModulationKind::PlaneWave,
                wavevector: Some(
                    (0..d)
                        .map(|i| k.get(i).copied().unwrap_or(0.0) / rho)
                        .collect(),
                ),
                offset: None,
                slope: None,
            });
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.seed > MAX_SEED {
            return invalid("seed", format!("must be at most {MAX_SEED}"));
        }
        let p = &self.problem;
        let d = p.d;
        if d == 0 {
            return invalid("problem.d", "must be at least 1");
        }
        positive("problem.rho", p.rho)?;
        positive("problem.mu", p.mu)?;
        if let Some(t) = p.theta1 {
            if !(t >= 1.0 && t.is_finite()) {
                return invalid("problem.theta1", "must be finite and at least 1");
            }
        }
        if let Some(t) = p.theta2 {
            if !(t >= 0.0 && t.is_finite()) {
                return invalid("problem.theta2", "must be finite and non-negative");
            }
        }

        let f = &self.field;
        let a0 = f.a0.as_ref().expect("filled");
        square("field.a0", a0, d)?;
        for i in 0..d {
            for j in 0..i {
                if a0[i][j] != a0[j][i] {
                    return invalid(
                        "field.a0",
                        format!(
                            "not symmetric: entry ({}, {}) differs from ({}, {})",
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        ),
                    );
                }
            }
        }
        match (f.kind, &f.slopes) {
            (FieldKind::Constant, Some(_)) => {
                return invalid(
                    "field.slopes",
                    "only allowed for affine and sinusoidal fields",
                )
            }
            (FieldKind::Affine | FieldKind::Sinusoidal, None) => {
                return invalid("field.slopes", "required for this field kind")
            }
            (_, Some(slopes)) => {
                if slopes.len() != d {
                    return invalid(
                        "field.slopes",
                        format!("expected {d} matrices, found {}", slopes.len()),
                    );
                }
                for (k, g) in slopes.iter().enumerate() {
                    let key = format!("field.slopes[{k}]");
                    square(&key, g, d)?;
                    for i in 0..d {
                        for j in 0..i {
                            if g[i][j] != g[j][i] {
                                return invalid(key, "not symmetric");
                            }
                        }
                    }
                }
            }
            _ => {}
        }
        positive("field.frequency", f.frequency)?;
        finite("field.drift", f.drift)?;
        finite("field.potential", f.potential)?;
        if d > MAX_FIELD_DIMENSION {
            let identity = a0.iter().enumerate().all(|(i, row)| {
                row.iter()
                    .enumerate()
                    .all(|(j, v)| *v == if i == j { 1.0 } else { 0.0 })
            });
            if f.kind != FieldKind::Constant || !identity || f.drift != 0.0 || f.potential != 0.0 {
                return invalid("field", format!("only the Laplacian is available for d > {MAX_FIELD_DIMENSION}; set problem.theta1 and problem.theta2 instead"));
            }
        }

        for (i, t) in self.test_functions.iter().enumerate() {
            let key = |k: &str| format!("test_functions[{i}].{k}");
            if !(t.r0 > 0.0 && t.r0 < t.r1) {
                return invalid(key("r0"), "need 0 < r0 < r1");
            }
            if !(t.r1 <= p.rho) {
                return invalid(
                    key("r1"),
                    "the support must lie inside the ball of radius rho",
                );
            }
            let wave = matches!(
                t.modulation,
                ModulationKind::PlaneWave | ModulationKind::Cosine | ModulationKind::Sine
            );
            match (&t.wavevector, wave) {
                (Some(k), true) => vector(&key("wavevector"), k, d)?,
                (None, true) => return invalid(key("wavevector"), "required for wave modulations"),
                (Some(_), false) => {
                    return invalid(key("wavevector"), "only allowed for wave modulations")
                }
                (None, false) => {}
            }
            let linear = t.modulation == ModulationKind::Linear;
            if !linear && (t.offset.is_some() || t.slope.is_some()) {
                return invalid(
                    key("offset"),
                    "offset and slope are only allowed for the linear modulation",
                );
            }
            if let Some(s) = &t.slope {
                vector(&key("slope"), s, d)?;
            }
            if let Some(o) = t.offset {
                finite(&key("offset"), o)?;
            }
        }

        let q = &self.quadrature;
        if q.panel_order < 2 {
            return invalid("quadrature.panel_order", "must be at least 2");
        }
        if q.angular_order < 4 {
            return invalid("quadrature.angular_order", "must be at least 4");
        }
        let s = &self.sweep;
        if !(s.factor >= 1.0 && s.factor.is_finite()) {
            return invalid("sweep.factor", "must be finite and at least 1");
        }
        if s.points == 0 {
            return invalid("sweep.points", "must be at least 1");
        }
        positive("sweep.c_factor", s.c_factor)?;
        let c = &self.checks;
        if c.pointwise_directions == 0 {
            return invalid("checks.pointwise_directions", "must be at least 1");
        }
        if !(c.conjugation_alpha >= 0.0 && c.conjugation_alpha.is_finite()) {
            return invalid(
                "checks.conjugation_alpha",
                "must be finite and non-negative",
            );
        }
        for (i, a) in c.conjugated_bound_alphas.iter().enumerate() {
            positive(&format!("checks.conjugated_bound_alphas[{i}]"), *a)?;
        }
        let t = &self.tolerances;
        for (k, v) in [
            ("gate", t.gate),
            ("weight_identities", t.weight_identities),
            ("conjugation", t.conjugation),
            ("green", t.green),
            ("rellich", t.rellich),
            ("conjugated_bound", t.conjugated_bound),
        ] {
            positive(&format!("tolerances.{k}"), v)?;
        }
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(key, format!("must be positive and finite, got {v}"))
    }
}

fn finite(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        invalid(key, "must be finite")
    }
}

fn square(key: &str, m: &[Vec<f64>], d: usize) -> Result<(), ConfigError> {
    if m.len() != d || m.iter().any(|row| row.len() != d) {
        return invalid(key, format!("expected a {d}x{d} matrix given as {d} rows"));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return invalid(key, "entries must be finite");
    }
    Ok(())
}

fn vector(key: &str, v: &[f64], d: usize) -> Result<(), ConfigError> {
    if v.len() != d {
        return invalid(key, format!("expected {d} entries, found {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return invalid(key, "entries must be finite");
    }
    Ok(())
}
