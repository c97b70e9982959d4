//! Runs the verification stages described by a configuration.
//!
//! Stages run in a fixed order. The constants stage gates everything after
//! it: without an admissible `μ` there is no `C` or `α₀` to check against.
//! Sampled point sets come from per-check streams of the configured seed.

use crate::config::{ExperimentConfig, FieldKind, ModulationKind, MAX_FIELD_DIMENSION};
use crate::report::{Check, Relation, StageReport, SweepSeries, VerificationReport};
use carleman_core::calculus::{check_pointwise_bounds, check_weight_identities, sample_points};
use carleman_core::constants::ConstantsReport;
use carleman_core::exec::Executor;
use carleman_core::harness::{
    alpha_sweep, check_conjugated_bound, check_conjugation_identity, check_green, check_rellich,
    geometric_alphas, CarlemanSides, ConjugatedBoundPath, Convergence, IntegralIdentity,
};
use carleman_core::params::{
    make_affine_field, make_constant_field, make_sinusoidal_field, verify_assumption,
    CoefficientField, Drift, Potential, ProblemParams,
};
use carleman_core::quadrature::{make_bump, Modulation, QuadratureSpec, TestFunction};
use carleman_core::sampling::{streams, PointSampler};
use carleman_core::weight::{check_sandwich, WeightFunction};
use carleman_core::{Matrix, Vector};
use serde_json::json;

/// Stages in the order they run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Constants,
    Assumption,
    Sandwich,
    WeightIdentities,
    PointwiseBounds,
    Conjugation,
    Green,
    Rellich,
    ConjugatedBound,
    /// The sides at `α₀` only.
    Carleman,
    /// The geometric sweep from `α₀`.
    Sweep,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Constants => "constants",
            Stage::Assumption => "assumption",
            Stage::Sandwich => "sandwich",
            Stage::WeightIdentities => "weight_identities",
            Stage::PointwiseBounds => "pointwise_bounds",
            Stage::Conjugation => "conjugation",
            Stage::Green => "green",
            Stage::Rellich => "rellich",
            Stage::ConjugatedBound => "conjugated_bound",
            Stage::Carleman | Stage::Sweep => "carleman",
        }
    }
}

/// Stage lists of the CLI subcommands.
pub mod plans {
    use super::Stage::{self, *};

    pub const CONSTANTS: &[Stage] = &[Constants];
    pub const IDENTITIES: &[Stage] = &[Constants, WeightIdentities, Conjugation, Green, Rellich];
    pub const BOUNDS: &[Stage] = &[
        Constants,
        Assumption,
        Sandwich,
        PointwiseBounds,
        ConjugatedBound,
    ];
    pub const CARLEMAN: &[Stage] = &[Constants, Carleman];
    pub const SWEEP: &[Stage] = &[Constants, Sweep];
    pub const SUITE: &[Stage] = &[
        Constants,
        Assumption,
        Sandwich,
        WeightIdentities,
        PointwiseBounds,
        Conjugation,
        Green,
        Rellich,
        ConjugatedBound,
        Sweep,
    ];
}

/// Problems that prevent any stage from running, such as a coefficient
/// matrix that is not positive definite.
#[derive(Debug, thiserror::Error)]
#[error("invalid `{key}`: {reason}")]
pub struct SetupError {
    pub key: String,
    pub reason: String,
}

fn setup(key: &str, e: impl std::fmt::Display) -> SetupError {
    SetupError {
        key: key.into(),
        reason: e.to_string(),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("core reports serialize")
}

fn matrix<const D: usize>(rows: &[Vec<f64>]) -> Matrix<D> {
    Matrix::<D>::from_fn(|i, j| rows[i][j])
}

fn vector<const D: usize>(v: &[f64]) -> Vector<D> {
    Vector::<D>::from_fn(|i, _| v[i])
}

/// The coefficient field, lower order terms included.
pub fn build_field<const D: usize>(
    config: &ExperimentConfig,
) -> Result<CoefficientField<D>, SetupError> {
    let f = &config.field;
    let rho = config.problem.rho;
    let a0 = matrix::<D>(f.a0.as_deref().unwrap_or(&[]));
    let slopes = || -> [Matrix<D>; D] {
        let s = f.slopes.as_ref().expect("validated");
        core::array::from_fn(|k| matrix::<D>(&s[k]))
    };
    let field = match f.kind {
        FieldKind::Constant => make_constant_field(a0, rho),
        FieldKind::Affine => make_affine_field(a0, slopes(), rho),
        FieldKind::Sinusoidal => make_sinusoidal_field(a0, slopes(), f.frequency, rho),
    }
    .map_err(|e| setup("field", e))?;
    let drift = if f.drift != 0.0 {
        Drift::Rotating { amplitude: f.drift }
    } else {
        Drift::Zero
    };
    let potential = if f.potential != 0.0 {
        Potential::Cosine {
            amplitude: f.potential,
            wavevector: Vector::<D>::from_fn(|i, _| if i == 0 { 1.0 } else { 0.0 }),
        }
    } else {
        Potential::Zero
    };
    Ok(field.with_lower_order(drift, potential))
}

pub fn build_test_functions<const D: usize>(
    config: &ExperimentConfig,
) -> Result<Vec<TestFunction<D>>, SetupError> {
    config
        .test_functions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let k = || vector::<D>(t.wavevector.as_deref().unwrap_or(&[])).into();
            let modulation = match t.modulation {
                ModulationKind::None => Modulation::None,
                ModulationKind::Linear => Modulation::Linear {
                    offset: t.offset.unwrap_or(0.0),
                    slope: t
                        .slope
                        .as_ref()
                        .map(|s| vector::<D>(s).into())
                        .unwrap_or([0.0; D]),
                },
                ModulationKind::PlaneWave => Modulation::PlaneWave { wavevector: k() },
                ModulationKind::Cosine => Modulation::Cosine { wavevector: k() },
                ModulationKind::Sine => Modulation::Sine { wavevector: k() },
            };
            make_bump(t.r0, t.r1, modulation).map_err(|e| setup(&format!("test_functions[{i}]"), e))
        })
        .collect()
}

/// Problem parameters: claimed constants where given, certificates
/// otherwise. Without a field (`d > 3`) the Laplacian values are the
/// defaults.
pub fn problem_params(config: &ExperimentConfig) -> Result<ProblemParams, SetupError> {
    let (t1, t2, b, c) = match config.problem.d {
        1 => certificates::<1>(config)?,
        2 => certificates::<2>(config)?,
        3 => certificates::<3>(config)?,
        _ => (1.0, 0.0, 0.0, 0.0),
    };
    let p = &config.problem;
    ProblemParams::new(
        p.d,
        p.rho,
        p.theta1.unwrap_or(t1),
        p.theta2.unwrap_or(t2),
        p.mu,
        b,
        c,
    )
    .map_err(|e| setup("problem", e))
}

fn certificates<const D: usize>(
    config: &ExperimentConfig,
) -> Result<(f64, f64, f64, f64), SetupError> {
    let f = build_field::<D>(config)?;
    Ok((
        f.certified_theta1(),
        f.certified_theta2(),
        f.b_sup(),
        f.c_sup(),
    ))
}

/// Runs `stages` and judges the result.
pub fn run<E: Executor>(
    command: &str,
    config: &ExperimentConfig,
    stages: &[Stage],
    exec: &E,
) -> Result<VerificationReport, SetupError> {
    let params = problem_params(config)?;
    let constants = ConstantsReport::evaluate(&params);
    let mut report = VerificationReport {
        command: command.into(),
        seed: config.seed,
        config: config.clone(),
        params,
        stages: Vec::new(),
        passed: false,
        sweeps: Vec::new(),
    };
    let later = stages.iter().copied().filter(|s| *s != Stage::Constants);
    if stages.contains(&Stage::Constants) {
        report.stages.push(constants_stage(&constants));
    }
    if !constants.admissible {
        let reason = format!(
            "skipped: mu = {} does not exceed 33 d theta1^(11/2) theta2 rho = {}",
            params.mu, constants.mu_threshold
        );
        report
            .stages
            .extend(later.map(|s| StageReport::skipped(s.name(), reason.clone())));
    } else {
        let mut ctx = match config.problem.d {
            1 => Runner::<1, E>::new(config, constants, exec).map(Dispatch::D1),
            2 => Runner::<2, E>::new(config, constants, exec).map(Dispatch::D2),
            3 => Runner::<3, E>::new(config, constants, exec).map(Dispatch::D3),
            _ => Ok(Dispatch::None),
        }?;
        for stage in later {
            let (stage_report, sweeps) = match &mut ctx {
                Dispatch::D1(r) => r.stage(stage),
                Dispatch::D2(r) => r.stage(stage),
                Dispatch::D3(r) => r.stage(stage),
                Dispatch::None => (
                    StageReport::skipped(
                        stage.name(),
                        format!("coefficient fields and quadrature are implemented for d <= {MAX_FIELD_DIMENSION}"),
                    ),
                    Vec::new(),
                ),
            };
            report.stages.push(stage_report);
            report.sweeps.extend(sweeps);
        }
    }
    report.judge();
    Ok(report)
}

enum Dispatch<'a, E> {
    D1(Runner<'a, 1, E>),
    D2(Runner<'a, 2, E>),
    D3(Runner<'a, 3, E>),
    None,
}

fn constants_stage(c: &ConstantsReport) -> StageReport {
    let mut checks = vec![Check::new(
        "admissibility_margin",
        c.admissibility_margin,
        Relation::Above,
        0.0,
    )
    .with_note("mu - 33 d theta1^(11/2) theta2 rho")];
    if let Some(t) = &c.tilde {
        checks.push(Check::new(
            "alpha1_over_alpha2",
            t.alpha1 / t.alpha2,
            Relation::AtMost,
            1.0,
        ));
        checks.push(Check::new(
            "k_over_k_estimate",
            t.k / t.k_estimate,
            Relation::AtMost,
            1.0,
        ));
    }
    if let (Some(t), Some(r)) = (&c.tilde, &c.closed_form) {
        checks.push(Check::new(
            "tilde_c_over_upper",
            t.hat_c / r.tilde_c_upper,
            Relation::AtMost,
            1.0,
        ));
        checks.push(Check::new(
            "tilde_alpha0_over_upper",
            t.hat_alpha0 / r.tilde_alpha0_upper,
            Relation::AtMost,
            1.0,
        ));
    }
    StageReport::judged("constants", checks, to_json(c))
}

/// Judges one grid-doubling record against the configured gate.
fn gate_check(name: String, c: &Convergence, gate: f64) -> Check {
    Check::new(name, c.change, Relation::Below, gate).with_convergence(*c)
}

fn label(i: usize) -> String {
    format!("u{i}")
}

fn alpha_label(alpha: f64) -> String {
    format!("alpha={alpha:.6e}")
}

struct Runner<'a, const D: usize, E> {
    config: &'a ExperimentConfig,
    constants: ConstantsReport,
    params: ProblemParams,
    field: CoefficientField<D>,
    weight: WeightFunction<D>,
    tests: Vec<TestFunction<D>>,
    spec: QuadratureSpec,
    exec: &'a E,
}

impl<'a, const D: usize, E: Executor> Runner<'a, D, E> {
    fn new(
        config: &'a ExperimentConfig,
        constants: ConstantsReport,
        exec: &'a E,
    ) -> Result<Self, SetupError> {
        let params = constants.params;
        let field = build_field::<D>(config)?;
        let weight =
            WeightFunction::new(&field, params.rho, params.mu).map_err(|e| setup("field.a0", e))?;
        let tests = build_test_functions::<D>(config)?;
        let q = config.quadrature;
        let spec = QuadratureSpec {
            panel_order: q.panel_order,
            angular_order: q.angular_order,
        };
        Ok(Runner {
            config,
            constants,
            params,
            field,
            weight,
            tests,
            spec,
            exec,
        })
    }

    fn sampler(&self, stream: u64) -> PointSampler {
        PointSampler::new(self.config.seed, stream)
    }

    fn alpha0(&self) -> f64 {
        self.constants.theorem_constants().expect("admissible").1
    }

    /// Real test functions for the real-only checks: the real part of each.
    fn real_parts(&self) -> Vec<TestFunction<D>> {
        self.tests.iter().map(|t| t.parts().0).collect()
    }

    fn stage(&mut self, stage: Stage) -> (StageReport, Vec<SweepSeries>) {
        let name = stage.name();
        let report = match stage {
            Stage::Constants => constants_stage(&self.constants),
            Stage::Assumption => self.assumption(),
            Stage::Sandwich => self.sandwich(),
            Stage::WeightIdentities => self.weight_identities(),
            Stage::PointwiseBounds => self.pointwise_bounds(),
            Stage::Conjugation => self.conjugation(),
            Stage::Green => self.green(),
            Stage::Rellich => self.rellich(),
            Stage::ConjugatedBound => self.conjugated_bound(),
            Stage::Carleman | Stage::Sweep => {
                let alphas = if stage == Stage::Sweep {
                    geometric_alphas(
                        self.alpha0(),
                        self.config.sweep.factor,
                        self.config.sweep.points,
                    )
                } else {
                    vec![self.alpha0()]
                };
                return self.carleman(&alphas);
            }
        };
        debug_assert_eq!(report.name, name);
        (report, Vec::new())
    }

    fn assumption(&self) -> StageReport {
        let mut s = self.sampler(streams::ASSUMPTION);
        let r = verify_assumption(
            &self.field,
            &self.params,
            self.config.checks.assumption_samples,
            &mut s,
        );
        let checks = vec![
            Check::new(
                "worst_ellipticity",
                r.worst_ellipticity,
                Relation::AtMost,
                r.claimed_theta1,
            ),
            Check::new(
                "worst_lipschitz",
                r.worst_lipschitz,
                Relation::AtMost,
                r.claimed_theta2,
            ),
        ];
        StageReport::judged("assumption", checks, to_json(&r))
    }

    fn sandwich(&self) -> StageReport {
        let mut s = self.sampler(streams::SANDWICH);
        let r = check_sandwich(
            &self.weight,
            self.params.theta1,
            self.config.checks.sandwich_samples,
            &mut s,
            None,
        );
        let checks = vec![Check::new(
            "violations",
            r.violations as f64,
            Relation::Equal,
            0.0,
        )];
        StageReport::judged("sandwich", checks, to_json(&r))
    }

    fn weight_identities(&self) -> StageReport {
        let mut s = self.sampler(streams::WEIGHT_IDENTITIES);
        let points =
            sample_points::<D>(&mut s, self.config.checks.identity_points, self.params.rho);
        match check_weight_identities(&self.field, &self.weight, &points, 1.0, self.exec) {
            Ok(r) => {
                let checks = vec![
                    Check::new(
                        "max_relative_residual",
                        r.residuals.max(),
                        Relation::Below,
                        self.config.tolerances.weight_identities,
                    ),
                    Check::new("relative_asymmetry", r.symmetry, Relation::Below, 1e-10),
                ];
                StageReport::judged("weight_identities", checks, to_json(&r))
            }
            Err(e) => StageReport::judged(
                "weight_identities",
                vec![Check::error("evaluation", e.to_string())],
                json!(null),
            ),
        }
    }

    fn pointwise_bounds(&self) -> StageReport {
        let c = &self.config.checks;
        let mut s = self.sampler(streams::POINTWISE);
        let points = sample_points::<D>(&mut s, c.pointwise_points, 1.0);
        let dirs = s.directions::<D>(c.pointwise_points * c.pointwise_directions);
        let r = check_pointwise_bounds(
            &self.field,
            self.params.rho,
            self.params.mu,
            &points,
            &dirs,
            c.pointwise_directions,
            c.pointwise_eigen_every,
            self.exec,
        );
        match r {
            Ok(r) => {
                let names = [
                    "sigma_f_violations",
                    "sigma_m_violations",
                    "weight_f_violations",
                    "psi_l0_violations",
                ];
                let checks = names
                    .iter()
                    .zip(r.violations)
                    .map(|(n, v)| Check::new(*n, v as f64, Relation::Equal, 0.0))
                    .collect();
                StageReport::judged("pointwise_bounds", checks, to_json(&r))
            }
            Err(e) => StageReport::judged(
                "pointwise_bounds",
                vec![Check::error("evaluation", e.to_string())],
                json!(null),
            ),
        }
    }

    fn conjugation(&self) -> StageReport {
        let c = &self.config.checks;
        let mut s = self.sampler(streams::CONJUGATION);
        let mut checks = Vec::new();
        let mut details = Vec::new();
        for (i, u) in self.tests.iter().enumerate() {
            let (r0, r1) = u.support();
            let points = s.annulus_points::<D>(c.conjugation_points, r0, r1);
            match check_conjugation_identity(
                &self.field,
                &self.weight,
                u,
                c.conjugation_alpha,
                &points,
                self.exec,
            ) {
                Ok(r) => {
                    let kind = if u.is_real() { "real" } else { "complex" };
                    checks.push(
                        Check::new(
                            format!("{} {}", label(i), alpha_label(r.alpha)),
                            r.max_residual,
                            Relation::Below,
                            self.config.tolerances.conjugation,
                        )
                        .with_note(format!("{kind}, {} points in the support", r.points)),
                    );
                    details.push(to_json(&r));
                }
                Err(e) => checks.push(Check::error(label(i), e.to_string())),
            }
        }
        StageReport::judged("conjugation", checks, json!(details))
    }

    fn identity_checks(
        &self,
        name: String,
        r: &IntegralIdentity,
        tolerance: f64,
        checks: &mut Vec<Check>,
    ) {
        checks.push(Check::new(
            format!("{name} residual"),
            r.residual,
            Relation::Below,
            tolerance,
        ));
        checks.push(gate_check(
            format!("{name} gate"),
            &r.convergence,
            self.config.tolerances.gate,
        ));
    }

    fn green(&self) -> StageReport {
        let parts = self.real_parts();
        let mut checks = Vec::new();
        let mut details = Vec::new();
        for i in 0..parts.len() {
            for j in i..parts.len() {
                let name = format!("{},{}", label(i), label(j));
                match check_green(&self.field, &parts[i], &parts[j], &self.spec, self.exec) {
                    Ok(r) => {
                        self.identity_checks(name, &r, self.config.tolerances.green, &mut checks);
                        details.push(to_json(&r));
                    }
                    Err(e) => checks.push(Check::error(name, e.to_string())),
                }
            }
        }
        StageReport::judged("green", checks, json!(details))
    }

    fn rellich(&self) -> StageReport {
        let mut checks = Vec::new();
        let mut details = Vec::new();
        for (i, f) in self.real_parts().iter().enumerate() {
            match check_rellich(&self.field, &self.weight, f, &self.spec, self.exec) {
                Ok(r) => {
                    self.identity_checks(label(i), &r, self.config.tolerances.rellich, &mut checks);
                    details.push(to_json(&r));
                }
                Err(e) => checks.push(Check::error(label(i), e.to_string())),
            }
        }
        StageReport::judged("rellich", checks, json!(details))
    }

    fn conjugated_bound(&self) -> StageReport {
        if self.field.b_sup() != 0.0 || self.field.c_sup() != 0.0 {
            return StageReport::skipped(
                "conjugated_bound",
                "stated without lower order terms; b or c is non-zero",
            );
        }
        let c = &self.config.checks;
        let t = &self.config.tolerances;
        let mut alphas = c.conjugated_bound_alphas.clone();
        if c.conjugated_bound_at_alpha0 {
            alphas.push(self.alpha0());
        }
        let mut checks = Vec::new();
        let mut details = Vec::new();
        for (i, u) in self.real_parts().iter().enumerate() {
            for &alpha in &alphas {
                let name = format!("{} {}", label(i), alpha_label(alpha));
                match check_conjugated_bound(
                    &self.field,
                    &self.weight,
                    u,
                    alpha,
                    &self.spec,
                    self.exec,
                ) {
                    Ok(r) => {
                        let ok = |conv: &Convergence, slack: f64| {
                            conv.change < t.gate && slack >= -t.conjugated_bound
                        };
                        let path = if ok(&r.convergence_direct, r.slack_direct) {
                            ConjugatedBoundPath::Direct
                        } else if ok(&r.convergence_green, r.slack_green) {
                            ConjugatedBoundPath::Green
                        } else {
                            ConjugatedBoundPath::Direct
                        };
                        let (slack, conv, path_name) = match path {
                            ConjugatedBoundPath::Direct => {
                                (r.slack_direct, r.convergence_direct, "direct")
                            }
                            ConjugatedBoundPath::Green => {
                                (r.slack_green, r.convergence_green, "green")
                            }
                        };
                        checks.push(
                            Check::new(
                                format!("{name} slack"),
                                slack,
                                Relation::AtLeast,
                                -t.conjugated_bound,
                            )
                            .with_note(format!("{path_name} path")),
                        );
                        checks.push(
                            gate_check(format!("{name} gate"), &conv, t.gate)
                                .with_note(format!("{path_name} path")),
                        );
                        details.push(to_json(&r));
                    }
                    Err(e) => checks.push(Check::error(name, e.to_string())),
                }
            }
        }
        StageReport::judged("conjugated_bound", checks, json!(details))
    }

    fn carleman(&self, alphas: &[f64]) -> (StageReport, Vec<SweepSeries>) {
        let mut constants = self.constants;
        let c_factor = self.config.sweep.c_factor;
        if let Some(f) = constants.finals.as_mut() {
            f.c_final *= c_factor;
        }
        let gate = self.config.tolerances.gate;
        let mut checks = Vec::new();
        let mut sweeps = Vec::new();
        for (i, u) in self.tests.iter().enumerate() {
            match alpha_sweep(&self.field, &constants, u, alphas, &self.spec, self.exec) {
                Ok(sides) => {
                    for s in &sides {
                        checks.extend(carleman_checks(
                            &format!("{} {}", label(i), alpha_label(s.alpha)),
                            s,
                            gate,
                        ));
                    }
                    sweeps.push(SweepSeries {
                        test_function: i,
                        sides,
                    });
                }
                Err(e) => checks.push(Check::error(label(i), e.to_string())),
            }
        }
        let mut report = StageReport::judged("carleman", checks, to_json(&sweeps));
        if c_factor != 1.0 {
            report.note = Some(format!("C multiplied by {c_factor} (fault injection)"));
        }
        (report, sweeps)
    }
}

/// Ratio and gate checks for one `α`. Below `α₀` the theorem makes no
/// claim; the ratio is recorded but cannot fail.
fn carleman_checks(name: &str, s: &CarlemanSides, gate: f64) -> Vec<Check> {
    if s.vacuous {
        return vec![
            Check::new(format!("{name} ratio"), s.ratio, Relation::AtLeast, 1.0)
                .with_note("u = 0, vacuous"),
        ];
    }
    let mut ratio = Check::new(format!("{name} ratio"), s.ratio, Relation::AtLeast, 1.0);
    if let Some(t) = s.tilde_ratio {
        ratio = ratio.with_note(format!("with C/6: {}", crate::report::number(t)));
    }
    if s.alpha < s.alpha0 {
        ratio.passed = true;
        ratio.note = Some("below alpha0, no claim".into());
    }
    vec![
        ratio,
        gate_check(format!("{name} gate"), &s.convergence, gate),
    ]
}
