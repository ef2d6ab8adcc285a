//! Declarative experiments: a TOML config names the estimate to exercise,
//! the grid, weight and operator, and the sweeps. `run` writes CSV reports
//! (and optional binary dumps) into an output directory.
//!
//! Every section except `kind` and `[grid]` has defaults; see the README for
//! the full schema.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::corpus::BandLimited;
use crate::elliptic::{
    check_ellipticity, coercive_report, solve_perturbed, Coefficient, EllipticProblem, LowerOrderTerm, NeumannOptions,
    PrincipalPart,
};
use crate::embedding::{embedding_inequality_report, log_sweep, multiplicative_estimate_report, psi_h_symbol, EmbeddingCase};
use crate::error::{Error, Result};
use crate::function_space::{
    ap_constant, Anisotropy, Degeneracy, Grid, GridFunction, MultiIndex, TimeSeries, ValueSpace, Weight,
};
use crate::io;
use crate::multiplier::{
    mikhlin_certificate, HilbertSign, Identity, LogAbs, MikhlinOptions, OperatorSymbol, ParabolicPhi, Power, Resolvent,
    RieszLike,
};
use crate::operator::{OpValue, PositiveOperator, RBoundOptions};
use crate::parabolic::{maximal_regularity_report, solve_cauchy, solve_degenerate, solve_system, DegenerateProblem, ParabolicProblem, SystemProblem};
use crate::report::{format_number, EstimateReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ApCheck,
    Mikhlin,
    Embed,
    Elliptic,
    Parabolic,
    System,
    Degenerate,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::ApCheck => "ap-check",
            Kind::Mikhlin => "mikhlin",
            Kind::Embed => "embed",
            Kind::Elliptic => "elliptic",
            Kind::Parabolic => "parabolic",
            Kind::System => "system",
            Kind::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses the machine default. Outputs do not depend on it.
    #[serde(default)]
    pub threads: usize,
    pub grid: GridConfig,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub principal: Option<PrincipalConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    pub ap: Option<ApConfig>,
    pub mikhlin: Option<MikhlinConfig>,
    pub embed: Option<EmbedConfig>,
    pub elliptic: Option<EllipticConfig>,
    pub parabolic: Option<ParabolicConfig>,
    pub system: Option<SystemConfig>,
    pub degenerate: Option<DegenerateConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Half-widths `L_k` of the periodic box `[-L_k, L_k)`.
    pub extents: Vec<f64>,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default = "two")]
    pub q: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig { dim: 1, q: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightConfig {
    #[default]
    One,
    /// `prod_k |x_k|^{a_k}`.
    Power { exponents: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    #[default]
    Identity,
    /// `diag(2^{s j})`, `j = 1..N`.
    Dyadic { s: f64 },
    Diagonal { entries: Vec<f64> },
    Symmetric { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrincipalConfig {
    pub l: u32,
    pub terms: Vec<TermConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub alpha: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_report")]
    pub report: String,
    /// Binary dump of the main field (weight, solution or solution history).
    pub dump: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { report: default_report(), dump: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApConfig {
    #[serde(default = "two")]
    pub p: f64,
    /// Additional grid doublings to report.
    #[serde(default)]
    pub refinements: u32,
    /// Fail when the constant exceeds this.
    pub threshold: Option<f64>,
}

impl Default for ApConfig {
    fn default() -> Self {
        ApConfig { p: 2.0, refinements: 0, threshold: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolConfig {
    Identity,
    Sign {
        #[serde(default)]
        axis: usize,
    },
    RieszLike {
        #[serde(default)]
        axis: usize,
    },
    Power { alpha: Vec<u32> },
    LogAbs,
    Resolvent { lambda: [f64; 2] },
    PsiH { l: Vec<u32>, alpha: Vec<u32>, mu: f64, h: f64 },
    ParabolicPhi { lambda: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MikhlinConfig {
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub abs_power: bool,
    #[serde(default = "min_exp")]
    pub min_exp: f64,
    #[serde(default = "max_exp")]
    pub max_exp: f64,
    #[serde(default = "exp_step")]
    pub exp_step: f64,
    #[serde(default = "yes")]
    pub growth_check: bool,
    #[serde(default = "trials")]
    pub trials: usize,
}

impl Default for MikhlinConfig {
    fn default() -> Self {
        MikhlinConfig {
            symbol: SymbolConfig::Identity,
            abs_power: false,
            min_exp: min_exp(),
            max_exp: max_exp(),
            exp_step: exp_step(),
            growth_check: true,
            trials: trials(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    pub l: Vec<u32>,
    pub alpha: Vec<u32>,
    /// Defaults to `{0, (1 - kappa)/2, 1 - kappa}`.
    pub mu: Option<Vec<f64>>,
    #[serde(default = "h_min")]
    pub h_min: f64,
    #[serde(default = "one")]
    pub h_max: f64,
    #[serde(default = "ten")]
    pub h_points: usize,
    #[serde(default = "one")]
    pub h0: f64,
    #[serde(default = "thirty_two")]
    pub corpus: usize,
    #[serde(default = "two")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticConfig {
    /// Explicit `[re, im]` pairs; otherwise moduli times angles.
    pub lambdas: Option<Vec<[f64; 2]>>,
    #[serde(default = "lambda_abs")]
    pub lambda_abs: Vec<f64>,
    #[serde(default = "zero_angle")]
    pub lambda_angles: Vec<f64>,
    #[serde(default = "sixteen")]
    pub corpus: usize,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub lower: Vec<LowerConfig>,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        EllipticConfig {
            lambdas: None,
            lambda_abs: lambda_abs(),
            lambda_angles: zero_angle(),
            corpus: 16,
            p: 2.0,
            lower: Vec::new(),
        }
    }
}

/// Constant coefficient `scale * M` (identity when `matrix` is absent).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerConfig {
    pub alpha: Vec<u32>,
    pub mu: f64,
    #[serde(default = "one")]
    pub scale: f64,
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicConfig {
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "steps")]
    pub steps: usize,
    #[serde(default = "sixteen")]
    pub corpus: usize,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "two")]
    pub p1: f64,
}

impl Default for ParabolicConfig {
    fn default() -> Self {
        ParabolicConfig { horizon: 1.0, steps: steps(), corpus: 16, p: 2.0, p1: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Coupling matrix; when absent, `diag(2^{i growth})`.
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default = "eighth")]
    pub growth: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "steps")]
    pub steps: usize,
    #[serde(default = "four")]
    pub corpus: usize,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "two")]
    pub p1: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig { matrix: None, growth: 0.125, horizon: 1.0, steps: steps(), corpus: 4, p: 2.0, p1: 2.0 }
    }
}

/// Profiles `gamma_k(y) = |y|^{nu_k}` (`nu_k = 0` is no degeneracy); the
/// forcing is `t prod_k cos(pi x_k / L_k)`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegenerateConfig {
    pub nu: Vec<f64>,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "sixty_four")]
    pub steps: usize,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "two")]
    pub p1: f64,
    #[serde(default = "ten_f")]
    pub ap_threshold: f64,
}

fn one_usize() -> usize {
    1
}
fn two() -> f64 {
    2.0
}
fn one() -> f64 {
    1.0
}
fn ten_f() -> f64 {
    10.0
}
fn eighth() -> f64 {
    0.125
}
fn yes() -> bool {
    true
}
fn min_exp() -> f64 {
    -8.0
}
fn max_exp() -> f64 {
    8.0
}
fn exp_step() -> f64 {
    0.5
}
fn trials() -> usize {
    RBoundOptions::default().trials
}
fn h_min() -> f64 {
    1e-3
}
fn ten() -> usize {
    10
}
fn four() -> usize {
    4
}
fn sixteen() -> usize {
    16
}
fn thirty_two() -> usize {
    32
}
fn sixty_four() -> usize {
    64
}
fn steps() -> usize {
    256
}
fn lambda_abs() -> Vec<f64> {
    vec![1.0, 10.0, 100.0, 1000.0]
}
fn zero_angle() -> Vec<f64> {
    vec![0.0]
}
fn default_report() -> String {
    "report.csv".into()
}

pub fn parse(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().replace('\n', " ")))
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// A violated precondition and the config field it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Diags(Vec<Diagnostic>);

impl Diags {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic { path: path.into(), message: message.into() });
    }

    fn exponent(&mut self, path: &str, p: f64) {
        if !(p.is_finite() && p > 1.0) {
            self.push(path, format!("exponent must lie in (1, inf), got {p}"));
        }
    }

    fn positive(&mut self, path: &str, x: f64) {
        if !(x.is_finite() && x > 0.0) {
            self.push(path, format!("must be finite and > 0, got {x}"));
        }
    }

    fn count(&mut self, path: &str, k: usize) {
        if k == 0 {
            self.push(path, "must be at least 1");
        }
    }

    fn multi_index(&mut self, path: &str, alpha: &[u32], n: usize) {
        if alpha.len() != n {
            self.push(path, format!("needs {n} entries, got {}", alpha.len()));
        }
    }

    fn square(&mut self, path: &str, m: &[Vec<f64>], n: usize, symmetric: bool) {
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            self.push(path, format!("must be {n} x {n}"));
            return;
        }
        if m.iter().flatten().any(|x| !x.is_finite()) {
            self.push(path, "entries must be finite");
        }
        if symmetric {
            for (i, row) in m.iter().enumerate() {
                for (j, &x) in row.iter().enumerate().take(i) {
                    if x != m[j][i] {
                        self.push(format!("{path}[{i}][{j}]"), "matrix must be symmetric");
                        return;
                    }
                }
            }
        }
    }
}

/// Every violated precondition of `run`, with field paths; empty when the
/// config can be run.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut d = Diags(Vec::new());
    let n = cfg.grid.extents.len();
    if !(1..=3).contains(&n) {
        d.push("grid.extents", format!("dimension must be 1..=3, got {n}"));
    }
    if cfg.grid.sizes.len() != n {
        d.push("grid.sizes", format!("needs {n} entries, got {}", cfg.grid.sizes.len()));
    }
    for (k, &l) in cfg.grid.extents.iter().enumerate() {
        d.positive(&format!("grid.extents[{k}]"), l);
    }
    for (k, &m) in cfg.grid.sizes.iter().enumerate() {
        if m < 4 || !m.is_power_of_two() {
            d.push(format!("grid.sizes[{k}]"), format!("must be a power of two >= 4, got {m}"));
        }
    }
    let dim = cfg.space.dim;
    if dim == 0 {
        d.push("space.dim", "must be at least 1");
    }
    d.exponent("space.q", cfg.space.q);
    if cfg.threads > 1024 {
        d.push("threads", format!("at most 1024, got {}", cfg.threads));
    }
    if let WeightConfig::Power { exponents } = &cfg.weight {
        if exponents.len() != n {
            d.push("weight.exponents", format!("needs {n} entries, got {}", exponents.len()));
        }
        for (k, a) in exponents.iter().enumerate() {
            if !a.is_finite() {
                d.push(format!("weight.exponents[{k}]"), "must be finite");
            }
        }
    }
    if cfg.kind != Kind::System {
        match &cfg.operator {
            OperatorConfig::Identity => {}
            OperatorConfig::Dyadic { s } => d.positive("operator.s", *s),
            OperatorConfig::Diagonal { entries } => {
                if entries.len() != dim {
                    d.push("operator.entries", format!("needs space.dim = {dim} entries, got {}", entries.len()));
                }
                for (i, &e) in entries.iter().enumerate() {
                    d.positive(&format!("operator.entries[{i}]"), e);
                }
            }
            OperatorConfig::Symmetric { matrix } => d.square("operator.matrix", matrix, dim, true),
        }
    }
    if let Some(pc) = &cfg.principal {
        if pc.l == 0 {
            d.push("principal.l", "must be at least 1");
        }
        if pc.terms.is_empty() {
            d.push("principal.terms", "needs at least one top-order term");
        }
        for (i, t) in pc.terms.iter().enumerate() {
            let path = format!("principal.terms[{i}].alpha");
            d.multi_index(&path, &t.alpha, n);
            if t.alpha.iter().sum::<u32>() != 2 * pc.l {
                d.push(path, format!("order must equal 2l = {}", 2 * pc.l));
            }
            if !(t.re.is_finite() && t.im.is_finite()) {
                d.push(format!("principal.terms[{i}]"), "coefficient must be finite");
            }
        }
    }
    let sections = [
        (Kind::ApCheck, "ap", cfg.ap.is_some()),
        (Kind::Mikhlin, "mikhlin", cfg.mikhlin.is_some()),
        (Kind::Embed, "embed", cfg.embed.is_some()),
        (Kind::Elliptic, "elliptic", cfg.elliptic.is_some()),
        (Kind::Parabolic, "parabolic", cfg.parabolic.is_some()),
        (Kind::System, "system", cfg.system.is_some()),
        (Kind::Degenerate, "degenerate", cfg.degenerate.is_some()),
    ];
    for (kind, name, present) in sections {
        if present && kind != cfg.kind {
            d.push(name, format!("section is not used by kind {}", cfg.kind.as_str()));
        }
    }
    match cfg.kind {
        Kind::ApCheck => {
            let ap = cfg.ap.clone().unwrap_or_default();
            d.exponent("ap.p", ap.p);
            if ap.refinements > 6 {
                d.push("ap.refinements", format!("at most 6, got {}", ap.refinements));
            }
            if let Some(t) = ap.threshold {
                if !(t.is_finite() && t >= 1.0) {
                    d.push("ap.threshold", format!("must be finite and >= 1, got {t}"));
                }
            }
        }
        Kind::Mikhlin => {
            let m = cfg.mikhlin.clone().unwrap_or_default();
            if !(m.min_exp < m.max_exp && m.exp_step > 0.0 && m.min_exp.is_finite() && m.max_exp.is_finite()) {
                d.push("mikhlin.exp_step", "need min_exp < max_exp and exp_step > 0");
            }
            d.count("mikhlin.trials", m.trials);
            match &m.symbol {
                SymbolConfig::Sign { axis } | SymbolConfig::RieszLike { axis } if *axis >= n => {
                    d.push("mikhlin.symbol.axis", format!("must be < {n}"));
                }
                SymbolConfig::Power { alpha } => d.multi_index("mikhlin.symbol.alpha", alpha, n),
                SymbolConfig::PsiH { l, alpha, mu, h } => {
                    embed_ranges(&mut d, "mikhlin.symbol", l, alpha, std::slice::from_ref(mu), n);
                    d.positive("mikhlin.symbol.h", *h);
                }
                SymbolConfig::Resolvent { lambda } | SymbolConfig::ParabolicPhi { lambda }
                    if !(lambda[0].is_finite() && lambda[1].is_finite()) =>
                {
                    d.push("mikhlin.symbol.lambda", "must be finite");
                }
                _ => {}
            }
        }
        Kind::Embed => match &cfg.embed {
            None => d.push("embed", "section [embed] with l and alpha is required"),
            Some(e) => {
                embed_ranges(&mut d, "embed", &e.l, &e.alpha, e.mu.as_deref().unwrap_or(&[]), n);
                d.positive("embed.h_min", e.h_min);
                d.positive("embed.h0", e.h0);
                if !(e.h_max >= e.h_min && e.h_max.is_finite()) {
                    d.push("embed.h_max", format!("must be finite and >= h_min = {}", e.h_min));
                }
                d.count("embed.h_points", e.h_points);
                d.count("embed.corpus", e.corpus);
                d.exponent("embed.p", e.p);
            }
        },
        Kind::Elliptic => {
            let e = cfg.elliptic.clone().unwrap_or_default();
            match &e.lambdas {
                Some(ls) => {
                    d.count("elliptic.lambdas", ls.len());
                    for (i, l) in ls.iter().enumerate() {
                        if !(l[0].is_finite() && l[1].is_finite()) {
                            d.push(format!("elliptic.lambdas[{i}]"), "must be finite");
                        }
                    }
                }
                None => {
                    d.count("elliptic.lambda_abs", e.lambda_abs.len());
                    d.count("elliptic.lambda_angles", e.lambda_angles.len());
                    for (i, &r) in e.lambda_abs.iter().enumerate() {
                        if !(r.is_finite() && r >= 0.0) {
                            d.push(format!("elliptic.lambda_abs[{i}]"), "must be finite and >= 0");
                        }
                    }
                    for (i, &a) in e.lambda_angles.iter().enumerate() {
                        if !(a.is_finite() && a.abs() < PI) {
                            d.push(format!("elliptic.lambda_angles[{i}]"), "must lie in (-pi, pi)");
                        }
                    }
                }
            }
            d.count("elliptic.corpus", e.corpus);
            d.exponent("elliptic.p", e.p);
            let l = cfg.principal.as_ref().map_or(1, |p| p.l).max(1);
            for (i, t) in e.lower.iter().enumerate() {
                let path = format!("elliptic.lower[{i}]");
                d.multi_index(&format!("{path}.alpha"), &t.alpha, n);
                let order = t.alpha.iter().sum::<u32>();
                if order >= 2 * l {
                    d.push(format!("{path}.alpha"), format!("order must be below 2l = {}", 2 * l));
                }
                let hi = 1.0 - order as f64 / (2 * l) as f64;
                if !(t.mu > 0.0 && t.mu < hi) {
                    d.push(format!("{path}.mu"), format!("must lie in (0, 1 - |alpha|/2l) = (0, {hi})"));
                }
                if !t.scale.is_finite() {
                    d.push(format!("{path}.scale"), "must be finite");
                }
                if let Some(m) = &t.matrix {
                    d.square(&format!("{path}.matrix"), m, dim, false);
                }
            }
        }
        Kind::Parabolic => {
            let p = cfg.parabolic.clone().unwrap_or_default();
            d.positive("parabolic.horizon", p.horizon);
            d.count("parabolic.steps", p.steps);
            d.count("parabolic.corpus", p.corpus);
            d.exponent("parabolic.p", p.p);
            d.exponent("parabolic.p1", p.p1);
        }
        Kind::System => {
            let s = cfg.system.clone().unwrap_or_default();
            if let Some(m) = &s.matrix {
                d.square("system.matrix", m, dim, true);
            } else if !s.growth.is_finite() {
                d.push("system.growth", "must be finite");
            }
            d.positive("system.horizon", s.horizon);
            d.count("system.steps", s.steps);
            d.count("system.corpus", s.corpus);
            d.exponent("system.p", s.p);
            d.exponent("system.p1", s.p1);
        }
        Kind::Degenerate => match &cfg.degenerate {
            None => d.push("degenerate", "section [degenerate] with nu is required"),
            Some(g) => {
                if g.nu.len() != n {
                    d.push("degenerate.nu", format!("needs {n} entries, got {}", g.nu.len()));
                }
                for (k, &v) in g.nu.iter().enumerate() {
                    if !(v.is_finite() && v >= 0.0) {
                        d.push(format!("degenerate.nu[{k}]"), "must be finite and >= 0");
                    }
                }
                d.positive("degenerate.horizon", g.horizon);
                d.count("degenerate.steps", g.steps);
                d.exponent("degenerate.p", g.p);
                d.exponent("degenerate.p1", g.p1);
                if !(g.ap_threshold.is_finite() && g.ap_threshold >= 1.0) {
                    d.push("degenerate.ap_threshold", "must be finite and >= 1");
                }
            }
        },
    }
    d.0
}

fn embed_ranges(d: &mut Diags, base: &str, l: &[u32], alpha: &[u32], mus: &[f64], n: usize) {
    d.multi_index(&format!("{base}.l"), l, n);
    d.multi_index(&format!("{base}.alpha"), alpha, n);
    if l.contains(&0) {
        d.push(format!("{base}.l"), "orders must be >= 1");
        return;
    }
    if l.len() != alpha.len() {
        return;
    }
    let kappa: f64 = alpha.iter().zip(l).map(|(&a, &lk)| a as f64 / lk as f64).sum();
    if kappa > 1.0 {
        d.push(format!("{base}.alpha"), format!("|alpha : l| = {kappa} exceeds 1"));
        return;
    }
    for (i, &mu) in mus.iter().enumerate() {
        if !(mu >= 0.0 && mu <= 1.0 - kappa + 1e-15) {
            d.push(format!("{base}.mu[{i}]"), format!("mu = {mu} outside the embedding range [0, 1 - kappa] = [0, {}]", 1.0 - kappa));
        }
    }
}

/// Files written and a short summary for the driver's final status line.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
}

/// Validate, then execute on a dedicated thread pool when `threads > 0`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let diags = validate(cfg);
    if let Some(first) = diags.first() {
        return Err(Error::Config(format!("{first} ({} diagnostics)", diags.len())));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| execute(cfg, out_dir))
    } else {
        execute(cfg, out_dir)
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    out_dir: &'a Path,
    grid: Grid,
    space: ValueSpace,
    outcome: Outcome,
}

impl Context<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn report(&mut self, report: &EstimateReport) -> Result<()> {
        let name = self.cfg.output.report.clone();
        self.write(&name, report.to_csv().as_bytes())?;
        self.note("max_ratio", format_number(report.max_ratio()));
        self.note("rows", report.rows.len().to_string());
        Ok(())
    }

    fn dump(&mut self, bytes: impl FnOnce() -> Vec<u8>) -> Result<()> {
        if let Some(name) = self.cfg.output.dump.clone() {
            self.write(&name, &bytes())?;
        }
        Ok(())
    }

    fn note(&mut self, key: &str, value: String) {
        self.outcome.summary.push((key.to_string(), value));
    }

    fn weight_on(&self, grid: &Grid) -> Result<Weight> {
        match &self.cfg.weight {
            WeightConfig::One => Ok(Weight::one(grid)),
            WeightConfig::Power { exponents } => Weight::axis_power(grid, exponents.clone()),
        }
    }

    fn operator(&self) -> Result<PositiveOperator> {
        match &self.cfg.operator {
            OperatorConfig::Identity => Ok(PositiveOperator::identity(self.space)),
            OperatorConfig::Dyadic { s } => PositiveOperator::dyadic(*s, self.space),
            OperatorConfig::Diagonal { entries } => PositiveOperator::diagonal(entries.clone(), self.space),
            OperatorConfig::Symmetric { matrix } => PositiveOperator::symmetric(to_matrix(matrix), self.space.q()),
        }
    }

    fn principal(&self) -> Result<PrincipalPart> {
        match &self.cfg.principal {
            None => Ok(PrincipalPart::laplacian(self.grid.dim())),
            Some(pc) => PrincipalPart::new(
                self.grid.dim(),
                pc.l,
                pc.terms.iter().map(|t| (MultiIndex(t.alpha.clone()), Complex64::new(t.re, t.im))).collect(),
            ),
        }
    }

    fn corpus(&self, count: usize) -> Result<Vec<GridFunction>> {
        BandLimited::inner_half(&self.grid).corpus(&self.grid, self.space, self.cfg.seed, count)
    }

    fn series_corpus(&self, count: usize, dt: f64, steps: usize) -> Result<Vec<TimeSeries>> {
        let b = BandLimited::inner_half(&self.grid);
        (0..count as u64).map(|i| b.time_series(&self.grid, self.space, self.cfg.seed, i, dt, steps)).collect()
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let grid = Grid::new(cfg.grid.extents.clone(), cfg.grid.sizes.clone())?;
    let space = ValueSpace::new(cfg.space.dim, cfg.space.q)?;
    let mut ctx = Context { cfg, out_dir, grid, space, outcome: Outcome { files: Vec::new(), summary: Vec::new() } };
    ctx.note("kind", cfg.kind.as_str().to_string());
    match cfg.kind {
        Kind::ApCheck => run_ap(&mut ctx)?,
        Kind::Mikhlin => run_mikhlin(&mut ctx)?,
        Kind::Embed => run_embed(&mut ctx)?,
        Kind::Elliptic => run_elliptic(&mut ctx)?,
        Kind::Parabolic => run_parabolic(&mut ctx)?,
        Kind::System => run_system(&mut ctx)?,
        Kind::Degenerate => run_degenerate(&mut ctx)?,
    }
    Ok(ctx.outcome)
}

fn run_ap(ctx: &mut Context) -> Result<()> {
    let ap = ctx.cfg.ap.clone().unwrap_or_default();
    let mut csv = String::from("m,constant\n");
    let mut last = 1.0;
    for r in 0..=ap.refinements {
        let g = ctx.grid.refined(1 << r)?;
        last = ap_constant(&ctx.weight_on(&g)?, ap.p, None)?;
        csv.push_str(&format!("{},{}\n", g.sizes()[0], format_number(last)));
        if let Some(bound) = ap.threshold {
            if last > bound {
                return Err(Error::ApViolation { constant: last, bound });
            }
        }
    }
    let name = ctx.cfg.output.report.clone();
    ctx.write(&name, csv.as_bytes())?;
    ctx.note("constant", format_number(last));
    let w = ctx.weight_on(&ctx.grid)?;
    ctx.dump(|| io::encode_weight(&w))
}

fn symbol(ctx: &Context, s: &SymbolConfig) -> Result<Box<dyn OperatorSymbol>> {
    let lam = |l: &[f64; 2]| Complex64::new(l[0], l[1]);
    Ok(match s {
        SymbolConfig::Identity => Box::new(Identity),
        SymbolConfig::Sign { axis } => Box::new(HilbertSign { axis: *axis }),
        SymbolConfig::RieszLike { axis } => Box::new(RieszLike { axis: *axis }),
        SymbolConfig::Power { alpha } => Box::new(Power { alpha: MultiIndex(alpha.clone()) }),
        SymbolConfig::LogAbs => Box::new(LogAbs),
        SymbolConfig::Resolvent { lambda } => {
            Box::new(Resolvent { a: ctx.operator()?, principal: ctx.principal()?, lambda: lam(lambda) })
        }
        SymbolConfig::ParabolicPhi { lambda } => {
            Box::new(ParabolicPhi { a: ctx.operator()?, principal: ctx.principal()?, lambda: lam(lambda) })
        }
        SymbolConfig::PsiH { l, alpha, mu, h } => Box::new(psi_h_symbol(&EmbeddingCase {
            l: Anisotropy::new(l.clone())?,
            alpha: MultiIndex(alpha.clone()),
            mu: *mu,
            h: *h,
            a: ctx.operator()?,
            p: 2.0,
            gamma: Weight::one(&ctx.grid),
        })?),
    })
}

fn run_mikhlin(ctx: &mut Context) -> Result<()> {
    let m = ctx.cfg.mikhlin.clone().unwrap_or_default();
    let sym = symbol(ctx, &m.symbol)?;
    let opts = MikhlinOptions {
        min_exp: m.min_exp,
        max_exp: m.max_exp,
        exp_step: m.exp_step,
        abs_power: m.abs_power,
        growth_check: m.growth_check,
        rbound: RBoundOptions { seed: ctx.cfg.seed, trials: m.trials, ..Default::default() },
        ..Default::default()
    };
    let cert = mikhlin_certificate(sym.as_ref(), ctx.grid.dim(), ctx.space, &opts)?;
    let mut csv = String::from("beta,constant\n");
    for (beta, c) in &cert.constants {
        let tag: String = beta.0.iter().map(|b| b.to_string()).collect();
        csv.push_str(&format!("{tag},{}\n", format_number(*c)));
    }
    csv.push_str(&format!("total,{}\n", format_number(cert.total)));
    let name = ctx.cfg.output.report.clone();
    ctx.write(&name, csv.as_bytes())?;
    ctx.note("total", format_number(cert.total));
    ctx.note("bounded", cert.bounded.to_string());
    Ok(())
}

fn run_embed(ctx: &mut Context) -> Result<()> {
    let e = ctx.cfg.embed.clone().expect("validated");
    let l = Anisotropy::new(e.l.clone())?;
    let alpha = MultiIndex(e.alpha.clone());
    let kappa = l.kappa(&alpha);
    let mus = e.mu.clone().unwrap_or_else(|| vec![0.0, (1.0 - kappa) / 2.0, 1.0 - kappa]);
    let sweep = log_sweep(e.h_min, e.h_max, e.h_points);
    let corpus = ctx.corpus(e.corpus)?;
    let gamma = ctx.weight_on(&ctx.grid)?;
    let a = ctx.operator()?;
    let mut report = EstimateReport::new(&["mu", "h"]);
    let mut mult = EstimateReport::new(&["mu", "forcing", "h_star", "beyond_h0"]);
    for &mu in &mus {
        let case = EmbeddingCase { l: l.clone(), alpha: alpha.clone(), mu, h: e.h0, a: a.clone(), p: e.p, gamma: gamma.clone() };
        for (k, u) in corpus.iter().enumerate() {
            report.merge(embedding_inequality_report(u, &case, &sweep)?);
            let m = multiplicative_estimate_report(u, &case, e.h0)?;
            for row in &m.report.rows {
                mult.push(vec![mu, k as f64, m.h_star, f64::from(u8::from(m.beyond_h0))], row.lhs, row.rhs);
            }
        }
    }
    ctx.report(&report)?;
    ctx.write("multiplicative.csv", mult.to_csv().as_bytes())?;
    ctx.note("multiplicative_max_ratio", format_number(mult.max_ratio()));
    let u0 = corpus[0].clone();
    ctx.dump(|| io::encode_grid_function(&u0))
}

fn lambdas(e: &EllipticConfig) -> Vec<Complex64> {
    match &e.lambdas {
        Some(ls) => ls.iter().map(|l| Complex64::new(l[0], l[1])).collect(),
        None => e
            .lambda_abs
            .iter()
            .flat_map(|&r| e.lambda_angles.iter().map(move |&a| Complex64::from_polar(r, a)))
            .collect(),
    }
}

fn run_elliptic(ctx: &mut Context) -> Result<()> {
    let e = ctx.cfg.elliptic.clone().unwrap_or_default();
    let principal = ctx.principal()?;
    let cond = check_ellipticity(&principal, &ctx.grid)?;
    ctx.note("phi1", format_number(cond.phi1));
    ctx.note("m0", format_number(cond.m0));
    let a = ctx.operator()?;
    let ls = lambdas(&e);
    for &l in &ls {
        cond.require(l)?;
    }
    let corpus = ctx.corpus(e.corpus)?;
    let gamma = ctx.weight_on(&ctx.grid)?;
    let report = coercive_report(&principal, &a, &corpus, &ls, e.p, &gamma)?;
    ctx.report(&report)?;
    if !e.lower.is_empty() {
        let terms: Vec<LowerOrderTerm> = e
            .lower
            .iter()
            .map(|t| {
                let base = match &t.matrix {
                    None => OpValue::identity(),
                    Some(m) => OpValue::Dense(to_matrix(m).map(|x| Complex64::new(x, 0.0))),
                };
                LowerOrderTerm {
                    alpha: MultiIndex(t.alpha.clone()),
                    coefficient: Coefficient::Uniform(base.scale(Complex64::new(t.scale, 0.0))),
                    mu: t.mu,
                }
            })
            .collect();
        let mut csv = String::from("lambda_re,lambda_im,forcing,iterations,residual\n");
        for &l in &ls {
            let prob = EllipticProblem::new(principal.clone(), a.clone(), l).with_lower(terms.clone());
            for (k, f) in corpus.iter().enumerate() {
                let sol = solve_perturbed(&prob, f, &NeumannOptions::default())?;
                let res = prob.residual(&sol.u, f)?;
                csv.push_str(&format!(
                    "{},{},{k},{},{}\n",
                    format_number(l.re),
                    format_number(l.im),
                    sol.term_norms.len(),
                    format_number(res)
                ));
            }
        }
        ctx.write("perturbed.csv", csv.as_bytes())?;
    }
    if ctx.cfg.output.dump.is_some() {
        let prob = EllipticProblem::new(principal, a, ls[0]);
        let u = crate::elliptic::solve_principal(&prob, &corpus[0])?;
        ctx.dump(|| io::encode_grid_function(&u))?;
    }
    Ok(())
}

fn run_parabolic(ctx: &mut Context) -> Result<()> {
    let pc = ctx.cfg.parabolic.clone().unwrap_or_default();
    let prob = ParabolicProblem::new(ctx.principal()?, ctx.operator()?, pc.horizon, pc.steps)?;
    let corpus = ctx.series_corpus(pc.corpus, prob.dt(), pc.steps)?;
    let gamma = ctx.weight_on(&ctx.grid)?;
    let report = maximal_regularity_report(&prob, &corpus, pc.p, pc.p1, &gamma)?;
    ctx.report(&report)?;
    if ctx.cfg.output.dump.is_some() {
        let sol = solve_cauchy(&prob, &corpus[0])?;
        ctx.dump(|| io::encode_time_series(&sol.u))?;
    }
    Ok(())
}

fn run_system(ctx: &mut Context) -> Result<()> {
    let sc = ctx.cfg.system.clone().unwrap_or_default();
    let n = ctx.space.dim();
    let matrix = match &sc.matrix {
        Some(m) => to_matrix(m),
        None => DMatrix::from_fn(n, n, |i, j| if i == j { (i as f64 * sc.growth).exp2() } else { 0.0 }),
    };
    let prob = SystemProblem::new(ctx.principal()?, matrix, ctx.space.q(), sc.horizon, sc.steps)?;
    ctx.note("c0", format_number(prob.c0));
    let corpus = ctx.series_corpus(sc.corpus, prob.parabolic.dt(), sc.steps)?;
    let gamma = ctx.weight_on(&ctx.grid)?;
    let mut report = EstimateReport::new(&["forcing", "variant"]);
    let mut first = None;
    for (k, f) in corpus.iter().enumerate() {
        let sol = solve_system(&prob, f, sc.p, sc.p1, &gamma)?;
        for row in &sol.report.rows {
            report.push(vec![k as f64, row.params[0]], row.lhs, row.rhs);
        }
        if first.is_none() {
            first = Some(sol.solution.u);
        }
    }
    ctx.report(&report)?;
    let u = first.expect("corpus is non-empty");
    ctx.dump(|| io::encode_time_series(&u))
}

fn run_degenerate(ctx: &mut Context) -> Result<()> {
    let dc = ctx.cfg.degenerate.clone().expect("validated");
    let profiles = dc.nu.iter().map(|&v| if v == 0.0 { Degeneracy::One } else { Degeneracy::Power(v) }).collect();
    let prob = DegenerateProblem {
        profiles,
        grid: ctx.grid.clone(),
        parabolic: ParabolicProblem::new(ctx.principal()?, ctx.operator()?, dc.horizon, dc.steps)?,
        ap_threshold: dc.ap_threshold,
    };
    let ext = ctx.grid.extents().to_vec();
    let n = ctx.space.dim();
    let sol = solve_degenerate(
        &prob,
        ctx.space,
        |t, x, o| {
            let s: f64 = x.iter().zip(&ext).map(|(&xk, &l)| (PI * xk / l).cos()).product();
            o[..n].fill(Complex64::new(t * s, 0.0));
        },
        dc.p,
        dc.p1,
    )?;
    let row = &sol.report.rows[0];
    let csv = format!(
        "ap_constant,residual,lhs,rhs,ratio\n{},{},{},{},{}\n",
        format_number(sol.ap_constant),
        format_number(sol.residual),
        format_number(row.lhs),
        format_number(row.rhs),
        format_number(row.ratio)
    );
    let name = ctx.cfg.output.report.clone();
    ctx.write(&name, csv.as_bytes())?;
    ctx.note("residual", format_number(sol.residual));
    ctx.note("ap_constant", format_number(sol.ap_constant));
    let u = sol.solution.u;
    ctx.dump(|| io::encode_time_series(&u))
}
