//! Configuration-driven analysis runs and their report files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::divergence::{Contrast, Divergence};
use crate::effects::{
    attach_std_errors, effect_table, effect_table_tagged, self_duality_report, verify_shapley_sum,
    verify_sobol_decomposition, Covariance, EffectError, EffectTable,
};
use crate::estimators::{
    estimate_sensitivity_map, Budget, EstimateError, Method, SensitivityEstimate, SubsetFailure,
};
use crate::input::{InputDistribution, Marginal};
use crate::lattice::{dual, full_bits, LatticeError, LatticeMap, SubsetMask};
use crate::models::{Model, ModelSpec};
use crate::weights::{WeightFamily, WEIGHT_TOL};

pub fn serialize_mask<S: Serializer>(mask: &SubsetMask, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(mask)
}

pub fn serialize_opt_mask<S: Serializer>(mask: &Option<SubsetMask>, s: S) -> Result<S::Ok, S::Error> {
    match mask {
        Some(m) => s.collect_str(m),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("estimation failed: {0}")]
    Estimation(#[from] EstimateError),
    #[error(transparent)]
    Effect(#[from] EffectError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Estimation(_) | RunError::Effect(_) => 3,
            RunError::Io { .. } => 1,
        }
    }
}

impl From<LatticeError> for RunError {
    fn from(e: LatticeError) -> Self {
        RunError::Config(e.to_string())
    }
}

fn config_err(field: &str, message: impl fmt::Display) -> RunError {
    RunError::Config(format!("{field}: {message}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsConfig {
    pub marginals: Vec<Marginal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Vec<Vec<f64>>>,
}

/// A contrast written either as `"median"` / `"quantile:0.9"` or as a table
/// `{ kind = "quantile", alpha = 0.9 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContrastSpec {
    Name(String),
    Table { kind: String, alpha: Option<f64> },
}

impl ContrastSpec {
    pub fn resolve(&self) -> Result<Contrast, RunError> {
        let parsed = match self {
            ContrastSpec::Name(s) => s.parse(),
            ContrastSpec::Table { kind, alpha } => match (kind.as_str(), alpha) {
                ("quantile", Some(a)) => Contrast::quantile(*a),
                ("quantile", None) => return Err(config_err("method.contrast.alpha", "required for quantile")),
                (k, _) => k.parse(),
            },
        };
        parsed.map_err(|e| config_err("method.contrast", e))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<Divergence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<ContrastSpec>,
}

impl MethodConfig {
    pub fn resolve(&self) -> Result<Method, RunError> {
        match (&self.divergence, &self.contrast) {
            (Some(_), Some(_)) => Err(config_err("method", "set either divergence or contrast, not both")),
            (Some(d), None) => Ok(Method::Divergence(*d)),
            (None, Some(c)) => Ok(Method::Contrast(c.resolve()?)),
            (None, None) => Ok(Method::Divergence(Divergence::SquaredHalf)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    /// Per-subset sample size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_inner: Option<usize>,
    /// Total model evaluations, split evenly across subsets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<usize>,
    #[serde(default)]
    pub shared_base: bool,
}

impl BudgetConfig {
    pub fn resolve(&self, dim: usize, method: Method) -> Result<Budget, RunError> {
        let mut budget = match (self.n, self.total) {
            (Some(_), Some(_)) => return Err(config_err("budget", "set either n or total, not both")),
            (Some(n), None) => Budget::per_subset(n),
            (None, Some(total)) => Budget::from_total(total, dim, method, self.shared_base),
            (None, None) => return Err(config_err("budget", "one of n or total is required")),
        };
        budget.shared_base = self.shared_base;
        if budget.n < 2 {
            return Err(config_err("budget", format!("per-subset sample size {} is below 2", budget.n)));
        }
        if let Some(inner) = self.n_inner {
            if inner < 2 {
                return Err(config_err("budget.n_inner", "must be at least 2"));
            }
            budget.n_inner = Some(inner);
        }
        Ok(budget)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    /// `uniform`, `mobius`, `shapley` or `custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Custom weight table; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl WeightsConfig {
    /// A family name or, failing that, a path to a weight table.
    pub fn from_selector(selector: &str) -> Self {
        match selector {
            "uniform" | "mobius" | "shapley" => Self {
                family: Some(selector.to_string()),
                path: None,
            },
            path => Self {
                family: Some("custom".into()),
                path: Some(PathBuf::from(path)),
            },
        }
    }

    pub fn resolve(&self, dim: usize, base_dir: &Path) -> Result<WeightFamily, RunError> {
        let family = self
            .family
            .as_deref()
            .unwrap_or(if self.path.is_some() { "custom" } else { "shapley" });
        let built = match family {
            "uniform" => WeightFamily::uniform(dim),
            "mobius" => WeightFamily::mobius(dim),
            "shapley" => WeightFamily::shapley(dim),
            "custom" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| config_err("weights.path", "required for custom weights"))?;
                let path = base_dir.join(path);
                if !path.is_file() {
                    return Err(config_err("weights.path", format!("{} does not exist", path.display())));
                }
                WeightFamily::from_weight_file(&path, dim)
            }
            other => return Err(config_err("weights.family", format!("unknown family `{other}`"))),
        };
        built.map_err(|e| config_err("weights", e))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also compute effects of the dual map.
    #[serde(default)]
    pub dual: bool,
}

/// A complete analysis description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub seed: Option<u64>,
    pub model: ModelSpec,
    pub inputs: InputsConfig,
    #[serde(default)]
    pub method: MethodConfig,
    pub budget: BudgetConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, RunError> {
        let mut cfg: AnalysisConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::from_toml_str(&text, base)?;
        if let Some(p) = &cfg.weights.path {
            if !base.join(p).is_file() {
                return Err(config_err("weights.path", format!("{} does not exist", base.join(p).display())));
            }
        }
        cfg.base_dir = base.to_path_buf();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Output directory; relative paths resolve against the working directory.
    pub fn out_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("gsa_out"))
    }

    pub fn distribution(&self) -> Result<InputDistribution, RunError> {
        let marginals = self.inputs.marginals.clone();
        let dist = match &self.inputs.correlation {
            None => InputDistribution::independent(marginals),
            Some(r) => InputDistribution::gaussian_copula(marginals, r),
        };
        dist.map_err(|e| config_err("inputs", e))
    }

    /// Checks the config and builds every component of the run.
    pub fn resolve(&self) -> Result<ResolvedConfig, RunError> {
        let seed = self
            .seed
            .ok_or_else(|| config_err("seed", "missing; a seed is mandatory"))?;
        self.model.validate().map_err(|e| config_err("model", e))?;
        let dist = self.distribution()?;
        let dim = dist.dim();
        if self.model.dim() != dim {
            return Err(config_err(
                "inputs.marginals",
                format!("model `{}` takes {} inputs but {dim} marginals are given", self.model.id(), self.model.dim()),
            ));
        }
        crate::lattice::check_dim(dim).map_err(|e| config_err("inputs.marginals", e))?;
        let method = self.method.resolve()?;
        let budget = self.budget.resolve(dim, method)?;
        if budget.shared_base && matches!(method, Method::Contrast(_)) {
            return Err(config_err("budget.shared_base", "only available with a divergence method"));
        }
        let weights = self.weights.resolve(dim, &self.base_dir)?;
        Ok(ResolvedConfig {
            seed,
            model: self.model.clone(),
            dist,
            method,
            budget,
            weights,
            dual: self.output.dual,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub model: ModelSpec,
    pub dist: InputDistribution,
    pub method: Method,
    pub budget: Budget,
    pub weights: WeightFamily,
    pub dual: bool,
}

/// One algebraic check on the estimated map. Only `enforced` rows count
/// towards `--strict`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifierRow {
    pub check: String,
    pub residual: f64,
    #[serde(serialize_with = "serialize_opt_mask")]
    pub argmax: Option<SubsetMask>,
    pub tolerance: f64,
    pub passed: bool,
    pub enforced: bool,
}

/// In-memory results of a run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub config: AnalysisConfig,
    pub resolved: ResolvedConfig,
    pub estimate: SensitivityEstimate,
    pub effects: EffectTable,
    pub dual_map: Option<(LatticeMap, LatticeMap)>,
    pub dual_effects: Option<EffectTable>,
    pub verifiers: Vec<VerifierRow>,
}

impl Analysis {
    pub fn failures(&self) -> &[SubsetFailure] {
        &self.estimate.failures
    }

    pub fn verifiers_passed(&self) -> bool {
        self.verifiers.iter().all(|v| v.passed || !v.enforced)
    }

    /// 0 on success, 3 when any subset failed, 4 when `strict` and an
    /// enforced verifier failed.
    pub fn exit_code(&self, strict: bool) -> i32 {
        if !self.estimate.is_complete() {
            3
        } else if strict && !self.verifiers_passed() {
            4
        } else {
            0
        }
    }
}

/// Standard errors of `τ*(A) = τ(D) - τ(D∖A)`.
fn dual_std_errors(dim: usize, cov: &Covariance) -> LatticeMap {
    let full = full_bits(dim) as usize;
    LatticeMap::from_fn(dim, |a| {
        let mut c = vec![0.0; 1 << dim];
        c[full] += 1.0;
        c[full ^ a.index()] -= 1.0;
        cov.quadratic_form(&c).max(0.0).sqrt()
    })
    .expect("dimension already validated")
}

/// Estimates the map and computes effects and verifiers, without writing files.
pub fn analyze(config: &AnalysisConfig) -> Result<Analysis, RunError> {
    let resolved = config.resolve()?;
    let estimate = estimate_sensitivity_map(
        &resolved.model,
        &resolved.dist,
        resolved.method,
        resolved.budget,
        resolved.seed,
    )?;
    let tau = &estimate.map;
    let w = &resolved.weights;
    let dim = tau.dim();

    let effects = attach_std_errors(effect_table(tau, w)?, w, &estimate.covariance, false)?;
    let (dual_map, dual_effects) = if resolved.dual {
        let map = dual(tau);
        let se = dual_std_errors(dim, &estimate.covariance);
        let table = effect_table_tagged(&map, w, "dual(tau)")?;
        let table = attach_std_errors(table, w, &estimate.covariance, true)?;
        (Some((map, se)), Some(table))
    } else {
        (None, None)
    };

    let verifiers = if estimate.is_complete() {
        verifiers(tau, w, &effects, dual_map.as_ref().map(|(m, _)| m))?
    } else {
        Vec::new()
    };

    Ok(Analysis {
        config: config.clone(),
        resolved,
        estimate,
        effects,
        dual_map,
        dual_effects,
        verifiers,
    })
}

fn row(report: crate::effects::ResidualReport, name: String, enforced: bool) -> VerifierRow {
    VerifierRow {
        check: name,
        residual: report.residual,
        argmax: report.argmax,
        tolerance: report.tolerance,
        passed: report.passed,
        enforced,
    }
}

fn verifiers(
    tau: &LatticeMap,
    w: &WeightFamily,
    effects: &EffectTable,
    dual_map: Option<&LatticeMap>,
) -> Result<Vec<VerifierRow>, RunError> {
    let dim = tau.dim();
    let mut out = Vec::new();

    let validity = w.validate();
    out.push(VerifierRow {
        check: format!("weight_validity[{}]", w.id()),
        residual: validity.max_deviation,
        argmax: validity.worst,
        tolerance: validity.tolerance,
        passed: validity.passed,
        enforced: true,
    });

    let mobius = WeightFamily::mobius(dim).map_err(|e| RunError::Config(e.to_string()))?;
    let sobol = verify_sobol_decomposition(tau, &effect_table(tau, &mobius)?)?;
    out.push(row(sobol, "sobol_decomposition[tau]".into(), true));
    if let Some(dm) = dual_map {
        let sobol = verify_sobol_decomposition(dm, &effect_table(dm, &mobius)?)?;
        out.push(row(sobol, "sobol_decomposition[dual]".into(), true));
    }

    let condition = w.check_shapley_condition();
    out.push(VerifierRow {
        check: format!("shapley_condition[{}]", w.id()),
        residual: (condition.empty_sum - 1.0)
            .abs()
            .max((condition.full_sum - 1.0).abs())
            .max(condition.max_middle_residual),
        argmax: condition.worst_middle,
        tolerance: condition.tolerance,
        passed: condition.passed,
        enforced: false,
    });
    let sum = verify_shapley_sum(tau, effects)?;
    out.push(row(sum, format!("shapley_sum[{}]", w.id()), condition.passed));
    if w.id() != "shapley" {
        let shapley = WeightFamily::shapley(dim).map_err(|e| RunError::Config(e.to_string()))?;
        let sum = verify_shapley_sum(tau, &effect_table(tau, &shapley)?)?;
        out.push(row(sum, "shapley_sum[shapley]".into(), true));
    }

    let (palindromic, pal_arg) = SubsetMask::all(dim)?
        .filter(|b| b.len() % 2 == 1)
        .map(|b| w.palindromic_deviation(b))
        .fold((0.0f64, None), |acc, (d, a)| if d > acc.0 { (d, a) } else { acc });
    let is_palindromic = palindromic <= WEIGHT_TOL;
    out.push(VerifierRow {
        check: format!("palindromic_condition[{}]", w.id()),
        residual: palindromic,
        argmax: pal_arg,
        tolerance: WEIGHT_TOL,
        passed: is_palindromic,
        enforced: false,
    });
    let duality = self_duality_report(tau, w)?;
    let worst = duality
        .rows
        .iter()
        .filter(|r| r.b.len() % 2 == 1)
        .max_by(|x, y| x.discrepancy.total_cmp(&y.discrepancy))
        .map(|r| r.b);
    out.push(VerifierRow {
        check: format!("self_duality_odd[{}]", w.id()),
        residual: duality.max_odd_discrepancy,
        argmax: worst.filter(|_| duality.max_odd_discrepancy > 0.0),
        tolerance: duality.tolerance,
        passed: duality.odd_passed,
        enforced: is_palindromic,
    });
    Ok(out)
}

fn fluctuation_header(dim: usize) -> String {
    (1..=dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

fn fluctuation_bits(a: SubsetMask) -> String {
    a.indicators().iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
}

fn quoted(a: SubsetMask) -> String {
    format!("\"{a}\"")
}

/// Sensitivity map in design order: input 1 is the leftmost fluctuation column.
pub fn sensitivity_map_csv(est: &SensitivityEstimate) -> String {
    let dim = est.map.dim();
    let mut out = format!("run,{},subset,tau,std_error,n,n_inner,seed,kind,status\n", fluctuation_header(dim));
    for r in 0..1usize << dim {
        let a = SubsetMask::from_design_index(r, dim).expect("row in range");
        let line = match est.report(a) {
            Some(rep) => format!(
                "{},{},{},{},{},{},{},{},{},ok",
                r + 1,
                fluctuation_bits(a),
                quoted(a),
                rep.estimate,
                rep.std_error,
                rep.n,
                rep.n_inner.map(|v| v.to_string()).unwrap_or_default(),
                rep.seed,
                serde_json::to_value(rep.kind).expect("enum").as_str().unwrap_or_default(),
            ),
            None => format!("{},{},{},NaN,NaN,,,,,failed", r + 1, fluctuation_bits(a), quoted(a)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn effects_csv(table: &EffectTable) -> String {
    let dim = table.dim();
    let mut out = format!("row,{},subset,effect,std_error,weights,source\n", fluctuation_header(dim));
    for r in 0..1usize << dim {
        let b = SubsetMask::from_design_index(r, dim).expect("row in range");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r + 1,
            fluctuation_bits(b),
            quoted(b),
            table.get(b),
            table.std_error(b),
            table.weights_id,
            table.source_id,
        ));
    }
    out
}

pub fn dual_map_csv(map: &LatticeMap, se: &LatticeMap) -> String {
    let dim = map.dim();
    let mut out = format!("run,{},subset,tau_dual,std_error\n", fluctuation_header(dim));
    for r in 0..1usize << dim {
        let a = SubsetMask::from_design_index(r, dim).expect("row in range");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r + 1,
            fluctuation_bits(a),
            quoted(a),
            map.get(a),
            se.get(a)
        ));
    }
    out
}

pub fn verifiers_csv(rows: &[VerifierRow]) -> String {
    let mut out = String::from("check,residual,argmax,tolerance,passed,enforced\n");
    for v in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v.check,
            v.residual,
            v.argmax.map(quoted).unwrap_or_default(),
            v.tolerance,
            v.passed,
            v.enforced
        ));
    }
    out
}

#[derive(Serialize)]
struct MapEntry {
    run: usize,
    #[serde(serialize_with = "serialize_mask")]
    subset: SubsetMask,
    value: f64,
    std_error: f64,
}

fn map_entries(map: &LatticeMap, se: &LatticeMap) -> Vec<MapEntry> {
    let dim = map.dim();
    (0..1usize << dim)
        .map(|r| {
            let a = SubsetMask::from_design_index(r, dim).expect("row in range");
            MapEntry {
                run: r + 1,
                subset: a,
                value: map.get(a),
                std_error: se.get(a),
            }
        })
        .collect()
}

fn table_entries(t: &EffectTable) -> Vec<MapEntry> {
    let se = t
        .std_errors
        .clone()
        .unwrap_or_else(|| LatticeMap::zeros(t.dim()).expect("valid dimension"));
    map_entries(&t.effects, &se)
}

#[derive(Serialize)]
struct EffectsReport {
    weights: String,
    source: String,
    effects: Vec<MapEntry>,
}

impl EffectsReport {
    fn new(t: &EffectTable) -> Self {
        Self {
            weights: t.weights_id.clone(),
            source: t.source_id.clone(),
            effects: table_entries(t),
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    model: &'a ModelSpec,
    inputs: &'a InputsConfig,
    method: String,
    budget: Budget,
    seed: u64,
    dim: usize,
    estimates: Vec<&'a crate::estimators::EstimateReport>,
    failures: &'a [SubsetFailure],
    effects: EffectsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_map: Option<Vec<MapEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_effects: Option<EffectsReport>,
    verifiers: &'a [VerifierRow],
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    dim: usize,
    model: &'static str,
    method: String,
    budget: Budget,
    weights: String,
    dual: bool,
    complete: bool,
    files: &'a [String],
}

/// Writes every report file into `dir` and returns their names.
pub fn write_reports(analysis: &Analysis, dir: &Path) -> Result<Vec<String>, RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let est = &analysis.estimate;
    let mut files: Vec<(String, String)> = vec![
        ("sensitivity_map.csv".into(), sensitivity_map_csv(est)),
        ("effects.csv".into(), effects_csv(&analysis.effects)),
    ];
    if let (Some((map, se)), Some(de)) = (&analysis.dual_map, &analysis.dual_effects) {
        files.push(("dual_map.csv".into(), dual_map_csv(map, se)));
        files.push(("dual_effects.csv".into(), effects_csv(de)));
    }
    files.push(("verifiers.csv".into(), verifiers_csv(&analysis.verifiers)));

    let report = JsonReport {
        model: &analysis.resolved.model,
        inputs: &analysis.config.inputs,
        method: est.method.name(),
        budget: est.budget,
        seed: est.seed,
        dim: est.map.dim(),
        estimates: est.reports.iter().flatten().collect(),
        failures: &est.failures,
        effects: EffectsReport::new(&analysis.effects),
        dual_map: analysis.dual_map.as_ref().map(|(m, se)| map_entries(m, se)),
        dual_effects: analysis.dual_effects.as_ref().map(EffectsReport::new),
        verifiers: &analysis.verifiers,
    };
    files.push((
        "report.json".into(),
        serde_json::to_string_pretty(&report).expect("report is serializable") + "\n",
    ));

    let mut names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    names.push("manifest.json".into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: est.seed,
        dim: est.map.dim(),
        model: analysis.resolved.model.id(),
        method: est.method.name(),
        budget: est.budget,
        weights: analysis.resolved.weights.id(),
        dual: analysis.resolved.dual,
        complete: est.is_complete(),
        files: &names,
    };
    files.push((
        "manifest.json".into(),
        serde_json::to_string_pretty(&manifest).expect("manifest is serializable") + "\n",
    ));

    for (name, body) in &files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
    }
    Ok(names)
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub analysis: Analysis,
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self, strict: bool) -> i32 {
        self.analysis.exit_code(strict)
    }
}

/// Runs the analysis and writes its reports to the configured directory.
/// Partial results are written even when some subsets fail.
pub fn run(config: &AnalysisConfig) -> Result<RunSummary, RunError> {
    let analysis = analyze(config)?;
    let out_dir = config.out_dir();
    let files = write_reports(&analysis, &out_dir)?;
    Ok(RunSummary {
        analysis,
        out_dir,
        files,
    })
}

/// Side-by-side weights `p_B(A)` of several families for one `B`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightComparison {
    pub dim: usize,
    #[serde(serialize_with = "serialize_mask")]
    pub b: SubsetMask,
    pub families: Vec<String>,
    pub rows: Vec<WeightRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightRow {
    #[serde(serialize_with = "serialize_mask")]
    pub a: SubsetMask,
    /// The conditional-effect term weighted by this row.
    pub term: String,
    pub weights: Vec<f64>,
}

/// Weight table for `B`: one row per `A ⊂ D∖B`, one column per family.
pub fn explain_weights(
    dim: usize,
    b: SubsetMask,
    families: &[WeightFamily],
) -> Result<WeightComparison, LatticeError> {
    b.ensure_dim(dim)?;
    for f in families {
        if f.dim() != dim {
            return Err(LatticeError::DimensionMismatch {
                expected: dim,
                found: f.dim(),
            });
        }
    }
    let rows = b
        .complement()
        .subsets()
        .map(|a| WeightRow {
            a,
            term: format!("tau({}) - tau({a})", a.union(b)),
            weights: families.iter().map(|f| f.weight(b, a)).collect(),
        })
        .collect();
    Ok(WeightComparison {
        dim,
        b,
        families: families.iter().map(|f| f.id()).collect(),
        rows,
    })
}

/// `p/q` when `w` is a fraction with a small denominator, else decimal.
pub fn format_weight(w: f64) -> String {
    for q in 1..=4096u32 {
        let p = (w * f64::from(q)).round();
        if (w - p / f64::from(q)).abs() <= 1e-12 {
            return if q == 1 { format!("{p}") } else { format!("{p}/{q}") };
        }
    }
    format!("{w:.6}")
}

impl WeightComparison {
    pub fn to_csv(&self) -> String {
        let mut out = format!("A,term,{}\n", self.families.join(","));
        for r in &self.rows {
            let ws: Vec<String> = r.weights.iter().map(|w| format_weight(*w)).collect();
            out.push_str(&format!("\"{}\",{},{}\n", r.a, r.term, ws.join(",")));
        }
        out
    }
}

impl fmt::Display for WeightComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "weights p_B(A) for B = {} (d = {})", self.b, self.dim)?;
        let term_w = self.rows.iter().map(|r| r.term.len()).max().unwrap_or(4).max(4);
        write!(f, "{:<term_w$}", "term")?;
        for name in &self.families {
            write!(f, "  {name:>9}")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            write!(f, "{:<term_w$}", r.term)?;
            for w in &r.weights {
                write!(f, "  {:>9}", format_weight(*w))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
