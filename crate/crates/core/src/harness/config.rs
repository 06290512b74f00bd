//! Flat `key = value` run configuration.
//!
//! Values are layered: the problem preset first, then the config file, then
//! command-line overrides. Every key is typed and scoped to ODE or Riemann
//! problems; the resolved set can be written back out with [`Resolved::echo`]
//! and read again to reproduce a run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use super::presets::{self, OdeProblem, ProblemKind};
use super::HarnessError;
use crate::eos::{CellPrimitive, EosPair, EosPhase, InterfaceClosure, InterfaceVelocity, OdeParams, PrimitiveState};
use crate::fv::{Boundary, HyperbolicConfig, Limiter, PdePhysics, RiemannProblem, RiemannSolver, RunOptions, Splitting};
use crate::reference::RkglSettings;
use crate::relax::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Float,
    Int,
    Bool,
    FloatList,
    /// Float or `auto`.
    OptFloat,
    Choice(&'static [&'static str]),
    Problem,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Float => f.write_str("a number"),
            ValueKind::Int => f.write_str("a non-negative integer"),
            ValueKind::Bool => f.write_str("true or false"),
            ValueKind::FloatList => f.write_str("a comma-separated list of numbers"),
            ValueKind::OptFloat => f.write_str("a number or `auto`"),
            ValueKind::Choice(options) => write!(f, "one of {}", options.join(", ")),
            ValueKind::Problem => f.write_str("a problem name"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Common,
    Ode,
    Rp,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: ValueKind,
    pub scope: Scope,
}

const fn key(name: &'static str, kind: ValueKind, scope: Scope) -> KeySpec {
    KeySpec { name, kind, scope }
}

use Scope::{Common, Ode, Rp};
use ValueKind::{Bool, Choice, Float, FloatList, Int, OptFloat, Problem};

const CLOSURES: &[&str] = &["simple", "impedance", "impedance-weighted"];

/// Every accepted key, in echo order.
pub const KEYS: &[KeySpec] = &[
    key("problem", Problem, Common),
    key("t_end", Float, Common),
    // initial state of ODE problems
    key("u1", Float, Ode),
    key("u2", Float, Ode),
    key("p1", Float, Ode),
    key("p2", Float, Ode),
    key("alpha1", Float, Ode),
    key("m1", Float, Ode),
    key("m2", Float, Ode),
    // Riemann data
    key("x_min", Float, Rp),
    key("x_max", Float, Rp),
    key("x_jump", Float, Rp),
    key("left_alpha1", Float, Rp),
    key("left_rho1", Float, Rp),
    key("left_rho2", Float, Rp),
    key("left_u1", Float, Rp),
    key("left_u2", Float, Rp),
    key("left_p1", Float, Rp),
    key("left_p2", Float, Rp),
    key("right_alpha1", Float, Rp),
    key("right_rho1", Float, Rp),
    key("right_rho2", Float, Rp),
    key("right_u1", Float, Rp),
    key("right_u2", Float, Rp),
    key("right_p1", Float, Rp),
    key("right_p2", Float, Rp),
    // physics
    key("gamma1", Float, Common),
    key("pi1", Float, Common),
    key("gamma2", Float, Common),
    key("pi2", Float, Common),
    key("lambda", Float, Common),
    key("nu", FloatList, Common),
    key("closure", Choice(CLOSURES), Common),
    // relaxation solver
    key("delta_max", Float, Common),
    key("r_max", Float, Common),
    key("eps_r", Float, Common),
    key("eps_delta", Float, Common),
    key("eps_delta_rel", Float, Common),
    key("k_max", Int, Common),
    key("safety", Float, Common),
    key("eps_dt", Float, Common),
    key("growth_cap", Float, Common),
    key("dt0", OptFloat, Common),
    key("dt_min_rel", Float, Common),
    key("warm_start", Bool, Common),
    // reference solver and convergence study
    key("oracle", Bool, Ode),
    key("oracle_tol", Float, Ode),
    key("n_runs", Int, Ode),
    key("sweep", Choice(&["dt", "delta_max"]), Ode),
    key("convergence_t_end", Float, Ode),
    key("steps_min", Int, Ode),
    key("steps_max", Int, Ode),
    key("fixed_r_max", Float, Ode),
    key("fixed_k_max", Int, Ode),
    key("sweep_delta_min", Float, Ode),
    key("sweep_delta_max", Float, Ode),
    key("reference_tol", Float, Ode),
    // finite volumes
    key("cells", Int, Rp),
    key("riemann", Choice(&["rusanov", "hll", "hllem"]), Rp),
    key("cfl", Float, Rp),
    key("limiter", Choice(&["minmod", "zero"]), Rp),
    key("splitting", Choice(&["godunov", "strang"]), Rp),
    key("boundary", Choice(&["transmissive", "periodic"]), Rp),
    key("alpha_min", Float, Rp),
    key("snapshot_times", FloatList, Rp),
];

pub fn key_spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

fn valid_keys() -> String {
    KEYS.iter().map(|k| k.name).collect::<Vec<_>>().join(", ")
}

/// Where a value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Preset,
    File { line: usize },
    Cli,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Preset => f.write_str("preset"),
            Origin::File { line } => write!(f, "line {line}"),
            Origin::Cli => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: &'static str,
    pub value: String,
    pub origin: Origin,
}

fn parse_list(value: &str) -> Result<Vec<f64>, ()> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|s| parse_float(s)).collect()
}

fn parse_float(s: &str) -> Result<f64, ()> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or(())
}

fn check_kind(kind: ValueKind, value: &str) -> bool {
    let v = value.trim();
    match kind {
        Float => parse_float(v).is_ok(),
        Int => v.parse::<usize>().is_ok(),
        Bool => matches!(v, "true" | "false"),
        FloatList => parse_list(v).is_ok(),
        OptFloat => v == "auto" || parse_float(v).is_ok(),
        Choice(options) => options.iter().any(|o| o.eq_ignore_ascii_case(v)),
        Problem => v.parse::<ProblemKind>().is_ok(),
    }
}

/// Validates one entry against the key table.
pub fn entry(name: &str, value: &str, origin: Origin) -> Result<Entry, HarnessError> {
    let spec = key_spec(name).ok_or_else(|| {
        HarnessError::Config(format!("{origin}: unknown key `{name}`; valid keys are: {}", valid_keys()))
    })?;
    if !check_kind(spec.kind, value) {
        return Err(HarnessError::Config(format!(
            "{origin}: key `{name}` expects {}, got `{}`",
            spec.kind,
            value.trim()
        )));
    }
    Ok(Entry { key: spec.name, value: value.trim().to_string(), origin })
}

/// Parses config text. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<Entry>, HarnessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {line}: expected `key = value`, got `{content}`")))?;
        out.push(entry(k.trim(), v, Origin::File { line })?);
    }
    Ok(out)
}

pub fn load_config_file(path: &Path) -> Result<Vec<Entry>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_text(&text)
        .map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
}

/// Shortest representation that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(", ")
}

fn closure_name(c: InterfaceClosure) -> &'static str {
    match c {
        InterfaceClosure::Simple => "simple",
        InterfaceClosure::Impedance(InterfaceVelocity::Phase1) => "impedance",
        InterfaceClosure::Impedance(InterfaceVelocity::ImpedanceWeighted) => "impedance-weighted",
    }
}

fn parse_closure(s: &str) -> InterfaceClosure {
    match s.to_ascii_lowercase().as_str() {
        "simple" => InterfaceClosure::Simple,
        "impedance-weighted" => InterfaceClosure::Impedance(InterfaceVelocity::ImpedanceWeighted),
        _ => InterfaceClosure::Impedance(InterfaceVelocity::Phase1),
    }
}

fn solver_entries(cfg: &SolverConfig) -> Vec<(&'static str, String)> {
    vec![
        ("delta_max", fmt_f64(cfg.delta_max)),
        ("r_max", fmt_f64(cfg.r_max)),
        ("eps_r", fmt_f64(cfg.eps_r)),
        ("eps_delta", fmt_f64(cfg.eps_delta)),
        ("eps_delta_rel", fmt_f64(cfg.eps_delta_rel)),
        ("k_max", cfg.k_max.to_string()),
        ("safety", fmt_f64(cfg.safety)),
        ("eps_dt", fmt_f64(cfg.eps_dt)),
        ("growth_cap", fmt_f64(cfg.growth_cap)),
        ("dt0", cfg.dt0.map_or("auto".to_string(), fmt_f64)),
        ("dt_min_rel", fmt_f64(cfg.dt_min_rel)),
        ("warm_start", cfg.warm_start.to_string()),
    ]
}

fn physics_entries(
    eos1: &EosPhase,
    eos2: &EosPhase,
    lambda: f64,
    nu: &[f64],
    closure: InterfaceClosure,
) -> Vec<(&'static str, String)> {
    vec![
        ("gamma1", fmt_f64(eos1.gamma())),
        ("pi1", fmt_f64(eos1.pi_inf())),
        ("gamma2", fmt_f64(eos2.gamma())),
        ("pi2", fmt_f64(eos2.pi_inf())),
        ("lambda", fmt_f64(lambda)),
        ("nu", fmt_list(nu)),
        ("closure", closure_name(closure).to_string()),
    ]
}

fn ode_preset(p: &OdeProblem) -> Vec<(&'static str, String)> {
    let v = p.initial;
    let q = &p.params;
    let mut out = vec![
        ("t_end", fmt_f64(p.t_end)),
        ("u1", fmt_f64(v.u1)),
        ("u2", fmt_f64(v.u2)),
        ("p1", fmt_f64(v.p1)),
        ("p2", fmt_f64(v.p2)),
        ("alpha1", fmt_f64(v.alpha1)),
        ("m1", fmt_f64(q.m1)),
        ("m2", fmt_f64(q.m2)),
    ];
    out.extend(physics_entries(&q.eos1, &q.eos2, q.lambda, &[q.nu], q.closure));
    out.extend(solver_entries(&SolverConfig::default()));
    out.extend([
        ("oracle", "false".to_string()),
        ("oracle_tol", fmt_f64(RkglSettings::default().tol)),
        ("n_runs", "40".to_string()),
        ("sweep", "dt".to_string()),
        ("convergence_t_end", fmt_f64(1e-5)),
        ("steps_min", "20000".to_string()),
        ("steps_max", "200000".to_string()),
        ("fixed_r_max", fmt_f64(1e-13)),
        ("fixed_k_max", "200".to_string()),
        ("sweep_delta_min", fmt_f64(1e-2)),
        ("sweep_delta_max", fmt_f64(1e2)),
        ("reference_tol", fmt_f64(1e-13)),
    ]);
    out
}

fn rp_preset(p: &RiemannProblem, nus: &[f64]) -> Vec<(&'static str, String)> {
    let mut out = vec![
        ("t_end", fmt_f64(p.t_end)),
        ("x_min", fmt_f64(p.x_min)),
        ("x_max", fmt_f64(p.x_max)),
        ("x_jump", fmt_f64(p.x_jump)),
    ];
    let side = |w: &CellPrimitive, names: [&'static str; 7]| -> Vec<(&'static str, String)> {
        names.into_iter().zip(w.to_array()).map(|(n, x)| (n, fmt_f64(x))).collect()
    };
    out.extend(side(&p.left, ["left_alpha1", "left_rho1", "left_rho2", "left_u1", "left_u2", "left_p1", "left_p2"]));
    out.extend(side(
        &p.right,
        ["right_alpha1", "right_rho1", "right_rho2", "right_u1", "right_u2", "right_p1", "right_p2"],
    ));
    let phys = &p.physics;
    out.extend(physics_entries(&phys.eos.phase1, &phys.eos.phase2, phys.lambda, nus, phys.closure));
    let opts = RunOptions::new(2000);
    out.extend(solver_entries(&opts.relax));
    let h = HyperbolicConfig::default();
    out.extend([
        ("cells", opts.n_cells.to_string()),
        ("riemann", h.riemann.to_string()),
        ("cfl", fmt_f64(h.cfl)),
        ("limiter", "minmod".to_string()),
        ("splitting", "godunov".to_string()),
        ("boundary", "transmissive".to_string()),
        ("alpha_min", fmt_f64(h.alpha_min)),
        ("snapshot_times", String::new()),
    ]);
    out
}

/// Preset values for every key in scope of `kind`.
pub fn preset_entries(kind: ProblemKind) -> Vec<(&'static str, String)> {
    let mut out = vec![("problem", kind.name().to_string())];
    out.extend(match kind {
        ProblemKind::A1 | ProblemKind::CustomOde => ode_preset(&presets::a1()),
        ProblemKind::A2 => ode_preset(&presets::a2()),
        ProblemKind::Rp1 => rp_preset(&presets::rp1(), &[presets::rp1().physics.nu]),
        ProblemKind::Rp2 => rp_preset(&presets::rp2(), &[presets::rp2().physics.nu]),
        ProblemKind::Rp3 => rp_preset(&presets::rp3(), &presets::RP3_NU_SWEEP),
        ProblemKind::CustomRp => rp_preset(&presets::rp3(), &[presets::rp3().physics.nu]),
    });
    out
}

fn in_scope(scope: Scope, kind: ProblemKind) -> bool {
    match scope {
        Common => true,
        Ode => kind.is_ode(),
        Rp => !kind.is_ode(),
    }
}

/// The fully resolved key set of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub kind: ProblemKind,
    values: BTreeMap<&'static str, (String, Origin)>,
}

/// Merges preset, file and command-line layers. The problem is taken from the
/// command line, else the file, else `default_problem`.
pub fn resolve(
    file: &[Entry],
    cli: &[Entry],
    default_problem: Option<ProblemKind>,
) -> Result<Resolved, HarnessError> {
    let chosen = cli
        .iter()
        .chain(file.iter())
        .filter(|e| e.key == "problem")
        .max_by_key(|e| matches!(e.origin, Origin::Cli))
        .map(|e| e.value.parse::<ProblemKind>().expect("validated on entry"));
    let kind = chosen.or(default_problem).ok_or_else(|| {
        HarnessError::Config("no problem selected; pass --problem or set `problem` in the config file".into())
    })?;
    let mut values: BTreeMap<&'static str, (String, Origin)> =
        preset_entries(kind).into_iter().map(|(k, v)| (k, (v, Origin::Preset))).collect();
    for e in file.iter().chain(cli.iter()) {
        let spec = key_spec(e.key).expect("validated on entry");
        if !in_scope(spec.scope, kind) {
            return Err(HarnessError::Config(format!(
                "{}: key `{}` does not apply to problem {kind}",
                e.origin, e.key
            )));
        }
        if e.key == "problem" {
            continue;
        }
        values.insert(spec.name, (e.value.clone(), e.origin.clone()));
    }
    Ok(Resolved { kind, values })
}

impl Resolved {
    fn raw(&self, name: &str) -> (&str, &Origin) {
        let (v, o) = self.values.get(name).unwrap_or_else(|| panic!("key `{name}` missing from resolved config"));
        (v.as_str(), o)
    }

    pub fn get_str(&self, name: &str) -> &str {
        self.raw(name).0
    }

    pub fn f64(&self, name: &str) -> f64 {
        parse_float(self.get_str(name)).expect("validated on entry")
    }

    pub fn usize(&self, name: &str) -> usize {
        self.get_str(name).parse().expect("validated on entry")
    }

    pub fn bool(&self, name: &str) -> bool {
        self.get_str(name) == "true"
    }

    pub fn list(&self, name: &str) -> Vec<f64> {
        parse_list(self.get_str(name)).expect("validated on entry")
    }

    pub fn opt_f64(&self, name: &str) -> Option<f64> {
        match self.get_str(name) {
            "auto" => None,
            s => Some(parse_float(s).expect("validated on entry")),
        }
    }

    fn invalid(&self, name: &str, msg: impl fmt::Display) -> HarnessError {
        let (v, origin) = self.raw(name);
        HarnessError::Config(format!("{origin}: `{name} = {v}`: {msg}"))
    }

    /// Config file text listing every resolved key in table order.
    pub fn echo(&self) -> String {
        let mut out = format!("# resolved configuration for problem {}\n", self.kind);
        out.push_str(&format!("problem = {}\n", self.kind.name()));
        for spec in KEYS.iter().filter(|k| k.name != "problem") {
            if let Some((v, _)) = self.values.get(spec.name) {
                out.push_str(&format!("{} = {v}\n", spec.name));
            }
        }
        out
    }

    fn phase(&self, gamma: &str, pi: &str) -> Result<EosPhase, HarnessError> {
        EosPhase::new(self.f64(gamma), self.f64(pi)).map_err(|e| self.invalid(gamma, e))
    }

    fn solver(&self) -> Result<SolverConfig, HarnessError> {
        let cfg = SolverConfig {
            r_max: self.f64("r_max"),
            eps_r: self.f64("eps_r"),
            delta_max: self.f64("delta_max"),
            eps_delta: self.f64("eps_delta"),
            eps_delta_rel: self.f64("eps_delta_rel"),
            k_max: self.usize("k_max"),
            safety: self.f64("safety"),
            eps_dt: self.f64("eps_dt"),
            growth_cap: self.f64("growth_cap"),
            dt0: self.opt_f64("dt0"),
            dt_min_rel: self.f64("dt_min_rel"),
            warm_start: self.bool("warm_start"),
        };
        cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }

    fn positive(&self, name: &str) -> Result<f64, HarnessError> {
        let x = self.f64(name);
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.invalid(name, "must be positive"))
        }
    }

    pub fn ode_setup(&self) -> Result<OdeSetup, HarnessError> {
        if !self.kind.is_ode() {
            return Err(HarnessError::Config(format!("problem {} is not a relaxation ODE problem", self.kind)));
        }
        let nu = self.list("nu");
        if nu.len() != 1 {
            return Err(self.invalid("nu", "ODE problems take a single value"));
        }
        let params = OdeParams {
            m1: self.f64("m1"),
            m2: self.f64("m2"),
            eos1: self.phase("gamma1", "pi1")?,
            eos2: self.phase("gamma2", "pi2")?,
            lambda: self.f64("lambda"),
            nu: nu[0],
            closure: parse_closure(self.get_str("closure")),
        };
        params.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        let initial = PrimitiveState::new(
            self.f64("u1"),
            self.f64("u2"),
            self.f64("p1"),
            self.f64("p2"),
            self.f64("alpha1"),
        );
        crate::relax::admissible(&initial, &params)
            .map_err(|e| HarnessError::Config(format!("initial state is inadmissible: {e:?}")))?;
        let problem = OdeProblem { initial, params, t_end: self.positive("t_end")? };

        let oracle = RkglSettings { tol: self.positive("oracle_tol")?, ..RkglSettings::default() };
        let n_runs = self.usize("n_runs");
        if n_runs < 6 {
            return Err(self.invalid("n_runs", "the convergence study needs at least 6 runs"));
        }
        let (steps_min, steps_max) = (self.usize("steps_min"), self.usize("steps_max"));
        if !(steps_min >= 1 && steps_max > steps_min) {
            return Err(self.invalid("steps_max", "need 1 <= steps_min < steps_max"));
        }
        let (dmin, dmax) = (self.positive("sweep_delta_min")?, self.positive("sweep_delta_max")?);
        if dmax <= dmin {
            return Err(self.invalid("sweep_delta_max", "must exceed sweep_delta_min"));
        }
        let convergence = ConvergenceSettings {
            n_runs,
            sweep: if self.get_str("sweep") == "delta_max" { SweepMode::DeltaMax } else { SweepMode::Dt },
            t_end: self.positive("convergence_t_end")?,
            steps_min,
            steps_max,
            fixed_r_max: self.positive("fixed_r_max")?,
            fixed_k_max: self.usize("fixed_k_max").max(1),
            delta_range: (dmin, dmax),
            reference: RkglSettings { tol: self.positive("reference_tol")?, ..RkglSettings::default() },
        };
        Ok(OdeSetup { problem, solver: self.solver()?, oracle: self.bool("oracle"), oracle_settings: oracle, convergence })
    }

    pub fn rp_setup(&self) -> Result<RpSetup, HarnessError> {
        if self.kind.is_ode() {
            return Err(HarnessError::Config(format!("problem {} is not a Riemann problem", self.kind)));
        }
        let side = |prefix: &str| {
            let g = |c: &str| self.f64(&format!("{prefix}_{c}"));
            CellPrimitive {
                alpha1: g("alpha1"),
                rho1: g("rho1"),
                rho2: g("rho2"),
                u1: g("u1"),
                u2: g("u2"),
                p1: g("p1"),
                p2: g("p2"),
            }
        };
        let nus = self.list("nu");
        if nus.is_empty() || nus.iter().any(|&n| n < 0.0) {
            return Err(self.invalid("nu", "need at least one non-negative value"));
        }
        let lambda = self.f64("lambda");
        if lambda < 0.0 {
            return Err(self.invalid("lambda", "must be non-negative"));
        }
        let eos = EosPair::new(self.phase("gamma1", "pi1")?, self.phase("gamma2", "pi2")?);
        let problem = RiemannProblem {
            name: self.kind.name().to_ascii_lowercase(),
            left: side("left"),
            right: side("right"),
            x_min: self.f64("x_min"),
            x_max: self.f64("x_max"),
            x_jump: self.f64("x_jump"),
            t_end: self.positive("t_end")?,
            physics: PdePhysics { eos, closure: parse_closure(self.get_str("closure")), lambda, nu: nus[0] },
        };
        for (name, w) in [("left", &problem.left), ("right", &problem.right)] {
            crate::eos::cons_to_prim(&crate::eos::prim_to_cons(w, &eos), &eos)
                .map_err(|e| HarnessError::Config(format!("{name} state is inadmissible: {e}")))?;
        }
        let cells = self.usize("cells");
        if cells < 100 {
            return Err(self.invalid("cells", "need at least 100 cells"));
        }
        let hyperbolic = HyperbolicConfig {
            cfl: self.f64("cfl"),
            riemann: self.get_str("riemann").parse::<RiemannSolver>().map_err(HarnessError::Config)?,
            limiter: self.get_str("limiter").parse::<Limiter>().map_err(HarnessError::Config)?,
            boundary: self.get_str("boundary").parse::<Boundary>().map_err(HarnessError::Config)?,
            alpha_min: self.f64("alpha_min"),
        };
        hyperbolic.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        let options = RunOptions {
            n_cells: cells,
            hyperbolic,
            relax: self.solver()?,
            splitting: self.get_str("splitting").parse::<Splitting>().map_err(HarnessError::Config)?,
            snapshot_times: self.list("snapshot_times"),
        };
        Ok(RpSetup { problem, nus, options })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Fixed uniform steps with the acceptance test disabled.
    Dt,
    /// Adaptive runs over a geometric range of `delta_max`.
    DeltaMax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSettings {
    pub n_runs: usize,
    pub sweep: SweepMode,
    pub t_end: f64,
    pub steps_min: usize,
    pub steps_max: usize,
    pub fixed_r_max: f64,
    pub fixed_k_max: usize,
    pub delta_range: (f64, f64),
    pub reference: RkglSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSetup {
    pub problem: OdeProblem,
    pub solver: SolverConfig,
    pub oracle: bool,
    pub oracle_settings: RkglSettings,
    pub convergence: ConvergenceSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpSetup {
    /// `physics.nu` holds the first entry of `nus`.
    pub problem: RiemannProblem,
    pub nus: Vec<f64>,
    pub options: RunOptions,
}
