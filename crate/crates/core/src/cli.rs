//! Batch driver behind the `rotgyro` binary.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::basis::build_basis;
use crate::cache::{cache_key, Cache, CACHE_VERSION};
use crate::config::RunConfig;
use crate::dynamics::{plan_adiabatic_ramp, DEFAULT_TRAP_ANGULAR_FREQUENCY};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, TENSOR_CACHE_VERSION};
use crate::metrology::{
    estimate_precision, qfi_pure, qfi_quadratic_approx, MeasurementScheme, Protocol, QfiComparison,
};
use crate::output::CsvTable;
use crate::spectrum::{linspace, locate_critical_frequency, lowest_eigenpairs_with, sweep};
use crate::states::{angular_momentum_moments, mode_entropy, spdm, two_mode_project};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "rotgyro",
    version,
    about = "Rotating few-boson gyroscope simulator"
)]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a configuration value, e.g. `--set model.gn6=0.44`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Skip the result cache for this run.
    #[arg(long, global = true)]
    pub no_cache: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest levels over a grid of rotation frequencies.
    Spectrum,
    /// Critical frequency and two-mode structure of the ground state there.
    GroundState,
    /// Adiabatic preparation ramp and its duration.
    RampPlan,
    /// Full protocol and precision curves for both measurement schemes.
    Protocol,
    /// Quantum Fisher information versus waiting time and external rotation.
    Qfi {
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,5,10")]
        taus: Vec<f64>,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
    },
    /// Truncation sweep over l_max and the number of Landau levels.
    Convergence {
        /// Offsets added to N for l_max.
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        l_max_offsets: Vec<u32>,
        /// Frequency at which to compare; the configured Ω_c when omitted.
        #[arg(long)]
        omega: Option<f64>,
    },
    /// Built-in oracle checks.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::GroundState => "ground-state",
            Command::RampPlan => "ramp-plan",
            Command::Protocol => "protocol",
            Command::Qfi { .. } => "qfi",
            Command::Convergence { .. } => "convergence",
            Command::Selftest => "selftest",
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn versions() -> Value {
    json!({
        "rotgyro": env!("CARGO_PKG_VERSION"),
        "cache_format": CACHE_VERSION,
        "tensor_format": TENSOR_CACHE_VERSION,
    })
}

/// Context shared by the subcommands of one run.
struct Run {
    cfg: RunConfig,
    cache: Option<Cache>,
    out: PathBuf,
    artifacts: Vec<String>,
}

impl Run {
    fn write_csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        let path = self.out.join(name);
        table.write_to(&path)?;
        self.artifacts.push(path.display().to_string());
        Ok(())
    }

    fn model(&self) -> Result<HamiltonianModel> {
        let params = self.cfg.model_params()?;
        let basis = Arc::new(build_basis(&params.spec)?);
        match &self.cache {
            Some(c) => {
                let s = params.spec;
                let path = c.root().join("tensor").join(format!(
                    "n{}_l{}_ll{}.bin",
                    s.n_particles, s.l_max, s.n_ll_max
                ));
                HamiltonianModel::with_tensor_cache(params, basis, &path)
            }
            None => HamiltonianModel::new(params, basis),
        }
    }

    /// `(Ω_c, Ω at the smallest gap, smallest gap, source)`.
    fn omega_c(&self, model: &HamiltonianModel) -> Result<(f64, f64, f64, &'static str)> {
        if let Some(w) = self.cfg.stage.omega_c {
            return Ok((w, f64::NAN, f64::NAN, "config"));
        }
        let range = self.cfg.stage.omega_c_range;
        let solver = self.cfg.solver_config();
        let locate = || {
            let cp = locate_critical_frequency(model, (range[0], range[1]), &solver)?;
            Ok(vec![cp.omega_c, cp.min_gap_omega, cp.min_gap])
        };
        let v = match &self.cache {
            Some(c) => {
                let key = cache_key(&[
                    ("kind", b"critical-frequency"),
                    ("model", model.params().hash_hex().as_bytes()),
                    (
                        "range",
                        &[range[0].to_le_bytes(), range[1].to_le_bytes()].concat(),
                    ),
                    ("solver", format!("{solver:?}").as_bytes()),
                ]);
                c.get_or_insert_with(&key, locate)?
            }
            None => locate()?,
        };
        Ok((v[0], v[1], v[2], "located"))
    }
}

fn spectrum(run: &mut Run) -> Result<Value> {
    let model = run.model()?;
    let sp = &run.cfg.spectrum;
    let omegas = linspace(sp.omega_min, sp.omega_max, sp.points);
    let levels = sp.levels.min(model.dim());
    let sw = sweep(&model, &omegas, levels, &run.cfg.solver_config(), false)?;
    run.write_csv("spectrum.csv", &sw.to_csv())?;
    let (w, gap) = if levels > 1 {
        sw.min_gap()
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(json!({ "dimension": model.dim(), "levels": levels, "min_gap_omega": w, "min_gap": gap }))
}

fn ground_state(run: &mut Run) -> Result<Value> {
    let model = run.model()?;
    let (omega_c, gap_omega, gap, source) = run.omega_c(&model)?;
    let h = model.assemble(omega_c, 1.0);
    let sol = lowest_eigenpairs_with(&h, 2, &run.cfg.solver_config(), &[])
        .map_err(|e| e.at_omega(omega_c))?;
    let gs = sol.state(model.basis(), 0);
    let no = spdm(&gs);
    let decomp = two_mode_project(&gs, &no)?;
    let mut pn = CsvTable::new(vec!["n", "P_n"]);
    for (n, p) in decomp.probabilities.iter().enumerate() {
        pn.push(vec![n.to_string(), crate::output::fmt_float(*p)]);
    }
    run.write_csv("two_mode_pn.csv", &pn)?;
    let mut pops = CsvTable::new(vec!["index", "population", "parity"]);
    for (i, (p, par)) in no.populations.iter().zip(&no.parities).enumerate() {
        pops.push(vec![
            i.to_string(),
            crate::output::fmt_float(*p),
            format!("{par:?}").to_lowercase(),
        ]);
    }
    run.write_csv("natural_orbitals.csv", &pops)?;
    let (mean_l, _, dl) = angular_momentum_moments(&gs);
    Ok(json!({
        "omega_c": omega_c,
        "omega_c_source": source,
        "min_gap_omega": gap_omega,
        "min_gap": gap,
        "gap_at_omega_c": sol.gap(),
        "fidelity": decomp.fidelity,
        "two_mode_entropy": mode_entropy(&decomp),
        "parity_leak": decomp.parity_leak(),
        "mean_l": mean_l,
        "delta_l": dl,
        "leading_populations": &no.populations[..no.populations.len().min(4)],
    }))
}

fn ramp_plan(run: &mut Run) -> Result<Value> {
    let model = run.model()?;
    let (omega_c, _, _, _) = run.omega_c(&model)?;
    let s = &run.cfg.stage;
    let plan = plan_adiabatic_ramp(
        &model,
        s.omega_start,
        omega_c,
        s.delta_omega,
        s.p01,
        &run.cfg.solver_config(),
    )?;
    run.write_csv(
        "ramp_plan.csv",
        &plan.to_csv(DEFAULT_TRAP_ANGULAR_FREQUENCY),
    )?;
    let w = DEFAULT_TRAP_ANGULAR_FREQUENCY;
    Ok(json!({
        "omega_c": omega_c,
        "segments": plan.segments.len(),
        "total_time": plan.total_time(),
        "total_time_endpoints": plan.total_time_endpoints(),
        "seconds": plan.seconds(w),
        "seconds_endpoints": plan.seconds_endpoints(w),
        "trap_angular_frequency": w,
        "feasible_within_lifetime": plan.feasible(w),
    }))
}

fn protocol(run: &mut Run) -> Result<Value> {
    let model = run.model()?;
    let (omega_c, _, _, _) = run.omega_c(&model)?;
    let proto = Protocol::new(&model, run.cfg.protocol_config(omega_c))?;
    let res = proto.run()?;
    let n = res.n_particles;
    let mut curves = serde_json::Map::new();
    for (scheme, name) in [
        (MeasurementScheme::LMoment, "l_moment"),
        (MeasurementScheme::Binomial, "binomial"),
    ] {
        let c = estimate_precision(&res.distributions(), scheme, res.tau, n)?;
        run.write_csv(&format!("precision_{name}.csv"), &c.to_csv())?;
        let regular: Vec<f64> = c.regular_points().map(|p| p.delta_omega_scaled).collect();
        let below = regular.iter().filter(|&&d| d < c.shot_noise).count();
        curves.insert(
            name.to_string(),
            json!({
                "points": c.points.len(),
                "divergent": c.points.len() - regular.len(),
                "below_shot_noise": below,
                "best_scaled_precision": regular.iter().copied().fold(f64::INFINITY, f64::min),
            }),
        );
    }
    let mut dist = CsvTable::new(vec!["omega_ext", "L", "probability"]);
    for p in &res.points {
        for (l, pr) in &p.distribution.l_probabilities {
            dist.push(vec![
                crate::output::fmt_float(p.omega_ext),
                l.to_string(),
                crate::output::fmt_float(*pr),
            ]);
        }
    }
    run.write_csv("distributions.csv", &dist)?;
    let fold = |f: &dyn Fn(&crate::metrology::ProtocolPoint) -> f64,
                init: f64,
                op: fn(f64, f64) -> f64| { res.points.iter().map(f).fold(init, op) };
    Ok(json!({
        "omega_c": omega_c,
        "tau": res.tau,
        "shot_noise": crate::metrology::shot_noise_limit(n),
        "curves": curves,
        "min_shift_fidelity": fold(&|p| p.shift_fidelity.min(p.return_fidelity), 1.0, f64::min),
        "guard_violations": res.points.iter().filter(|p| p.guard_violated).count(),
        "max_norm_drift": fold(&|p| p.norm_drift, 0.0, f64::max),
        "max_energy_drift": fold(&|p| p.energy_drift, 0.0, f64::max),
    }))
}

fn qfi(run: &mut Run, taus: &[f64], delta: f64) -> Result<Value> {
    let model = run.model()?;
    let (omega_c, _, _, _) = run.omega_c(&model)?;
    let proto = Protocol::new(&model, run.cfg.protocol_config(omega_c))?;
    let mut by_tau = CsvTable::new(vec![
        "tau",
        "qfi_pure",
        "qfi_quadratic",
        "relative_difference",
        "quadratic_valid",
    ]);
    for &tau in taus {
        let f = qfi_pure(|w| proto.imprinted_state_after(w, tau), 0.0, delta)?;
        let c = QfiComparison::new(tau, f, qfi_quadratic_approx(proto.initial(), tau));
        by_tau.push(vec![
            crate::output::fmt_float(tau),
            crate::output::fmt_float(c.pure),
            crate::output::fmt_float(c.quadratic),
            crate::output::fmt_float(c.relative_difference),
            c.quadratic_valid.to_string(),
        ]);
    }
    run.write_csv("qfi_vs_tau.csv", &by_tau)?;
    let mut by_omega = CsvTable::new(vec!["omega_ext", "qfi_pure", "cramer_rao_bound"]);
    for &w in &proto.config().omega_ext {
        let f = qfi_pure(|x| proto.imprinted_state(x), w, delta)?;
        by_omega.push_floats(&[w, f, 1.0 / f.sqrt()]);
    }
    run.write_csv("qfi_vs_omega.csv", &by_omega)?;
    Ok(json!({ "omega_c": omega_c, "taus": taus, "delta": delta }))
}

fn convergence(run: &mut Run, offsets: &[u32], omega: Option<f64>) -> Result<Value> {
    let omega = match omega.or(run.cfg.stage.omega_c) {
        Some(w) => w,
        None => run.omega_c(&run.model()?)?.0,
    };
    let n = run.cfg.model.n_particles;
    let mut t = CsvTable::new(vec![
        "l_max",
        "n_ll_max",
        "dimension",
        "E_0",
        "E_1",
        "gap",
        "mean_l",
        "delta_l",
    ]);
    for nll in [1u32, 2] {
        for &off in offsets {
            let mut cfg = run.cfg.clone();
            cfg.model.l_max = Some(n as u32 + off);
            cfg.model.n_ll_max = nll;
            let params = cfg.model_params()?;
            let basis = Arc::new(build_basis(&params.spec)?);
            let model = HamiltonianModel::new(params, basis)?;
            let k = 2.min(model.dim());
            let sol = lowest_eigenpairs_with(
                &model.assemble(omega, 1.0),
                k,
                &run.cfg.solver_config(),
                &[],
            )
            .map_err(|e| e.at_omega(omega))?;
            let (mean_l, _, dl) = angular_momentum_moments(&sol.state(model.basis(), 0));
            let e1 = sol.values.get(1).copied().unwrap_or(f64::NAN);
            t.push_floats(&[
                (n as u32 + off) as f64,
                nll as f64,
                model.dim() as f64,
                sol.values[0],
                e1,
                e1 - sol.values[0],
                mean_l,
                dl,
            ]);
        }
    }
    run.write_csv("convergence.csv", &t)?;
    Ok(json!({ "omega": omega, "l_max_offsets": offsets }))
}

fn selftest() -> Result<Value> {
    let checks = crate::selftest::run_all();
    for c in &checks {
        log::info!(
            "{}: {} (error {:.3e})",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.error
        );
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    let value = json!({ "checks": checks });
    if failed.is_empty() {
        Ok(value)
    } else {
        Err(Error::InvalidModel(format!(
            "selftest failed: {}",
            failed.join(", ")
        )))
    }
}

fn dispatch(run: &mut Run, cmd: &Command) -> Result<Value> {
    match cmd {
        Command::Spectrum => spectrum(run),
        Command::GroundState => ground_state(run),
        Command::RampPlan => ramp_plan(run),
        Command::Protocol => protocol(run),
        Command::Qfi { taus, delta } => qfi(run, taus, *delta),
        Command::Convergence {
            l_max_offsets,
            omega,
        } => convergence(run, l_max_offsets, *omega),
        Command::Selftest => selftest(),
    }
}

fn error_json(err: &Error) -> Value {
    let stage = match err {
        Error::Stage {
            stage, omega_ext, ..
        } => json!({ "stage": stage, "omega_ext": omega_ext }),
        _ => Value::Null,
    };
    json!({ "message": err.to_string(), "exit_code": exit_code(err), "stage": stage })
}

/// Run one parsed invocation; returns the JSON summary and the exit code.
pub fn execute(cli: &Cli) -> (Value, i32) {
    let command = cli.command.name();
    let cfg = match RunConfig::load(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            let summary = json!({ "command": command, "status": "error", "versions": versions(), "error": error_json(&e) });
            return (summary, exit_code(&e));
        }
    };
    let hash = cfg.hash_hex();
    let cache = (cfg.cache.enable && !cli.no_cache).then(|| Cache::new(&cfg.cache.path));
    let out = cfg.output.directory.join(command);
    let mut run = Run {
        cfg,
        cache,
        out,
        artifacts: Vec::new(),
    };
    let result = dispatch(&mut run, &cli.command);
    let (status, code, body) = match &result {
        Ok(v) => ("ok", 0, json!({ "results": v })),
        Err(e) => ("error", exit_code(e), json!({ "error": error_json(e) })),
    };
    let mut summary = json!({
        "command": command,
        "status": status,
        "config_hash": hash,
        "versions": versions(),
        "config": serde_json::to_value(&run.cfg).unwrap_or(Value::Null),
        "artifacts": run.artifacts,
    });
    if let (Value::Object(s), Value::Object(b)) = (&mut summary, body) {
        s.extend(b);
    }
    let path = run.out.join("summary.json");
    let written = std::fs::create_dir_all(&run.out).and_then(|_| {
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&summary).unwrap_or_default(),
        )
    });
    if let Err(e) = written {
        log::error!("could not write {}: {e}", path.display());
        return (summary, if code == 0 { EXIT_IO } else { code });
    }
    (summary, code)
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let (summary, code) = execute(&cli);
    use std::io::Write;
    let _ = writeln!(
        std::io::stdout().lock(),
        "{}",
        serde_json::to_string_pretty(&summary).unwrap_or_default()
    );
    code
}
