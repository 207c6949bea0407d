//! The five subcommands. Each writes its reports into the output directory
//! and returns a process exit code.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use radshock::evans::{check_condition, ConditionReport, EvansContext, SlopeCheck};
use radshock::io::{evans_table, profile_table, time_series_table, to_json, Table};
use radshock::model::{check_assumptions, AssumptionReport, ModelSpec, Side};
use radshock::profile::{verify_profile, Profile, ProfileOptions, ProfileReport};
use radshock::simulate::{
    run, BandReport, DecayBands, DecayReport, EnergyReport, Grid, InitialData, SimError, SimOptions, SlavingReport,
};
use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Report envelope shared by all commands.
#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    model: &'a ModelSpec,
    exit_code: i32,
    #[serde(flatten)]
    body: T,
}

struct Out<'a> {
    dir: &'a Path,
}

impl Out<'_> {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn csv(&self, name: &str, table: &Table) -> Result<()> {
        self.write(name, &table.to_csv_string())
    }

    fn report<T: Serialize>(&self, name: &str, command: &str, model: &ModelSpec, exit_code: i32, body: T) -> Result<()> {
        let env = Envelope { schema_version: SCHEMA_VERSION, command, model, exit_code, body };
        self.write(name, &to_json(&env)?)
    }
}

/// Creates the output directory and writes the effective configuration.
fn prepare(cfg: &RunConfig) -> Result<Out<'_>> {
    let dir = cfg.output.dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let out = Out { dir };
    out.write("effective_config.toml", &cfg.to_toml()?)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct VerifyBody {
    profile_error: Option<String>,
    assumptions: AssumptionReport,
    failures: Vec<String>,
    pass: bool,
}

pub fn verify(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.model.spec()?;
    let out = prepare(cfg)?;
    verify_in(cfg, &spec, &out)
}

fn verify_in(cfg: &RunConfig, spec: &ModelSpec, out: &Out) -> Result<i32> {
    // The profile-dependent conditions need `a'(0)` and `b(0)`; they are
    // reported as failed if there is no profile.
    let (profile_error, aprime0, b0) = match Profile::build_with(spec, &cfg.profile) {
        Ok(p) if !p.subshock() => {
            let pt = p.at(p.i0());
            (None, pt.da, pt.b)
        }
        Ok(_) => (Some("profile has a subshock".to_string()), f64::NAN, f64::NAN),
        Err(e) => (Some(e.to_string()), f64::NAN, f64::NAN),
    };
    let assumptions = check_assumptions(spec, aprime0, b0)?;
    let pass = assumptions.verdict();
    let failures: Vec<String> = assumptions.failures().into_iter().map(String::from).collect();
    let code = if pass { EXIT_OK } else { EXIT_DOMAIN };
    println!("verify: {} ({})", if pass { "pass" } else { "FAIL" }, spec.name());
    if !failures.is_empty() {
        println!("  failed: {}", failures.join(", "));
    }
    if let Some(e) = &profile_error {
        println!("  profile: {e}");
    }
    out.report("verify.json", "verify", spec, code, VerifyBody { profile_error, assumptions, failures, pass })?;
    Ok(code)
}

#[derive(Debug, Serialize)]
struct Refinement {
    h_fine: f64,
    /// Largest `|U_h(x_i) - U_{h/2}(x_i)|` over the coarse nodes.
    max_node_change: f64,
}

#[derive(Debug, Serialize)]
struct ProfileBody<'a> {
    options: &'a ProfileOptions,
    subshock: bool,
    report: ProfileReport,
    refinement: Option<Refinement>,
}

pub fn profile(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.model.spec()?;
    let out = prepare(cfg)?;
    profile_in(cfg, &spec, &out)
}

fn profile_in(cfg: &RunConfig, spec: &ModelSpec, out: &Out) -> Result<i32> {
    let p = Profile::build_with(spec, &cfg.profile)?;
    let report = verify_profile(&p, spec);
    let refinement = if cfg.refine {
        let fine_opts = ProfileOptions { h: 0.5 * cfg.profile.h, ..cfg.profile.clone() };
        let fine = Profile::build_with(spec, &fine_opts)?;
        let max_node_change =
            (0..p.len()).map(|i| (p.u()[i] - fine.eval_u(p.x(i)).0).abs()).fold(0.0f64, f64::max);
        Some(Refinement { h_fine: fine_opts.h, max_node_change })
    } else {
        None
    };
    println!(
        "profile: {} nodes on [{:.3}, {:.3}], residual {:.2e}, tail rate error {:.2e}",
        p.len(),
        p.x_min(),
        p.x_max(),
        report.max_residual,
        report.eta_rel_error()
    );
    if let Some(r) = &refinement {
        println!("  refinement to h = {}: max node change {:.2e}", r.h_fine, r.max_node_change);
    }
    out.csv("profile.csv", &profile_table(&p, cfg.output.profile_stride))?;
    let body = ProfileBody { options: &cfg.profile, subshock: p.subshock(), report, refinement };
    out.report("profile.json", "profile", spec, EXIT_OK, body)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct EvansBody {
    report: ConditionReport,
    slope: Vec<SlopeCheck>,
}

pub fn evans(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.model.spec()?;
    let out = prepare(cfg)?;
    evans_in(cfg, &spec, &out)
}

fn evans_in(cfg: &RunConfig, spec: &ModelSpec, out: &Out) -> Result<i32> {
    let p = Profile::build_with(spec, &cfg.profile)?;
    let (report, main) = check_condition(&p, cfg.evans, &cfg.condition)?;
    let ctx = EvansContext::new(&p, cfg.evans)?;
    let slope = vec![ctx.slope_check(Side::Minus, 1e-6)?, ctx.slope_check(Side::Plus, 1e-6)?];
    let code = report.verdict.exit_code();
    println!(
        "evans: {:?}; winding ({}, {}) on r = {:.2e}, R = {:.2e} with {} samples",
        report.verdict, report.main.minus.winding, report.main.plus.winding, report.r, report.big_r, report.main.samples
    );
    for n in &report.notes {
        println!("  {n}");
    }
    out.csv("evans.csv", &evans_table(&main.samples))?;
    out.report("evans.json", "evans", spec, code, EvansBody { report, slope })?;
    Ok(code)
}

#[derive(Debug, Serialize)]
struct SimulateBody<'a> {
    options: &'a SimOptions,
    initial: InitialData,
    error: Option<String>,
    grid: Option<Grid>,
    steps: usize,
    decay: Option<DecayReport>,
    bands: Option<BandReport>,
    energy: Option<EnergyReport>,
    slaving: Option<SlavingReport>,
    max_elliptic_residual: Option<f64>,
    max_conservation_defect: Option<f64>,
}

pub fn simulate(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.model.spec()?;
    let out = prepare(cfg)?;
    simulate_in(cfg, &spec, &out)
}

fn simulate_in(cfg: &RunConfig, spec: &ModelSpec, out: &Out) -> Result<i32> {
    let p = Profile::build_with(spec, &cfg.profile)?;
    let opts = &cfg.simulate;
    let initial = opts.initial.resolve(&p, opts.t_final);
    let mut body = SimulateBody {
        options: opts,
        initial,
        error: None,
        grid: None,
        steps: 0,
        decay: None,
        bands: None,
        energy: None,
        slaving: None,
        max_elliptic_residual: None,
        max_conservation_defect: None,
    };
    let code = match run(&p, opts) {
        Ok(r) => {
            let bands = r.decay.check(&DecayBands::default());
            let show = |c: &radshock::simulate::BandCheck| match c.exponent {
                Some(e) => format!("{e:.3} in [{}, {}]: {}", c.band.0, c.band.1, if c.pass { "yes" } else { "no" }),
                None => "no fit".into(),
            };
            println!("simulate: {} steps on {} cells, L-inf reduction {:.2e}", r.steps, r.grid.n, r.decay.linf_reduction);
            println!("  L-inf exponent {}", show(&bands.linf));
            println!("  L2 exponent {}", show(&bands.l2));
            println!("  alpha-dot exponent {}", show(&bands.alpha_dot));
            println!("  sup |alpha| = {:.3e} (bound {:.3e})", r.decay.sup_alpha, r.decay.alpha_bound);
            println!("  damping violations {}", r.energy.damping.violations);
            out.csv("simulate.csv", &time_series_table(&r.samples))?;
            body.grid = Some(r.grid);
            body.steps = r.steps;
            body.decay = Some(r.decay);
            body.bands = Some(bands);
            body.energy = Some(r.energy);
            body.slaving = Some(r.slaving);
            body.max_elliptic_residual = Some(r.max_elliptic_residual);
            body.max_conservation_defect = Some(r.max_conservation_defect);
            EXIT_OK
        }
        Err(e @ SimError::Guard { .. }) => {
            println!("simulate: {e}");
            body.error = Some(e.to_string());
            EXIT_DOMAIN
        }
        Err(e) => return Err(e.into()),
    };
    out.report("simulate.json", "simulate", spec, code, body)?;
    Ok(code)
}

/// Runs every stage; the exit code is the first error, else the first
/// domain verdict, else the first inconclusive result.
pub fn all(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.model.spec()?;
    let out = prepare(cfg)?;
    let codes = [
        verify_in(cfg, &spec, &out)?,
        profile_in(cfg, &spec, &out)?,
        evans_in(cfg, &spec, &out)?,
        simulate_in(cfg, &spec, &out)?,
    ];
    Ok([EXIT_ERROR, EXIT_DOMAIN, EXIT_INCONCLUSIVE].into_iter().find(|c| codes.contains(c)).unwrap_or(EXIT_OK))
}
