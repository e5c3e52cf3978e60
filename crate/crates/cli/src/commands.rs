use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use sdde_core::detsolve::{limit_path, solve_limit};
use sdde_core::grid::fmt17;
use sdde_core::mdp::{forward_map, rate_function};
use sdde_core::model::{check_assumptions, write_model, CloudSpec};
use sdde_core::montecarlo::{
    estimate_clt_ladder, estimate_mdp_tail, estimate_moment, fit_rate, EnsembleEstimate,
    EnsembleSpec,
};
use sdde_core::stochsolve::{sample_noise, simulate_first_order, simulate_sdde};
use sdde_core::PathBundle;

use crate::config::Resolved;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Simulate perturbed, limit and first-order paths for individual substreams.
    Simulate,
    /// Solve the zero-noise limit equation.
    Limit,
    /// Estimate the CLT error along the epsilon ladder and fit its rate.
    CltVerify,
    /// Estimate E sup |X|^p along the epsilon ladder.
    Moments,
    /// Estimate normalized moderate-deviation tails along the epsilon ladder.
    MdpTail,
    /// Evaluate the rate function at a target path.
    Rate,
    /// Sample the growth, Lipschitz and dissipativity inequalities.
    CheckAssumptions,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Limit => "limit",
            Command::CltVerify => "clt-verify",
            Command::Moments => "moments",
            Command::MdpTail => "mdp-tail",
            Command::Rate => "rate",
            Command::CheckAssumptions => "check-assumptions",
        }
    }
}

/// Output directory bookkeeping; the manifest lists every file written.
struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &FsPath) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        self.write(name, &text)
    }
}

pub fn model_hash(r: &Resolved) -> String {
    hex::encode(Sha256::digest(write_model(&r.model).as_bytes()))
}

fn ensemble(r: &Resolved, workers: Option<usize>) -> EnsembleSpec {
    let mc = &r.config.mc;
    EnsembleSpec {
        n_traj: mc.n_traj,
        seed: mc.seed,
        first_substream: mc.first_substream,
        workers,
    }
}

fn estimates_csv(eps: &[f64], est: &[EnsembleEstimate]) -> String {
    let mut s = String::from("epsilon,mean,var,ci95,n\n");
    for (e, x) in eps.iter().zip(est) {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt17(*e),
            fmt17(x.mean),
            fmt17(x.variance),
            fmt17(x.ci95_halfwidth),
            x.n_samples
        );
    }
    s
}

/// Runs one subcommand and writes its artifacts plus `manifest.json` and the
/// resolved `config.toml` under `out`.
pub fn run(
    cmd: Command,
    r: &Resolved,
    base: &FsPath,
    out: &FsPath,
    workers: Option<usize>,
) -> Result<(), CliError> {
    if workers == Some(0) {
        return Err(CliError::Validation("--workers must be at least 1".into()));
    }
    let mut art = Artifacts::new(out)?;
    let mut extra = serde_json::Map::new();
    let result = match cmd {
        Command::Simulate => simulate(r, &mut art),
        Command::Limit => limit(r, &mut art),
        Command::CltVerify => clt_verify(r, workers, &mut art),
        Command::Moments => moments(r, workers, &mut art),
        Command::MdpTail => mdp_tail(r, workers, &mut art),
        Command::Rate => rate(r, base, &mut art),
        Command::CheckAssumptions => assumptions(r, &mut art),
    };
    let scheme = match cmd {
        Command::CltVerify | Command::Rate | Command::Limit => r.linearization_scheme(),
        _ => r.scheme(),
    };
    if let Err(e) = &result {
        extra.insert("error".into(), json!(e.to_string()));
    }
    art.write("config.toml", &r.config.to_toml())?;
    let g = &r.grid;
    let mut files = art.files.clone();
    files.push("manifest.json".into());
    let mut manifest = json!({
        "tool": "sdde",
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": sdde_core::VERSION,
        "command": cmd.name(),
        "model": { "source": r.model_label, "sha256": model_hash(r) },
        "grid": { "T": g.horizon(), "tau": g.delay(), "dt": g.step() },
        "scheme": scheme.name(),
        "seeds": {
            "seed": r.config.mc.seed,
            "first_substream": r.config.mc.first_substream,
            "n_traj": r.config.mc.n_traj,
        },
        "gamma": r.config.mdp.gamma,
        "config": serde_json::to_value(&r.config).expect("config serializes"),
        "outputs": files,
    });
    manifest.as_object_mut().unwrap().extend(extra);
    art.write_json("manifest.json", &manifest)?;
    result
}

fn simulate(r: &Resolved, art: &mut Artifacts) -> Result<(), CliError> {
    let mc = &r.config.mc;
    let eps = mc.epsilon.unwrap_or(mc.epsilons[0]);
    let scheme = r.scheme();
    let x0 = limit_path(&r.model, &r.xi, &r.grid, scheme)?;
    for sub in mc.first_substream..mc.first_substream + mc.paths as u64 {
        let w = sample_noise(&r.grid, r.model.noise_dim(), mc.seed, sub);
        let x = simulate_sdde(&r.model, &r.xi, eps, &r.grid, &w, None, scheme)
            .map_err(|e| CliError::Numerical(format!("substream {sub}: {e}")))?;
        let y = simulate_first_order(&r.model, &x0, &r.grid, &w)?;
        let mut b = PathBundle::new(r.grid);
        b.insert("x", x)?;
        b.insert("limit", x0.clone())?;
        b.insert("first_order", y)?;
        art.write(&format!("trajectories/traj_{sub:06}.csv"), &b.to_csv())?;
    }
    println!(
        "simulate: {} trajectories at epsilon {eps} ({})",
        mc.paths,
        scheme.name()
    );
    Ok(())
}

fn limit(r: &Resolved, art: &mut Artifacts) -> Result<(), CliError> {
    let x0 = match r.linearization_scheme() {
        sdde_core::Scheme::Explicit => solve_limit(&r.model, &r.xi, &r.grid)?,
        s => limit_path(&r.model, &r.xi, &r.grid, s)?,
    };
    art.write("limit.csv", &x0.to_csv())?;
    println!("limit: sup |X0| = {}", fmt17(x0.sup_norm()));
    Ok(())
}

fn clt_verify(r: &Resolved, workers: Option<usize>, art: &mut Artifacts) -> Result<(), CliError> {
    let eps = &r.config.mc.epsilons;
    let spec = ensemble(r, workers);
    let est = estimate_clt_ladder(
        &r.model,
        &r.xi,
        eps,
        &r.grid,
        r.linearization_scheme(),
        &spec,
    )?;
    art.write("clt.csv", &estimates_csv(eps, &est))?;
    let pts: Vec<_> = eps.iter().zip(&est).map(|(e, x)| (*e, x.mean)).collect();
    match fit_rate(&pts) {
        Ok(fit) => {
            if let Some(n) = fit.notice() {
                eprintln!("warning: {n}");
            }
            let mut v = serde_json::to_value(&fit).expect("fit serializes");
            v.as_object_mut()
                .unwrap()
                .insert("notice".into(), json!(fit.notice()));
            art.write_json("rate_fit.json", &v)?;
            println!(
                "clt-verify: slope {:.6}, r^2 {:.6}",
                fit.slope, fit.r_squared
            );
        }
        Err(e) => {
            eprintln!("warning: no rate fit: {e}");
            art.write_json("rate_fit.json", &json!({ "error": e.to_string() }))?;
        }
    }
    Ok(())
}

fn moments(r: &Resolved, workers: Option<usize>, art: &mut Artifacts) -> Result<(), CliError> {
    let mc = &r.config.mc;
    let spec = ensemble(r, workers);
    let est = mc
        .epsilons
        .iter()
        .map(|&e| estimate_moment(&r.model, &r.xi, e, mc.p, &r.grid, r.scheme(), &spec))
        .collect::<Result<Vec<_>, _>>()?;
    art.write("moments.csv", &estimates_csv(&mc.epsilons, &est))?;
    println!("moments: p = {} over {} epsilons", mc.p, est.len());
    Ok(())
}

fn mdp_tail(r: &Resolved, workers: Option<usize>, art: &mut Artifacts) -> Result<(), CliError> {
    let mdp = &r.config.mdp;
    let spec = ensemble(r, workers);
    let t = estimate_mdp_tail(
        &r.model,
        &r.xi,
        &r.grid,
        mdp.gamma,
        mdp.radius,
        &r.config.mc.epsilons,
        r.scheme(),
        &spec,
    )?;
    let mut s = String::from("epsilon,lambda,hits,n,probability,normalized_log_tail,censored\n");
    for p in &t.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt17(p.epsilon),
            fmt17(p.lambda),
            p.hits,
            p.n_samples,
            fmt17(p.probability),
            fmt17(p.normalized_log_tail),
            p.censored
        );
    }
    art.write("tail.csv", &s)?;
    art.write_json(
        "tail.json",
        &serde_json::to_value(&t).expect("tail serializes"),
    )?;
    for w in &t.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "mdp-tail: {} epsilons, radius {}",
        t.points.len(),
        mdp.radius
    );
    Ok(())
}

fn rate(r: &Resolved, base: &FsPath, art: &mut Artifacts) -> Result<(), CliError> {
    let target = r.target(base)?;
    let x0 = limit_path(&r.model, &r.xi, &r.grid, r.linearization_scheme())?;
    let rv = rate_function(&r.model, &x0, &target, r.config.mdp.tol)?;
    let d = &rv.diagnostics;
    let roundtrip = match &rv.argmin_control {
        Some(h) => {
            art.write("control.csv", &h.to_csv())?;
            Some(forward_map(&r.model, &x0, h)?.z.sup_distance(&target))
        }
        None => None,
    };
    art.write_json(
        "rate.json",
        &json!({
            "value": rv.value.is_finite().then_some(rv.value),
            "feasible": rv.is_feasible(),
            "roundtrip_distance": roundtrip,
            "first_infeasible_step": d.first_infeasible_step,
            "rank_deficient_steps": d.rank_deficient_steps,
            "singular_cutoff": d.singular_cutoff,
            "per_step_residuals": d.per_step_residuals,
        }),
    )?;
    match d.first_infeasible_step {
        None => {
            println!("rate: I(f) = {}", fmt17(rv.value));
            Ok(())
        }
        Some(k) => Err(CliError::Numerical(format!(
            "target is not attainable: residual {:e} outside the range of sigma at step {k} (t = {})",
            d.per_step_residuals[k],
            r.grid.time(k as isize)
        ))),
    }
}

fn assumptions(r: &Resolved, art: &mut Artifacts) -> Result<(), CliError> {
    let a = &r.config.assumptions;
    let cloud = CloudSpec {
        radius: a.radius,
        count: a.count,
        seed: a.seed,
    };
    let rep = check_assumptions(&r.model, cloud, a.tol)?;
    art.write_json(
        "assumptions.json",
        &serde_json::to_value(&rep).expect("report serializes"),
    )?;
    for c in &rep.checks {
        println!("{}: {:?}", c.name, c.verdict);
    }
    for n in &rep.notes {
        eprintln!("note: {n}");
    }
    Ok(())
}
