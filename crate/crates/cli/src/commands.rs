use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use pesvlab_core::erm::{
    empirical_error, generalization_error_mc, sample_dataset, trace_to_csv, train, working_range, Dataset,
    InputDistribution, LossSpec, OptimizerConfig, TeacherSpec, TrainOutcome,
};
use pesvlab_core::netcore::{load_network, network_to_json, ActivationSpec, NetParams, WidthVector};
use pesvlab_core::norms::pesv_norm;
use pesvlab_core::oracles::OracleReport;
use pesvlab_core::theory::{double_descent_sweep, gen_bound_encompassing, sweep_to_csv, BoundConfig, ExtremumKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Config, WidthsSpec};
use crate::error::CliError;
use crate::suites::{run_suite, Suite};

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// Options shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub timestamp: bool,
}

impl Common {
    fn config(&self) -> Result<Config, CliError> {
        match &self.config {
            Some(p) => Config::load(p),
            None => Err(CliError::Usage("--config is required".into())),
        }
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}

fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated_unix={secs}\n")
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Io(format!("cannot write '{}': {e}", path.display())))
}

fn write_csv(path: &Path, body: &str, timestamp: bool) -> Result<(), CliError> {
    if timestamp {
        write_file(path, &(timestamp_line() + body))
    } else {
        write_file(path, body)
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("cannot create '{}': {e}", path.display())))
}

/// Teacher from the configured file, or a random one of the configured
/// shape and norm.
pub fn teacher(cfg: &Config) -> Result<TeacherSpec, CliError> {
    let problem = cfg.problem()?;
    match &problem.teacher {
        Some(p) => {
            let path = cfg.resolve(p);
            let (params, act) = load_network(&path)
                .map_err(|e| CliError::Config(format!("cannot load teacher '{}': {e}", path.display())))?;
            if params.input_dim() != problem.d {
                return Err(CliError::Config(format!(
                    "teacher input dimension {} differs from problem.d = {}",
                    params.input_dim(),
                    problem.d
                )));
            }
            Ok(TeacherSpec::new(params, act))
        }
        None => Ok(TeacherSpec::random(
            problem.d,
            &WidthVector::new(problem.teacher_widths.clone())?,
            cfg.network()?.activation()?,
            problem.teacher_norm,
            problem.teacher_seed,
        )?),
    }
}

pub fn bound_config(cfg: &Config, depth: usize, act: &ActivationSpec) -> Result<BoundConfig, CliError> {
    let problem = cfg.problem()?;
    let target_norm = match cfg.bounds.target_norm {
        Some(m) => m,
        None => teacher(cfg)?.nu,
    };
    let b = BoundConfig {
        n: problem.n as f64,
        d: problem.d,
        depth,
        lipschitz: act.lipschitz_constant(),
        sigma_eps: problem.sigma_eps,
        target_norm,
        c: cfg.bounds.c,
        big_c: cfg.bounds.big_c,
        c1: cfg.bounds.c1,
    };
    b.validate()?;
    Ok(b)
}

pub fn cmd_bound(common: &Common, widths: Option<&str>) -> Result<(), CliError> {
    let cfg = common.config()?;
    let network = cfg.network()?;
    let grid = match widths {
        Some(s) => WidthsSpec::Text(s.to_string()).resolve()?,
        None => network.sweep_widths()?,
    };
    let pattern = network.pattern()?;
    let act = network.activation()?;
    let bcfg = bound_config(&cfg, pattern.depth(), &act)?;
    let sweep = double_descent_sweep(&bcfg, &grid, &pattern)?;
    let out = common.out_or("bound.csv");
    write_csv(&out, &sweep_to_csv(&sweep), common.timestamp)?;
    say!("widths: {}..{} ({} points)", grid[0], grid[grid.len() - 1], grid.len());
    for e in &sweep.extrema {
        let kind = match e.kind {
            ExtremumKind::Min => "local min",
            ExtremumKind::Max => "local max",
        };
        say!("{kind} at m={} total={:.6}", e.width, e.total);
    }
    match sweep.saturation_width {
        Some(m) => say!("overparametrized regime from m={m}"),
        None => say!("overparametrized regime not reached"),
    }
    say!("wrote {}", out.display());
    Ok(())
}

struct Problem {
    teacher: TeacherSpec,
    dataset: Dataset,
    act: ActivationSpec,
    loss: LossSpec,
    lambda: f64,
    n_test: usize,
    test_seed: u64,
}

fn problem(cfg: &Config) -> Result<Problem, CliError> {
    let p = cfg.problem()?;
    let teacher = teacher(cfg)?;
    let act = cfg.network()?.activation()?;
    let dataset = sample_dataset(&teacher, p.n, p.sigma_eps, &InputDistribution::UniformBall, p.data_seed)?;
    let depth = cfg.network()?.widths()?.depth();
    let range = working_range(teacher.nu, act.lipschitz_constant(), depth, p.sigma_eps);
    let loss = LossSpec::new(cfg.loss.kind()?, if range > 0.0 { range } else { 1.0 })?;
    let lambda = cfg.optimizer.lambda;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(CliError::Config(format!(
            "optimizer.lambda must be nonnegative, got {lambda}"
        )));
    }
    Ok(Problem {
        teacher,
        dataset,
        act,
        loss,
        lambda,
        n_test: p.n_test,
        test_seed: p.data_seed.wrapping_add(1),
    })
}

fn fit(cfg: &Config, pb: &Problem, widths: &WidthVector, seed: u64) -> pesvlab_core::Result<TrainOutcome> {
    let init = NetParams::random_uniform(pb.dataset.input_dim(), widths, &mut ChaCha8Rng::seed_from_u64(seed));
    let opt = OptimizerConfig {
        schedule: cfg.optimizer.schedule(),
        max_iters: cfg.optimizer.max_iters,
        tolerance: cfg.optimizer.tolerance,
        seed,
    };
    train(
        &init,
        &pb.act,
        &pb.dataset,
        pb.lambda,
        &pb.loss,
        cfg.optimizer.regularizer(),
        &opt,
    )
}

pub fn cmd_train(common: &Common) -> Result<(), CliError> {
    let cfg = common.config()?;
    let pb = problem(&cfg)?;
    let widths = cfg.network()?.widths()?;
    let dir = common.out_or("train_out");
    create_dir(&dir)?;
    let model = dir.join("model.json");
    write_file(&dir.join("dataset.csv"), &pb.dataset.to_csv())?;
    let out = match fit(&cfg, &pb, &widths, cfg.optimizer.init_seed) {
        Ok(out) => out,
        Err(pesvlab_core::Error::Diverged { iteration, last_finite }) => {
            write_file(&model, &network_to_json(&last_finite, &pb.act))?;
            return Err(CliError::Diverged {
                iteration,
                saved: model.display().to_string(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    write_file(&model, &network_to_json(&out.params, &pb.act))?;
    write_csv(&dir.join("trace.csv"), &trace_to_csv(&out.trace), common.timestamp)?;
    let emp = empirical_error(&out.params, &pb.act, &pb.teacher, &pb.dataset)?;
    let (gen, se) = generalization_error_mc(&out.params, &pb.act, &pb.teacher, pb.n_test, pb.test_seed)?;
    say!("objective {:.6e} (iteration {})", out.objective, out.best_iteration);
    say!("nu {:.6e}", pesv_norm(&out.params));
    say!("empirical error {emp:.6e}");
    say!("generalization error {gen:.6e} +- {se:.1e}");
    say!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_verify(common: &Common, suite: Suite) -> Result<(), CliError> {
    let verify = match &common.config {
        Some(p) => Config::load(p)?.verify,
        None => Default::default(),
    };
    let reports: Vec<OracleReport> = run_suite(suite, &verify)?;
    let mut hard = Vec::new();
    let mut soft = Vec::new();
    for r in &reports {
        let status = match (r.pass, r.soft) {
            (true, _) => "PASS",
            (false, true) => "SOFT-FAIL",
            (false, false) => "FAIL",
        };
        say!("{status} {}{}", r.name, if r.soft { " (soft)" } else { "" });
        if r.is_failure() {
            hard.push(r.name.clone());
        } else if !r.pass {
            soft.push(r.name.clone());
        }
    }
    let doc = json!({
        "suite": format!("{suite:?}").to_lowercase(),
        "hard_failures": hard,
        "soft_failures": soft,
        "soft_checks": reports.iter().filter(|r| r.soft).map(|r| r.name.clone()).collect::<Vec<_>>(),
        "reports": reports,
    });
    let out = common.out_or("verify_report.json");
    write_file(
        &out,
        &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"),
    )?;
    say!("wrote {}", out.display());
    if hard.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(hard.join(", ")))
    }
}

pub fn cmd_sweep(common: &Common, trials: Option<usize>) -> Result<(), CliError> {
    let cfg = common.config()?;
    let trials = trials.unwrap_or(cfg.sweep.trials);
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let network = cfg.network()?;
    let grid = network.sweep_widths()?;
    let pattern = network.pattern()?;
    let pb = problem(&cfg)?;
    let bcfg = bound_config(&cfg, pattern.depth(), &pb.act)?;
    let jobs: Vec<(usize, u64)> = grid
        .iter()
        .flat_map(|&m| (0..trials as u64).map(move |i| (m, cfg.optimizer.init_seed.wrapping_add(i))))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(m, seed)| {
            let widths = pattern.scaled(m)?;
            let out = fit(&cfg, &pb, &widths, seed)?;
            let emp = empirical_error(&out.params, &pb.act, &pb.teacher, &pb.dataset)?;
            let (gen, se) = generalization_error_mc(&out.params, &pb.act, &pb.teacher, pb.n_test, pb.test_seed)?;
            let bound = gen_bound_encompassing(&bcfg, &widths)?.total;
            Ok((m, seed, out.objective, pesv_norm(&out.params), emp, gen, se, bound))
        })
        .collect::<pesvlab_core::Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.0, r.1));
    let mut csv =
        String::from("m,seed,objective,nu,empirical_error,generalization_error,generalization_stderr,bound\n");
    for (m, seed, obj, nu, emp, gen, se, bound) in &rows {
        writeln!(csv, "{m},{seed},{obj},{nu},{emp},{gen},{se},{bound}").expect("write to string");
    }
    let out = common.out_or("sweep.csv");
    write_csv(&out, &csv, common.timestamp)?;
    say!("{} runs over {} widths x {trials} seeds", rows.len(), grid.len());
    say!("wrote {}", out.display());
    Ok(())
}
