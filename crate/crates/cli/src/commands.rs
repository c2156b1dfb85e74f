use fracpoisson::fidi::{
    joint_pmf, joint_pmf_oracle, last_epoch_cdf, residual_lifetime_pdf_with, FidiOptions,
    ObservationSchedule,
};
use fracpoisson::montecarlo::{
    estimate_conditional_laws, estimate_counting_pmf, estimate_joint_pmf, ConditionalOptions,
};
use fracpoisson::renewal::counting_pmf;
use fracpoisson::validation::{run_all, ValidationConfig};
use fracpoisson::{FppError, FractionalOrder, InterArrivalLaw, MittagLeffler};
use serde_json::json;

use crate::table::{Cell, Table};

/// Why a command stopped; maps onto the exit status.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numeric(FppError),
    Io(std::io::Error),
    /// `validate` ran but some criterion failed.
    Rejected(usize),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Numeric(FppError::InsufficientAcceptance { .. }) => 4,
            Failure::Numeric(_) => 3,
            Failure::Io(_) | Failure::Rejected(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid arguments: {m}"),
            Failure::Numeric(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "cannot write output: {e}"),
            Failure::Rejected(n) => write!(f, "{n} acceptance criteria failed"),
        }
    }
}

impl From<FppError> for Failure {
    fn from(e: FppError) -> Self {
        Failure::Numeric(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome = Result<Table, Failure>;

fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Invalid(msg.into()))
}

pub fn check_beta(beta: f64) -> Result<InterArrivalLaw, Failure> {
    if !(beta > 0.0 && beta <= 1.0) {
        return invalid(format!("--beta must lie in (0, 1], got {beta}"));
    }
    Ok(InterArrivalLaw::from_beta(beta)?)
}

pub fn check_positive(flag: &str, x: f64) -> Result<(), Failure> {
    if !(x > 0.0 && x.is_finite()) {
        return invalid(format!("{flag} must be a positive number, got {x}"));
    }
    Ok(())
}

pub fn check_schedule(times: &[f64], counts: &[usize]) -> Result<ObservationSchedule, Failure> {
    if times.len() != counts.len() {
        return invalid(format!(
            "--times has {} entries but --counts has {}",
            times.len(),
            counts.len()
        ));
    }
    ObservationSchedule::new(times.to_vec(), counts.to_vec()).or_else(|e| invalid(e.to_string()))
}

fn bin_stderr(count: u64, n: u64) -> f64 {
    let p = count as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

pub struct PmfRequest {
    pub beta: f64,
    pub t: f64,
    pub n_max: Option<usize>,
    pub paths: usize,
    pub seed: u64,
    pub tol: f64,
}

pub fn pmf(r: &PmfRequest) -> Outcome {
    let law = check_beta(r.beta)?;
    check_positive("--t", r.t)?;
    check_positive("--tol", r.tol)?;
    let n_max = match r.n_max {
        Some(n) => n,
        None => {
            // enough rows to leave less than tol in the tail
            let mut cum = 0.0;
            let mut n = 0;
            loop {
                cum += law.pmf(n, r.t)?;
                if 1.0 - cum < r.tol || n >= 1000 {
                    break n;
                }
                n += 1;
            }
        }
    };
    let analytic = counting_pmf(&law, r.t, n_max)?;
    let mc = if r.paths > 0 {
        Some(estimate_counting_pmf(&law, r.t, r.paths, r.seed)?)
    } else {
        None
    };
    let mut table = Table::new(&["n", "analytic_p", "mc_p", "mc_stderr"]);
    for (n, &p) in analytic.probabilities.iter().enumerate() {
        let (mp, se) = match &mc {
            Some(h) => {
                let c = h.counts.get(n).copied().unwrap_or(0);
                (Some(c as f64 / h.n_samples as f64), Some(bin_stderr(c, h.n_samples)))
            }
            None => (None, None),
        };
        table.push(vec![n.into(), p.into(), mp.into(), se.into()]);
    }
    table.note("tail_mass", json!(analytic.tail_mass));
    if let Some(h) = &mc {
        let beyond: u64 = h.counts.iter().skip(n_max + 1).sum();
        table.note("mc_paths_beyond_n_max", json!(beyond));
    }
    Ok(table)
}

pub struct ResidualRequest {
    pub beta: f64,
    pub t1: f64,
    pub n1: usize,
    pub paths: usize,
    pub seed: u64,
    pub tol: f64,
}

// Bin-averaged density from cdf values at equally spaced edges.
fn bin_average<F: FnMut(f64) -> Result<f64, FppError>>(
    start: f64,
    width: f64,
    bins: usize,
    mut cdf: F,
) -> Result<Vec<f64>, FppError> {
    let edges: Vec<f64> = (0..=bins).map(|i| cdf(start + i as f64 * width)).collect::<Result<_, _>>()?;
    Ok(edges.windows(2).map(|w| (w[1] - w[0]) / width).collect())
}

pub fn residual(r: &ResidualRequest) -> Outcome {
    let law = check_beta(r.beta)?;
    check_positive("--t1", r.t1)?;
    check_positive("--tol", r.tol)?;
    let copts = ConditionalOptions::default();
    let u_bins = ((r.t1 / copts.u_bin_width - 1e-9).ceil() as usize).max(1);
    let y_bins = ((copts.y_range / copts.y_bin_width - 1e-9).ceil() as usize).max(1);
    let opts = FidiOptions {
        tail_mass: r.tol,
        ..Default::default()
    };
    let kernel = residual_lifetime_pdf_with(&law, r.t1, r.n1, &opts)?;
    let f_u = bin_average(0.0, copts.u_bin_width, u_bins, |u| last_epoch_cdf(&law, r.t1, r.n1, u.min(r.t1)))?;
    let f_y = bin_average(0.0, copts.y_bin_width, y_bins, |y| Ok(1.0 - kernel.survival_at(&law, y)?))?;
    let mc = if r.paths > 0 {
        Some(estimate_conditional_laws(&law, r.t1, r.n1, r.paths, r.seed, &copts)?)
    } else {
        None
    };
    let mc_u = mc.as_ref().map(|s| s.last_epoch.density());
    let mc_y = mc.as_ref().map(|s| s.residual.density());
    let mut table = Table::new(&["t", "analytic_fU", "mc_fU", "analytic_fY", "mc_fY"]);
    for (i, &a) in f_u.iter().enumerate() {
        let t = (i as f64 + 0.5) * copts.u_bin_width;
        let m = mc_u.as_ref().map(|d| d[i]);
        table.push(vec![t.into(), a.into(), m.into(), Cell::Empty, Cell::Empty]);
    }
    for (i, &a) in f_y.iter().enumerate() {
        let t = (i as f64 + 0.5) * copts.y_bin_width;
        let m = mc_y.as_ref().map(|d| d[i]);
        table.push(vec![t.into(), Cell::Empty, Cell::Empty, a.into(), m.into()]);
    }
    table.note("u_bin_width", json!(copts.u_bin_width));
    table.note("y_bin_width", json!(copts.y_bin_width));
    table.note("kernel", json!({
        "extent": kernel.extent(),
        "tail_mass": kernel.tail_mass(),
        "normalization_defect": kernel.normalization_defect(),
    }));
    if let Some(s) = &mc {
        table.note("mc_accepted", json!(s.accepted));
    }
    Ok(table)
}

pub struct FidiRequest {
    pub beta: f64,
    pub times: Vec<f64>,
    pub counts: Vec<usize>,
    pub paths: usize,
    pub seed: u64,
}

/// One row per prefix of the schedule.
pub fn fidi(r: &FidiRequest) -> Outcome {
    let law = check_beta(r.beta)?;
    let schedule = check_schedule(&r.times, &r.counts)?;
    let mut table = Table::new(&[
        "k",
        "t_k",
        "n_k",
        "joint_p",
        "error_bound",
        "oracle_p",
        "mc_p",
        "mc_stderr",
        "joint_minus_oracle",
        "joint_minus_mc",
        "oracle_minus_mc",
    ]);
    for k in 1..=schedule.len() {
        let s = schedule.prefix(k);
        let j = joint_pmf(&s, &law)?;
        let oracle = if k <= 3 { Some(joint_pmf_oracle(&s, &law)?) } else { None };
        let mc = if r.paths > 0 {
            Some(estimate_joint_pmf(&s, &law, r.paths, r.seed)?)
        } else {
            None
        };
        let mc_p = mc.map(|m| m.value);
        table.push(vec![
            k.into(),
            s.last_time().into(),
            s.last_count().into(),
            j.value.into(),
            j.error_bound.into(),
            oracle.into(),
            mc_p.into(),
            mc.map(|m| m.std_error).into(),
            oracle.map(|o| j.value - o).into(),
            mc_p.map(|m| j.value - m).into(),
            oracle.zip(mc_p).map(|(o, m)| o - m).into(),
        ]);
    }
    Ok(table)
}

pub struct ValidateRequest {
    pub quick: bool,
    pub seed: u64,
    pub tol: f64,
    pub only: Option<Vec<u8>>,
}

/// The report table, and whether every criterion passed.
pub fn validate(r: &ValidateRequest) -> Result<(Table, usize), Failure> {
    check_positive("--tol", r.tol)?;
    if let Some(ids) = &r.only {
        if let Some(bad) = ids.iter().find(|&&i| !(1..=8).contains(&i)) {
            return invalid(format!("--only accepts criteria 1 to 8, got {bad}"));
        }
    }
    let cfg = ValidationConfig {
        quick: r.quick,
        seed: r.seed,
        tol_scale: r.tol,
        only: r.only.clone(),
    };
    let reports = run_all(&cfg)?;
    let mut table = Table::new(&["id", "name", "passed", "within_runtime_limit", "runtime_limit_s", "detail"]);
    let mut failed = 0;
    for rep in &reports {
        failed += usize::from(!rep.passed);
        // timings go to stderr so that the file only depends on the config
        eprintln!("criterion {}: {:.1} s", rep.id, rep.seconds);
        table.push(vec![
            Cell::Int(rep.id.into()),
            rep.name.into(),
            rep.passed.into(),
            (rep.seconds <= rep.runtime_limit).into(),
            rep.runtime_limit.into(),
            rep.detail.clone().into(),
        ]);
    }
    Ok((table, failed))
}

pub fn ml_eval(beta: f64, x: f64) -> Outcome {
    let order = FractionalOrder::new(beta).or_else(|e| invalid(e.to_string()))?;
    if !(x <= 0.0 && x.is_finite()) {
        return invalid(format!("--x must be finite and not positive, got {x}"));
    }
    let ml = MittagLeffler::new(order);
    let mut table = Table::new(&["function", "x", "value", "method", "est_abs_error"]);
    for (name, e) in [("E_beta", ml.one_param(x)), ("E_beta_beta", ml.two_param(x))] {
        let e = e?;
        table.push(vec![
            name.into(),
            x.into(),
            e.value.into(),
            format!("{:?}", e.method).into(),
            e.est_abs_error.into(),
        ]);
    }
    Ok(table)
}
