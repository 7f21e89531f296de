//! Experiment drivers: synthetic-data estimation runs, objective comparisons,
//! the convergence study and the moment-surface scan.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crn::{bernoulli_indices, derive_seed};
use crate::engine::Workspace;
use crate::error::{invalid, Result};
use crate::estimator::{estimate_trivial, estimate_with_spec, objective_spec, EstimationConfig};
use crate::io::fmt_float;
use crate::lattice::{Lattice, LatticeKind, Sublattice};
use crate::moments::{empirical_moments, sublattice_moments};
use crate::percolation::{ColourField, ModelVariant, ParameterVector, SamplingMethod};

/// `100 |1 - estimate / truth|`; zero truth gives 0 for an exact hit and infinity otherwise.
pub fn relative_bias(estimate: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        return if estimate == 0.0 { 0.0 } else { f64::INFINITY };
    }
    100.0 * (1.0 - estimate / truth).abs()
}

pub fn relative_bias_vector(estimate: &ParameterVector, truth: &ParameterVector) -> Vec<f64> {
    estimate
        .to_flat()
        .iter()
        .zip(truth.to_flat())
        .map(|(&e, t)| relative_bias(e, t))
        .collect()
}

/// A synthetic data set with its realised seeding and edge frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub field: ColourField,
    pub theta0: ParameterVector,
    pub seed: u64,
    /// Fraction of vertices seeded with each colour.
    pub seed_freq: Vec<f64>,
    /// Fraction of vertices observed with each colour.
    pub ybar: Vec<f64>,
    /// Fraction of open edge slots.
    pub open_freq: f64,
}

/// One field drawn with independent Bernoulli seeds and edges.
pub fn generate_dataset(
    lattice: Arc<Lattice>,
    theta0: &ParameterVector,
    seed: u64,
    variant: ModelVariant,
) -> Result<Dataset> {
    let lat = &*lattice;
    let n = lat.n_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<Vec<u32>> = theta0
        .lambdas
        .iter()
        .map(|&l| bernoulli_indices(&mut rng, n, l))
        .collect();
    let slots = variant.edge_slots(lat);
    let open = bernoulli_indices(&mut rng, slots, theta0.mu);
    let refs: Vec<&[u32]> = seeds.iter().map(Vec::as_slice).collect();
    let masks = Workspace::new(n).run_field(lat, variant, &refs, &open);
    let field = ColourField::new(Arc::clone(&lattice), theta0.n_colours(), masks)?;
    let ybar = (0..field.n_colours)
        .map(|l| field.colour_count(l) as f64 / n as f64)
        .collect();
    Ok(Dataset {
        seed_freq: seeds.iter().map(|s| s.len() as f64 / n as f64).collect(),
        ybar,
        open_freq: if slots == 0 { 0.0 } else { open.len() as f64 / slots as f64 },
        field,
        theta0: theta0.clone(),
        seed,
    })
}

/// The three objective values of a comparison, all on one frozen pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaComparison {
    pub method: SamplingMethod,
    pub alpha_theta0: f64,
    pub alpha_triv: f64,
    pub alpha_hat: f64,
    pub theta_hat: ParameterVector,
}

/// One estimation run of a table experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: EstimationConfig,
    pub theta_hat: ParameterVector,
    pub bias: Vec<f64>,
    pub alpha_hat: f64,
    pub alpha_theta0: f64,
    pub alpha_triv: f64,
    pub n_starts: usize,
    pub evals: usize,
    pub converged: bool,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub study: String,
    pub theta0: ParameterVector,
    pub rows: usize,
    pub cols: usize,
    pub dataset_seed: u64,
    pub seed_freq: Vec<f64>,
    pub ybar: Vec<f64>,
    pub open_freq: f64,
    pub runs: Vec<RunRecord>,
}

/// Estimates `dataset` under `config` and records bias and the objective comparison.
pub fn estimation_run(dataset: &Dataset, config: &EstimationConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let spec = objective_spec(&dataset.field, config)?;
    let res = estimate_with_spec(&spec, config)?;
    let triv = estimate_trivial(&dataset.field)?;
    Ok(RunRecord {
        config: config.clone(),
        bias: relative_bias_vector(&res.theta_hat, &dataset.theta0),
        alpha_theta0: spec.alpha(&dataset.theta0)?,
        alpha_triv: spec.alpha(&triv)?,
        alpha_hat: res.alpha,
        n_starts: res.starts.len(),
        evals: res.starts.iter().map(|s| s.evals).sum(),
        converged: res.converged(),
        theta_hat: res.theta_hat,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// One synthetic data set at `theta0`, estimated under both methods for every config.
pub fn run_table_experiment(
    theta0: &ParameterVector,
    kind: LatticeKind,
    rows: usize,
    cols: usize,
    configs: &[EstimationConfig],
    dataset_seed: u64,
) -> Result<StudyReport> {
    let lat = Arc::new(Lattice::new(kind, rows, cols)?);
    let data = generate_dataset(lat, theta0, dataset_seed, ModelVariant::Percolation)?;
    let mut runs = Vec::new();
    for cfg in configs {
        for method in [SamplingMethod::Bernoulli, SamplingMethod::FixedCount] {
            let cfg = EstimationConfig {
                method,
                ..cfg.clone()
            };
            runs.push(estimation_run(&data, &cfg)?);
        }
    }
    Ok(StudyReport {
        study: "table".into(),
        theta0: theta0.clone(),
        rows,
        cols,
        dataset_seed,
        seed_freq: data.seed_freq,
        ybar: data.ybar,
        open_freq: data.open_freq,
        runs,
    })
}

/// Objective at the truth, at the trivial estimate and at the MSM estimate.
pub fn alpha_comparison(
    theta0: &ParameterVector,
    data: &ColourField,
    config: &EstimationConfig,
) -> Result<AlphaComparison> {
    let spec = objective_spec(data, config)?;
    let res = estimate_with_spec(&spec, config)?;
    let triv = estimate_trivial(data)?;
    Ok(AlphaComparison {
        method: config.method,
        alpha_theta0: spec.alpha(theta0)?,
        alpha_triv: spec.alpha(&triv)?,
        alpha_hat: res.alpha,
        theta_hat: res.theta_hat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub rows: usize,
    pub cols: usize,
    pub method: SamplingMethod,
    pub alpha: f64,
    pub alpha_tilde: f64,
    /// Smallest diagonal weight; `alpha >= alpha_tilde * min_weight`.
    pub min_weight: f64,
}

/// Weighted and unweighted objective at `theta0` on fresh data of each size.
pub fn convergence_study(
    theta0: &ParameterVector,
    kind: LatticeKind,
    sizes: &[(usize, usize)],
    n_s: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    if sizes
        .windows(2)
        .any(|w| w[0].0 * w[0].1 >= w[1].0 * w[1].1)
    {
        return Err(invalid("lattice sizes must be increasing"));
    }
    let mut out = Vec::new();
    for (k, &(rows, cols)) in sizes.iter().enumerate() {
        let lat = Arc::new(Lattice::new(kind, rows, cols)?);
        let data = generate_dataset(lat, theta0, derive_seed(seed, 2 * k as u64), ModelVariant::Percolation)?;
        for method in [SamplingMethod::Bernoulli, SamplingMethod::FixedCount] {
            let cfg = EstimationConfig::new(n_s, 1, theta0.mu.max(1e-3), method, derive_seed(seed, 2 * k as u64 + 1));
            let spec = objective_spec(&data.field, &cfg)?;
            out.push(ConvergenceRow {
                rows,
                cols,
                method,
                alpha: spec.alpha(theta0)?,
                alpha_tilde: spec.alpha_tilde(theta0)?,
                min_weight: spec.weights.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
    }
    Ok(out)
}

/// Parameter grid and geometry of a moment-surface scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub kind: LatticeKind,
    pub outer: (usize, usize),
    pub central: (usize, usize),
    pub n_s: usize,
    pub master_seed: u64,
}

/// `n` logarithmically spaced values from `lo` to `hi`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    lo
                } else if k == n - 1 {
                    hi
                } else {
                    (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp()
                }
            })
            .collect(),
    }
}

impl ScanSpec {
    /// Log-spaced grid over `[5e-4, 0.4676] x [1e-4, 0.5]`, optionally with
    /// an extra row at the critical `mu`.
    pub fn log_grid(n_lambda: usize, n_mu: usize, critical_row: bool, kind: LatticeKind) -> Self {
        let mut mus = log_space(1e-4, 0.5, n_mu);
        if critical_row {
            mus.push(kind.critical_probability());
            mus.sort_by(f64::total_cmp);
        }
        ScanSpec {
            lambdas: log_space(5e-4, 0.4676, n_lambda),
            mus,
            kind,
            outer: (300, 300),
            central: (100, 100),
            n_s: 5,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_s == 0 {
            return Err(invalid("n_s must be at least 1"));
        }
        if self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(invalid("scan lambdas must lie in [0, 1]"));
        }
        if self.mus.iter().any(|m| !(0.0..=0.5).contains(m)) {
            return Err(invalid("scan mus must lie in [0, 0.5]"));
        }
        let (or, oc) = self.outer;
        let (cr, cc) = self.central;
        if cr == 0 || cc == 0 || cr + 2 > or || cc + 2 > oc {
            return Err(invalid(format!(
                "central {cr}x{cc} must lie strictly inside outer {or}x{oc}"
            )));
        }
        Ok(())
    }
}

/// Sublattice means at one grid point, with Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub lambda: f64,
    pub mu: f64,
    pub m1: f64,
    pub m2: f64,
    pub se1: f64,
    pub se2: f64,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sublattice means of one-colour fields simulated on the outer lattice.
pub fn identifiability_scan(spec: &ScanSpec) -> Result<Vec<ScanPoint>> {
    spec.validate()?;
    let lat = Arc::new(Lattice::new(spec.kind, spec.outer.0, spec.outer.1)?);
    let sub: Sublattice = lat.centered_sublattice(spec.central.0, spec.central.1)?;
    let grid: Vec<(f64, f64)> = spec
        .mus
        .iter()
        .flat_map(|&mu| spec.lambdas.iter().map(move |&l| (l, mu)))
        .collect();
    grid.into_par_iter()
        .enumerate()
        .map_init(
            || Workspace::new(lat.n_vertices()),
            |ws, (g, (lambda, mu))| {
                let mut m1 = Vec::with_capacity(spec.n_s);
                let mut m2 = Vec::with_capacity(spec.n_s);
                for s in 0..spec.n_s {
                    let seed = derive_seed(derive_seed(spec.master_seed, g as u64), s as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let seeds = bernoulli_indices(&mut rng, lat.n_vertices(), lambda);
                    let open = bernoulli_indices(&mut rng, lat.n_edges(), mu);
                    let masks = ws.run_field(&lat, ModelVariant::Percolation, &[&seeds], &open);
                    let field = ColourField::new(Arc::clone(&lat), 1, masks)?;
                    let m = sublattice_moments(&field, &sub)?;
                    m1.push(m.ybar[0]);
                    m2.push(m.zbar[0]);
                }
                let (m1, se1) = mean_se(&m1);
                let (m2, se2) = mean_se(&m2);
                Ok(ScanPoint {
                    lambda,
                    mu,
                    m1,
                    m2,
                    se1,
                    se2,
                })
            },
        )
        .collect()
}

/// Pairs of grid neighbours (lower, higher) whose mean decreases by more
/// than `k` standard errors of the difference.
pub fn monotonicity_violations(spec: &ScanSpec, points: &[ScanPoint], k: f64) -> Vec<(usize, usize)> {
    let nl = spec.lambdas.len();
    let idx = |i: usize, j: usize| j * nl + i;
    let mut bad = Vec::new();
    let mut check = |a: usize, b: usize| {
        let (p, q) = (&points[a], &points[b]);
        let d1 = p.m1 - q.m1;
        let d2 = p.m2 - q.m2;
        if d1 > k * p.se1.hypot(q.se1) || d2 > k * p.se2.hypot(q.se2) {
            bad.push((a, b));
        }
    };
    for j in 0..spec.mus.len() {
        for i in 0..nl {
            if i + 1 < nl {
                check(idx(i, j), idx(i + 1, j));
            }
            if j + 1 < spec.mus.len() {
                check(idx(i, j), idx(i, j + 1));
            }
        }
    }
    bad
}

/// Whole-lattice mean colour fraction over `n_s` fields on a standalone `rows x cols` lattice.
pub fn standalone_first_moment(
    kind: LatticeKind,
    rows: usize,
    cols: usize,
    lambda: f64,
    mu: f64,
    n_s: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let lat = Arc::new(Lattice::new(kind, rows, cols)?);
    let theta = ParameterVector::new(vec![lambda], mu)?;
    let vals = (0..n_s)
        .map(|s| {
            let d = generate_dataset(Arc::clone(&lat), &theta, derive_seed(seed, s as u64), ModelVariant::Percolation)?;
            Ok(empirical_moments(&d.field)?.ybar[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_se(&vals))
}

fn floats(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(",")
}

pub fn scan_csv(spec: &ScanSpec, points: &[ScanPoint]) -> String {
    let mut out = String::new();
    writeln!(out, "# moment surface scan").unwrap();
    writeln!(
        out,
        "# lattice {} outer {}x{} central {}x{} n_s {} seed {}",
        spec.kind, spec.outer.0, spec.outer.1, spec.central.0, spec.central.1, spec.n_s, spec.master_seed
    )
    .unwrap();
    writeln!(out, "# m1 = mean colour fraction, m2 = mean pair fraction, se = standard error over replicates").unwrap();
    writeln!(out, "lambda,mu,m1,m2,se1,se2").unwrap();
    for p in points {
        writeln!(out, "{}", floats(&[p.lambda, p.mu, p.m1, p.m2, p.se1, p.se2])).unwrap();
    }
    out
}

pub fn convergence_csv(theta0: &ParameterVector, n_s: usize, seed: u64, rows: &[ConvergenceRow]) -> String {
    let mut out = String::new();
    writeln!(out, "# objective at the true parameter versus lattice size").unwrap();
    writeln!(out, "# theta0 {} n_s {n_s} seed {seed}", floats(&theta0.to_flat())).unwrap();
    writeln!(out, "# alpha is weighted, alpha_tilde unweighted").unwrap();
    writeln!(out, "rows,cols,method,alpha,alpha_tilde,min_weight").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.rows,
            r.cols,
            r.method,
            floats(&[r.alpha, r.alpha_tilde, r.min_weight])
        )
        .unwrap();
    }
    out
}

pub fn report_csv(report: &StudyReport) -> String {
    let mut out = String::new();
    let nc = report.theta0.n_colours();
    writeln!(out, "# estimation study {}", report.study).unwrap();
    writeln!(
        out,
        "# lattice {}x{} dataset seed {} theta0 {}",
        report.rows,
        report.cols,
        report.dataset_seed,
        floats(&report.theta0.to_flat())
    )
    .unwrap();
    writeln!(out, "# seeding frequencies {}", floats(&report.seed_freq)).unwrap();
    writeln!(out, "# observed frequencies {}", floats(&report.ybar)).unwrap();
    writeln!(out, "# open edge frequency {}", fmt_float(report.open_freq)).unwrap();
    writeln!(out, "# d_* = relative bias in percent").unwrap();
    let mut header = vec!["method".to_string(), "n_s".into(), "n_opt".into(), "mu_max".into(), "seed".into()];
    for l in 1..=nc {
        header.push(format!("lambda{l}"));
    }
    header.push("mu".into());
    for l in 1..=nc {
        header.push(format!("d_lambda{l}"));
    }
    header.extend(["d_mu", "alpha_hat", "alpha_theta0", "alpha_triv", "evals", "converged"].map(String::from));
    writeln!(out, "{}", header.join(",")).unwrap();
    for r in &report.runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.config.method,
            r.config.n_s,
            r.config.n_opt,
            fmt_float(r.config.mu_max),
            r.config.master_seed,
            floats(&r.theta_hat.to_flat()),
            floats(&r.bias),
            fmt_float(r.alpha_hat),
            fmt_float(r.alpha_theta0),
            fmt_float(r.alpha_triv),
            r.evals,
            r.converged
        )
        .unwrap();
    }
    out
}

/// Heatmap of `value` over the scan grid, log-spaced axes as cell indices.
pub fn scan_svg(spec: &ScanSpec, points: &[ScanPoint], value: impl Fn(&ScanPoint) -> f64, title: &str) -> String {
    let (nl, nm) = (spec.lambdas.len(), spec.mus.len());
    let cell = 40.0;
    let (left, top) = (70.0, 40.0);
    let w = left + cell * nl as f64 + 20.0;
    let h = top + cell * nm as f64 + 50.0;
    let vals: Vec<f64> = points.iter().map(&value).collect();
    let max = vals.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="10">"#).unwrap();
    writeln!(out, r#"<text x="{left}" y="20" font-size="13">{title}</text>"#).unwrap();
    for (k, v) in vals.iter().enumerate() {
        let (i, j) = (k % nl, k / nl);
        let x = left + cell * i as f64;
        // mu grows upwards
        let y = top + cell * (nm - 1 - j) as f64;
        let shade = (255.0 * (1.0 - v / max)).round() as u8;
        writeln!(
            out,
            r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb(255,{shade},{shade})"><title>{}</title></rect>"#,
            fmt_float(*v)
        )
        .unwrap();
    }
    for (i, l) in spec.lambdas.iter().enumerate() {
        let x = left + cell * (i as f64 + 0.5);
        writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{l:.1e}</text>"#, top + cell * nm as f64 + 14.0).unwrap();
    }
    for (j, m) in spec.mus.iter().enumerate() {
        let y = top + cell * ((nm - 1 - j) as f64 + 0.5) + 3.0;
        writeln!(out, r#"<text x="{}" y="{y}" text-anchor="end">{m:.1e}</text>"#, left - 4.0).unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">lambda</text>"#, left + cell * nl as f64 / 2.0, h - 8.0).unwrap();
    writeln!(out, r#"<text x="12" y="{}" transform="rotate(-90 12 {})">mu</text>"#, top + cell * nm as f64 / 2.0, top + cell * nm as f64 / 2.0).unwrap();
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_bias_definition() {
        assert_eq!(relative_bias(0.036, 0.06), 40.0);
        assert!((relative_bias(0.084, 0.06) - 40.0).abs() < 1e-12);
        assert_eq!(relative_bias(0.0, 0.0), 0.0);
        assert_eq!(relative_bias(0.1, 0.0), f64::INFINITY);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1e-4, 0.5, 6);
        assert_eq!(v.len(), 6);
        assert_eq!(v[0], 1e-4);
        assert_eq!(v[5], 0.5);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        let ratio = v[1] / v[0];
        assert!((v[3] / v[2] - ratio).abs() < 1e-9);
    }

    #[test]
    fn dataset_frequencies() {
        let lat = Arc::new(Lattice::new(LatticeKind::Triangular, 25, 25).unwrap());
        let theta = ParameterVector::new(vec![0.1, 0.05, 0.07], 0.06).unwrap();
        let d = generate_dataset(Arc::clone(&lat), &theta, 1, ModelVariant::Percolation).unwrap();
        assert_eq!(d.field.masks.len(), 625);
        for (x, y) in d.seed_freq.iter().zip(&d.ybar) {
            assert!(x <= y);
        }
        assert!((d.open_freq - 0.06).abs() < 0.03);
        let again = generate_dataset(lat, &theta, 1, ModelVariant::Percolation).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn zero_lambda_dataset_is_blank() {
        let lat = Arc::new(Lattice::new(LatticeKind::Triangular, 25, 25).unwrap());
        let theta = ParameterVector::new(vec![0.0, 0.0], 0.2).unwrap();
        let d = generate_dataset(lat, &theta, 4, ModelVariant::Percolation).unwrap();
        assert!(d.field.masks.iter().all(|&m| m == 0));
    }

    #[test]
    fn scan_corner_points() {
        let spec = ScanSpec {
            lambdas: vec![0.0, 1.0],
            mus: vec![0.0, 0.3],
            kind: LatticeKind::Triangular,
            outer: (30, 30),
            central: (10, 10),
            n_s: 2,
            master_seed: 5,
        };
        let pts = identifiability_scan(&spec).unwrap();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            if p.lambda == 0.0 {
                assert_eq!((p.m1, p.m2), (0.0, 0.0));
            } else {
                assert_eq!((p.m1, p.m2), (1.0, 1.0));
            }
        }
        assert!(monotonicity_violations(&spec, &pts, 3.0).is_empty());
        let csv = scan_csv(&spec, &pts);
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
        assert!(scan_svg(&spec, &pts, |p| p.m1, "m1").contains("<rect"));
    }

    #[test]
    fn scan_spec_validation() {
        let mut spec = ScanSpec::log_grid(3, 3, true, LatticeKind::Triangular);
        assert_eq!(spec.mus.len(), 4);
        assert!(spec.mus.contains(&LatticeKind::Triangular.critical_probability()));
        spec.validate().unwrap();
        spec.central = (299, 299);
        assert!(identifiability_scan(&spec).is_err());
        spec.central = (100, 100);
        spec.mus.push(0.6);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn convergence_rows() {
        let theta = ParameterVector::new(vec![0.05, 0.04], 0.02).unwrap();
        let rows = convergence_study(&theta, LatticeKind::Triangular, &[(20, 20)], 2, 3).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.alpha >= r.alpha_tilde * r.min_weight);
        }
        assert!(convergence_study(&theta, LatticeKind::Triangular, &[(20, 20), (10, 10)], 2, 3).is_err());
    }

    #[test]
    fn single_start_report() {
        let theta = ParameterVector::new(vec![0.1, 0.05, 0.07], 0.06).unwrap();
        let cfg = EstimationConfig::new(3, 1, 0.1, SamplingMethod::Bernoulli, 2);
        let rep = run_table_experiment(&theta, LatticeKind::Triangular, 25, 25, &[cfg], 11).unwrap();
        assert_eq!(rep.runs.len(), 2);
        for r in &rep.runs {
            assert_eq!(r.n_starts, 1);
            assert!(r.bias.iter().all(|&d| d >= 0.0));
        }
        let csv = report_csv(&rep);
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
    }
}
