//! Command implementations. Each returns a table of formatted cells.

use lbt_core::covering::{branch_distance, MetricCoeffs};
use lbt_core::dynamics::{conservation_report, trajectory, BoundaryCovector, BoundarySide, FlowOptions};
use lbt_core::frequency::{actions, boundary_integrals, boundary_rotation, frequency_record, scaled_jacobian};
use lbt_core::par::map_indexed;
use lbt_core::profiles::{validation_report, ProfileTriple, Severity};
use lbt_core::radon::{find_rational_torus, radon_torus, rigidity_certificate, torus_orbit_average, MuChoice};
use lbt_core::tori::TorusSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Grid, RunConfig};
use crate::CliError;

pub const COMMANDS: [&str; 10] = [
    "validate",
    "trajectory",
    "conserve",
    "actions",
    "freq-scan",
    "jacobian-scan",
    "rotation",
    "radon-scan",
    "rigidity",
    "rational-orbit",
];

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn failure(point: &[(&str, f64)], e: impl std::fmt::Display) -> CliError {
    CliError::Numeric { message: e.to_string(), point: point.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
}

pub fn run(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    match cfg.command.as_str() {
        "validate" => validate(cfg, t),
        "trajectory" => trajectory_cmd(cfg, t),
        "conserve" => conserve(cfg, t),
        "actions" => actions_scan(cfg, t),
        "freq-scan" => freq_scan(cfg, t, false),
        "jacobian-scan" => freq_scan(cfg, t, true),
        "rotation" => rotation(cfg, t),
        "radon-scan" => radon_scan(cfg, t),
        "rigidity" => rigidity(cfg, t),
        "rational-orbit" => rational_orbit(cfg, t),
        other => Err(CliError::Config(format!("unknown command {other:?}"))),
    }
}

fn validate(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    let report = validation_report(t, cfg.order);
    let rows = report
        .checks
        .iter()
        .map(|c| {
            let sev = match c.severity {
                Severity::Hard => "hard",
                Severity::Warning => "warning",
            };
            vec![c.name.clone(), sev.to_string(), c.passed.to_string(), num(c.residual)]
        })
        .collect();
    if let Some(c) = report.hard_failures().next() {
        return Err(failure(&[("residual", c.residual)], format!("hard check {} failed", c.name)));
    }
    Ok(Table { header: vec!["check", "severity", "passed", "residual"], rows })
}

/// Seeded boundary covectors on `+N`, away from the branch set, with
/// coball margin at least `0.05`.
pub fn seeded_starts(t: &ProfileTriple, seed: u64, count: usize) -> Vec<BoundaryCovector> {
    let p = *t.params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (t1, t2) = (rng.gen_range(0.0..p.omega1), rng.gen_range(0.0..p.omega2));
        let (a, b) = (rng.gen_range(-0.95f64..0.95), rng.gen_range(-0.95f64..0.95));
        if branch_distance(&p, t1, t2, p.n) < 0.05 || a * a + b * b > 0.9 {
            continue;
        }
        let m = MetricCoeffs::from_phi([t.phi(1, t1), t.phi(2, t2), t.phi(3, p.n)]);
        out.push(BoundaryCovector {
            theta1: t1,
            theta2: t2,
            p1: a * m.pi[0].sqrt(),
            p2: b * m.pi[1].sqrt(),
            side: BoundarySide::Plus,
        });
    }
    out
}

fn start_point(xi: &BoundaryCovector) -> [(&'static str, f64); 4] {
    [("theta1", xi.theta1), ("theta2", xi.theta2), ("p1", xi.p1), ("p2", xi.p2)]
}

fn trajectory_cmd(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    let xi = seeded_starts(t, cfg.seed, 1)[0];
    let rows = trajectory(t, &xi, cfg.bounces, &FlowOptions::with_tol(cfg.tol))
        .map_err(|e| failure(&start_point(&xi), e))?;
    let rows = rows
        .iter()
        .map(|r| {
            let side = match r.side {
                BoundarySide::Plus => "+",
                BoundarySide::Minus => "-",
            };
            vec![
                r.index.to_string(),
                num(r.theta1),
                num(r.theta2),
                num(r.p1),
                num(r.p2),
                side.to_string(),
                num(r.h),
                num(r.i1),
                num(r.i2),
                num(r.time),
            ]
        })
        .collect();
    Ok(Table { header: vec!["bounce", "theta1", "theta2", "p1", "p2", "side", "H", "I1", "I2", "time"], rows })
}

fn conserve(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    let starts = seeded_starts(t, cfg.seed, cfg.starts);
    let opts = FlowOptions::with_tol(cfg.tol);
    let results = map_indexed(starts.len(), |i| conservation_report(t, &starts[i], cfg.bounces, &opts));
    let mut rows = Vec::with_capacity(starts.len());
    for (i, (xi, r)) in starts.iter().zip(results).enumerate() {
        let r = r.map_err(|e| failure(&start_point(xi), e))?;
        rows.push(vec![
            i.to_string(),
            num(xi.theta1),
            num(xi.theta2),
            num(xi.p1),
            num(xi.p2),
            r.bounces.to_string(),
            num(r.drift[0]),
            num(r.drift[1]),
            num(r.drift[2]),
            num(r.boundary_drift[0]),
            num(r.boundary_drift[1]),
            num(r.max_drift()),
        ]);
    }
    Ok(Table {
        header: vec![
            "start", "theta1", "theta2", "p1", "p2", "bounces", "drift_H", "drift_I1", "drift_I2", "drift_B1",
            "drift_B2", "max_drift",
        ],
        rows,
    })
}

fn default_k1(t: &ProfileTriple) -> Grid {
    Grid { a: 0.8 * t.nu3(), b: 0.2 * t.nu3(), n: 4 }
}

fn default_k2(t: &ProfileTriple) -> Grid {
    Grid { a: 0.2 * t.nu1(), b: 0.8 * t.nu1(), n: 4 }
}

/// Evaluates `f` on the product grid, rows ordered by `(κ₁, κ₂)` index.
fn scan<F>(cfg: &RunConfig, t: &ProfileTriple, f: F) -> Result<Vec<Vec<String>>, CliError>
where
    F: Fn(f64, f64) -> Result<Vec<String>, String> + Sync + Send,
{
    let k1 = cfg.k1.unwrap_or_else(|| default_k1(t)).values();
    let k2 = cfg.k2.unwrap_or_else(|| default_k2(t)).values();
    let pts: Vec<(f64, f64)> = k1.iter().flat_map(|&a| k2.iter().map(move |&b| (a, b))).collect();
    let results = map_indexed(pts.len(), |i| f(pts[i].0, pts[i].1));
    let mut rows = Vec::with_capacity(pts.len());
    for ((a, b), r) in pts.iter().zip(results) {
        let mut row = vec![num(*a), num(*b)];
        row.extend(r.map_err(|e| failure(&[("kappa1", *a), ("kappa2", *b)], e))?);
        rows.push(row);
    }
    Ok(rows)
}

fn actions_scan(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    let rows = scan(cfg, t, |a, b| {
        let spec = TorusSpec::new(t, a, b).map_err(|e| e.to_string())?;
        let j = actions(t, a, b).map_err(|e| e.to_string())?;
        Ok(vec![format!("{:?}", spec.case), num(j[0]), num(j[1]), num(j[2])])
    })?;
    Ok(Table { header: vec!["kappa1", "kappa2", "case", "J1", "J2", "J3"], rows })
}

fn freq_scan(cfg: &RunConfig, t: &ProfileTriple, with_scaled: bool) -> Result<Table, CliError> {
    let rows = scan(cfg, t, |a, b| {
        let r = frequency_record(t, a, b).map_err(|e| e.to_string())?;
        let mut row = vec![
            format!("{:?}", r.case),
            num(r.actions[0]),
            num(r.actions[1]),
            num(r.actions[2]),
            num(r.omega[0]),
            num(r.omega[1]),
            num(r.jacobian),
        ];
        if with_scaled {
            row.push(num(scaled_jacobian(t, a, b).map_err(|e| e.to_string())?));
        }
        Ok(row)
    })?;
    let mut header = vec!["kappa1", "kappa2", "case", "J1", "J2", "J3", "Omega1", "Omega2", "jacobian"];
    if with_scaled {
        header.push("scaled_jacobian");
    }
    Ok(Table { header, rows })
}

fn rotation(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    let g = cfg.k2.unwrap_or(Grid { a: 0.1 * t.nu1(), b: 0.9 * t.nu1(), n: 9 });
    let ks = g.values();
    let results = map_indexed(ks.len(), |i| -> Result<_, lbt_core::frequency::FrequencyError> {
        Ok((boundary_rotation(t, ks[i])?, boundary_integrals(t, ks[i])?))
    });
    let mut rows = Vec::with_capacity(ks.len());
    for (k, r) in ks.iter().zip(results) {
        let (rho, b) = r.map_err(|e| failure(&[("kappa", *k)], e))?;
        rows.push(vec![num(*k), num(rho), num(b[0]), num(b[1])]);
    }
    Ok(Table { header: vec!["kappa", "rho", "I1", "I2"], rows })
}

fn radon_scan(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    let k = cfg.function.build(t.params());
    let rows = scan(cfg, t, |a, b| {
        let spec = TorusSpec::new(t, a, b).map_err(|e| e.to_string())?;
        let u = radon_torus(t, &k, MuChoice::Unit, &spec).map_err(|e| e.to_string())?;
        let n = radon_torus(t, &k, MuChoice::NormalIncidence, &spec).map_err(|e| e.to_string())?;
        Ok(vec![format!("{:?}", spec.case), num(u), num(n)])
    })?;
    Ok(Table { header: vec!["kappa1", "kappa2", "case", "R_unit", "R_normal"], rows })
}

fn rigidity(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    let results = map_indexed(cfg.degree + 1, |d| rigidity_certificate(t, d));
    let mut rows = Vec::with_capacity(results.len());
    for (d, r) in results.into_iter().enumerate() {
        let c = r.map_err(|e| failure(&[("degree", d as f64)], e))?;
        rows.push(vec![
            c.degree.to_string(),
            c.count.to_string(),
            num(c.min_singular_value),
            num(c.max_singular_value),
            c.ill_conditioned.to_string(),
            c.certifies().to_string(),
        ]);
    }
    Ok(Table {
        header: vec!["degree", "monomials", "min_singular_value", "max_singular_value", "ill_conditioned", "certifies"],
        rows,
    })
}

fn rational_orbit(cfg: &RunConfig, t: &ProfileTriple) -> Result<Table, CliError> {
    let (p, q, n) = cfg.pqn;
    let target = [("p", p as f64), ("q", q as f64), ("n", n as f64)];
    if n <= 0 {
        return Err(CliError::Config("--n must be positive".into()));
    }
    let spec = find_rational_torus(t, p, q, n).map_err(|e| failure(&target, e))?;
    let k = cfg.function.build(t.params());
    let opts = FlowOptions::with_tol(cfg.tol);
    let mut rows = Vec::new();
    for (name, mu) in [("unit", MuChoice::Unit), ("normal", MuChoice::NormalIncidence)] {
        let at = [target[0], target[1], target[2], ("kappa1", spec.kappa1), ("kappa2", spec.kappa2)];
        let r = radon_torus(t, &k, mu, &spec).map_err(|e| failure(&at, e))?;
        let o = torus_orbit_average(t, &k, mu, &spec, n as usize, 10, 10, &opts).map_err(|e| failure(&at, e))?;
        rows.push(vec![
            p.to_string(),
            q.to_string(),
            n.to_string(),
            num(spec.kappa1),
            num(spec.kappa2),
            name.to_string(),
            num(r),
            num(o),
            num((r - o).abs()),
        ]);
    }
    Ok(Table { header: vec!["p", "q", "n", "kappa1", "kappa2", "mu", "radon", "orbit_mean", "abs_diff"], rows })
}
