//! Timed comparison of a from-scratch QR solve against the update path.
//!
//! For every `n` one base problem `(A, b)` is generated and prepared; its
//! preparation is not timed. For every `(r, rep)` a fresh `(U, V)` is drawn
//! and two timings are taken on the calling thread with [`Instant`]:
//!
//! * scratch: `Â = A + UVᵀ`, thin QR of `Â`, `R̂⁻¹Q̂ᵀb`
//! * update: build the workspace for `(U, V)` and solve with the stored `x0`
//!
//! Each `(n, r)` starts with one untimed run on the rep-0 data.
//!
//! Stream ids are `n·2⁴⁰ + r·2²⁴ + rep·2⁸ + role` with roles `A = 0`,
//! `b = 1`, `U = 2`, `V = 3`; `A` and `b` use `r = rep = 0`.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use woodbury_ls::dense::norm2;
use woodbury_ls::io::BenchRecord;
use woodbury_ls::{
    baseline_solve, build_workspace, prepare, solve_updated, Backend, IterativeConfig,
    LowRankUpdate, Matrix,
};

use crate::gen::gen_gaussian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendKind {
    Qr,
    Cg,
}

impl BackendKind {
    pub fn backend(self, n: usize) -> Backend<f64> {
        match self {
            BackendKind::Qr => Backend::Qr,
            BackendKind::Cg => Backend::Cg(IterativeConfig::default_for(n)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub m: usize,
    pub n_list: Vec<usize>,
    pub r_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub backend: BackendKind,
    pub out_path: PathBuf,
}

const ROLE_A: u64 = 0;
const ROLE_B: u64 = 1;
const ROLE_U: u64 = 2;
const ROLE_V: u64 = 3;

/// Stream id for one generated matrix; see the module docs.
pub fn stream_id(n: usize, r: usize, rep: usize, role: u64) -> u64 {
    ((n as u64) << 40) | ((r as u64) << 24) | ((rep as u64) << 8) | role
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let (Some(&max_n), Some(&max_r)) = (self.n_list.iter().max(), self.r_list.iter().max())
        else {
            bail!("n-list and r-list must not be empty");
        };
        let min_r = *self.r_list.iter().min().unwrap();
        if min_r < 1 || !(self.m >= max_n && max_n >= max_r) {
            bail!(
                "need m >= max(n-list) >= max(r-list) >= 1, got m = {}, max n = {max_n}, r-list = {:?}",
                self.m,
                self.r_list
            );
        }
        if self.reps < 1 {
            bail!("reps must be at least 1");
        }
        if max_n >= 1 << 24 || max_r >= 1 << 16 || self.reps >= 1 << 16 {
            bail!("n, r or reps too large for the stream id layout");
        }
        Ok(())
    }
}

/// Runs the whole grid and returns one record per `(n, r, rep)`.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    run_benchmark_with(cfg, |_| {})
}

/// [`run_benchmark`] with a callback invoked after every record.
pub fn run_benchmark_with(
    cfg: &BenchConfig,
    mut progress: impl FnMut(&BenchRecord),
) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let m = cfg.m;
    let mut records = Vec::new();
    for &n in &cfg.n_list {
        let a = gen_gaussian(cfg.seed, stream_id(n, 0, 0, ROLE_A), m, n);
        let b = gen_gaussian(cfg.seed, stream_id(n, 0, 0, ROLE_B), m, 1).into_vec();
        let base = prepare(a, Some(&b[..]), cfg.backend.backend(n))
            .with_context(|| format!("preparing base problem m={m} n={n}"))?;

        for &r in &cfg.r_list {
            for rep in 0..=cfg.reps {
                // rep 0 runs twice: once untimed as warm-up
                let (timed, data_rep) = if rep == 0 {
                    (false, 0)
                } else {
                    (true, rep - 1)
                };
                let u = gen_gaussian(cfg.seed, stream_id(n, r, data_rep, ROLE_U), m, r);
                let v = gen_gaussian(cfg.seed, stream_id(n, r, data_rep, ROLE_V), n, r);
                let ctx = || format!("instance m={m} n={n} r={r} rep={data_rep}");

                let t0 = Instant::now();
                let x_scratch = baseline_solve(base.a(), &u, &v, &b).with_context(ctx)?;
                let t_scratch = t0.elapsed();

                let upd = LowRankUpdate::new(u, v).with_context(ctx)?;
                let t0 = Instant::now();
                let ws = build_workspace(&base, &upd).with_context(ctx)?;
                let x_update = solve_updated(&base, &upd, &ws, &b).with_context(ctx)?.x;
                let t_update = t0.elapsed();

                if !timed {
                    continue;
                }
                let diff: Vec<f64> = x_update
                    .iter()
                    .zip(&x_scratch)
                    .map(|(p, q)| p - q)
                    .collect();
                let rec = BenchRecord::new(
                    m,
                    n,
                    r,
                    data_rep,
                    cfg.seed,
                    t_scratch.as_nanos() as u64,
                    t_update.as_nanos() as u64,
                    norm2(&diff) / norm2(&x_scratch),
                );
                progress(&rec);
                records.push(rec);
            }
        }
    }
    Ok(records)
}

/// Median speedup per `(n, r)` in first-appearance order.
pub fn median_speedups(records: &[BenchRecord]) -> Vec<(usize, usize, f64)> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for rec in records {
        if !keys.contains(&(rec.n, rec.r)) {
            keys.push((rec.n, rec.r));
        }
    }
    keys.into_iter()
        .map(|(n, r)| {
            let speedups: Vec<f64> = records
                .iter()
                .filter(|rec| rec.n == n && rec.r == r)
                .map(|rec| rec.speedup)
                .collect();
            (n, r, median(speedups))
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Generated inputs for one benchmark instance, for tests that need to
/// replay exactly what [`run_benchmark`] solved.
pub fn instance(
    seed: u64,
    m: usize,
    n: usize,
    r: usize,
    rep: usize,
) -> (Matrix, Vec<f64>, Matrix, Matrix) {
    (
        gen_gaussian(seed, stream_id(n, 0, 0, ROLE_A), m, n),
        gen_gaussian(seed, stream_id(n, 0, 0, ROLE_B), m, 1).into_vec(),
        gen_gaussian(seed, stream_id(n, r, rep, ROLE_U), m, r),
        gen_gaussian(seed, stream_id(n, r, rep, ROLE_V), n, r),
    )
}
