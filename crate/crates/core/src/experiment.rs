//! Monte Carlo kernels: one replica at a time, plus aggregation.
//!
//! Every replica owns an independent field, sampled from the seed
//! `replica_seed(master, n, replica)`. The seed does not depend on the
//! experiment, so different experiments run with the same master seed see
//! the same fields. Aggregation sorts replicas by `(n, replica)` first,
//! which makes results independent of the order replicas were computed in.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use alloc::format;

use crate::distribution::DistributionSpec;
use crate::error::{Error, Result};
use crate::field::{sample_edge_field, EdgeField};
use crate::game::{
    build_escape_plan, find_escape_positions, run_pursuit, verify_escape_certificate, CapturePhase, GameOutcome,
    PursuerPolicy,
};
use crate::geodesic::{all_times_from, extract_geodesic, restricted_time, Direction};
use crate::lattice::{LatticeBox, Vertex};
use crate::path::{heavy_edge_count, EdgePredicate, Interval};
use crate::renorm::{select_disjoint_stretches, BlackCubeOracle, CubeParams, OutOfBox};
use crate::rng::{combine, mix64, UniformStream};
use crate::useful::{check_useful, PcTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExperimentKind {
    /// `M + t(0, x) < restricted time`.
    Prop31,
    /// `t(0, x) + alpha n < restricted time`.
    Margin,
    /// Fraction of geodesic edges that are heavy.
    HeavyEdges,
    /// Whether the geodesic uses light edges only.
    AllLight,
    /// Separated black cubes visited by the geodesic.
    BlackVisits,
    /// `t(0, n e_1) / n`.
    TimeConstant,
    /// Escape plans and pursuits on bounded fields.
    GameBatch,
    /// Whether some `x` at distance `n` has `restricted time <= M + t`.
    EscapeDecay,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Prop31,
        ExperimentKind::Margin,
        ExperimentKind::HeavyEdges,
        ExperimentKind::AllLight,
        ExperimentKind::BlackVisits,
        ExperimentKind::TimeConstant,
        ExperimentKind::GameBatch,
        ExperimentKind::EscapeDecay,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Prop31 => "prop31",
            ExperimentKind::Margin => "margin",
            ExperimentKind::HeavyEdges => "heavy_edges",
            ExperimentKind::AllLight => "all_light",
            ExperimentKind::BlackVisits => "black_visits",
            ExperimentKind::TimeConstant => "time_constant",
            ExperimentKind::GameBatch => "game_batch",
            ExperimentKind::EscapeDecay => "escape_decay",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the per-replica value is a 0/1 indicator.
    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            ExperimentKind::Prop31
                | ExperimentKind::Margin
                | ExperimentKind::AllLight
                | ExperimentKind::GameBatch
                | ExperimentKind::EscapeDecay
        )
    }
}

/// Where the target of a point-to-point experiment sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TargetMode {
    /// `n e_1`.
    Axis,
    /// Uniform on the ℓ1 sphere of radius `n`.
    Sphere,
}

/// Starting vertex of the evader in game batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SigmaPlacement {
    /// The escape position closest to the pursuer (ℓ1, then lexicographic).
    Nearest,
    /// A uniformly random vertex of the ℓ1 ball of this radius around the
    /// pursuer, excluding the pursuer's vertex.
    Random { radius: u64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: usize,
    /// Box side length `L` (in edges); defaults to the smallest admissible.
    pub side: Option<i64>,
    pub spec: DistributionSpec,
    /// Light-edge bound.
    pub m: Option<f64>,
    /// Heavy set as a union of intervals, replacing `tau > M` when given.
    pub heavy_set: Option<Vec<Interval>>,
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
    /// Cube scale `N`.
    pub cube: Option<u64>,
    pub delta: Option<f64>,
    /// Stretch spacing; when set, black-visit runs also count selected stretches.
    pub spacing: Option<u64>,
    pub ns: Vec<u64>,
    pub replicas: u64,
    pub seed: u64,
    pub target: TargetMode,
    /// Run experiments whose hypotheses exclude bounded laws anyway.
    pub allow_bounded: bool,
    pub placement: SigmaPlacement,
    pub t_max: f64,
    pub fit_correction: bool,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, spec: DistributionSpec, ns: Vec<u64>, replicas: u64, seed: u64) -> Self {
        ExperimentConfig {
            kind,
            d: 2,
            side: None,
            spec,
            m: None,
            heavy_set: None,
            alpha: 0.0,
            alpha_grid: vec![0.05, 0.1, 0.2, 0.3],
            cube: None,
            delta: None,
            spacing: None,
            ns,
            replicas,
            seed,
            target: TargetMode::Axis,
            allow_bounded: false,
            placement: SigmaPlacement::Nearest,
            t_max: f64::INFINITY,
            fit_correction: false,
        }
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = Some(m);
        self
    }

    fn max_n(&self) -> u64 {
        self.ns.iter().copied().max().unwrap_or(0)
    }

    fn centered(&self) -> bool {
        matches!(self.kind, ExperimentKind::GameBatch | ExperimentKind::EscapeDecay) || self.target == TargetMode::Sphere
    }

    /// Side length used: the configured one, or the smallest admissible.
    pub fn effective_side(&self) -> i64 {
        if let Some(l) = self.side {
            return l;
        }
        let n = self.max_n() as i64;
        if self.centered() {
            4 * n
        } else {
            3 * n
        }
    }

    /// The simulation box.
    ///
    /// Point-to-point runs along `e_1` use `[-floor(L/3), L - floor(L/3)]` on
    /// the first axis and `[-floor(L/2), L - floor(L/2)]` on the others, so
    /// that with `L = 3 n_max` both the origin and `n e_1` stay at least
    /// `L/4` away from the boundary. Centered runs use the second range on
    /// every axis.
    pub fn lattice_box(&self) -> Result<LatticeBox> {
        let l = self.effective_side();
        let half = |l: i64| (-(l / 2), l - l / 2);
        let third = (-(l / 3), l - l / 3);
        let mut lo = vec![0; self.d];
        let mut hi = vec![0; self.d];
        for i in 0..self.d {
            let (a, b) = if i == 0 && !self.centered() { third } else { half(l) };
            lo[i] = a;
            hi[i] = b;
        }
        LatticeBox::new(&lo, &hi)
    }

    fn require_m(&self) -> Result<f64> {
        match self.m {
            Some(m) if m >= 0.0 && !m.is_nan() => Ok(m),
            Some(m) => Err(invalid(format!("M must be non-negative, got {m}"))),
            None => Err(invalid(format!("experiment {} needs M", self.kind.name()))),
        }
    }

    fn require_unbounded(&self, table: &PcTable) -> Result<()> {
        let report = check_useful(&self.spec, self.d, table).map_err(|e| invalid(e.to_string()))?;
        if !report.useful {
            return Err(invalid(format!(
                "law is not useful in d = {} (F(r) = {} >= {})",
                self.d, report.f_at_r, report.threshold
            )));
        }
        if self.spec.is_bounded() && !self.allow_bounded {
            return Err(invalid(format!(
                "experiment {} assumes unbounded support; set allow_bounded to run it anyway",
                self.kind.name()
            )));
        }
        Ok(())
    }

    /// Checks the configuration and the hypotheses of the chosen experiment.
    pub fn validate(&self, table: &PcTable) -> Result<()> {
        if self.d == 0 || self.d > crate::lattice::MAX_DIM {
            return Err(invalid(format!("dimension {} not supported", self.d)));
        }
        if self.replicas == 0 {
            return Err(invalid("replicas must be at least 1".into()));
        }
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(invalid("n list must be non-empty with positive entries".into()));
        }
        self.spec.validate().map_err(|e| invalid(e.to_string()))?;
        let l = self.effective_side();
        let margin = (l + 3) / 4;
        let n = self.max_n() as i64;
        let room = if self.centered() { l - l / 2 - margin } else { l - l / 3 - margin };
        let origin_room = if self.centered() { l / 2 } else { l / 3 };
        if n > room || origin_room < margin {
            return Err(invalid(format!(
                "box side {l} too small for n = {n}: points must stay {margin} away from the boundary"
            )));
        }
        match self.kind {
            ExperimentKind::Prop31 | ExperimentKind::Margin | ExperimentKind::AllLight => {
                self.require_m()?;
                self.require_unbounded(table)?;
            }
            ExperimentKind::HeavyEdges => {
                if self.heavy_set.is_none() {
                    self.require_m()?;
                    self.require_unbounded(table)?;
                }
            }
            ExperimentKind::BlackVisits => {
                self.require_m()?;
                if self.cube.is_none_or(|c| c == 0) {
                    return Err(invalid("black_visits needs a positive cube scale N".into()));
                }
                if !self.delta.is_some_and(|x| x > 0.0 && x.is_finite()) {
                    return Err(invalid("black_visits needs delta > 0".into()));
                }
            }
            ExperimentKind::TimeConstant => {}
            ExperimentKind::GameBatch => {
                let m = self.require_m()?;
                match self.spec.support_max() {
                    Some(top) if top <= m => {}
                    Some(top) => return Err(invalid(format!("law exceeds M: support reaches {top} > {m}"))),
                    None => return Err(invalid("game batches need a law with bounded support".into())),
                }
                if self.d < 1 {
                    return Err(invalid("dimension must be positive".into()));
                }
            }
            ExperimentKind::EscapeDecay => {
                self.require_m()?;
            }
        }
        Ok(())
    }
}

fn invalid(msg: String) -> Error {
    Error::ConfigInvalid(msg)
}

/// Seed of the field used by replica `replica` at radius `n`.
pub fn replica_seed(master: u64, n: u64, replica: u64) -> u64 {
    mix64(combine(combine(master, n), replica))
}

/// Number of points of `Z^d` at ℓ1 distance exactly `n` from the origin.
pub fn sphere_size(d: usize, n: u64) -> u128 {
    match (d, n) {
        (0, 0) => 1,
        (0, _) => 0,
        (_, 0) => 1,
        (1, _) => 2,
        _ => (0..=n)
            .map(|k| {
                let mult = if k == 0 { 1 } else { 2 };
                mult * sphere_size(d - 1, n - k)
            })
            .sum(),
    }
}

/// The `rank`-th point of the ℓ1 sphere of radius `n` in a fixed order.
pub fn sphere_point(d: usize, n: u64, mut rank: u128) -> Vertex {
    let mut coords = vec![0i64; d];
    let mut left = n;
    for (i, c) in coords.iter_mut().enumerate() {
        if i == d - 1 {
            // One or two choices remain.
            *c = if left == 0 || rank == 0 { left as i64 } else { -(left as i64) };
            break;
        }
        let mut chosen = false;
        for k in -(left as i64)..=(left as i64) {
            let size = sphere_size(d - i - 1, left - k.unsigned_abs());
            if rank < size {
                *c = k;
                left -= k.unsigned_abs();
                chosen = true;
                break;
            }
            rank -= size;
        }
        assert!(chosen, "rank out of range");
    }
    Vertex::new(&coords)
}

fn target(cfg: &ExperimentConfig, n: u64, seed: u64) -> Vertex {
    match cfg.target {
        TargetMode::Axis => Vertex::on_axis(cfg.d, 1, n as i64),
        TargetMode::Sphere => {
            let mut s = UniformStream::new(combine(seed, 0x7a76));
            let size = sphere_size(cfg.d, n);
            let hi = s.next_u64() as u128;
            let lo = s.next_u64() as u128;
            sphere_point(cfg.d, n, ((hi << 64) | lo) % size)
        }
    }
}

/// Per-replica result of a pursuit run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicyRun {
    pub policy: PursuerPolicy,
    pub caught: bool,
    pub phase: Option<CapturePhase>,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameRecord {
    pub x_sigma: Option<Vertex>,
    pub plan_found: bool,
    pub certified: bool,
    pub degenerate: bool,
    pub runs: Vec<PolicyRun>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReplicaOutcome {
    pub n: u64,
    pub replica: u64,
    pub seed: u64,
    /// Indicator (0 or 1) or per-replica statistic.
    pub value: f64,
    /// Secondary statistic: the margin ratio, the black-cube count, the
    /// number of selected stretches, ...
    pub secondary: Option<f64>,
    /// The geodesic used had a tie broken by the deterministic rule.
    pub tie: bool,
    pub game: Option<GameRecord>,
}

impl ReplicaOutcome {
    fn new(n: u64, replica: u64, seed: u64, value: f64) -> Self {
        ReplicaOutcome { n, replica, seed, value, secondary: None, tie: false, game: None }
    }
}

/// Samples the field of one replica.
pub fn replica_field(cfg: &ExperimentConfig, n: u64, replica: u64) -> Result<EdgeField> {
    sample_edge_field(&cfg.lattice_box()?, &cfg.spec, replica_seed(cfg.seed, n, replica))
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Runs one replica on a field previously produced by [`replica_field`].
pub fn run_replica_on(cfg: &ExperimentConfig, field: &EdgeField, n: u64, replica: u64) -> Result<ReplicaOutcome> {
    let seed = replica_seed(cfg.seed, n, replica);
    let origin = Vertex::origin(cfg.d);
    let x = target(cfg, n, seed);
    let nf = n as f64;
    let mut out = ReplicaOutcome::new(n, replica, seed, 0.0);
    match cfg.kind {
        ExperimentKind::Prop31 => {
            let m = cfg.require_m()?;
            let t = crate::geodesic::shortest_time(field, &origin, &x)?;
            let rt = restricted_time(field, m, &origin, &x)?;
            out.value = indicator(rt.finite().is_none_or(|r| m + t < r));
        }
        ExperimentKind::Margin => {
            let m = cfg.require_m()?;
            let t = crate::geodesic::shortest_time(field, &origin, &x)?;
            let rt = restricted_time(field, m, &origin, &x)?;
            let ratio = rt.finite().map_or(f64::INFINITY, |r| (r - t) / nf);
            out.value = indicator(rt.finite().is_none_or(|r| t + cfg.alpha * nf < r));
            out.secondary = Some(ratio);
        }
        ExperimentKind::HeavyEdges => {
            let g = extract_geodesic(field, &origin, &x)?;
            let predicate = match &cfg.heavy_set {
                Some(set) => EdgePredicate::InSet(set.clone()),
                None => EdgePredicate::Above(cfg.require_m()?),
            };
            out.value = heavy_edge_count(field, &g.path, &predicate)? as f64 / nf;
            out.tie = !g.unique;
        }
        ExperimentKind::AllLight => {
            let m = cfg.require_m()?;
            let g = extract_geodesic(field, &origin, &x)?;
            out.value = indicator(heavy_edge_count(field, &g.path, &EdgePredicate::Above(m))? == 0);
            out.tie = !g.unique;
        }
        ExperimentKind::BlackVisits => {
            let params = CubeParams {
                n: cfg.cube.expect("validated"),
                m: cfg.require_m()?,
                r: cfg.spec.support_min(),
                delta: cfg.delta.expect("validated"),
            };
            let g = extract_geodesic(field, &origin, &x)?;
            let mut oracle = BlackCubeOracle::new(field, params, OutOfBox::Skip)?;
            let count = oracle.count_black_cubes_visited(&g.path)?;
            out.value = count as f64 / nf;
            out.secondary = Some(count as f64);
            if let Some(spacing) = cfg.spacing {
                let stretches = oracle.shortcutable_stretches(&g.path)?;
                out.secondary = Some(select_disjoint_stretches(&g.path, &stretches, spacing).len() as f64);
            }
            out.tie = !g.unique;
        }
        ExperimentKind::TimeConstant => {
            out.value = crate::geodesic::shortest_time(field, &origin, &x)? / nf;
        }
        ExperimentKind::EscapeDecay => {
            let m = cfg.require_m()?;
            let full = all_times_from(field, &origin, None)?;
            let light = all_times_from(field, &origin, Some(m))?;
            let bx = field.lattice_box();
            let hit = (0..bx.vertex_count())
                .filter(|&i| bx.vertex(i).norm() == n)
                .any(|i| light[i] <= m + full[i]);
            out.value = indicator(hit);
        }
        ExperimentKind::GameBatch => {
            let record = game_replica(cfg, field, n, seed)?;
            out.value = indicator(record.plan_found);
            out.game = Some(record);
        }
    }
    Ok(out)
}

/// Samples the replica's field and runs it.
pub fn run_replica(cfg: &ExperimentConfig, n: u64, replica: u64) -> Result<ReplicaOutcome> {
    let field = replica_field(cfg, n, replica)?;
    run_replica_on(cfg, &field, n, replica)
}

/// Pursuer policies exercised by game batches.
pub fn shipped_policies(seed: u64) -> [PursuerPolicy; 4] {
    [
        PursuerPolicy::Greedy,
        PursuerPolicy::Intercept,
        PursuerPolicy::RandomWalk { seed },
        PursuerPolicy::Stationary,
    ]
}

fn game_replica(cfg: &ExperimentConfig, field: &EdgeField, n: u64, seed: u64) -> Result<GameRecord> {
    let m = cfg.require_m()?;
    let xl = Vertex::origin(cfg.d);
    let dir = Direction::PLUS_E1;
    let x_sigma = match cfg.placement {
        SigmaPlacement::Nearest => find_escape_positions(field, &xl, m, dir, n)?
            .into_iter()
            .min_by_key(|v| (v.l1(&xl), *v)),
        SigmaPlacement::Random { radius } => {
            let ball: Vec<Vertex> = field
                .lattice_box()
                .vertices()
                .filter(|v| *v != xl && v.l1(&xl) <= radius)
                .collect();
            let mut s = UniformStream::new(combine(seed, 0x51a));
            (!ball.is_empty()).then(|| ball[s.next_below(ball.len() as u64) as usize])
        }
    };
    let mut record = GameRecord { x_sigma, plan_found: false, certified: false, degenerate: false, runs: Vec::new() };
    let Some(xs) = x_sigma else { return Ok(record) };
    let Some(plan) = build_escape_plan(field, &xl, &xs, m, dir, n)? else { return Ok(record) };
    record.plan_found = true;
    let check = verify_escape_certificate(field, &plan)?;
    record.certified = check.certified;
    record.degenerate = check.degenerate;
    for policy in shipped_policies(seed) {
        let trace = run_pursuit(field, &plan, policy, cfg.t_max)?;
        record.runs.push(match trace.outcome {
            GameOutcome::Caught { time, phase, .. } => PolicyRun { policy, caught: true, phase: Some(phase), time },
            GameOutcome::Survived { horizon } => PolicyRun { policy, caught: false, phase: None, time: horizon },
        });
    }
    Ok(record)
}

/// Least-squares fit of `log q(n) = intercept - rate * n`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    /// Residuals of the rows used, in input order.
    pub residuals: Vec<f64>,
    pub rows_used: usize,
}

/// One point of a decay curve: probability `q` estimated from `replicas`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayPoint {
    pub n: u64,
    pub q: f64,
    pub replicas: u64,
}

/// Fits an exponential rate to decaying probabilities.
///
/// Rows with `q` equal to 0 or 1 are dropped, unless `correction` is set,
/// in which case `q` is replaced by `(k + 1/2) / (R + 1)` with `k = qR`.
pub fn fit_rate(points: &[DecayPoint], correction: bool) -> Result<RateFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| {
            let q = if p.q <= 0.0 || p.q >= 1.0 {
                if !correction {
                    return None;
                }
                let r = p.replicas as f64;
                (libm::round(p.q * r) + 0.5) / (r + 1.0)
            } else {
                p.q
            };
            Some((p.n as f64, libm::log(q)))
        })
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData);
    }
    let k = used.len() as f64;
    let mx = used.iter().map(|u| u.0).sum::<f64>() / k;
    let my = used.iter().map(|u| u.1).sum::<f64>() / k;
    let sxx: f64 = used.iter().map(|u| (u.0 - mx) * (u.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData);
    }
    let sxy: f64 = used.iter().map(|u| (u.0 - mx) * (u.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = used.iter().map(|u| u.1 - (intercept + slope * u.0)).collect();
    Ok(RateFit { rate: -slope, intercept, residuals, rows_used: used.len() })
}

/// `sqrt(p (1 - p) / R)`.
pub fn binomial_stderr(p: f64, replicas: u64) -> f64 {
    libm::sqrt((p * (1.0 - p)).max(0.0) / replicas as f64)
}

/// Mean and sample variance (two-pass; variance 0 for one value).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (k - 1.0))
}

/// Nearest-rank quantile of a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let k = libm::ceil(p * sorted.len() as f64) as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResultRow {
    pub n: u64,
    pub replicas: u64,
    pub estimate: f64,
    pub stderr: f64,
    /// Experiment-specific statistics, in a fixed order.
    pub extras: Vec<(String, f64)>,
}

impl ResultRow {
    pub fn extra(&self, name: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub rows: Vec<ResultRow>,
    pub fit: Option<RateFit>,
    pub fit_note: Option<String>,
    /// Run-level statistics, e.g. the time-constant estimate.
    pub summary: Vec<(String, f64)>,
}

impl ExperimentResult {
    pub fn row(&self, n: u64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

fn policy_key(p: &PursuerPolicy) -> &'static str {
    p.name()
}

/// Aggregates replica outcomes into per-`n` rows.
pub fn aggregate(cfg: &ExperimentConfig, outcomes: &[ReplicaOutcome]) -> Result<ExperimentResult> {
    let mut sorted: Vec<&ReplicaOutcome> = outcomes.iter().collect();
    sorted.sort_by_key(|o| (o.n, o.replica));
    let mut ns: Vec<u64> = sorted.iter().map(|o| o.n).collect();
    ns.dedup();
    let mut rows = Vec::new();
    for n in ns {
        let group: Vec<&ReplicaOutcome> = sorted.iter().copied().filter(|o| o.n == n).collect();
        let values: Vec<f64> = group.iter().map(|o| o.value).collect();
        let r = group.len() as u64;
        let (mean, var) = mean_var(&values);
        let stderr = if cfg.kind.is_indicator() { binomial_stderr(mean, r) } else { libm::sqrt(var / r as f64) };
        let mut extras = Vec::new();
        let ties = group.iter().filter(|o| o.tie).count() as f64 / r as f64;
        match cfg.kind {
            ExperimentKind::Margin => {
                let mut ratios: Vec<f64> = group.iter().filter_map(|o| o.secondary).collect();
                ratios.sort_by(f64::total_cmp);
                let infinite = ratios.iter().filter(|x| x.is_infinite()).count() as f64 / r as f64;
                extras.push(("margin_q10".into(), quantile(&ratios, 0.1)));
                extras.push(("margin_q50".into(), quantile(&ratios, 0.5)));
                extras.push(("margin_q90".into(), quantile(&ratios, 0.9)));
                extras.push(("margin_infinite".into(), infinite));
            }
            ExperimentKind::HeavyEdges => {
                extras.push(("lower95".into(), mean - 1.96 * stderr));
                for a in &cfg.alpha_grid {
                    let frac = values.iter().filter(|v| **v <= *a).count() as f64 / r as f64;
                    extras.push((format!("p_le_{a}"), frac));
                }
                extras.push(("tie_fraction".into(), ties));
            }
            ExperimentKind::AllLight => {
                extras.push(("tie_fraction".into(), ties));
            }
            ExperimentKind::BlackVisits => {
                let counts: Vec<f64> = group.iter().filter_map(|o| o.secondary).collect();
                let name = if cfg.spacing.is_some() { "mean_selected_stretches" } else { "mean_count" };
                extras.push((name.into(), mean_var(&counts).0));
            }
            ExperimentKind::TimeConstant => {
                extras.push(("variance".into(), var));
            }
            ExperimentKind::GameBatch => {
                let games: Vec<&GameRecord> = group.iter().filter_map(|o| o.game.as_ref()).collect();
                let certified = games.iter().filter(|g| g.certified).count() as f64;
                extras.push(("certified_rate".into(), certified / r as f64));
                for policy in shipped_policies(0) {
                    let runs = || {
                        games
                            .iter()
                            .flat_map(|g| g.runs.iter())
                            .filter(move |p| policy_key(&p.policy) == policy_key(&policy))
                    };
                    let tail = runs().filter(|p| p.phase == Some(CapturePhase::Tail)).count() as f64;
                    let approach = runs().filter(|p| p.phase == Some(CapturePhase::Approach)).count() as f64;
                    let survived = runs().filter(|p| !p.caught).count() as f64;
                    let name = policy.name();
                    extras.push((format!("{name}_survived"), survived));
                    extras.push((format!("{name}_tail_captures"), tail));
                    extras.push((format!("{name}_approach_captures"), approach));
                }
            }
            _ => {}
        }
        rows.push(ResultRow { n, replicas: r, estimate: mean, stderr, extras });
    }

    let decay: Option<Vec<DecayPoint>> = match cfg.kind {
        ExperimentKind::Prop31 | ExperimentKind::Margin => {
            Some(rows.iter().map(|r| DecayPoint { n: r.n, q: 1.0 - r.estimate, replicas: r.replicas }).collect())
        }
        ExperimentKind::AllLight | ExperimentKind::EscapeDecay => {
            Some(rows.iter().map(|r| DecayPoint { n: r.n, q: r.estimate, replicas: r.replicas }).collect())
        }
        _ => None,
    };
    let (fit, fit_note) = match decay.map(|pts| fit_rate(&pts, cfg.fit_correction)) {
        None => (None, None),
        Some(Ok(fit)) => (Some(fit), None),
        Some(Err(e)) => (None, Some(e.to_string())),
    };

    let mut summary = Vec::new();
    if cfg.kind == ExperimentKind::TimeConstant {
        if let Some(last) = rows.last() {
            summary.push(("mu_hat".into(), last.estimate));
            summary.push(("ci_lo".into(), last.estimate - 1.96 * last.stderr));
            summary.push(("ci_hi".into(), last.estimate + 1.96 * last.stderr));
        }
    }
    Ok(ExperimentResult { kind: cfg.kind, rows, fit, fit_note, summary })
}

/// Validates, runs every replica in order and aggregates.
pub fn run_sequential(cfg: &ExperimentConfig, table: &PcTable) -> Result<ExperimentResult> {
    cfg.validate(table)?;
    let mut outcomes = Vec::new();
    for &n in &cfg.ns {
        for replica in 0..cfg.replicas {
            outcomes.push(run_replica(cfg, n, replica)?);
        }
    }
    aggregate(cfg, &outcomes)
}
