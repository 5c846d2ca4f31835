//! The pursuit-evasion game on a weighted box.
//!
//! Both players sit on vertices. To move along an edge `e` a player knocks
//! on it; the door opens `tau(e)` later and the player crosses instantly.
//! A pursuer `lambda` catches the evader `sigma` when, after all crossings
//! happening at some instant have been applied, both sit on the same
//! vertex. Two players swapping over one edge at the same instant do not
//! meet.
//!
//! With weights bounded by `M`, `sigma` escapes by walking to a vertex `x`
//! of a geodesic ray from `lambda`'s start with `M + t(x_sigma, x) <
//! t(x_lambda, x)` and then following the ray: at every ray vertex `v`
//! beyond `x`, `sigma` has already left before `lambda` could possibly
//! arrive.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::EdgeField;
use crate::geodesic::{all_times_from, finite_horizon_ray, Direction, ShortestPathTree};
use crate::lattice::{EdgeId, Vertex};
use crate::path::PathRecord;
use crate::rng::{combine, UniformStream};
use crate::search::{Control, Restriction, Search};

/// Tolerance for deciding which multi-source results need a direct recheck.
const BORDERLINE: f64 = 1e-9;

/// A route for `sigma` together with its timetable.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EscapePlan {
    pub x_sigma: Vertex,
    pub x_lambda: Vertex,
    pub m: f64,
    pub anchor: Vertex,
    /// Geodesic from `x_sigma` to the anchor.
    pub approach: PathRecord,
    /// The ray from the anchor to its far end.
    pub ray_tail: PathRecord,
    /// Approach followed by the tail, the anchor listed once.
    pub route: Vec<Vertex>,
    /// Position of the anchor in `route`.
    pub anchor_index: usize,
    /// Time `sigma` reaches `route[i]`.
    pub arrival: Vec<f64>,
    /// Time `sigma` leaves `route[i]`; infinite for the final vertex.
    pub departure: Vec<f64>,
}

impl EscapePlan {
    pub fn tail(&self) -> &[Vertex] {
        &self.route[self.anchor_index..]
    }
}

fn index_of(field: &EdgeField, v: &Vertex) -> Result<usize> {
    field.lattice_box().index_of(v).ok_or(Error::OutOfBox)
}

fn check_bounded(field: &EdgeField, m: f64) -> Result<()> {
    if m.is_nan() || field.max_weight() > m {
        return Err(Error::UnboundedWeights);
    }
    Ok(())
}

fn timetable(field: &EdgeField, route: &[Vertex]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut arrival = Vec::with_capacity(route.len());
    let mut t = 0.0;
    arrival.push(t);
    for w in route.windows(2) {
        let e = EdgeId::between(&w[0], &w[1]).map_err(|_| Error::MalformedPlan("route is not a walk".into()))?;
        t += field
            .weight(&e)
            .ok_or_else(|| Error::MalformedPlan("route leaves the field".into()))?;
        arrival.push(t);
    }
    let mut departure: Vec<f64> = arrival[1..].to_vec();
    departure.push(f64::INFINITY);
    Ok((arrival, departure))
}

/// Scans the ray from `x_lambda` for the first vertex `x` with
/// `M + t(x_sigma, x) < t(x_lambda, x)` and builds the plan through it.
/// `Ok(None)` if no ray vertex qualifies.
pub fn build_escape_plan(
    field: &EdgeField,
    x_lambda: &Vertex,
    x_sigma: &Vertex,
    m: f64,
    direction: Direction,
    length: u64,
) -> Result<Option<EscapePlan>> {
    check_bounded(field, m)?;
    if x_lambda == x_sigma {
        return Err(Error::SamePosition);
    }
    index_of(field, x_sigma)?;
    let ray = finite_horizon_ray(field, x_lambda, direction, length)?;
    let from_sigma = ShortestPathTree::new(field, x_sigma)?;
    let mut t_lambda = 0.0;
    let vs = ray.vertices();
    for (k, x) in vs.iter().enumerate() {
        if k > 0 {
            t_lambda += field.weight(&EdgeId::between(&vs[k - 1], x)?).expect("ray in box");
        }
        let t_sigma = from_sigma.time_to_index(index_of(field, x)?);
        if m + t_sigma < t_lambda {
            let approach = from_sigma.geodesic_to(x)?.expect("box is connected").path;
            let ray_tail = ray.segment(k, vs.len() - 1, field)?;
            let mut route: Vec<Vertex> = approach.vertices().to_vec();
            let anchor_index = route.len() - 1;
            route.extend_from_slice(&vs[k + 1..]);
            let (arrival, departure) = timetable(field, &route)?;
            return Ok(Some(EscapePlan {
                x_sigma: *x_sigma,
                x_lambda: *x_lambda,
                m,
                anchor: *x,
                approach,
                ray_tail,
                route,
                anchor_index,
                arrival,
                departure,
            }));
        }
    }
    Ok(None)
}

/// Outcome of [`verify_escape_certificate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CertificateCheck {
    pub certified: bool,
    /// The tail has no vertex with a successor, so the check is vacuous.
    pub degenerate: bool,
}

/// Checks, against the field, that `sigma` leaves every tail vertex that
/// has a successor strictly before `lambda` could first reach it, and that
/// the anchor inequality and the weight bound hold.
pub fn verify_escape_certificate(field: &EdgeField, plan: &EscapePlan) -> Result<CertificateCheck> {
    let malformed = |what: &str| Err(Error::MalformedPlan(what.into()));
    if plan.route.is_empty() || plan.anchor_index >= plan.route.len() {
        return malformed("anchor outside the route");
    }
    if plan.route[0] != plan.x_sigma || plan.route[plan.anchor_index] != plan.anchor {
        return malformed("route does not start at x_sigma or miss the anchor");
    }
    if plan.arrival.len() != plan.route.len() || plan.departure.len() != plan.route.len() {
        return malformed("timetable length differs from route length");
    }
    let (arrival, departure) = timetable(field, &plan.route)?;
    if arrival != plan.arrival || departure != plan.departure {
        return malformed("timetable does not match the field");
    }
    let refuse = CertificateCheck { certified: false, degenerate: false };
    if !(plan.m >= 0.0) {
        return Ok(refuse);
    }
    let lambda_times = all_times_from(field, &plan.x_lambda, None)?;
    let sigma_times = all_times_from(field, &plan.x_sigma, None)?;
    let a = index_of(field, &plan.anchor)?;
    if !(plan.m + sigma_times[a] < lambda_times[a]) {
        return Ok(refuse);
    }
    let tail = plan.anchor_index..plan.route.len() - 1;
    let degenerate = tail.is_empty();
    for i in tail {
        let e = EdgeId::between(&plan.route[i], &plan.route[i + 1])?;
        if field.weight(&e).expect("checked by timetable") > plan.m {
            return Ok(refuse);
        }
        let v = index_of(field, &plan.route[i])?;
        if !(plan.departure[i] < lambda_times[v]) {
            return Ok(refuse);
        }
    }
    Ok(CertificateCheck { certified: true, degenerate })
}

/// All vertices from which a plan through the ray exists, in box order.
pub fn find_escape_positions(
    field: &EdgeField,
    x_lambda: &Vertex,
    m: f64,
    direction: Direction,
    length: u64,
) -> Result<Vec<Vertex>> {
    check_bounded(field, m)?;
    let ray = finite_horizon_ray(field, x_lambda, direction, length)?;
    let vs = ray.vertices();
    let mut t_lambda = Vec::with_capacity(vs.len());
    let mut t = 0.0;
    for (k, x) in vs.iter().enumerate() {
        if k > 0 {
            t += field.weight(&EdgeId::between(&vs[k - 1], x)?).expect("ray in box");
        }
        t_lambda.push(t);
    }
    // g(y) = min_x t(x, y) + C - t(x_lambda, x); a plan from y exists iff
    // g(y) - C < -M.
    let c = t;
    let sources: Vec<(usize, f64)> = vs
        .iter()
        .zip(&t_lambda)
        .map(|(x, tl)| (index_of(field, x).expect("ray in box"), c - tl))
        .collect();
    let search = Search::run(field, &sources, &Restriction::none(), |_, _| Control::Continue);
    let bx = field.lattice_box();
    let xl = index_of(field, x_lambda)?;
    let mut out = Vec::new();
    for y in 0..bx.vertex_count() {
        if y == xl {
            continue;
        }
        let gap = search.dist(y) - c + m;
        let found = if libm::fabs(gap) <= BORDERLINE {
            build_escape_plan(field, x_lambda, &bx.vertex(y), m, direction, length)?.is_some()
        } else {
            gap < 0.0
        };
        if found {
            out.push(bx.vertex(y));
        }
    }
    Ok(out)
}

/// How the pursuer picks its moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PursuerPolicy {
    /// Follow a geodesic towards `sigma`'s current vertex.
    Greedy,
    /// Follow a geodesic towards the next vertex on `sigma`'s route.
    Intercept,
    /// Uniformly random neighbour after each crossing.
    RandomWalk { seed: u64 },
    Stationary,
}

impl PursuerPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            PursuerPolicy::Greedy => "greedy",
            PursuerPolicy::Intercept => "intercept",
            PursuerPolicy::RandomWalk { .. } => "random-walk",
            PursuerPolicy::Stationary => "stationary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Player {
    Lambda,
    Sigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EventKind {
    Knock,
    Cross,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameEvent {
    pub time: f64,
    pub player: Player,
    pub kind: EventKind,
    pub from: Vertex,
    pub to: Vertex,
}

/// Part of `sigma`'s route being walked when a capture happened.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CapturePhase {
    Approach,
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GameOutcome {
    Caught { time: f64, vertex: Vertex, phase: CapturePhase },
    Survived { horizon: f64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameTrace {
    pub policy: PursuerPolicy,
    pub events: Vec<GameEvent>,
    pub outcome: GameOutcome,
}

struct Knock {
    to: usize,
    opens: f64,
}

/// Next hop from `from` along the deterministic geodesic to `to`.
fn next_hop(field: &EdgeField, from: usize, to: usize) -> Option<usize> {
    if from == to {
        return None;
    }
    let r = Restriction::none();
    let search = Search::until(field, to, from, &r);
    search.predecessor(field, &r, from).0
}

/// Event-driven pursuit of `sigma` (following `plan`) by `lambda`
/// (starting at `plan.x_lambda`).
///
/// `lambda` reconsiders its move whenever either player crosses an edge;
/// changing its mind means knocking anew. The run stops at `t_max`, or
/// just before `lambda` could first reach the final route vertex, where
/// the finite route no longer protects `sigma`.
pub fn run_pursuit(field: &EdgeField, plan: &EscapePlan, policy: PursuerPolicy, t_max: f64) -> Result<GameTrace> {
    let bx = field.lattice_box();
    let route: Vec<usize> = plan.route.iter().map(|v| index_of(field, v)).collect::<Result<_>>()?;
    let last = *route.last().expect("non-empty route");
    let lambda_reach_last = all_times_from(field, &plan.x_lambda, None)?[last];
    let mut events = Vec::new();
    let mut lam = index_of(field, &plan.x_lambda)?;
    let mut sig_pos = 0usize; // index into route
    let mut knock: Option<Knock> = None;
    let mut rng = match policy {
        PursuerPolicy::RandomWalk { seed } => Some(UniformStream::new(combine(seed, 0x9a3e))),
        _ => None,
    };
    let weight_between = |a: usize, b: usize| -> f64 {
        let e = EdgeId::between(&bx.vertex(a), &bx.vertex(b)).expect("adjacent");
        field.weight(&e).expect("in box")
    };
    let in_horizon = |t: f64| t <= t_max && t < lambda_reach_last;

    let mut now = 0.0;
    if route.len() > 1 {
        events.push(GameEvent {
            time: 0.0,
            player: Player::Sigma,
            kind: EventKind::Knock,
            from: plan.route[0],
            to: plan.route[1],
        });
    }
    let mut lambda_crossed = true;
    loop {
        // Pursuer decision.
        let target = match policy {
            PursuerPolicy::Stationary => None,
            PursuerPolicy::Greedy => next_hop(field, lam, route[sig_pos]),
            PursuerPolicy::Intercept => {
                let aim = route[(sig_pos + 1).min(route.len() - 1)];
                next_hop(field, lam, aim)
            }
            PursuerPolicy::RandomWalk { .. } => {
                if lambda_crossed {
                    let nbs: Vec<usize> = bx.neighbors(lam).map(|(n, _)| n).collect();
                    let pick = rng.as_mut().expect("seeded").next_below(nbs.len() as u64) as usize;
                    Some(nbs[pick])
                } else {
                    knock.as_ref().map(|k| k.to)
                }
            }
        };
        match (target, &knock) {
            (Some(t), Some(k)) if k.to == t => {}
            (Some(t), _) => {
                knock = Some(Knock { to: t, opens: now + weight_between(lam, t) });
                events.push(GameEvent {
                    time: now,
                    player: Player::Lambda,
                    kind: EventKind::Knock,
                    from: bx.vertex(lam),
                    to: bx.vertex(t),
                });
            }
            (None, _) => knock = None,
        }

        let sigma_next = plan.arrival.get(sig_pos + 1).copied().unwrap_or(f64::INFINITY);
        let lambda_next = knock.as_ref().map_or(f64::INFINITY, |k| k.opens);
        let t = sigma_next.min(lambda_next);
        if !in_horizon(t) {
            let horizon = t_max.min(lambda_reach_last);
            return Ok(GameTrace { policy, events, outcome: GameOutcome::Survived { horizon } });
        }
        now = t;
        lambda_crossed = false;
        if lambda_next == t {
            let k = knock.take().expect("knocking");
            events.push(GameEvent {
                time: t,
                player: Player::Lambda,
                kind: EventKind::Cross,
                from: bx.vertex(lam),
                to: bx.vertex(k.to),
            });
            lam = k.to;
            lambda_crossed = true;
        }
        if sigma_next == t {
            events.push(GameEvent {
                time: t,
                player: Player::Sigma,
                kind: EventKind::Cross,
                from: plan.route[sig_pos],
                to: plan.route[sig_pos + 1],
            });
            sig_pos += 1;
            if sig_pos + 1 < route.len() {
                events.push(GameEvent {
                    time: t,
                    player: Player::Sigma,
                    kind: EventKind::Knock,
                    from: plan.route[sig_pos],
                    to: plan.route[sig_pos + 1],
                });
            }
        }
        if lam == route[sig_pos] {
            let phase = if sig_pos >= plan.anchor_index { CapturePhase::Tail } else { CapturePhase::Approach };
            return Ok(GameTrace {
                policy,
                events,
                outcome: GameOutcome::Caught { time: t, vertex: bx.vertex(lam), phase },
            });
        }
    }
}

/// Every crossing happens exactly `tau(e)` after the knock that started
/// it, knocks and crossings alternate per player, and events are ordered
/// in time.
pub fn check_trace_timing(field: &EdgeField, trace: &GameTrace) -> Result<()> {
    let mut open: [Option<&GameEvent>; 2] = [None, None];
    let mut last_time = 0.0;
    for ev in &trace.events {
        if ev.time < last_time {
            return Err(Error::InvariantViolated(format!("event at {} after {}", ev.time, last_time)));
        }
        last_time = ev.time;
        let slot = match ev.player {
            Player::Lambda => 0,
            Player::Sigma => 1,
        };
        match ev.kind {
            EventKind::Knock => open[slot] = Some(ev),
            EventKind::Cross => {
                let k = open[slot].take().ok_or_else(|| Error::InvariantViolated("crossing without knock".into()))?;
                let w = field.weight(&EdgeId::between(&ev.from, &ev.to)?).ok_or(Error::EdgeOutOfBox)?;
                if k.from != ev.from || k.to != ev.to || ev.time != k.time + w {
                    return Err(Error::InvariantViolated(format!(
                        "crossing {}->{} at {} does not follow its knock at {} by {}",
                        ev.from, ev.to, ev.time, k.time, w
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::DistributionSpec;
    use crate::field::sample_edge_field;
    use crate::lattice::LatticeBox;

    fn v(c: &[i64]) -> Vertex {
        Vertex::new(c)
    }

    fn uniform_field(seed: u64, half: i64) -> EdgeField {
        let bx = LatticeBox::centered(2, half).unwrap();
        sample_edge_field(&bx, &DistributionSpec::uniform(0.0, 1.0), seed).unwrap()
    }

    #[test]
    fn sigma_on_the_ray_is_its_own_anchor() {
        let f = uniform_field(3, 15);
        let xl = v(&[0, 0]);
        let ray = finite_horizon_ray(&f, &xl, Direction::PLUS_E1, 12).unwrap();
        // First ray vertex with t(x_lambda, .) > M.
        let mut t = 0.0;
        let mut pick = None;
        for w in ray.vertices().windows(2) {
            t += f.weight(&EdgeId::between(&w[0], &w[1]).unwrap()).unwrap();
            if t > 1.0 {
                pick = Some(w[1]);
                break;
            }
        }
        let xs = pick.unwrap();
        let plan = build_escape_plan(&f, &xl, &xs, 1.0, Direction::PLUS_E1, 12).unwrap().unwrap();
        assert_eq!(plan.anchor, xs);
        assert_eq!(plan.anchor_index, 0);
        let check = verify_escape_certificate(&f, &plan).unwrap();
        assert!(check.certified);
    }

    #[test]
    fn guards() {
        let f = uniform_field(1, 5);
        let o = v(&[0, 0]);
        assert_eq!(build_escape_plan(&f, &o, &o, 1.0, Direction::PLUS_E1, 3), Err(Error::SamePosition));
        assert_eq!(
            build_escape_plan(&f, &o, &v(&[1, 0]), 0.5, Direction::PLUS_E1, 3),
            Err(Error::UnboundedWeights)
        );
    }

    #[test]
    fn broken_premise_is_not_certified() {
        let f = uniform_field(9, 12);
        let xl = v(&[0, 0]);
        let xs = v(&[0, 8]);
        if let Some(mut plan) = build_escape_plan(&f, &xl, &xs, 1.0, Direction::PLUS_E1, 10).unwrap() {
            // Claim a much smaller M than used: anchor inequality may fail.
            plan.m = 1e6;
            assert!(!verify_escape_certificate(&f, &plan).unwrap().certified);
        }
        // Anchor at the far end: vacuous tail.
        let ray = finite_horizon_ray(&f, &xl, Direction::PLUS_E1, 10).unwrap();
        let end = ray.last();
        let plan = build_escape_plan(&f, &xl, &end, 1.0, Direction::PLUS_E1, 10).unwrap();
        if let Some(plan) = plan {
            if plan.anchor == end {
                let c = verify_escape_certificate(&f, &plan).unwrap();
                assert!(c.certified && c.degenerate);
            }
        }
    }

    #[test]
    fn positions_match_direct_construction() {
        let f = uniform_field(21, 8);
        let xl = v(&[0, 0]);
        let found = find_escape_positions(&f, &xl, 1.0, Direction::PLUS_E1, 7).unwrap();
        assert!(!found.is_empty());
        for y in f.lattice_box().vertices() {
            if y == xl {
                continue;
            }
            let direct = build_escape_plan(&f, &xl, &y, 1.0, Direction::PLUS_E1, 7).unwrap().is_some();
            assert_eq!(found.contains(&y), direct, "{y}");
        }
    }

    #[test]
    fn pursuits_respect_timing_and_certificate() {
        for seed in 0..10 {
            let f = uniform_field(100 + seed, 20);
            let xl = v(&[0, 0]);
            let cands = find_escape_positions(&f, &xl, 1.0, Direction::PLUS_E1, 18).unwrap();
            let Some(xs) = cands.iter().min_by_key(|c| (c.l1(&xl), **c)) else { continue };
            let plan = build_escape_plan(&f, &xl, xs, 1.0, Direction::PLUS_E1, 18).unwrap().unwrap();
            assert!(verify_escape_certificate(&f, &plan).unwrap().certified);
            for policy in [
                PursuerPolicy::Greedy,
                PursuerPolicy::Intercept,
                PursuerPolicy::RandomWalk { seed },
                PursuerPolicy::Stationary,
            ] {
                let trace = run_pursuit(&f, &plan, policy, 1e9).unwrap();
                check_trace_timing(&f, &trace).unwrap();
                if let GameOutcome::Caught { phase, .. } = trace.outcome {
                    assert_eq!(phase, CapturePhase::Approach, "{policy:?} seed {seed}");
                }
                if policy == PursuerPolicy::Stationary {
                    assert!(matches!(trace.outcome, GameOutcome::Survived { .. }) || plan.route.contains(&xl));
                }
            }
        }
    }

    #[test]
    fn far_pursuer_cannot_arrive_in_time() {
        let bx = LatticeBox::new(&[0, 0], &[30, 2]).unwrap();
        let f = EdgeField::constant(&bx, 1.0).unwrap();
        // sigma sits on the ray beyond distance M = 1 from lambda.
        let plan = build_escape_plan(&f, &v(&[0, 0]), &v(&[5, 0]), 1.0, Direction::PLUS_E1, 30)
            .unwrap()
            .unwrap();
        let trace = run_pursuit(&f, &plan, PursuerPolicy::Greedy, 4.0).unwrap();
        assert_eq!(trace.outcome, GameOutcome::Survived { horizon: 4.0 });
    }

    #[test]
    fn swaps_do_not_collide_but_meetings_do() {
        // Two vertices on a line, sigma's route goes towards lambda: head-on.
        let bx = LatticeBox::new(&[0, 0], &[3, 0]).unwrap();
        let f = EdgeField::constant(&bx, 1.0).unwrap();
        let route = alloc::vec![v(&[1, 0]), v(&[0, 0])];
        let (arrival, departure) = timetable(&f, &route).unwrap();
        let plan = EscapePlan {
            x_sigma: v(&[1, 0]),
            x_lambda: v(&[0, 0]),
            m: 1.0,
            anchor: v(&[1, 0]),
            approach: PathRecord::single(v(&[1, 0])),
            ray_tail: PathRecord::new(route.clone(), &f).unwrap(),
            route,
            anchor_index: 0,
            arrival,
            departure,
        };
        // Greedy lambda knocks towards (1,0) while sigma knocks towards
        // (0,0); both cross at t = 1 and swap without meeting, after which
        // lambda would need to come back; the horizon stops the run first.
        let trace = run_pursuit(&f, &plan, PursuerPolicy::Greedy, 10.0).unwrap();
        assert!(matches!(trace.outcome, GameOutcome::Survived { .. }));
        check_trace_timing(&f, &trace).unwrap();
    }
}
