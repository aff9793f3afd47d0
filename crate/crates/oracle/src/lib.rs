//! Brute-force reference implementations, deliberately simple and slow.
//!
//! Everything here recomputes from first principles: schedules are
//! enumerated over the *explicit* transition graph (no precomputed
//! switching costs), and switching costs are cross-checked with
//! Floyd-Warshall over an independently constructed interval-state graph.
//! Guards refuse inputs large enough to make the enumeration meaningless.

use num_integer::Integer;
use tousched_core::model::{Instance, Schedule, StateId};
use tousched_core::num::Rational;
use tousched_core::{Error, Result};

const INF: i128 = i128::MAX / 4;

/// Exact money grid, derived independently of the solver's scaling.
struct Grid {
    /// `cost[i-1][s][sp]` = scaled `c_i * P[s][sp]`; INF when absent.
    cost: Vec<Vec<Vec<i128>>>,
    /// `duration[s][sp]`; usize::MAX when absent.
    duration: Vec<Vec<usize>>,
    scale: i128,
    n_states: usize,
    off: usize,
    proc: usize,
}

fn lcm(a: i128, b: i128) -> i128 {
    a / a.gcd(&b) * b
}

impl Grid {
    fn new(instance: &Instance) -> Self {
        let d = instance.diagram();
        let ns = d.n_states();
        let h = instance.horizon();
        let mut denom: i128 = 1;
        for c in instance.costs() {
            denom = lcm(denom, *c.denom() as i128);
        }
        for s in 0..ns {
            for sp in 0..ns {
                if let Some(p) = d.power(StateId(s), StateId(sp)) {
                    denom = lcm(denom, *p.denom() as i128);
                }
            }
        }
        let mut cost = vec![vec![vec![INF; ns]; ns]; h];
        let mut duration = vec![vec![usize::MAX; ns]; ns];
        for s in 0..ns {
            for sp in 0..ns {
                let (Some(t), Some(p)) = (
                    d.time(StateId(s), StateId(sp)),
                    d.power(StateId(s), StateId(sp)),
                ) else {
                    continue;
                };
                duration[s][sp] = t as usize;
                for (i, c) in instance.costs().iter().enumerate() {
                    let v = c * p;
                    cost[i][s][sp] = (*v.numer() as i128) * (denom / (*v.denom() as i128));
                }
            }
        }
        Grid {
            cost,
            duration,
            scale: denom,
            n_states: ns,
            off: d.off().index(),
            proc: d.proc().index(),
        }
    }

    fn to_rational(&self, v: i128) -> Rational {
        let g = v.gcd(&self.scale);
        Rational::new((v / g) as i64, (self.scale / g) as i64)
    }
}

/// Parent edge of a DP state: previous state plus the label and how many
/// intervals it spanned (0 for zero-duration hops).
#[derive(Clone, Copy)]
struct Parent {
    prev: (usize, usize, usize),
    label: (usize, usize),
    span: usize,
    job_start: bool,
}

/// Optimum for one processing-time sequence by dynamic programming over
/// (interval, machine state, jobs completed), walking explicit transitions
/// only. Returns the scaled objective, per-position start intervals and
/// the full label vector.
fn solve_sequence(
    instance: &Instance,
    grid: &Grid,
    q: &[usize],
) -> Option<(i128, Vec<usize>, Vec<(StateId, StateId)>)> {
    let h = instance.horizon();
    let ns = grid.n_states;
    let m = q.len();
    let idx = |i: usize, s: usize, u: usize| ((i - 2) * ns + s) * (m + 1) + u;
    let mut dist = vec![INF; (h - 1) * ns * (m + 1)];
    let mut parent: Vec<Option<Parent>> = vec![None; dist.len()];

    // Interval 1 is (off, off); the machine stands at off as interval 2
    // begins.
    dist[idx(2, grid.off, 0)] = grid.cost[0][grid.off][grid.off];

    for i in 2..=h {
        // Zero-duration hops settle within the layer.
        for _ in 0..ns {
            for u in 0..=m {
                for s in 0..ns {
                    let dv = dist[idx(i, s, u)];
                    if dv >= INF {
                        continue;
                    }
                    for sp in 0..ns {
                        if grid.duration[s][sp] == 0 && dv < dist[idx(i, sp, u)] {
                            dist[idx(i, sp, u)] = dv;
                            parent[idx(i, sp, u)] = Some(Parent {
                                prev: (i, s, u),
                                label: (s, sp),
                                span: 0,
                                job_start: false,
                            });
                        }
                    }
                }
            }
        }
        if i == h {
            break;
        }
        for u in 0..=m {
            for s in 0..ns {
                let dv = dist[idx(i, s, u)];
                if dv >= INF {
                    continue;
                }
                // Timed transitions, completing no later than interval h.
                for sp in 0..ns {
                    let t = grid.duration[s][sp];
                    if t == usize::MAX || t == 0 || i + t > h {
                        continue;
                    }
                    let w: i128 = (i..i + t).map(|j| grid.cost[j - 1][s][sp]).sum();
                    let target = idx(i + t, sp, u);
                    if dv + w < dist[target] {
                        dist[target] = dv + w;
                        parent[target] = Some(Parent {
                            prev: (i, s, u),
                            label: (s, sp),
                            span: t,
                            job_start: false,
                        });
                    }
                }
                // Process the next job of the sequence.
                if s == grid.proc && u < m && i + q[u] <= h {
                    let w: i128 = (i..i + q[u])
                        .map(|j| grid.cost[j - 1][grid.proc][grid.proc])
                        .sum();
                    let target = idx(i + q[u], grid.proc, u + 1);
                    if dv + w < dist[target] {
                        dist[target] = dv + w;
                        parent[target] = Some(Parent {
                            prev: (i, s, u),
                            label: (grid.proc, grid.proc),
                            span: q[u],
                            job_start: true,
                        });
                    }
                }
            }
        }
    }

    let end = idx(h, grid.off, m);
    if dist[end] >= INF {
        return None;
    }
    let total = dist[end] + grid.cost[h - 1][grid.off][grid.off];

    let d = instance.diagram();
    let mut labels = vec![(d.off(), d.off()); h];
    let mut starts = vec![0usize; m];
    let mut at = (h, grid.off, m);
    while let Some(p) = parent[idx(at.0, at.1, at.2)] {
        for k in 0..p.span {
            labels[p.prev.0 - 1 + k] = (StateId(p.label.0), StateId(p.label.1));
        }
        if p.job_start {
            starts[p.prev.2] = p.prev.0;
        }
        at = p.prev;
    }
    Some((total, starts, labels))
}

fn guard(instance: &Instance) -> Result<()> {
    if instance.n_jobs() > 8 || instance.horizon() > 30 || instance.horizon() < 2 {
        return Err(Error::TooLarge(format!(
            "brute force limited to 8 jobs / 30 intervals, got {} / {}",
            instance.n_jobs(),
            instance.horizon()
        )));
    }
    Ok(())
}

/// All orders with distinct processing-time sequences; among equal
/// processing times the smallest job index is the representative (equal
/// jobs are interchangeable, so this loses no objective value).
fn distinct_orders(instance: &Instance, prefix: &[usize]) -> Vec<Vec<usize>> {
    let n = instance.n_jobs();
    let mut rest: Vec<usize> = (0..n).filter(|j| !prefix.contains(j)).collect();
    let mut orders = Vec::new();
    fn rec(
        instance: &Instance,
        current: &mut Vec<usize>,
        rest: &mut Vec<usize>,
        orders: &mut Vec<Vec<usize>>,
    ) {
        if rest.is_empty() {
            orders.push(current.clone());
            return;
        }
        for k in 0..rest.len() {
            let j = rest[k];
            if rest[..k]
                .iter()
                .any(|&r| instance.jobs()[r] == instance.jobs()[j])
            {
                continue; // an equal job already branched here
            }
            rest.remove(k);
            current.push(j);
            rec(instance, current, rest, orders);
            current.pop();
            rest.insert(k, j);
        }
    }
    let mut current = prefix.to_vec();
    rec(instance, &mut current, &mut rest, &mut orders);
    orders
}

/// Outcome of the exhaustive solver.
#[derive(Debug, Clone, PartialEq)]
pub enum BruteForce {
    Optimal { tec: Rational, schedule: Schedule },
    Infeasible,
}

/// Enumerates all job orders and solves each with the explicit-transition
/// DP; returns the global optimum with a witness schedule.
pub fn brute_force_optimum(instance: &Instance) -> Result<BruteForce> {
    guard(instance)?;
    let grid = Grid::new(instance);
    let mut best: Option<(i128, Vec<usize>, Vec<usize>, Vec<(StateId, StateId)>)> = None;
    for order in distinct_orders(instance, &[]) {
        let q: Vec<usize> = order.iter().map(|&j| instance.jobs()[j]).collect();
        if let Some((value, starts, labels)) = solve_sequence(instance, &grid, &q) {
            if best.as_ref().is_none_or(|(b, _, _, _)| value < *b) {
                best = Some((value, order, starts, labels));
            }
        }
    }
    Ok(match best {
        None => BruteForce::Infeasible,
        Some((value, order, starts_by_pos, labels)) => {
            let mut starts = vec![0usize; instance.n_jobs()];
            for (pos, &j) in order.iter().enumerate() {
                starts[j] = starts_by_pos[pos];
            }
            BruteForce::Optimal {
                tec: grid.to_rational(value),
                schedule: Schedule {
                    starts,
                    transitions: labels,
                },
            }
        }
    })
}

/// Minimum TEC over all completions of a fixed prefix; `None` when no
/// completion is feasible.
pub fn optimum_with_prefix(instance: &Instance, prefix: &[usize]) -> Result<Option<Rational>> {
    guard(instance)?;
    let grid = Grid::new(instance);
    let mut best: Option<i128> = None;
    for order in distinct_orders(instance, prefix) {
        let q: Vec<usize> = order.iter().map(|&j| instance.jobs()[j]).collect();
        if let Some((value, _, _)) = solve_sequence(instance, &grid, &q) {
            best = Some(best.map_or(value, |b: i128| b.min(value)));
        }
    }
    Ok(best.map(|v| grid.to_rational(v)))
}

/// Optimal TEC for one explicit order: the oracle counterpart of the
/// solver's fixed-sequence evaluation.
pub fn sequence_tec(instance: &Instance, order: &[usize]) -> Result<Option<Rational>> {
    guard(instance)?;
    let grid = Grid::new(instance);
    let q: Vec<usize> = order.iter().map(|&j| instance.jobs()[j]).collect();
    Ok(solve_sequence(instance, &grid, &q).map(|(v, _, _)| grid.to_rational(v)))
}

/// All-pairs switching costs on an independently built interval-state
/// graph, projected onto the anchor cases of the switching table.
pub struct SigmaOracle {
    h: usize,
    scale: i128,
    dist: Vec<i128>,
}

impl SigmaOracle {
    pub fn cost(&self, i: usize, ip: usize) -> Option<Rational> {
        if i == 0 || ip <= i || ip > self.h {
            return None;
        }
        let v = self.dist[(i - 1) * self.h + (ip - 1)];
        if v >= INF / 2 {
            return None;
        }
        let g = v.gcd(&self.scale);
        Some(Rational::new((v / g) as i64, (self.scale / g) as i64))
    }
}

/// Floyd-Warshall over the interval-state graph.
pub fn floyd_warshall_sigma(instance: &Instance) -> Result<SigmaOracle> {
    let h = instance.horizon();
    let d = instance.diagram();
    let ns = d.n_states();
    if h * ns > 600 {
        return Err(Error::TooLarge(format!(
            "Floyd-Warshall oracle limited to 600 vertices, got {}",
            h * ns
        )));
    }
    let grid = Grid::new(instance);

    // Vertices (i, s) for i in 2..=h; the boundary intervals 1 and h are
    // charged by the callers of the switching costs, not here.
    let vid = |i: usize, s: usize| (i - 2) * ns + s;
    let nv = (h - 1) * ns;
    let mut dist = vec![INF; nv * nv];
    for v in 0..nv {
        dist[v * nv + v] = 0;
    }
    for i in 2..=h {
        for s in 0..ns {
            for sp in 0..ns {
                let t = grid.duration[s][sp];
                if t == usize::MAX || i + t > h {
                    continue;
                }
                let w: i128 = (i..i + t).map(|j| grid.cost[j - 1][s][sp]).sum();
                let (a, b) = (vid(i, s), vid(i + t, sp));
                if w < dist[a * nv + b] {
                    dist[a * nv + b] = w;
                }
            }
        }
    }
    for k in 0..nv {
        for a in 0..nv {
            let dak = dist[a * nv + k];
            if dak >= INF {
                continue;
            }
            for b in 0..nv {
                let cand = dak + dist[k * nv + b];
                if cand < dist[a * nv + b] {
                    dist[a * nv + b] = cand;
                }
            }
        }
    }

    let (off, proc) = (d.off().index(), d.proc().index());
    let mut table = vec![INF; h * h];
    for anchor in 1..h {
        let source = if anchor == 1 {
            vid(2, off)
        } else {
            vid(anchor + 1, proc)
        };
        for target in anchor + 1..=h {
            let tv = if target == h {
                vid(h, off)
            } else {
                vid(target, proc)
            };
            table[(anchor - 1) * h + (target - 1)] = dist[source * nv + tv];
        }
    }
    Ok(SigmaOracle {
        h,
        scale: grid.scale,
        dist: table,
    })
}
