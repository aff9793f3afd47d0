//! Shared helpers for the integration test suites: the reference instance
//! and seeded random instance generators.

// Each test binary compiles this module separately and uses a subset.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tousched_core::model::{Instance, Schedule, TransitionDiagram};
use tousched_core::num::Rational;

pub fn example_instance() -> Instance {
    let costs = [9, 7, 9, 13, 3, 11, 3, 13, 6, 7, 60, 4, 10, 6, 9, 3, 14, 0, 4, 6]
        .iter()
        .map(|c| Rational::from_integer(*c))
        .collect();
    Instance::new(costs, vec![1, 2, 4], tousched_core::instgen::nosby()).unwrap()
}

pub fn example_optimal_schedule() -> Schedule {
    let d = tousched_core::instgen::nosby();
    let off = d.off();
    let proc = d.proc();
    let on = (off, proc);
    let down = (proc, off);
    let o = (off, off);
    let p = (proc, proc);
    Schedule {
        starts: vec![14, 7, 15],
        transitions: vec![o, o, o, o, on, on, p, p, down, o, o, on, on, p, p, p, p, p, down, o],
    }
}

/// A random three-state diagram (off / idle / proc): the off-proc
/// transitions always exist, idle links vary, zero-duration idle hops
/// appear often.
pub fn random_diagram3(rng: &mut ChaCha8Rng) -> TransitionDiagram {
    let t = |v: u32| Some(v);
    let p = |v: i64| Some(Rational::from_integer(v));
    let t_on = rng.gen_range(1..=3u32);
    let t_off = rng.gen_range(1..=2u32);
    let idle_linked = rng.gen_bool(0.8);
    let t_pi = rng.gen_range(0..=1u32);
    let t_ip = rng.gen_range(0..=1u32);
    let (pi, ip) = if idle_linked {
        (t(t_pi), t(t_ip))
    } else {
        (None, None)
    };
    let (pi_p, ip_p) = if idle_linked {
        (p(rng.gen_range(0..=3)), p(rng.gen_range(0..=3)))
    } else {
        (None, None)
    };
    TransitionDiagram::new(
        vec!["off".into(), "idle".into(), "proc".into()],
        "off",
        "proc",
        vec![
            vec![t(1), None, t(t_on)],
            vec![None, t(1), ip],
            vec![t(t_off), pi, t(1)],
        ],
        vec![
            vec![p(0), None, p(rng.gen_range(1..=8))],
            vec![None, p(rng.gen_range(1..=4)), ip_p],
            vec![p(rng.gen_range(0..=3)), pi_p, p(rng.gen_range(2..=8))],
        ],
    )
    .unwrap()
}

/// A random diagram with 2..=4 states; extra states are standby depths
/// between off and proc.
pub fn random_diagram(rng: &mut ChaCha8Rng, n_states: usize) -> TransitionDiagram {
    match n_states {
        3 => random_diagram3(rng),
        2 => {
            let t = |v: u32| Some(v);
            let p = |v: i64| Some(Rational::from_integer(v));
            TransitionDiagram::new(
                vec!["off".into(), "proc".into()],
                "off",
                "proc",
                vec![
                    vec![t(1), t(rng.gen_range(1..=3))],
                    vec![t(rng.gen_range(1..=2)), t(1)],
                ],
                vec![
                    vec![p(0), p(rng.gen_range(1..=8))],
                    vec![p(rng.gen_range(0..=3)), p(rng.gen_range(2..=8))],
                ],
            )
            .unwrap()
        }
        4 => {
            let t = |v: u32| Some(v);
            let p = |v: i64| Some(Rational::from_integer(v));
            let maybe = |rng: &mut ChaCha8Rng, tv: u32, pv: i64| {
                if rng.gen_bool(0.7) {
                    (Some(tv), Some(Rational::from_integer(pv)))
                } else {
                    (None, None)
                }
            };
            let (tv, pv) = (rng.gen_range(0..=2), rng.gen_range(0..=4));
            let (t_sp, p_sp) = maybe(rng, tv, pv);
            let (tv, pv) = (rng.gen_range(0..=2), rng.gen_range(0..=4));
            let (t_ps, p_ps) = maybe(rng, tv, pv);
            let (tv, pv) = (rng.gen_range(1..=2), rng.gen_range(0..=2));
            let (t_so, p_so) = maybe(rng, tv, pv);
            TransitionDiagram::new(
                vec!["off".into(), "standby".into(), "idle".into(), "proc".into()],
                "off",
                "proc",
                vec![
                    vec![t(1), t(rng.gen_range(1..=2)), None, t(rng.gen_range(1..=3))],
                    vec![t_so, t(1), None, t_sp],
                    vec![None, None, t(1), t(rng.gen_range(0..=1))],
                    vec![t(rng.gen_range(1..=2)), t_ps, t(rng.gen_range(0..=1)), t(1)],
                ],
                vec![
                    vec![p(0), p(rng.gen_range(0..=2)), None, p(rng.gen_range(1..=8))],
                    vec![p_so, p(rng.gen_range(1..=3)), None, p_sp],
                    vec![None, None, p(rng.gen_range(1..=4)), p(rng.gen_range(0..=2))],
                    vec![p(rng.gen_range(0..=3)), p_ps, p(rng.gen_range(0..=1)), p(rng.gen_range(2..=8))],
                ],
            )
            .unwrap()
        }
        other => panic!("unsupported state count {other}"),
    }
}

/// A small random instance for oracle comparisons: `n <= max_n` jobs with
/// processing times `1..=max_p`, horizon capped at `max_h`, three states.
/// `negative` mixes in negative interval costs.
pub fn random_small_instance(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_p: usize,
    max_h: usize,
    negative: bool,
) -> Instance {
    let diagram = random_diagram3(rng);
    let n = rng.gen_range(1..=max_n);
    let jobs: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_p)).collect();
    let work: usize = jobs.iter().sum();
    let t_on = diagram.time(diagram.off(), diagram.proc()).unwrap() as usize;
    let t_off = diagram.time(diagram.proc(), diagram.off()).unwrap() as usize;
    let base = 1 + t_on + work + t_off + 1;
    let h = (base + rng.gen_range(0..=6)).clamp(2, max_h);
    let mut costs: Vec<Rational> = (0..h)
        .map(|_| {
            let c = if negative {
                rng.gen_range(-5..=12)
            } else {
                rng.gen_range(0..=12)
            };
            Rational::from_integer(c)
        })
        .collect();
    if negative && costs.iter().all(|c| *c >= Rational::from_integer(0)) {
        costs[h / 2] = Rational::from_integer(-3);
    }
    Instance::new(costs, jobs, diagram).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
