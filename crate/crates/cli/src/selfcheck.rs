//! Randomized exact checks of the group law and lattice reduction.

use std::fmt;

use nilflow_core::nilgroup::{GroupPoint, NilGroup};
use nilflow_core::ratcore::{rat, Rat};
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::schema::SystemDefinition;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckSummary {
    pub samples: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }
}

impl fmt::Display for CheckSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} passed", self.samples - self.failures, self.samples)?;
        if let Some(w) = &self.first_failure {
            write!(f, " (first failure: {w})")?;
        }
        Ok(())
    }
}

fn random_rat(rng: &mut ChaCha8Rng, span: i64) -> Rat {
    let q = rng.gen_range(1..=7);
    rat(rng.gen_range(-span * q..=span * q), q)
}

fn random_point(g: &NilGroup, rng: &mut ChaCha8Rng, span: i64) -> GroupPoint<Rat> {
    GroupPoint::new((0..g.dim()).map(|_| random_rat(rng, span)).collect())
}

fn show(p: &GroupPoint<Rat>) -> String {
    let parts: Vec<String> = p.coords.iter().map(|c| c.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Associativity, two-sided inverses and second-kind round trips on `samples`
/// random rational triples, compared exactly.
pub fn group_law_check(def: &SystemDefinition, samples: usize, seed: u64) -> CheckSummary {
    let g = def.map.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = g.identity::<Rat>();
    let mut out = CheckSummary { samples, ..Default::default() };
    for _ in 0..samples {
        let a = random_point(g, &mut rng, 3);
        let b = random_point(g, &mut rng, 3);
        let c = random_point(g, &mut rng, 3);
        let assoc = g.mul(&g.mul(&a, &b), &c) == g.mul(&a, &g.mul(&b, &c));
        let ai = g.inv(&a);
        let inverse = g.mul(&a, &ai) == e && g.mul(&ai, &a) == e;
        let t = g.to_second_kind(&b);
        let back = g.from_second_kind(&t) == b;
        let s: Vec<Rat> = c.coords.clone();
        let forth = g.to_second_kind(&g.from_second_kind(&s)) == s;
        let ok = assoc && inverse && back && forth;
        out.record(ok, || {
            format!(
                "a = {}, b = {}, c = {} (assoc {assoc}, inverse {inverse}, second kind {})",
                show(&a),
                show(&b),
                show(&c),
                back && forth
            )
        });
    }
    out
}

/// Reduction of `samples` random rational points: the representative lies in
/// `[0, 1)^d`, the quotient witness is a lattice element and `x γ` is the
/// representative.
pub fn lattice_check(def: &SystemDefinition, samples: usize, seed: u64) -> CheckSummary {
    let g = def.map.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = CheckSummary { samples, ..Default::default() };
    for _ in 0..samples {
        let x = random_point(g, &mut rng, 6);
        let (r, gamma) = g.reduce(&x);
        let in_box = r.second_kind().iter().all(|t| !t.is_negative() && *t < Rat::one());
        let witness = g.in_lattice(&gamma).unwrap_or(false);
        let consistent = g.mul(&x, &gamma) == *r.rep() && g.to_second_kind(r.rep()) == r.second_kind();
        out.record(in_box && witness && consistent, || {
            format!("x = {} (box {in_box}, witness {witness}, product {consistent})", show(&x))
        });
    }
    out
}
