//! Seeded random terms and networks for property tests and corpora.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lts::{emitting_steps, input_capabilities, Dialect};
use crate::name::Name;
use crate::network::Network;
use crate::syntax::{Prefix, Process};

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub dialect: Dialect,
    /// Nesting depth of prefixes, restrictions and replications.
    pub depth: usize,
    /// Most atoms in one parallel composition.
    pub max_par: usize,
    pub max_sum: usize,
    pub names: Vec<Name>,
    pub replication: bool,
    pub restriction: bool,
}

impl GenConfig {
    pub fn new(dialect: Dialect) -> Self {
        GenConfig {
            dialect,
            depth: 3,
            max_par: 3,
            max_sum: 3,
            names: ["a", "b", "c"].into_iter().map(Name::new).collect(),
            replication: true,
            restriction: true,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct Gen<'a, R> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    next: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn binder(&mut self) -> Name {
        self.next += 1;
        Name::new(format!("v{}", self.next))
    }

    fn pick(&mut self, scope: &[Name]) -> Name {
        scope.choose(self.rng).cloned().unwrap_or_else(|| Name::new("a"))
    }

    fn process(&mut self, depth: usize, scope: &mut Vec<Name>) -> Process {
        if depth == 0 {
            return self.atom(scope);
        }
        match self.rng.gen_range(0..10) {
            0..=2 => {
                let n = self.rng.gen_range(2..=self.cfg.max_par.max(2));
                let parts = (0..n).map(|_| self.process(depth - 1, scope)).collect();
                Process::par_all(parts)
            }
            3 if self.cfg.restriction => {
                let x = self.binder();
                scope.push(x.clone());
                let body = self.process(depth - 1, scope);
                scope.pop();
                Process::new_name(x, body)
            }
            4 if self.cfg.replication => Process::rep(self.guarded(depth - 1, scope)),
            5 => self.atom(scope),
            _ => self.guarded(depth, scope),
        }
    }

    fn atom(&mut self, scope: &[Name]) -> Process {
        let x = self.pick(scope);
        match self.cfg.dialect {
            Dialect::Ccs => Process::out(x.clone(), x),
            _ if self.rng.gen_bool(0.2) => Process::nil(),
            _ => {
                let y = self.pick(scope);
                Process::out(x, y)
            }
        }
    }

    /// A sum of prefixed terms as the dialect allows.
    fn guarded(&mut self, depth: usize, scope: &mut Vec<Name>) -> Process {
        let d = self.cfg.dialect;
        let n = match d {
            Dialect::PiAsync => 1,
            _ => self.rng.gen_range(1..=self.cfg.max_sum.max(1)),
        };
        let inputs_only = d == Dialect::PiAsync || (d == Dialect::PiSeparateChoice && self.rng.gen_bool(0.5));
        let mut branches = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.pick(scope);
            let kind = if inputs_only {
                0
            } else if d == Dialect::PiSeparateChoice {
                self.rng.gen_range(2..5)
            } else {
                self.rng.gen_range(0..5)
            };
            let sub = depth.saturating_sub(1);
            match kind {
                0..=1 => {
                    let y = self.binder();
                    if d != Dialect::Ccs {
                        scope.push(y.clone());
                    }
                    let cont = self.process(sub, scope);
                    if d != Dialect::Ccs {
                        scope.pop();
                    }
                    branches.push((Prefix::Input { channel: x, formal: y }, cont));
                }
                2..=3 => {
                    let y = if d == Dialect::Ccs { x.clone() } else { self.pick(scope) };
                    let cont = self.process(sub, scope);
                    branches.push((Prefix::Output { channel: x, datum: y }, cont));
                }
                _ => {
                    let cont = self.process(sub, scope);
                    branches.push((Prefix::Tau, cont));
                }
            }
        }
        Process::Sum(branches)
    }
}

/// A random term of `cfg.dialect` over `cfg.names`.
pub fn random_process<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Process {
    let mut g = Gen { rng, cfg, next: 0 };
    let mut scope = cfg.names.clone();
    g.process(cfg.depth, &mut scope)
}

/// An asynchronous term that can both emit an output and accept an input.
pub fn async_pair_process<R: Rng>(rng: &mut R, depth: usize, max_par: usize) -> Process {
    let cfg = GenConfig { depth, max_par, ..GenConfig::new(Dialect::PiAsync) };
    loop {
        let mut parts = vec![random_process(rng, &cfg)];
        // top up so that both kinds of step are likely to exist
        let x = cfg.names.choose(rng).unwrap().clone();
        let y = cfg.names.choose(rng).unwrap().clone();
        parts.push(Process::out(x, y));
        let z = cfg.names.choose(rng).unwrap().clone();
        parts.push(Process::input(z, Name::new("w"), random_process(rng, &GenConfig { depth: 1, ..cfg.clone() })));
        parts.truncate(max_par.max(2));
        let p = Process::par_all(parts);
        if emitting_steps(&p).iter().any(|s| s.action.is_output()) && !input_capabilities(&p).is_empty() {
            return p;
        }
    }
}

/// A small replication-free network of `k` components whose behaviour
/// includes announcements of the components' identifiers.
pub fn random_network<R: Rng>(rng: &mut R, k: usize, dialect: Dialect) -> Network {
    let cfg = GenConfig {
        depth: 2,
        max_par: 2,
        max_sum: 2,
        replication: false,
        ..GenConfig::new(dialect)
    };
    let components = (1..=k)
        .map(|_| {
            let body = random_process(rng, &cfg);
            let announce = Process::out(Name::output_channel(), Name::numeral(rng.gen_range(1..=k as u64)));
            // put the announcement behind a prefix of the body, or next to it
            match (&body, rng.gen_bool(0.5)) {
                (Process::Sum(bs), true) if !bs.is_empty() => {
                    let bs = bs.iter().map(|(p, c)| (p.clone(), Process::par(c.clone(), announce.clone()))).collect();
                    Process::Sum(bs)
                }
                _ => Process::par(body, announce),
            }
        })
        .collect();
    Network::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::dialect_check;

    #[test]
    fn generated_terms_respect_their_dialect() {
        let mut r = rng(7);
        for d in [Dialect::Pi, Dialect::PiAsync, Dialect::Ccs, Dialect::PiSeparateChoice] {
            let cfg = GenConfig::new(d);
            for _ in 0..200 {
                let p = random_process(&mut r, &cfg);
                assert!(dialect_check(&p, d), "{d}: {p}");
            }
        }
    }

    #[test]
    fn same_seed_same_terms() {
        let cfg = GenConfig::new(Dialect::Pi);
        let a: Vec<String> = (0..20).map(|_| random_process(&mut rng(3), &cfg).to_string()).collect();
        let b: Vec<String> = (0..20).map(|_| random_process(&mut rng(3), &cfg).to_string()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn async_pairs_have_both_steps() {
        let mut r = rng(1);
        for _ in 0..50 {
            let p = async_pair_process(&mut r, 4, 6);
            assert!(dialect_check(&p, Dialect::PiAsync));
            assert!(emitting_steps(&p).iter().any(|s| s.action.is_output()));
            assert!(!input_capabilities(&p).is_empty());
        }
    }
}
