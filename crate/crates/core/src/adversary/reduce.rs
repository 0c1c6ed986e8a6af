use crate::network::{hypergraph_of, symmetry_failure, Automorphism, Network};
use crate::syntax::Process;

use super::AdversaryError;

/// Groups one representative per orbit into composite components.
///
/// With orbits of common size `q`, component `m` of the result is the
/// parallel composition of `P_{σ^(m-1)(r)}` over the orbit minima `r`,
/// and the returned automorphism cycles the `q` composites while keeping
/// the name map of `sigma`.
pub fn reduce_well_balanced(net: &Network, sigma: &Automorphism) -> Result<(Network, Automorphism), AdversaryError> {
    if sigma.k() != net.len() {
        return Err(AdversaryError::PreconditionFailed(format!(
            "automorphism acts on {} nodes, network has {}",
            sigma.k(),
            net.len()
        )));
    }
    if let Some(why) = symmetry_failure(net, sigma) {
        return Err(AdversaryError::PreconditionFailed(format!("not a symmetry: {why}")));
    }
    if !sigma.is_well_balanced() {
        return Err(AdversaryError::PreconditionFailed("orbits differ in size".into()));
    }
    let orbits = sigma.orbits();
    let q = orbits[0].len();
    if q == 1 {
        return Err(AdversaryError::PreconditionFailed("the automorphism fixes every node".into()));
    }
    let reps: Vec<usize> = orbits.iter().map(|o| *o.iter().min().unwrap()).collect();
    let mut components = Vec::with_capacity(q);
    let mut ids = Vec::with_capacity(q);
    for m in 0..q {
        let members: Vec<usize> = reps.iter().map(|&r| sigma.power(m).node(r)).collect();
        components.push(Process::par_all(members.iter().map(|&n| net.component(n).clone()).collect()));
        ids.push(members.iter().flat_map(|&n| net.ids[n - 1].clone()).collect());
    }
    let reduced = Network { components, hoisted: net.hoisted.clone(), ids };
    let theta = Automorphism {
        node_map: (1..=q).map(|m| m % q + 1).collect(),
        arc_map: sigma.arc_map.clone(),
    };
    Ok((reduced, theta))
}

/// No arc joins a node to any of its images under a non-trivial power of
/// `sigma`. Under this condition the adversary's argument goes through for
/// CCS, whose choices are otherwise not confluent.
pub fn ccs_applicable(net: &Network, sigma: &Automorphism) -> bool {
    let h = hypergraph_of(net);
    let order = sigma.orbits().iter().map(Vec::len).fold(1, lcm);
    for step in 1..order {
        let power = sigma.power(step);
        for n in 1..=net.len() {
            let image = power.node(n);
            if image == n {
                continue;
            }
            if h.arcs.values().any(|t| t.contains(&n) && t.contains(&image)) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
