use thiserror::Error;

use crate::lts::{dialect_violation, emitting_steps, input_capabilities, Action, Dialect, TransitionStep};
use crate::syntax::{free_names, struct_congruent, substitute, Process};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiamondError {
    #[error("not an asynchronous process: {0}")]
    NotAsync(String),
    #[error("expected an output step and an input step from the same process")]
    BadSteps,
    #[error("the two steps do not commute: no common reduct")]
    NoDiamond,
}

/// The closing square: `left_step` continues the output's target with the
/// input, `right_step` continues the input's target with the output.
#[derive(Clone, Debug)]
pub struct DiamondResult {
    pub r: Process,
    pub left_step: TransitionStep,
    pub right_step: TransitionStep,
}

/// Commutes an output step and an input step of an asynchronous process.
pub fn confluence_diamond(
    p: &Process,
    out_step: &TransitionStep,
    in_step: &TransitionStep,
) -> Result<DiamondResult, DiamondError> {
    if let Some(reason) = dialect_violation(p, Dialect::PiAsync) {
        return Err(DiamondError::NotAsync(reason));
    }
    close_diamond(p, out_step, in_step)
}

/// The same construction without the asynchrony check. It may fail, for
/// instance when the two steps resolve the same choice.
pub fn close_diamond(
    p: &Process,
    out_step: &TransitionStep,
    in_step: &TransitionStep,
) -> Result<DiamondResult, DiamondError> {
    if !out_step.action.is_output() || !in_step.action.is_input() || out_step.source != *p || in_step.source != *p {
        return Err(DiamondError::BadSteps);
    }
    let Action::Input { channel: in_ch, received } = &in_step.action else {
        unreachable!()
    };
    // Q --input--> R1
    let lefts: Vec<TransitionStep> = input_capabilities(&out_step.target)
        .into_iter()
        .filter(|c| c.channel == *in_ch)
        .map(|c| {
            let (action, target) = c.instantiate(received);
            TransitionStep { source: out_step.target.clone(), action, target, derivation: c.derivation }
        })
        .collect();
    // Q' --output--> R2
    let rights: Vec<TransitionStep> = emitting_steps(&in_step.target)
        .into_iter()
        .filter(|s| same_output(&s.action, &out_step.action))
        .collect();
    for l in &lefts {
        for r in &rights {
            let r_target = align_extruded(&r.action, &out_step.action, &r.target);
            if struct_congruent(&l.target, &r_target) {
                let right_step = TransitionStep { target: r_target, ..r.clone() };
                return Ok(DiamondResult { r: l.target.clone(), left_step: l.clone(), right_step });
            }
        }
    }
    Err(DiamondError::NoDiamond)
}

fn same_output(a: &Action, b: &Action) -> bool {
    match (a, b) {
        (Action::FreeOutput { .. }, Action::FreeOutput { .. }) => a == b,
        (Action::BoundOutput { channel: c1, .. }, Action::BoundOutput { channel: c2, .. }) => c1 == c2,
        _ => false,
    }
}

/// A bound output may extrude under a different name; rename it to the
/// name used by the original step.
fn align_extruded(got: &Action, want: &Action, target: &Process) -> Process {
    match (got, want) {
        (Action::BoundOutput { datum: y2, .. }, Action::BoundOutput { datum: y, .. }) if y2 != y => {
            if free_names(target).contains(y) {
                // would capture: leave as is and let the comparison fail
                return target.clone();
            }
            substitute(target, y2, y)
        }
        _ => target.clone(),
    }
}

/// Finds the pair of steps of `p` with the given actions, if any, and
/// checks that they commute. Bound output data match any name.
pub fn diamond_for_actions(
    p: &Process,
    out_action: &Action,
    in_action: &Action,
    gated: bool,
) -> Result<DiamondResult, DiamondError> {
    let outs: Vec<TransitionStep> =
        emitting_steps(p).into_iter().filter(|s| same_output(&s.action, out_action)).collect();
    let Action::Input { channel, received } = in_action else {
        return Err(DiamondError::BadSteps);
    };
    let ins: Vec<TransitionStep> = input_capabilities(p)
        .into_iter()
        .filter(|c| c.channel == *channel)
        .map(|c| {
            let (action, target) = c.instantiate(received);
            TransitionStep { source: p.clone(), action, target, derivation: c.derivation }
        })
        .collect();
    if outs.is_empty() || ins.is_empty() {
        return Err(DiamondError::BadSteps);
    }
    let mut last = DiamondError::NoDiamond;
    for o in &outs {
        for i in &ins {
            let r = if gated { confluence_diamond(p, o, i) } else { close_diamond(p, o, i) };
            match r {
                Ok(d) => return Ok(d),
                Err(e @ DiamondError::NotAsync(_)) => return Err(e),
                Err(e) => last = e,
            }
        }
    }
    Err(last)
}
