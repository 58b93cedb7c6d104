//! The bundled example automata and worked derivations.

use crate::automata::Automaton;
use crate::textio::{parse_native_named, parse_script, TextError};
use crate::proofkernel::ProofScript;

pub const PAPER_AUT: &str = include_str!("../corpus/paper.aut");

/// `(file name, text)` of every bundled script.
pub const SCRIPTS: [(&str, &str); 4] = [
    ("direct_a2_a1.proof", include_str!("../corpus/direct_a2_a1.proof")),
    ("delay_alt.proof", include_str!("../corpus/delay_alt.proof")),
    ("delay_rinv.proof", include_str!("../corpus/delay_rinv.proof")),
    ("rdelay_sched.proof", include_str!("../corpus/rdelay_sched.proof")),
];

pub fn automata() -> Vec<Automaton> {
    parse_native_named("paper.aut", PAPER_AUT).expect("bundled corpus parses")
}

pub fn automaton(name: &str) -> Option<Automaton> {
    automata().into_iter().find(|a| a.name() == name)
}

pub fn script(file: &str) -> Option<Result<ProofScript, TextError>> {
    SCRIPTS
        .iter()
        .find(|(f, _)| *f == file)
        .map(|(_, text)| parse_script(text))
}
