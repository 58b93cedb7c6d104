//! Fairness-preserving simulations for Büchi automata.
//!
//! * [`automata`]: automata, lassos, membership and emptiness;
//! * [`fixrel`]: pair relations and fixpoint iteration;
//! * [`simulations`]: the simulation relations and certificate checks;
//! * [`oracle`]: exact inclusion via complementation;
//! * [`proofkernel`]: goals, rules, scripts and proof search;
//! * [`textio`]: the automaton DSL, HOA import, DOT export, script format.
//! * [`corpus`]: the bundled example automata and scripts.

pub mod automata;
pub mod corpus;
pub mod fixrel;
mod graph;
pub mod oracle;
pub mod proofkernel;
pub mod simulations;
pub mod textio;

pub use automata::{Automaton, AutomatonDef, AutomatonError, Emptiness, EventId, Lasso, StateId};
pub use fixrel::{PairRel, PairUniverse};
pub use simulations::{SimContext, SimError, SimKind};
