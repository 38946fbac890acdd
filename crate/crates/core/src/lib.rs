//! Existential rules, the restricted chase, query answering with freezing
//! and resumptions, and magic-sets rewriting.
//!
//! `no_std`; needs `alloc`.

#![no_std]

extern crate alloc;

pub mod chase;
pub mod classify;
mod engine;
pub mod graphs;
pub mod instance;
pub mod magic;
pub mod program;
pub mod schqa;
pub mod term;

pub use chase::{
    certain_answers_via_chase, chase, check_stickiness_bounded, derivation_relation, Budget,
    ChaseError, ChaseResult, ChaseStatus, ChaseStep, ChaseTrace, DerivationRelation,
    StickinessVerdict,
};
pub use classify::{
    check_class, classify, is_jws, is_sticky, is_weakly_acyclic, is_weakly_sticky, mark_variables,
    selection, Class, ClassificationReport, MarkingResult, SelectionFunctionId, UnknownSelection,
    Witness,
};
pub use graphs::{
    build_dependency_graph, build_edg, finite_existential_positions, finite_rank_positions,
    DependencyGraph, Edge, ExVar, ExistentialDependencyGraph, Rank, RankTable,
};
pub use instance::{
    atoms_isomorphic, evaluate_query, find_homomorphisms, iso_key, AtomId, Instance, IsoKey,
    KeyTerm,
};
pub use magic::{
    adorn_query, answers_preserved_check, full_sips, magicd_plus, AdornedProgram, Adornment,
    Binding, MagicError, MagicOptions, PredicateInfo, PredicateRole, PreservationReport,
    QueryAdornment, Sips,
};
pub use program::{
    make_program, normalize_rules, rule_equal_modulo_renaming, rules_equal_modulo_renaming,
    ConjunctiveQuery, ModelError, Program, QueryError, Rule, RuleId, SourceRule,
};
pub use schqa::{
    answer, resume, schqa, AnswerSet, SchqaError, SchqaEvent, SchqaOptions, SchqaState,
};
pub use term::{
    apply_assignment, Assignment, Atom, NullId, Position, Symbol, Term, UnboundVariable,
};
