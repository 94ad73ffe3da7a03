//! Extension points implemented by a model, plus the engine-provided pieces
//! every model shares: the default disambiguation heuristic, influence graph
//! validation and the generic reaction to system influences.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::rng::BehaviorRng;
use crate::state::{
    AgentId, GlobalDynamicState, Influence, InfluenceKind, InteractionGraphs, LevelDynamicState,
    LevelId, Model, Outgoing, StateDynamics, StateError, StateValuation, SystemInfluence,
};
use crate::time::{Interval, Timestamp, TransitoryPeriod, UnionTimeModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    /// Error raised by model code.
    #[error("{0}")]
    Model(String),
    #[error("level {source_level} may not influence level {target}: {influence}")]
    InfluenceGraphViolation {
        source_level: LevelId,
        target: LevelId,
        influence: String,
    },
    #[error("no archived consistent state of level {level} at {at}")]
    MissingArchivedState { level: LevelId, at: Timestamp },
    #[error(transparent)]
    State(#[from] StateError),
}

impl BehaviorError {
    pub fn model(msg: impl Into<String>) -> Self {
        BehaviorError::Model(msg.into())
    }
}

/// Per-call context: who is acting, from which level, over which period, and
/// the random stream reserved for that triple.
#[derive(Debug)]
pub struct Context {
    pub agent: Option<AgentId>,
    pub level: Option<LevelId>,
    pub period: Interval,
    pub rng: BehaviorRng,
}

/// Read-only view of a level's consistent state, as handed to perception
/// and natural actions.
#[derive(Debug)]
pub struct LevelView<'a, M: Model> {
    pub level: LevelId,
    pub as_of: Timestamp,
    pub valuation: &'a StateValuation<M>,
    pub dynamics: &'a StateDynamics<M>,
}

impl<M: Model> Clone for LevelView<'_, M> {
    fn clone(&self) -> Self {
        LevelView {
            level: self.level.clone(),
            as_of: self.as_of,
            valuation: self.valuation,
            dynamics: self.dynamics,
        }
    }
}

/// Views keyed by level, covering exactly `N_P^+` of the perceiving level.
pub type Views<'a, M> = BTreeMap<LevelId, LevelView<'a, M>>;

/// Behavior of one agent from one level.
pub trait AgentBehavior<M: Model>: Send + Sync {
    fn perceive(&self, ctx: &mut Context, views: &Views<'_, M>)
        -> Result<M::Perceived, BehaviorError>;

    fn decide(
        &self,
        ctx: &mut Context,
        global: &M::Global,
        perceived: &M::Perceived,
    ) -> Result<Vec<Outgoing<M>>, BehaviorError>;
}

/// Joint revision of an agent's global state from everything it perceived
/// in the levels starting a period at the current instant.
pub trait GlobalStateReviser<M: Model>: Send + Sync {
    fn revise(
        &self,
        ctx: &mut Context,
        previous: &M::Global,
        perceived: &BTreeMap<LevelId, M::Perceived>,
    ) -> Result<M::Global, BehaviorError>;
}

/// Natural action of the environment of one level.
pub trait EnvironmentNatural<M: Model>: Send + Sync {
    fn natural(&self, ctx: &mut Context, views: &Views<'_, M>)
        -> Result<Vec<Outgoing<M>>, BehaviorError>;
}

/// Reaction of one level to the regular influences of a transitory period.
///
/// The input is transitory over `]t, t+dt[`; system influences have already
/// been applied. The result must be consistent at `t+dt`, and its dynamics
/// hold the influences that persist. [`LevelDynamicState::split_for_reaction`]
/// gives the usual starting point.
pub trait ReactionModel<M: Model>: Send + Sync {
    fn react(
        &self,
        ctx: &mut Context,
        transitory: LevelDynamicState<M>,
    ) -> Result<LevelDynamicState<M>, BehaviorError>;
}

/// Consistent states available to the disambiguation heuristic.
pub struct Archive<'a, M: Model> {
    pub time: &'a UnionTimeModel,
    /// Most recent consistent state of every level.
    pub consistent: &'a BTreeMap<LevelId, LevelDynamicState<M>>,
}

/// Chooses which state of `target` a behavior of `perceiver` observes during
/// `period`.
pub trait Disambiguation<M: Model>: Send + Sync {
    fn view_of<'a>(
        &self,
        perceiver: &LevelId,
        target: &LevelId,
        period: &TransitoryPeriod,
        archive: &Archive<'a, M>,
        transitory: Option<&'a LevelDynamicState<M>>,
    ) -> Result<LevelView<'a, M>, BehaviorError>;
}

/// Behaviors shared by every agent of one kind: one [`AgentBehavior`] per
/// level the agent may lie in, plus its global state reviser.
pub struct AgentTemplate<M: Model> {
    pub reviser: Arc<dyn GlobalStateReviser<M>>,
    pub behaviors: BTreeMap<LevelId, Arc<dyn AgentBehavior<M>>>,
}

impl<M: Model> Clone for AgentTemplate<M> {
    fn clone(&self) -> Self {
        AgentTemplate {
            reviser: Arc::clone(&self.reviser),
            behaviors: self.behaviors.clone(),
        }
    }
}

impl<M: Model> AgentTemplate<M> {
    pub fn new(reviser: impl GlobalStateReviser<M> + 'static) -> Self {
        AgentTemplate {
            reviser: Arc::new(reviser),
            behaviors: BTreeMap::new(),
        }
    }

    pub fn with_behavior(
        mut self,
        level: impl Into<LevelId>,
        behavior: impl AgentBehavior<M> + 'static,
    ) -> Self {
        self.behaviors.insert(level.into(), Arc::new(behavior));
        self
    }
}

/// The most recent consistent state of the target level.
#[derive(Debug, Clone, Copy, Default)]
pub struct MostRecentConsistent;

impl<M: Model> Disambiguation<M> for MostRecentConsistent {
    fn view_of<'a>(
        &self,
        _perceiver: &LevelId,
        target: &LevelId,
        period: &TransitoryPeriod,
        archive: &Archive<'a, M>,
        _transitory: Option<&'a LevelDynamicState<M>>,
    ) -> Result<LevelView<'a, M>, BehaviorError> {
        default_disambiguation(target, period, archive)
    }
}

pub fn default_disambiguation<'a, M: Model>(
    target: &LevelId,
    period: &TransitoryPeriod,
    archive: &Archive<'a, M>,
) -> Result<LevelView<'a, M>, BehaviorError> {
    let at = archive
        .time
        .floor_level(target, period.lower)
        .map_err(|e| BehaviorError::State(e.into()))?;
    match archive.consistent.get(target) {
        Some(state) if state.consistent_at() == Some(at) => Ok(LevelView {
            level: target.clone(),
            as_of: at,
            valuation: &state.valuation,
            dynamics: &state.dynamics,
        }),
        _ => Err(BehaviorError::MissingArchivedState {
            level: target.clone(),
            at,
        }),
    }
}

/// Passes `influences` through when every target lies in `N_I^+(source)`.
pub fn validate_influences<M: Model>(
    source: &LevelId,
    influences: Vec<Outgoing<M>>,
    graphs: &InteractionGraphs,
) -> Result<Vec<Outgoing<M>>, BehaviorError> {
    if let Some(bad) = influences
        .iter()
        .find(|i| !graphs.can_influence(source, &i.target))
    {
        return Err(BehaviorError::InfluenceGraphViolation {
            source_level: source.clone(),
            target: bad.target.clone(),
            influence: format!("{:?}", bad.kind),
        });
    }
    Ok(influences)
}

/// Natural action producing no influence.
#[derive(Debug, Clone, Copy, Default)]
pub struct Inert;

impl<M: Model> EnvironmentNatural<M> for Inert {
    fn natural(&self, _: &mut Context, _: &Views<'_, M>) -> Result<Vec<Outgoing<M>>, BehaviorError> {
        Ok(Vec::new())
    }
}

/// Result of applying the system influences of a transitory state.
#[derive(Debug)]
pub struct SystemReaction<M: Model> {
    /// Still transitory; its dynamics hold only regular influences.
    pub state: LevelDynamicState<M>,
    /// Influences for other levels, to be dispatched by the engine.
    pub synthesized: Vec<Outgoing<M>>,
    /// Agents created, with their template names.
    pub created: Vec<(AgentId, String)>,
    pub removed: Vec<AgentId>,
}

fn system_rank<M: Model>(s: &SystemInfluence<M>) -> (u8, Option<AgentId>) {
    match s {
        SystemInfluence::RemoveAgentFromSimulation(a) => (0, Some(*a)),
        SystemInfluence::RemoveAgentFromLevel { agent, .. } => (1, Some(*agent)),
        SystemInfluence::AddAgentToSimulation(_) => (2, None),
        SystemInfluence::AddAgentToLevel { agent, .. } => (3, Some(*agent)),
    }
}

/// Applies every system influence of `state`: removals from the simulation,
/// then removals from the level, then creations, then additions to the level.
/// Within a class, influences are taken by agent id, then in dynamics order.
///
/// `membership` maps agents to the levels they currently lie in; `next_agent`
/// is the next unused agent id.
pub fn generic_system_reaction<M: Model>(
    state: LevelDynamicState<M>,
    global: &mut GlobalDynamicState<M>,
    membership: &BTreeMap<AgentId, BTreeSet<LevelId>>,
    next_agent: &mut u64,
) -> Result<SystemReaction<M>, StateError> {
    let mut state = state;
    if state.period().is_none() {
        return Err(StateError::NotTransitory(state.level().clone()));
    }
    let level = state.level().clone();
    let (system, regular): (Vec<Influence<M>>, Vec<Influence<M>>) =
        state.dynamics.take().into_iter().partition(Influence::is_system);
    for i in regular {
        state.dynamics.push(i)?;
    }

    // dynamics order is already the provenance order; a stable sort keeps it
    let mut system: Vec<SystemInfluence<M>> = system
        .into_iter()
        .filter_map(|i| match i.kind {
            InfluenceKind::System(s) => Some(s),
            InfluenceKind::Regular(_) => None,
        })
        .collect();
    system.sort_by_key(system_rank);

    let mut out = SystemReaction {
        state,
        synthesized: Vec::new(),
        created: Vec::new(),
        removed: Vec::new(),
    };
    let agents = &mut out.state.valuation.agents;
    for influence in system {
        match influence {
            SystemInfluence::RemoveAgentFromSimulation(agent) => {
                if global.globals.remove(&agent).is_none() {
                    return Err(StateError::UnknownAgent { agent, level });
                }
                agents.remove(&agent);
                for other in membership.get(&agent).into_iter().flatten() {
                    if *other != level {
                        out.synthesized.push(Outgoing::system(
                            other.clone(),
                            SystemInfluence::RemoveAgentFromLevel {
                                agent,
                                level: other.clone(),
                            },
                        ));
                    }
                }
                out.removed.push(agent);
            }
            SystemInfluence::RemoveAgentFromLevel { agent, .. } => {
                if agents.remove(&agent).is_none() {
                    return Err(StateError::UnknownAgent { agent, level });
                }
            }
            SystemInfluence::AddAgentToSimulation(spec) => {
                let agent = AgentId(*next_agent);
                *next_agent += 1;
                global.globals.insert(agent, spec.global);
                for (target, local) in spec.locals {
                    if target == level {
                        if agents.insert(agent, local).is_some() {
                            return Err(StateError::DuplicateMembership { agent, level });
                        }
                    } else {
                        out.synthesized.push(Outgoing::system(
                            target.clone(),
                            SystemInfluence::AddAgentToLevel {
                                agent,
                                level: target,
                                local,
                            },
                        ));
                    }
                }
                out.created.push((agent, spec.kind));
            }
            SystemInfluence::AddAgentToLevel { agent, local, .. } => {
                if !global.is_live(agent) {
                    return Err(StateError::UnknownAgent { agent, level });
                }
                if agents.contains_key(&agent) {
                    return Err(StateError::DuplicateMembership { agent, level });
                }
                agents.insert(agent, local);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{AgentSpec, Emitter, InfluenceId, Provenance, Stamp};
    use crate::time::LevelTimeModel;

    #[derive(Debug, Clone, PartialEq)]
    struct M;

    impl Model for M {
        type Env = ();
        type Local = i64;
        type Global = i64;
        type Regular = i64;
        type Perceived = ();
    }

    fn ts(v: i64) -> Timestamp {
        Timestamp::from_integer(v)
    }

    fn ab() -> UnionTimeModel {
        UnionTimeModel::new([
            LevelTimeModel::every("A", 1, 4).unwrap(),
            LevelTimeModel::every("B", 2, 4).unwrap(),
        ])
        .unwrap()
    }

    fn period(level: &str, lower: i64, upper: i64) -> TransitoryPeriod {
        TransitoryPeriod {
            level: level.into(),
            lower: ts(lower),
            upper: ts(upper),
        }
    }

    fn consistent(level: &str, at: i64, agents: &[u64]) -> LevelDynamicState<M> {
        LevelDynamicState::consistent(
            level.into(),
            (),
            agents.iter().map(|a| (AgentId(*a), 0)).collect(),
            ts(at),
        )
    }

    fn transitory(level: &str, agents: &[u64], influences: Vec<Outgoing<M>>) -> LevelDynamicState<M> {
        let mut s = consistent(level, 0, agents);
        s.stamp = Stamp::TransitoryOver(period(level, 0, 2));
        for (n, o) in influences.into_iter().enumerate() {
            s.dynamics
                .push(Influence::new(
                    o,
                    Provenance {
                        source: level.into(),
                        emitter: Emitter::Environment,
                        period: period(level, 0, 2),
                        seq: InfluenceId(n as u64),
                    },
                ))
                .unwrap();
        }
        s
    }

    fn globals(agents: &[u64]) -> GlobalDynamicState<M> {
        GlobalDynamicState {
            globals: agents.iter().map(|a| (AgentId(*a), 0)).collect(),
        }
    }

    #[test]
    fn default_view_uses_floor() {
        let time = ab();
        let consistent: BTreeMap<_, _> = [consistent("A", 1, &[]), consistent("B", 0, &[])]
            .into_iter()
            .map(|s| (s.level().clone(), s))
            .collect();
        let archive = Archive { time: &time, consistent: &consistent };
        let view = default_disambiguation(&"B".into(), &period("A", 1, 2), &archive).unwrap();
        assert_eq!(view.as_of, ts(0));
        let view = default_disambiguation(&"A".into(), &period("A", 1, 2), &archive).unwrap();
        assert_eq!(view.as_of, ts(1));
        assert_eq!(
            default_disambiguation(&"A".into(), &period("A", 2, 3), &archive).unwrap_err(),
            BehaviorError::MissingArchivedState { level: "A".into(), at: ts(2) }
        );
    }

    #[test]
    fn default_view_at_lower_bound() {
        let time = ab();
        let consistent: BTreeMap<_, _> = [consistent("A", 0, &[]), consistent("B", 0, &[])]
            .into_iter()
            .map(|s| (s.level().clone(), s))
            .collect();
        let archive = Archive { time: &time, consistent: &consistent };
        let view = MostRecentConsistent
            .view_of(&"A".into(), &"B".into(), &period("A", 0, 1), &archive, None)
            .unwrap();
        assert_eq!(view.as_of, ts(0));
    }

    #[test]
    fn influence_graph_validation() {
        let mut g = InteractionGraphs::new(["A".into(), "B".into()]);
        g.add_influence("A", "B").unwrap();
        let only_b = vec![Outgoing::<M>::regular("B", 1)];
        assert_eq!(validate_influences(&"A".into(), only_b.clone(), &g).unwrap(), only_b);
        let err = validate_influences(&"A".into(), vec![Outgoing::<M>::regular("A", 1)], &g).unwrap_err();
        assert!(matches!(err, BehaviorError::InfluenceGraphViolation { ref target, .. } if target.as_str() == "A"));
        g.add_influence("A", "A").unwrap();
        let both = vec![Outgoing::<M>::regular("B", 1), Outgoing::regular("A", 2)];
        assert_eq!(validate_influences(&"A".into(), both.clone(), &g).unwrap(), both);
        assert!(validate_influences::<M>(&"A".into(), vec![], &g).unwrap().is_empty());
    }

    #[test]
    fn add_agent_to_level() {
        let s = transitory(
            "B",
            &[],
            vec![Outgoing::system("B", SystemInfluence::AddAgentToLevel { agent: AgentId(3), level: "B".into(), local: 42 })],
        );
        let mut g = globals(&[3]);
        let out = generic_system_reaction(s, &mut g, &BTreeMap::new(), &mut 4).unwrap();
        assert_eq!(out.state.valuation.agents[&AgentId(3)], 42);
        assert!(out.state.dynamics.is_empty());
    }

    #[test]
    fn duplicate_membership() {
        let s = transitory(
            "B",
            &[3],
            vec![Outgoing::system("B", SystemInfluence::AddAgentToLevel { agent: AgentId(3), level: "B".into(), local: 1 })],
        );
        let err = generic_system_reaction(s, &mut globals(&[3]), &BTreeMap::new(), &mut 4).unwrap_err();
        assert_eq!(err, StateError::DuplicateMembership { agent: AgentId(3), level: "B".into() });
    }

    #[test]
    fn remove_from_simulation_synthesizes_level_removals() {
        // agent 1 lies in A and B; the removal is processed by A's reaction
        let s = transitory("A", &[1, 2], vec![
            Outgoing::regular("A", 5),
            Outgoing::system("A", SystemInfluence::RemoveAgentFromSimulation(AgentId(1))),
        ]);
        let mut g = globals(&[1, 2]);
        let membership = BTreeMap::from([
            (AgentId(1), BTreeSet::from(["A".into(), "B".into()])),
            (AgentId(2), BTreeSet::from(["A".into()])),
        ]);
        let out = generic_system_reaction(s, &mut g, &membership, &mut 3).unwrap();
        assert_eq!(out.state.valuation.agents.keys().copied().collect::<Vec<_>>(), [AgentId(2)]);
        assert_eq!(g.globals.keys().copied().collect::<Vec<_>>(), [AgentId(2)]);
        assert_eq!(
            out.synthesized,
            vec![Outgoing::system("B", SystemInfluence::RemoveAgentFromLevel { agent: AgentId(1), level: "B".into() })]
        );
        assert_eq!(out.state.dynamics.len(), 1);
        assert_eq!(out.removed, [AgentId(1)]);
        let again = transitory("A", &[], vec![Outgoing::system("A", SystemInfluence::RemoveAgentFromSimulation(AgentId(1)))]);
        assert!(matches!(
            generic_system_reaction(again, &mut g, &membership, &mut 3),
            Err(StateError::UnknownAgent { .. })
        ));
    }

    #[test]
    fn removals_precede_additions() {
        // add-then-remove in emission order still ends with the agent present
        let s = transitory("A", &[1], vec![
            Outgoing::system("A", SystemInfluence::AddAgentToLevel { agent: AgentId(1), level: "A".into(), local: 9 }),
            Outgoing::system("A", SystemInfluence::RemoveAgentFromLevel { agent: AgentId(1), level: "A".into() }),
        ]);
        let out = generic_system_reaction(s, &mut globals(&[1]), &BTreeMap::new(), &mut 2).unwrap();
        assert_eq!(out.state.valuation.agents[&AgentId(1)], 9);
    }

    #[test]
    fn creation_allocates_fresh_ids() {
        let spec = AgentSpec::<M> {
            kind: "walker".into(),
            global: 7,
            locals: vec![("A".into(), 1), ("B".into(), 2)],
        };
        let s = transitory("A", &[0], vec![
            Outgoing::system("A", SystemInfluence::AddAgentToSimulation(spec.clone())),
            Outgoing::system("A", SystemInfluence::AddAgentToSimulation(spec)),
        ]);
        let mut g = globals(&[0]);
        let mut next = 5;
        let out = generic_system_reaction(s, &mut g, &BTreeMap::new(), &mut next).unwrap();
        assert_eq!(next, 7);
        assert_eq!(out.created, [(AgentId(5), "walker".to_string()), (AgentId(6), "walker".to_string())]);
        assert_eq!(g.globals[&AgentId(6)], 7);
        assert_eq!(out.state.valuation.agents[&AgentId(5)], 1);
        assert_eq!(out.synthesized.len(), 2);
        assert!(out.synthesized.iter().all(|o| o.target.as_str() == "B"));
    }

    #[test]
    fn idempotent_without_system_influences() {
        let s = transitory("A", &[1], vec![Outgoing::regular("A", 3), Outgoing::regular("A", 4)]);
        let mut g = globals(&[1]);
        let out = generic_system_reaction(s.clone(), &mut g, &BTreeMap::new(), &mut 2).unwrap();
        assert_eq!(out.state, s);
        let again = generic_system_reaction(out.state, &mut g, &BTreeMap::new(), &mut 2).unwrap();
        assert_eq!(again.state, s);
        assert_eq!(g, globals(&[1]));
    }
}
