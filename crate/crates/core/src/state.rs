//! Dynamic state of a multi-level simulation.
//!
//! The full state is split into a level-independent part (agent global
//! states) and one [`LevelDynamicState`] per level, itself the pair of a
//! [`StateValuation`] (environment and agent local states) and a
//! [`StateDynamics`] (pending influences aimed at that level).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::time::{LevelTimeModel, TimeError, Timestamp, TransitoryPeriod};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("unknown level {0}")]
    UnknownLevel(LevelId),
    #[error("influence aimed at undeclared level {0}")]
    UnknownTargetLevel(LevelId),
    #[error("state of level {0} is not consistent")]
    NotConsistent(LevelId),
    #[error("state of level {0} is not transitory")]
    NotTransitory(LevelId),
    #[error("influence for level {target} cannot be stored in the dynamics of level {level}")]
    TargetMismatch { level: LevelId, target: LevelId },
    #[error("agent {agent} is not live (level {level})")]
    UnknownAgent { agent: AgentId, level: LevelId },
    #[error("agent {agent} already lies in level {level}")]
    DuplicateMembership { agent: AgentId, level: LevelId },
    #[error(transparent)]
    Time(#[from] TimeError),
}

/// Name of a level, unique within a simulation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelId(String);

impl LevelId {
    pub fn new(name: impl Into<String>) -> Self {
        LevelId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for LevelId {
    fn from(s: &str) -> Self {
        LevelId(s.to_string())
    }
}

impl From<String> for LevelId {
    fn from(s: String) -> Self {
        LevelId(s)
    }
}

impl fmt::Display for LevelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for LevelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Agent identifier; never reused within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sequence number given to an influence when the engine accepts it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InfluenceId(pub u64);

impl fmt::Display for InfluenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Capabilities required from every model payload.
pub trait Data: Clone + PartialEq + fmt::Debug + Serialize + Send + Sync + 'static {}

impl<T> Data for T where T: Clone + PartialEq + fmt::Debug + Serialize + Send + Sync + 'static {}

/// Binds the payload types of one simulation model.
///
/// Implementors are usually empty marker types:
///
/// ```
/// use levelsim::Model;
///
/// #[derive(Debug, Clone, PartialEq)]
/// struct Traffic;
///
/// impl Model for Traffic {
///     type Env = u32;
///     type Local = i64;
///     type Global = ();
///     type Regular = i64;
///     type Perceived = Vec<i64>;
/// }
/// ```
pub trait Model: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    /// Local state of the environment in one level.
    type Env: Data;
    /// Local state of an agent in one level.
    type Local: Data;
    /// Level-independent state of an agent.
    type Global: Data;
    /// Payload of a regular (model-defined) influence.
    type Regular: Data;
    /// What an agent extracts from its perceptible levels.
    type Perceived: Data;
}

/// Who produced an influence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Emitter {
    Environment,
    Agent(AgentId),
    /// Influences synthesized by the generic system reaction.
    Engine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: LevelId,
    pub emitter: Emitter,
    pub period: TransitoryPeriod,
    pub seq: InfluenceId,
}

/// Initial content of an agent created by an `AddAgentToSimulation` influence.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct AgentSpec<M: Model> {
    /// Name of the agent template holding its behaviors.
    pub kind: String,
    pub global: M::Global,
    pub locals: Vec<(LevelId, M::Local)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub enum SystemInfluence<M: Model> {
    AddAgentToSimulation(AgentSpec<M>),
    RemoveAgentFromSimulation(AgentId),
    AddAgentToLevel {
        agent: AgentId,
        level: LevelId,
        local: M::Local,
    },
    RemoveAgentFromLevel {
        agent: AgentId,
        level: LevelId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub enum InfluenceKind<M: Model> {
    Regular(M::Regular),
    System(SystemInfluence<M>),
}

/// An influence as produced by a behavior, before the engine stamps it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Outgoing<M: Model> {
    pub target: LevelId,
    pub kind: InfluenceKind<M>,
}

impl<M: Model> Outgoing<M> {
    pub fn regular(target: impl Into<LevelId>, payload: M::Regular) -> Self {
        Outgoing {
            target: target.into(),
            kind: InfluenceKind::Regular(payload),
        }
    }

    pub fn system(target: impl Into<LevelId>, influence: SystemInfluence<M>) -> Self {
        Outgoing {
            target: target.into(),
            kind: InfluenceKind::System(influence),
        }
    }
}

/// A pending modification request aimed at exactly one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Influence<M: Model> {
    target: LevelId,
    pub kind: InfluenceKind<M>,
    pub provenance: Provenance,
}

impl<M: Model> Influence<M> {
    pub fn new(outgoing: Outgoing<M>, provenance: Provenance) -> Self {
        Influence {
            target: outgoing.target,
            kind: outgoing.kind,
            provenance,
        }
    }

    pub fn target(&self) -> &LevelId {
        &self.target
    }

    pub fn id(&self) -> InfluenceId {
        self.provenance.seq
    }

    pub fn is_system(&self) -> bool {
        matches!(self.kind, InfluenceKind::System(_))
    }

    pub fn as_regular(&self) -> Option<&M::Regular> {
        match &self.kind {
            InfluenceKind::Regular(r) => Some(r),
            InfluenceKind::System(_) => None,
        }
    }

    fn order_key(&self) -> (&LevelId, Emitter, InfluenceId) {
        (
            &self.provenance.source,
            self.provenance.emitter,
            self.provenance.seq,
        )
    }
}

/// Environment and agent local states of one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct StateValuation<M: Model> {
    pub level: LevelId,
    pub env: M::Env,
    pub agents: BTreeMap<AgentId, M::Local>,
}

/// Influences attached to one level, kept sorted by
/// `(source level, emitter, sequence number)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct StateDynamics<M: Model> {
    level: LevelId,
    influences: Vec<Influence<M>>,
}

impl<M: Model> StateDynamics<M> {
    pub fn new(level: LevelId) -> Self {
        StateDynamics {
            level,
            influences: Vec::new(),
        }
    }

    pub fn level(&self) -> &LevelId {
        &self.level
    }

    pub fn push(&mut self, influence: Influence<M>) -> Result<(), StateError> {
        if influence.target != self.level {
            return Err(StateError::TargetMismatch {
                level: self.level.clone(),
                target: influence.target.clone(),
            });
        }
        let at = self
            .influences
            .partition_point(|i| i.order_key() <= influence.order_key());
        self.influences.insert(at, influence);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Influence<M>> {
        self.influences.iter()
    }

    pub fn len(&self) -> usize {
        self.influences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.influences.is_empty()
    }

    pub fn ids(&self) -> Vec<InfluenceId> {
        self.influences.iter().map(Influence::id).collect()
    }

    pub fn has_system(&self) -> bool {
        self.influences.iter().any(Influence::is_system)
    }

    pub fn take(&mut self) -> Vec<Influence<M>> {
        std::mem::take(&mut self.influences)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stamp {
    ConsistentAt(Timestamp),
    TransitoryOver(TransitoryPeriod),
}

/// `<valuation, dynamics>` of one level, at a tick or over a transitory period.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct LevelDynamicState<M: Model> {
    pub valuation: StateValuation<M>,
    pub dynamics: StateDynamics<M>,
    pub stamp: Stamp,
}

impl<M: Model> LevelDynamicState<M> {
    pub fn consistent(
        level: LevelId,
        env: M::Env,
        agents: BTreeMap<AgentId, M::Local>,
        at: Timestamp,
    ) -> Self {
        LevelDynamicState {
            valuation: StateValuation {
                level: level.clone(),
                env,
                agents,
            },
            dynamics: StateDynamics::new(level),
            stamp: Stamp::ConsistentAt(at),
        }
    }

    pub fn level(&self) -> &LevelId {
        &self.valuation.level
    }

    pub fn consistent_at(&self) -> Option<Timestamp> {
        match self.stamp {
            Stamp::ConsistentAt(t) => Some(t),
            Stamp::TransitoryOver(_) => None,
        }
    }

    pub fn period(&self) -> Option<&TransitoryPeriod> {
        match &self.stamp {
            Stamp::TransitoryOver(p) => Some(p),
            Stamp::ConsistentAt(_) => None,
        }
    }

    /// Independent copy stamped over the period this consistent state opens.
    /// Persistent influences travel with the copy.
    pub fn snapshot_consistent(&self, model: &LevelTimeModel) -> Result<Self, StateError> {
        let at = self
            .consistent_at()
            .ok_or_else(|| StateError::NotConsistent(self.level().clone()))?;
        let mut copy = self.clone();
        copy.stamp = Stamp::TransitoryOver(model.period_from(at)?);
        Ok(copy)
    }

    /// Splits a transitory state into the skeleton of the next consistent
    /// state (same valuation, empty dynamics, stamped at the period's upper
    /// bound) and the influences to react to.
    pub fn split_for_reaction(mut self) -> Result<(Self, Vec<Influence<M>>), StateError> {
        let upper = match &self.stamp {
            Stamp::TransitoryOver(p) => p.upper,
            Stamp::ConsistentAt(_) => return Err(StateError::NotTransitory(self.level().clone())),
        };
        let influences = self.dynamics.take();
        self.stamp = Stamp::ConsistentAt(upper);
        Ok((self, influences))
    }

    pub fn contains_agent(&self, agent: AgentId) -> bool {
        self.valuation.agents.contains_key(&agent)
    }
}

/// Global states of all live agents.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
#[serde(transparent)]
pub struct GlobalDynamicState<M: Model> {
    pub globals: BTreeMap<AgentId, M::Global>,
}

impl<M: Model> Default for GlobalDynamicState<M> {
    fn default() -> Self {
        GlobalDynamicState {
            globals: BTreeMap::new(),
        }
    }
}

impl<M: Model> GlobalDynamicState<M> {
    pub fn is_live(&self, agent: AgentId) -> bool {
        self.globals.contains_key(&agent)
    }
}

/// The dynamic state of the whole simulation: global part plus one state per level.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct DynamicState<M: Model> {
    pub global: GlobalDynamicState<M>,
    pub levels: BTreeMap<LevelId, LevelDynamicState<M>>,
}

impl<M: Model> DynamicState<M> {
    pub fn from_parts(
        global: GlobalDynamicState<M>,
        levels: impl IntoIterator<Item = LevelDynamicState<M>>,
    ) -> Self {
        DynamicState {
            global,
            levels: levels
                .into_iter()
                .map(|s| (s.level().clone(), s))
                .collect(),
        }
    }

    pub fn into_parts(self) -> (GlobalDynamicState<M>, Vec<LevelDynamicState<M>>) {
        (self.global, self.levels.into_values().collect())
    }

    /// Human-readable canonical document: levels by name, agents by id,
    /// rationals as `num/den`.
    pub fn canonical_text(&self) -> String {
        canonical_pretty(self)
    }
}

/// Levels each agent lies in, according to the given level states.
pub fn memberships<'a, M: Model>(
    states: impl IntoIterator<Item = &'a LevelDynamicState<M>>,
) -> BTreeMap<AgentId, BTreeSet<LevelId>> {
    let mut out: BTreeMap<AgentId, BTreeSet<LevelId>> = BTreeMap::new();
    for state in states {
        for agent in state.valuation.agents.keys() {
            out.entry(*agent).or_default().insert(state.level().clone());
        }
    }
    out
}

/// Appends an influence to the transitory dynamics of its target level.
pub fn dispatch<M: Model>(
    influence: Influence<M>,
    transitory: &mut BTreeMap<LevelId, LevelDynamicState<M>>,
) -> Result<(), StateError> {
    let state = transitory
        .get_mut(influence.target())
        .ok_or_else(|| StateError::UnknownTargetLevel(influence.target().clone()))?;
    if state.period().is_none() {
        return Err(StateError::NotTransitory(state.level().clone()));
    }
    state.dynamics.push(influence)
}

/// Perception (`G_P`) and influence (`G_I`) relations between levels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InteractionGraphs {
    levels: BTreeSet<LevelId>,
    perception: BTreeSet<(LevelId, LevelId)>,
    influence: BTreeSet<(LevelId, LevelId)>,
}

impl InteractionGraphs {
    pub fn new(levels: impl IntoIterator<Item = LevelId>) -> Self {
        InteractionGraphs {
            levels: levels.into_iter().collect(),
            ..Default::default()
        }
    }

    /// Every level perceives and influences every level, itself included.
    pub fn complete(levels: impl IntoIterator<Item = LevelId>) -> Self {
        let mut g = InteractionGraphs::new(levels);
        let pairs: Vec<_> = g
            .levels
            .iter()
            .flat_map(|a| g.levels.iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        g.perception = pairs.iter().cloned().collect();
        g.influence = pairs.into_iter().collect();
        g
    }

    fn check(&self, level: &LevelId) -> Result<(), StateError> {
        if self.levels.contains(level) {
            Ok(())
        } else {
            Err(StateError::UnknownLevel(level.clone()))
        }
    }

    pub fn add_perception(
        &mut self,
        from: impl Into<LevelId>,
        to: impl Into<LevelId>,
    ) -> Result<&mut Self, StateError> {
        let (from, to) = (from.into(), to.into());
        self.check(&from)?;
        self.check(&to)?;
        self.perception.insert((from, to));
        Ok(self)
    }

    pub fn add_influence(
        &mut self,
        from: impl Into<LevelId>,
        to: impl Into<LevelId>,
    ) -> Result<&mut Self, StateError> {
        let (from, to) = (from.into(), to.into());
        self.check(&from)?;
        self.check(&to)?;
        self.influence.insert((from, to));
        Ok(self)
    }

    pub fn levels(&self) -> &BTreeSet<LevelId> {
        &self.levels
    }

    pub fn perception_edges(&self) -> impl Iterator<Item = &(LevelId, LevelId)> {
        self.perception.iter()
    }

    pub fn influence_edges(&self) -> impl Iterator<Item = &(LevelId, LevelId)> {
        self.influence.iter()
    }

    fn out_of(
        &self,
        rel: &BTreeSet<(LevelId, LevelId)>,
        level: &LevelId,
    ) -> Result<BTreeSet<LevelId>, StateError> {
        self.check(level)?;
        Ok(rel
            .iter()
            .filter(|(from, _)| from == level)
            .map(|(_, to)| to.clone())
            .collect())
    }

    /// `N_P^+(level)`: levels perceptible from `level`.
    pub fn out_perception(&self, level: &LevelId) -> Result<BTreeSet<LevelId>, StateError> {
        self.out_of(&self.perception, level)
    }

    /// `N_I^+(level)`: levels `level` may influence.
    pub fn out_influence(&self, level: &LevelId) -> Result<BTreeSet<LevelId>, StateError> {
        self.out_of(&self.influence, level)
    }

    pub fn can_influence(&self, from: &LevelId, to: &LevelId) -> bool {
        self.influence.contains(&(from.clone(), to.clone()))
    }
}

/// Compact canonical JSON of a serializable value.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("model payloads must serialize to JSON")
}

/// Indented canonical JSON, used for state dumps.
pub fn canonical_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("model payloads must serialize to JSON")
}

/// Hex SHA-256 of the canonical serialization.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    hex::encode(Sha256::digest(canonical_json(value).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct M;

    impl Model for M {
        type Env = i64;
        type Local = i64;
        type Global = i64;
        type Regular = i64;
        type Perceived = i64;
    }

    fn ts(v: i64) -> Timestamp {
        Timestamp::from_integer(v)
    }

    fn period(level: &str, lower: i64, upper: i64) -> TransitoryPeriod {
        TransitoryPeriod {
            level: level.into(),
            lower: ts(lower),
            upper: ts(upper),
        }
    }

    fn influence(target: &str, source: &str, emitter: Emitter, seq: u64, v: i64) -> Influence<M> {
        Influence::new(
            Outgoing::regular(target, v),
            Provenance {
                source: source.into(),
                emitter,
                period: period(source, 0, 1),
                seq: InfluenceId(seq),
            },
        )
    }

    fn state_with_agents(level: &str, n: u64) -> LevelDynamicState<M> {
        LevelDynamicState::consistent(
            level.into(),
            100,
            (0..n).map(|a| (AgentId(a), a as i64 * 10)).collect(),
            ts(0),
        )
    }

    fn graphs() -> InteractionGraphs {
        let mut g = InteractionGraphs::new(["A".into(), "B".into()]);
        g.add_perception("A", "A").unwrap();
        g.add_perception("A", "B").unwrap();
        g.add_perception("B", "B").unwrap();
        g
    }

    #[test]
    fn out_neighborhoods() {
        let g = graphs();
        let names = |s: BTreeSet<LevelId>| s.into_iter().map(|l| l.to_string()).collect::<Vec<_>>();
        assert_eq!(names(g.out_perception(&"A".into()).unwrap()), ["A", "B"]);
        assert_eq!(names(g.out_perception(&"B".into()).unwrap()), ["B"]);
        assert!(g.out_influence(&"A".into()).unwrap().is_empty());
        assert_eq!(
            g.out_perception(&"Z".into()),
            Err(StateError::UnknownLevel("Z".into()))
        );
        let mut g = graphs();
        assert!(g.add_influence("A", "Z").is_err());
    }

    #[test]
    fn snapshot_is_independent() {
        let model = LevelTimeModel::every("A", 1, 2).unwrap();
        let original = state_with_agents("A", 3);
        let mut copy = original.snapshot_consistent(&model).unwrap();
        assert_eq!(copy.valuation, original.valuation);
        assert_eq!(copy.period(), Some(&period("A", 0, 1)));
        copy.valuation.env = -1;
        copy.valuation.agents.remove(&AgentId(0));
        assert_eq!(original.valuation.env, 100);
        assert_eq!(original.valuation.agents.len(), 3);
        assert_eq!(
            copy.snapshot_consistent(&model),
            Err(StateError::NotConsistent("A".into()))
        );
    }

    #[test]
    fn snapshot_carries_persistent_influences() {
        let model = LevelTimeModel::every("A", 1, 2).unwrap();
        let mut s = state_with_agents("A", 1);
        s.dynamics.push(influence("A", "A", Emitter::Environment, 4, 1)).unwrap();
        s.dynamics.push(influence("A", "B", Emitter::Agent(AgentId(0)), 2, 2)).unwrap();
        let copy = s.snapshot_consistent(&model).unwrap();
        assert_eq!(copy.dynamics.ids(), s.dynamics.ids());
    }

    #[test]
    fn dynamics_order_and_target_check() {
        let mut d = StateDynamics::<M>::new("A".into());
        d.push(influence("A", "B", Emitter::Environment, 1, 0)).unwrap();
        d.push(influence("A", "A", Emitter::Agent(AgentId(3)), 5, 0)).unwrap();
        d.push(influence("A", "A", Emitter::Agent(AgentId(1)), 9, 0)).unwrap();
        d.push(influence("A", "A", Emitter::Environment, 7, 0)).unwrap();
        assert_eq!(d.ids(), [InfluenceId(7), InfluenceId(9), InfluenceId(5), InfluenceId(1)]);
        assert!(matches!(
            d.push(influence("B", "A", Emitter::Environment, 2, 0)),
            Err(StateError::TargetMismatch { .. })
        ));
    }

    #[test]
    fn dispatch_routes_to_target() {
        let model = LevelTimeModel::every("A", 1, 2).unwrap();
        let bmodel = LevelTimeModel::every("B", 2, 2).unwrap();
        let mut transitory = BTreeMap::new();
        transitory.insert("A".into(), state_with_agents("A", 1).snapshot_consistent(&model).unwrap());
        transitory.insert("B".into(), state_with_agents("B", 1).snapshot_consistent(&bmodel).unwrap());
        dispatch(influence("B", "A", Emitter::Agent(AgentId(0)), 0, 1), &mut transitory).unwrap();
        dispatch(influence("A", "A", Emitter::Agent(AgentId(0)), 1, 1), &mut transitory).unwrap();
        assert_eq!(transitory[&LevelId::from("B")].dynamics.ids(), [InfluenceId(0)]);
        assert_eq!(transitory[&LevelId::from("A")].dynamics.ids(), [InfluenceId(1)]);
        assert_eq!(
            dispatch(influence("C", "A", Emitter::Environment, 2, 1), &mut transitory),
            Err(StateError::UnknownTargetLevel("C".into()))
        );
    }

    #[test]
    fn split_for_reaction_restamps() {
        let model = LevelTimeModel::every("A", 1, 2).unwrap();
        let mut t = state_with_agents("A", 1).snapshot_consistent(&model).unwrap();
        t.dynamics.push(influence("A", "A", Emitter::Environment, 0, 1)).unwrap();
        let (next, influences) = t.split_for_reaction().unwrap();
        assert_eq!(next.stamp, Stamp::ConsistentAt(ts(1)));
        assert!(next.dynamics.is_empty());
        assert_eq!(influences.len(), 1);
        assert!(next.split_for_reaction().is_err());
    }

    #[test]
    fn canonical_text_layout() {
        let mut global = GlobalDynamicState::<M>::default();
        global.globals.insert(AgentId(10), 1);
        global.globals.insert(AgentId(2), 2);
        let state = DynamicState::from_parts(global, [state_with_agents("B", 1), state_with_agents("A", 2)]);
        let text = state.canonical_text();
        assert!(text.find("\"A\"").unwrap() < text.find("\"B\"").unwrap());
        assert!(text.find("\"2\"").unwrap() < text.find("\"10\"").unwrap());
        assert!(text.contains("\"0/1\""));
        let (g, levels) = state.clone().into_parts();
        assert_eq!(DynamicState::from_parts(g, levels).canonical_text(), text);
    }

    #[test]
    fn membership_symmetry() {
        let a = state_with_agents("A", 2);
        let b = state_with_agents("B", 1);
        let m = memberships([&a, &b]);
        assert_eq!(m[&AgentId(0)].len(), 2);
        assert_eq!(m[&AgentId(1)], BTreeSet::from(["A".into()]));
    }
}
