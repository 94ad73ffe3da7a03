//! The scheduler.
//!
//! Each iteration at union tick `t`:
//!
//! 1. every level whose transitory period ends at `t` reacts (generic system
//!    reaction, then the model reaction) and opens its next period;
//! 2. revised global states become the current global states;
//! 3. the levels opening a period at `t` are selected;
//! 4. agents of those levels perceive the most recent consistent states of
//!    their perceptible levels;
//! 5. every agent that perceived revises its global state once;
//! 6. natural actions and decisions produce influences, checked against the
//!    influence graph;
//! 7. influences are dispatched to the transitory state of their target;
//! 8. `t` moves to the next union tick.
//!
//! When `t` reaches the final tick, a last reaction pass commits the final
//! consistent states.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::behaviors::{
    generic_system_reaction, validate_influences, AgentTemplate, Archive, BehaviorError, Context,
    Disambiguation, EnvironmentNatural, MostRecentConsistent, ReactionModel, Views,
};
use crate::rng::{stream, StreamOwner};
use crate::state::{
    canonical_pretty, digest, dispatch, memberships, AgentId, DynamicState, Emitter, GlobalDynamicState, Influence,
    InfluenceId, InteractionGraphs, LevelDynamicState, LevelId, Model, Outgoing, Provenance, Stamp,
    StateError,
};
use crate::time::{Interval, LevelTimeModel, TimeError, Timestamp, TransitoryPeriod, UnionTimeModel};
use crate::trace::{EventKind, Trace, TraceError, TraceEvent, TraceHeader};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Perception,
    Revision,
    Decision,
    Natural,
    Reaction,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid simulation definition: {0}")]
    Definition(String),
    #[error("{phase:?} failed in level {level:?} over {period} (agent {agent:?}): {source}")]
    Behavior {
        phase: Phase,
        level: Option<LevelId>,
        period: Interval,
        agent: Option<AgentId>,
        #[source]
        source: BehaviorError,
    },
    #[error("reaction of level {level} over {period} broke its contract: {msg}")]
    ReactionContract {
        level: LevelId,
        period: Interval,
        msg: String,
    },
    #[error("agent {agent} of kind {kind:?} has no behavior for level {level}")]
    Unbound {
        agent: AgentId,
        kind: String,
        level: LevelId,
    },
    #[error("{0} is not a union tick")]
    NotAUnionTick(Timestamp),
    #[error("the simulation already reached its final tick")]
    Finished,
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

struct LevelSetup<M: Model> {
    env: M::Env,
    reaction: Arc<dyn ReactionModel<M>>,
    natural: Arc<dyn EnvironmentNatural<M>>,
}

struct InitialAgent<M: Model> {
    kind: String,
    global: M::Global,
    locals: BTreeMap<LevelId, M::Local>,
}

/// A validated simulation: levels with their time models, graphs, initial
/// state, behaviors and seed.
pub struct SimulationDefinition<M: Model> {
    time: UnionTimeModel,
    graphs: InteractionGraphs,
    levels: BTreeMap<LevelId, LevelSetup<M>>,
    agents: BTreeMap<AgentId, InitialAgent<M>>,
    templates: BTreeMap<String, AgentTemplate<M>>,
    disambiguation: Arc<dyn Disambiguation<M>>,
    seed: u64,
}

impl<M: Model> SimulationDefinition<M> {
    pub fn builder() -> SimulationBuilder<M> {
        SimulationBuilder::default()
    }

    pub fn time(&self) -> &UnionTimeModel {
        &self.time
    }

    pub fn graphs(&self) -> &InteractionGraphs {
        &self.graphs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn set_disambiguation(&mut self, heuristic: impl Disambiguation<M> + 'static) {
        self.disambiguation = Arc::new(heuristic);
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Initial consistent state at `min(T)`.
    pub fn initial_state(&self) -> DynamicState<M> {
        let min = self.time.min();
        let levels = self.levels.iter().map(|(id, setup)| {
            let agents = self
                .agents
                .iter()
                .filter_map(|(a, init)| init.locals.get(id).map(|l| (*a, l.clone())))
                .collect();
            LevelDynamicState::consistent(id.clone(), setup.env.clone(), agents, min)
        });
        let global = GlobalDynamicState {
            globals: self
                .agents
                .iter()
                .map(|(a, init)| (*a, init.global.clone()))
                .collect(),
        };
        DynamicState::from_parts(global, levels)
    }
}

/// Assembles a [`SimulationDefinition`]; every check happens in [`build`](Self::build).
pub struct SimulationBuilder<M: Model> {
    time_models: Vec<LevelTimeModel>,
    perception: Vec<(LevelId, LevelId)>,
    influence: Vec<(LevelId, LevelId)>,
    levels: Vec<(LevelId, LevelSetup<M>)>,
    agents: BTreeMap<AgentId, InitialAgent<M>>,
    placements: Vec<(AgentId, LevelId, M::Local)>,
    templates: BTreeMap<String, AgentTemplate<M>>,
    disambiguation: Arc<dyn Disambiguation<M>>,
    seed: u64,
    next_agent: u64,
}

impl<M: Model> Default for SimulationBuilder<M> {
    fn default() -> Self {
        SimulationBuilder {
            time_models: Vec::new(),
            perception: Vec::new(),
            influence: Vec::new(),
            levels: Vec::new(),
            agents: BTreeMap::new(),
            placements: Vec::new(),
            templates: BTreeMap::new(),
            disambiguation: Arc::new(MostRecentConsistent),
            seed: 0,
            next_agent: 0,
        }
    }
}

impl<M: Model> SimulationBuilder<M> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a level with its time model, initial environment state,
    /// reaction and natural action.
    pub fn level(
        &mut self,
        time_model: LevelTimeModel,
        env: M::Env,
        reaction: impl ReactionModel<M> + 'static,
        natural: impl EnvironmentNatural<M> + 'static,
    ) -> &mut Self {
        self.levels.push((
            time_model.level().clone(),
            LevelSetup {
                env,
                reaction: Arc::new(reaction),
                natural: Arc::new(natural),
            },
        ));
        self.time_models.push(time_model);
        self
    }

    pub fn perceives(&mut self, from: impl Into<LevelId>, to: impl Into<LevelId>) -> &mut Self {
        self.perception.push((from.into(), to.into()));
        self
    }

    pub fn influences(&mut self, from: impl Into<LevelId>, to: impl Into<LevelId>) -> &mut Self {
        self.influence.push((from.into(), to.into()));
        self
    }

    /// Adds the edges of an existing graph pair.
    pub fn graphs(&mut self, graphs: &InteractionGraphs) -> &mut Self {
        self.perception.extend(graphs.perception_edges().cloned());
        self.influence.extend(graphs.influence_edges().cloned());
        self
    }

    /// Every declared level perceives and influences every level.
    pub fn complete_graphs(&mut self) -> &mut Self {
        let ids: Vec<LevelId> = self.levels.iter().map(|(id, _)| id.clone()).collect();
        for a in &ids {
            for b in &ids {
                self.perceives(a.clone(), b.clone());
                self.influences(a.clone(), b.clone());
            }
        }
        self
    }

    pub fn template(&mut self, kind: impl Into<String>, template: AgentTemplate<M>) -> &mut Self {
        self.templates.insert(kind.into(), template);
        self
    }

    /// Creates an agent with the given template and global state; place it
    /// in levels with [`place`](Self::place).
    pub fn agent(&mut self, kind: impl Into<String>, global: M::Global) -> AgentId {
        let id = AgentId(self.next_agent);
        self.next_agent += 1;
        self.agents.insert(
            id,
            InitialAgent {
                kind: kind.into(),
                global,
                locals: BTreeMap::new(),
            },
        );
        id
    }

    pub fn place(&mut self, agent: AgentId, level: impl Into<LevelId>, local: M::Local) -> &mut Self {
        self.placements.push((agent, level.into(), local));
        self
    }

    pub fn disambiguation(&mut self, heuristic: impl Disambiguation<M> + 'static) -> &mut Self {
        self.disambiguation = Arc::new(heuristic);
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seed = seed;
        self
    }

    pub fn build(self) -> Result<SimulationDefinition<M>, EngineError> {
        let bad = |msg: String| EngineError::Definition(msg);
        let time = UnionTimeModel::new(self.time_models).map_err(|e| bad(e.to_string()))?;
        let mut levels = BTreeMap::new();
        for (id, setup) in self.levels {
            levels.insert(id, setup);
        }
        let mut graphs = InteractionGraphs::new(levels.keys().cloned());
        for (from, to) in self.perception {
            graphs
                .add_perception(from.clone(), to.clone())
                .map_err(|_| bad(format!("perception edge ({from}, {to}) references an unknown level")))?;
        }
        for (from, to) in self.influence {
            graphs
                .add_influence(from.clone(), to.clone())
                .map_err(|_| bad(format!("influence edge ({from}, {to}) references an unknown level")))?;
        }
        let mut agents = self.agents;
        for (agent, level, local) in self.placements {
            if !levels.contains_key(&level) {
                return Err(bad(format!("agent {agent} placed in unknown level {level}")));
            }
            let init = agents
                .get_mut(&agent)
                .ok_or_else(|| bad(format!("placement of unknown agent {agent}")))?;
            if init.locals.insert(level.clone(), local).is_some() {
                return Err(bad(format!("agent {agent} placed twice in level {level}")));
            }
        }
        for (agent, init) in &agents {
            let template = self.templates.get(&init.kind).ok_or_else(|| {
                bad(format!("agent {agent} uses undeclared template {:?}", init.kind))
            })?;
            for level in init.locals.keys() {
                if !template.behaviors.contains_key(level) {
                    return Err(bad(format!(
                        "agent {agent} lies in level {level} but template {:?} has no behavior bound to it",
                        init.kind
                    )));
                }
            }
        }
        for (kind, template) in &self.templates {
            if let Some(level) = template.behaviors.keys().find(|l| !levels.contains_key(*l)) {
                return Err(bad(format!("template {kind:?} binds unknown level {level}")));
            }
        }
        Ok(SimulationDefinition {
            time,
            graphs,
            levels,
            agents,
            templates: self.templates,
            disambiguation: self.disambiguation,
            seed: self.seed,
        })
    }
}

/// Outcome of a complete run.
#[derive(Debug)]
pub struct RunReport<M: Model> {
    /// Consistent at the final tick for every level.
    pub final_state: DynamicState<M>,
    pub trace: Trace,
    /// Canonical state documents captured at the requested ticks.
    pub dumps: Vec<(Timestamp, String)>,
    pub duration: Duration,
}

impl<M: Model> RunReport<M> {
    pub fn counts(&self) -> BTreeMap<(EventKind, Option<LevelId>), usize> {
        self.trace.counts()
    }

    pub fn reactions(&self, level: &str) -> usize {
        self.trace.count(EventKind::ReactionEnd, Some(level))
    }
}

/// Borrowed view serializing exactly like [`DynamicState`].
#[derive(Serialize)]
#[serde(bound = "")]
struct StateRef<'a, M: Model> {
    global: &'a GlobalDynamicState<M>,
    levels: &'a BTreeMap<LevelId, LevelDynamicState<M>>,
}

#[derive(Default)]
struct Recorder {
    events: Vec<TraceEvent>,
}

impl Recorder {
    fn record(&mut self, mut event: TraceEvent) {
        event.seq = self.events.len() as u64;
        log::trace!("{:?} t={} level={:?} agent={:?}", event.kind, event.time, event.level, event.agent);
        self.events.push(event);
    }
}

struct Pending<M: Model> {
    agent: AgentId,
    level: LevelId,
    ctx: Context,
    perceived: M::Perceived,
}

/// Runs one simulation. Not reentrant: one engine per run.
pub struct Engine<M: Model> {
    def: SimulationDefinition<M>,
    t: Timestamp,
    /// Most recent consistent dynamic state of each level.
    consistent: BTreeMap<LevelId, LevelDynamicState<M>>,
    /// Next transitory state of each level; absent once a level committed its final state.
    transitory: BTreeMap<LevelId, LevelDynamicState<M>>,
    periods: BTreeMap<LevelId, TransitoryPeriod>,
    /// Most recent consistent global states.
    memory: GlobalDynamicState<M>,
    /// Most recent revised global states.
    revised: GlobalDynamicState<M>,
    kinds: BTreeMap<AgentId, String>,
    next_agent: u64,
    next_influence: u64,
    recorder: Recorder,
    dump_at: BTreeSet<Timestamp>,
    dumps: Vec<(Timestamp, String)>,
    finished: bool,
}

impl<M: Model> Engine<M> {
    /// Sets `t` to `min(T)` and opens the first transitory period of every level.
    pub fn new(def: SimulationDefinition<M>) -> Result<Self, EngineError> {
        let t = def.time.min();
        let initial = def.initial_state();
        let mut transitory = BTreeMap::new();
        let mut periods = BTreeMap::new();
        for (id, state) in &initial.levels {
            let model = def.time.level(id)?;
            transitory.insert(id.clone(), state.snapshot_consistent(model)?);
            periods.insert(id.clone(), model.period_from(t)?);
        }
        let kinds = def
            .agents
            .iter()
            .map(|(a, init)| (*a, init.kind.clone()))
            .collect();
        let next_agent = def.agents.keys().next_back().map_or(0, |a| a.0 + 1);
        Ok(Engine {
            t,
            consistent: initial.levels,
            transitory,
            periods,
            revised: initial.global.clone(),
            memory: initial.global,
            kinds,
            next_agent,
            next_influence: 0,
            recorder: Recorder::default(),
            dump_at: BTreeSet::new(),
            dumps: Vec::new(),
            finished: false,
            def,
        })
    }

    /// Captures the canonical state document at each of `ticks`, right after
    /// that tick's reactions.
    pub fn dump_at(&mut self, ticks: impl IntoIterator<Item = Timestamp>) -> Result<&mut Self, EngineError> {
        for t in ticks {
            if !self.def.time.contains(t) {
                return Err(EngineError::NotAUnionTick(t));
            }
            self.dump_at.insert(t);
        }
        Ok(self)
    }

    pub fn time(&self) -> Timestamp {
        self.t
    }

    pub fn definition(&self) -> &SimulationDefinition<M> {
        &self.def
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn consistent(&self, level: &LevelId) -> Option<&LevelDynamicState<M>> {
        self.consistent.get(level)
    }

    pub fn transitory(&self, level: &LevelId) -> Option<&LevelDynamicState<M>> {
        self.transitory.get(level)
    }

    pub fn period(&self, level: &LevelId) -> Option<&TransitoryPeriod> {
        self.periods.get(level)
    }

    pub fn memory(&self) -> &GlobalDynamicState<M> {
        &self.memory
    }

    pub fn revised(&self) -> &GlobalDynamicState<M> {
        &self.revised
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.recorder.events
    }

    /// Current (possibly half-consistent) dynamic state: global states plus
    /// the most recent consistent state of each level.
    pub fn state(&self) -> DynamicState<M> {
        DynamicState {
            global: self.memory.clone(),
            levels: self.consistent.clone(),
        }
    }

    pub fn trace(&self) -> Trace {
        Trace {
            header: TraceHeader::new(&self.def.time, &self.def.graphs, self.def.seed),
            events: self.recorder.events.clone(),
        }
    }

    /// Writes the trace recorded so far as newline-delimited JSON.
    pub fn emit_trace<W: std::io::Write>(&self, sink: W) -> Result<(), TraceError> {
        self.trace().write_ndjson(sink)
    }

    fn alloc_influence(&mut self) -> InfluenceId {
        let id = InfluenceId(self.next_influence);
        self.next_influence += 1;
        id
    }

    /// One iteration of the main loop at the current tick.
    pub fn step(&mut self) -> Result<(), EngineError> {
        if self.finished || self.t == self.def.time.max() {
            return Err(EngineError::Finished);
        }
        let t = self.t;
        self.react_due()?;

        let starting: Vec<LevelId> = self
            .periods
            .iter()
            .filter(|(_, p)| p.lower == t)
            .map(|(l, _)| l.clone())
            .collect();
        debug_assert_eq!(
            starting.iter().cloned().collect::<BTreeSet<_>>(),
            self.def.time.levels_starting_at(t)?
        );
        let union_period = Interval {
            lower: t,
            upper: self.def.time.successor(t)?,
        };
        let seed = self.def.seed;

        let archive = Archive {
            time: &self.def.time,
            consistent: &self.consistent,
        };
        let mut views: BTreeMap<LevelId, Views<'_, M>> = BTreeMap::new();
        for level in &starting {
            let period = &self.periods[level];
            let mut level_views = Views::new();
            for target in self.def.graphs.out_perception(level)? {
                let view = self
                    .def
                    .disambiguation
                    .view_of(level, &target, period, &archive, self.transitory.get(&target))
                    .map_err(|source| EngineError::Behavior {
                        phase: Phase::Perception,
                        level: Some(level.clone()),
                        period: period.interval(),
                        agent: None,
                        source,
                    })?;
                level_views.insert(target, view);
            }
            views.insert(level.clone(), level_views);
        }

        // perception
        let mut pending: Vec<Pending<M>> = Vec::new();
        for level in &starting {
            let period = self.periods[level].interval();
            let level_views = &views[level];
            let anchors: BTreeMap<LevelId, Timestamp> =
                level_views.iter().map(|(k, v)| (k.clone(), v.as_of)).collect();
            for agent in self.consistent[level].valuation.agents.keys() {
                if !self.memory.is_live(*agent) {
                    continue;
                }
                let kind = &self.kinds[agent];
                let behavior = self.def.templates[kind]
                    .behaviors
                    .get(level)
                    .ok_or_else(|| EngineError::Unbound {
                        agent: *agent,
                        kind: kind.clone(),
                        level: level.clone(),
                    })?;
                let mut ctx = Context {
                    agent: Some(*agent),
                    level: Some(level.clone()),
                    period,
                    rng: stream(seed, StreamOwner::Agent(*agent), Some(level), &period),
                };
                let perceived = behavior.perceive(&mut ctx, level_views).map_err(|source| {
                    EngineError::Behavior {
                        phase: Phase::Perception,
                        level: Some(level.clone()),
                        period,
                        agent: Some(*agent),
                        source,
                    }
                })?;
                let mut ev = TraceEvent::new(EventKind::Perception, t, digest(&perceived));
                ev.level = Some(level.clone());
                ev.agent = Some(*agent);
                ev.period = Some(period);
                ev.anchors = Some(anchors.clone());
                self.recorder.record(ev);
                pending.push(Pending {
                    agent: *agent,
                    level: level.clone(),
                    ctx,
                    perceived,
                });
            }
        }

        // joint global state revision
        let mut by_agent: BTreeMap<AgentId, BTreeMap<LevelId, M::Perceived>> = BTreeMap::new();
        for p in &pending {
            by_agent
                .entry(p.agent)
                .or_default()
                .insert(p.level.clone(), p.perceived.clone());
        }
        for (agent, perceived) in &by_agent {
            let reviser = &self.def.templates[&self.kinds[agent]].reviser;
            let mut ctx = Context {
                agent: Some(*agent),
                level: None,
                period: union_period,
                rng: stream(seed, StreamOwner::Agent(*agent), None, &union_period),
            };
            let revised = reviser
                .revise(&mut ctx, &self.memory.globals[agent], perceived)
                .map_err(|source| EngineError::Behavior {
                    phase: Phase::Revision,
                    level: None,
                    period: union_period,
                    agent: Some(*agent),
                    source,
                })?;
            let mut ev = TraceEvent::new(EventKind::GlobalRevision, t, digest(&revised));
            ev.agent = Some(*agent);
            ev.period = Some(union_period);
            ev.levels = Some(perceived.keys().cloned().collect());
            self.recorder.record(ev);
            self.revised.globals.insert(*agent, revised);
        }

        // natural actions and decisions
        let mut naturals: Vec<(LevelId, Vec<Outgoing<M>>)> = Vec::new();
        let mut decisions: Vec<(AgentId, LevelId, Vec<Outgoing<M>>)> = Vec::new();
        for level in &starting {
            let period = self.periods[level].interval();
            let mut ctx = Context {
                agent: None,
                level: Some(level.clone()),
                period,
                rng: stream(seed, StreamOwner::Environment, Some(level), &period),
            };
            let natural_err = |source| EngineError::Behavior {
                phase: Phase::Natural,
                level: Some(level.clone()),
                period,
                agent: None,
                source,
            };
            let produced = self.def.levels[level]
                .natural
                .natural(&mut ctx, &views[level])
                .map_err(natural_err)?;
            let produced = validate_influences(level, produced, &self.def.graphs).map_err(natural_err)?;
            naturals.push((level.clone(), produced));
        }
        drop(views);
        for p in pending.iter_mut() {
            let behavior = &self.def.templates[&self.kinds[&p.agent]].behaviors[&p.level];
            let period = p.ctx.period;
            let decision_err = |source| EngineError::Behavior {
                phase: Phase::Decision,
                level: Some(p.level.clone()),
                period,
                agent: Some(p.agent),
                source,
            };
            let produced = behavior
                .decide(&mut p.ctx, &self.revised.globals[&p.agent], &p.perceived)
                .map_err(decision_err)?;
            let produced = validate_influences(&p.level, produced, &self.def.graphs).map_err(decision_err)?;
            decisions.push((p.agent, p.level.clone(), produced));
        }

        // stamp in dispatch order: natural actions by level, then decisions by agent
        let mut stamped_naturals: BTreeMap<LevelId, Vec<Influence<M>>> = BTreeMap::new();
        for (level, produced) in naturals {
            let period = self.periods[&level].clone();
            let stamped = produced
                .into_iter()
                .map(|o| {
                    let seq = self.alloc_influence();
                    Influence::new(
                        o,
                        Provenance {
                            source: level.clone(),
                            emitter: Emitter::Environment,
                            period: period.clone(),
                            seq,
                        },
                    )
                })
                .collect();
            stamped_naturals.insert(level, stamped);
        }
        decisions.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        let mut stamped_decisions: BTreeMap<(LevelId, AgentId), Vec<Influence<M>>> = BTreeMap::new();
        for (agent, level, produced) in decisions {
            let period = self.periods[&level].clone();
            let stamped = produced
                .into_iter()
                .map(|o| {
                    let seq = self.alloc_influence();
                    Influence::new(
                        o,
                        Provenance {
                            source: level.clone(),
                            emitter: Emitter::Agent(agent),
                            period: period.clone(),
                            seq,
                        },
                    )
                })
                .collect();
            stamped_decisions.insert((level, agent), stamped);
        }
        for level in &starting {
            let period = self.periods[level].interval();
            let produced = &stamped_naturals[level];
            let mut ev = TraceEvent::new(EventKind::Natural, t, digest(produced));
            ev.level = Some(level.clone());
            ev.period = Some(period);
            ev.influences = Some(produced.iter().map(Influence::id).collect());
            self.recorder.record(ev);
            for ((_, agent), produced) in stamped_decisions.iter().filter(|((l, _), _)| l == level) {
                let mut ev = TraceEvent::new(EventKind::Decision, t, digest(produced));
                ev.level = Some(level.clone());
                ev.agent = Some(*agent);
                ev.period = Some(period);
                ev.influences = Some(produced.iter().map(Influence::id).collect());
                self.recorder.record(ev);
            }
        }

        // dispatch
        let mut ordered: Vec<Influence<M>> = stamped_naturals.into_values().flatten().collect();
        let mut decided: Vec<Influence<M>> = stamped_decisions.into_values().flatten().collect();
        decided.sort_by_key(|i| i.id());
        ordered.extend(decided);
        for influence in ordered {
            self.dispatch_recorded(influence)?;
        }

        // advance
        let next = self
            .periods
            .iter()
            .filter(|(l, _)| self.transitory.contains_key(*l))
            .map(|(_, p)| p.upper)
            .min()
            .expect("a level with an open period exists before the final tick");
        debug_assert_eq!(next, union_period.upper);
        self.t = next;
        self.recorder
            .record(TraceEvent::new(EventKind::TickAdvance, next, digest(&next)));
        Ok(())
    }

    fn dispatch_recorded(&mut self, influence: Influence<M>) -> Result<(), EngineError> {
        let target = influence.target().clone();
        let period = self
            .transitory
            .get(&target)
            .and_then(|s| s.period())
            .map(TransitoryPeriod::interval)
            .ok_or_else(|| StateError::UnknownTargetLevel(target.clone()))?;
        let mut ev = TraceEvent::new(EventKind::Dispatch, self.t, digest(&influence));
        ev.level = Some(influence.provenance.source.clone());
        if let Emitter::Agent(a) = influence.provenance.emitter {
            ev.agent = Some(a);
        }
        ev.target = Some(target);
        ev.influence = Some(influence.id());
        ev.period = Some(period);
        self.recorder.record(ev);
        dispatch(influence, &mut self.transitory)?;
        Ok(())
    }

    /// Reactions of every level whose period ends now, then the global state
    /// refresh and the consistency report.
    fn react_due(&mut self) -> Result<(), EngineError> {
        let t = self.t;
        let due: Vec<LevelId> = self
            .periods
            .iter()
            .filter(|(l, p)| p.upper == t && self.transitory.contains_key(*l))
            .map(|(l, _)| l.clone())
            .collect();
        for level in due {
            self.react(&level)?;
        }
        // M[a] <- copy of M_T[a], once per iteration
        self.memory = self.revised.clone();

        let class = self.def.time.classify(t)?;
        let state = StateRef {
            global: &self.memory,
            levels: &self.consistent,
        };
        let mut ev = TraceEvent::new(EventKind::ConsistencyReport, t, digest(&state));
        ev.consistency = Some(class.kind);
        ev.levels = Some(class.consistent_levels.into_iter().collect());
        self.recorder.record(ev);
        if self.dump_at.contains(&t) {
            self.dumps.push((t, canonical_pretty(&state)));
        }
        Ok(())
    }

    fn react(&mut self, level: &LevelId) -> Result<(), EngineError> {
        let t = self.t;
        let period = self.periods[level].clone();
        let interval = period.interval();
        let transitory = self
            .transitory
            .remove(level)
            .expect("due levels have a transitory state");
        let mut ev = TraceEvent::new(EventKind::ReactionStart, t, digest(&transitory));
        ev.level = Some(level.clone());
        ev.period = Some(interval);
        ev.influences = Some(transitory.dynamics.ids());
        self.recorder.record(ev);

        let reaction_err = |source: BehaviorError| EngineError::Behavior {
            phase: Phase::Reaction,
            level: Some(level.clone()),
            period: interval,
            agent: None,
            source,
        };
        let membership = memberships(self.transitory.values().chain([&transitory]));
        let system = generic_system_reaction(
            transitory,
            &mut self.revised,
            &membership,
            &mut self.next_agent,
        )
        .map_err(|e| reaction_err(e.into()))?;
        for (agent, kind) in system.created {
            if !self.def.templates.contains_key(&kind) {
                return Err(reaction_err(BehaviorError::model(format!(
                    "agent {agent} created with undeclared template {kind:?}"
                ))));
            }
            self.kinds.insert(agent, kind);
        }
        for outgoing in system.synthesized {
            if !self.transitory.contains_key(&outgoing.target) {
                // the target already committed its final state
                log::debug!("dropping {:?} for finished level {}", outgoing.kind, outgoing.target);
                continue;
            }
            let seq = self.alloc_influence();
            let influence = Influence::new(
                outgoing,
                Provenance {
                    source: level.clone(),
                    emitter: Emitter::Engine,
                    period: period.clone(),
                    seq,
                },
            );
            self.dispatch_recorded(influence)?;
        }

        let mut ctx = Context {
            agent: None,
            level: Some(level.clone()),
            period: interval,
            rng: stream(self.def.seed, StreamOwner::Reaction, Some(level), &interval),
        };
        let next = self.def.levels[level]
            .reaction
            .react(&mut ctx, system.state)
            .map_err(reaction_err)?;
        let contract = |msg: &str| EngineError::ReactionContract {
            level: level.clone(),
            period: interval,
            msg: msg.to_string(),
        };
        if next.stamp != Stamp::ConsistentAt(period.upper) {
            return Err(contract("result is not consistent at the end of the period"));
        }
        if next.level() != level || next.dynamics.level() != level {
            return Err(contract("result belongs to another level"));
        }
        if next.dynamics.has_system() {
            return Err(contract("system influences may not persist"));
        }

        let mut ev = TraceEvent::new(EventKind::ReactionEnd, t, digest(&next));
        ev.level = Some(level.clone());
        ev.period = Some(interval);
        self.recorder.record(ev);

        let model = self.def.time.level(level)?;
        if t != model.max() {
            self.transitory
                .insert(level.clone(), next.snapshot_consistent(model)?);
            self.periods.insert(level.clone(), model.period_from(t)?);
        }
        self.consistent.insert(level.clone(), next);
        Ok(())
    }

    /// Commits the final consistent states once `t` reached `max(T)`.
    pub fn finish(&mut self) -> Result<(), EngineError> {
        if self.finished {
            return Err(EngineError::Finished);
        }
        while self.t != self.def.time.max() {
            self.step()?;
        }
        self.react_due()?;
        self.finished = true;
        Ok(())
    }

    pub fn run(mut self) -> Result<RunReport<M>, EngineError> {
        let started = Instant::now();
        self.finish()?;
        let trace = self.trace();
        Ok(RunReport {
            final_state: DynamicState {
                global: self.memory,
                levels: self.consistent,
            },
            trace,
            dumps: self.dumps,
            duration: started.elapsed(),
        })
    }
}

/// Initializes an engine for `def` and runs it to the final tick.
pub fn run<M: Model>(def: SimulationDefinition<M>) -> Result<RunReport<M>, EngineError> {
    Engine::new(def)?.run()
}
