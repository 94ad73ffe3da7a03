mod common;

use std::collections::{BTreeMap, BTreeSet};

use levelsim::behaviors::BehaviorError;
use levelsim::check::check_trace;
use levelsim::engine::Phase;
use levelsim::models::three_level::ThreeLevel;
use levelsim::models::two_level::TwoLevel;
use levelsim::models::{build_fixture, Fixture, FixtureParams};
use levelsim::state::memberships;
use levelsim::trace::EventKind;
use levelsim::{
    AgentBehavior, AgentId, AgentSpec, AgentTemplate, Context, Engine, EngineError, GlobalStateReviser, Inert,
    LevelDynamicState, LevelId, LevelTimeModel, Model, Outgoing, ReactionModel, SimulationDefinition,
    SystemInfluence, Views,
};

use common::ts;

/// Agents holding an integer in each level; behaviors are scripted per test.
#[derive(Debug, Clone, PartialEq)]
struct Pop;

impl Model for Pop {
    type Env = ();
    type Local = i64;
    type Global = i64;
    type Regular = i64;
    type Perceived = ();
}

type Script = fn(&Context) -> Vec<Outgoing<Pop>>;

struct Scripted(Script);

impl AgentBehavior<Pop> for Scripted {
    fn perceive(&self, _: &mut Context, _: &Views<'_, Pop>) -> Result<(), BehaviorError> {
        Ok(())
    }

    fn decide(&self, ctx: &mut Context, _: &i64, _: &()) -> Result<Vec<Outgoing<Pop>>, BehaviorError> {
        Ok((self.0)(ctx))
    }
}

struct Failing;

impl AgentBehavior<Pop> for Failing {
    fn perceive(&self, _: &mut Context, _: &Views<'_, Pop>) -> Result<(), BehaviorError> {
        Ok(())
    }

    fn decide(&self, _: &mut Context, _: &i64, _: &()) -> Result<Vec<Outgoing<Pop>>, BehaviorError> {
        Err(BehaviorError::model("out of ideas"))
    }
}

struct Count;

impl GlobalStateReviser<Pop> for Count {
    fn revise(&self, _: &mut Context, previous: &i64, _: &BTreeMap<LevelId, ()>) -> Result<i64, BehaviorError> {
        Ok(previous + 1)
    }
}

/// Adds every regular payload to the local state of every agent.
struct Sum;

impl ReactionModel<Pop> for Sum {
    fn react(&self, _: &mut Context, transitory: LevelDynamicState<Pop>) -> Result<LevelDynamicState<Pop>, BehaviorError> {
        let (mut next, influences) = transitory.split_for_reaction()?;
        let total: i64 = influences.iter().filter_map(|i| i.as_regular()).sum();
        for v in next.valuation.agents.values_mut() {
            *v += total;
        }
        Ok(next)
    }
}

/// Forgets to move the stamp forward.
struct Stuck;

impl ReactionModel<Pop> for Stuck {
    fn react(&self, _: &mut Context, transitory: LevelDynamicState<Pop>) -> Result<LevelDynamicState<Pop>, BehaviorError> {
        Ok(transitory)
    }
}

fn silent(_: &Context) -> Vec<Outgoing<Pop>> {
    Vec::new()
}

fn two_levels(script_a: Script, script_b: Script) -> levelsim::SimulationBuilder<Pop> {
    let mut b = SimulationDefinition::<Pop>::builder();
    b.level(LevelTimeModel::every("A", 1, 4).unwrap(), (), Sum, Inert)
        .level(LevelTimeModel::every("B", 2, 4).unwrap(), (), Sum, Inert)
        .complete_graphs()
        .template(
            "pop",
            AgentTemplate::new(Count)
                .with_behavior("A", Scripted(script_a))
                .with_behavior("B", Scripted(script_b)),
        );
    b
}

#[test]
fn initialization_opens_first_periods() {
    let mut b = SimulationDefinition::<Pop>::builder();
    b.level(LevelTimeModel::every("L", 1, 1).unwrap(), (), Sum, Inert)
        .complete_graphs()
        .template("pop", AgentTemplate::new(Count).with_behavior("L", Scripted(silent)));
    let a = b.agent("pop", 0);
    b.place(a, "L", 3);
    let engine = Engine::new(b.build().unwrap()).unwrap();
    let l = LevelId::from("L");
    assert_eq!(engine.time(), ts(0));
    assert_eq!(engine.period(&l).unwrap().interval().to_string(), "]0/1, 1/1[");
    assert_eq!(engine.transitory(&l).unwrap().valuation, engine.consistent(&l).unwrap().valuation);
    assert_eq!(engine.memory(), engine.revised());
}

#[test]
fn definition_errors() {
    let mut b = SimulationDefinition::<Pop>::builder();
    b.level(LevelTimeModel::every("A", 1, 4).unwrap(), (), Sum, Inert)
        .level(LevelTimeModel::every("B", 1, 3).unwrap(), (), Sum, Inert);
    assert!(matches!(b.build(), Err(EngineError::Definition(m)) if m.contains("spans")));

    let mut b = two_levels(silent, silent);
    b.template("a-only", AgentTemplate::new(Count).with_behavior("A", Scripted(silent)));
    let a = b.agent("a-only", 0);
    b.place(a, "B", 0);
    assert!(matches!(b.build(), Err(EngineError::Definition(m)) if m.contains("no behavior")));

    let mut b = two_levels(silent, silent);
    b.perceives("A", "C");
    assert!(matches!(b.build(), Err(EngineError::Definition(m)) if m.contains("unknown level")));
}

#[test]
fn single_level_reacts_at_each_later_tick() {
    let mut b = SimulationDefinition::<Pop>::builder();
    b.level(LevelTimeModel::every("L", 1, 2).unwrap(), (), Sum, Inert)
        .complete_graphs()
        .template("pop", AgentTemplate::new(Count).with_behavior("L", Scripted(|_| vec![Outgoing::regular("L", 1)])));
    let a = b.agent("pop", 0);
    b.place(a, "L", 0);
    let report = levelsim::run(b.build().unwrap()).unwrap();
    let ends: Vec<_> = report
        .trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::ReactionEnd)
        .map(|e| e.time)
        .collect();
    assert_eq!(ends, vec![ts(1), ts(2)]);
    assert_eq!(report.final_state.levels[&LevelId::from("L")].valuation.agents[&a], 2);
    assert_eq!(report.final_state.global.globals[&a], 2);
}

#[test]
fn coarse_level_sits_out_fine_ticks() {
    let Fixture::TwoLevel(def) = build_fixture("two-level", &FixtureParams::default()).unwrap() else {
        unreachable!()
    };
    let mut engine = Engine::new(def).unwrap();
    engine.step().unwrap();
    let before = engine.events().len();
    engine.step().unwrap(); // t = 1
    let at_one = &engine.events()[before..];
    let b = Some(LevelId::from("B"));
    assert!(at_one.iter().all(|e| e.level != b || e.kind == EventKind::Dispatch));
    assert!(at_one.iter().any(|e| e.kind == EventKind::Perception && e.level == Some("A".into())));

    let before = engine.events().len();
    engine.step().unwrap(); // t = 2
    let at_two = &engine.events()[before..];
    let last_reaction = at_two.iter().rposition(|e| e.kind == EventKind::ReactionEnd).unwrap();
    let first_perception = at_two.iter().position(|e| e.kind == EventKind::Perception).unwrap();
    assert!(last_reaction < first_perception);
    let reacted: BTreeSet<_> = at_two[..last_reaction + 1].iter().filter_map(|e| e.level.clone()).collect();
    assert_eq!(reacted, ["A", "B"].map(LevelId::from).into());
}

#[test]
fn fine_influence_lands_in_the_current_coarse_period() {
    // increments sent from A during ]0,1[ and ]1,2[ are both counted at 2
    let Fixture::TwoLevel(def) = build_fixture("two-level", &FixtureParams::default()).unwrap() else {
        unreachable!()
    };
    let mut engine = Engine::<TwoLevel>::new(def).unwrap();
    let b = LevelId::from("B");
    for _ in 0..3 {
        engine.step().unwrap();
    }
    let at_two = engine.consistent(&b).unwrap();
    assert_eq!(at_two.consistent_at(), Some(ts(2)));
    assert_eq!(at_two.valuation.env.count, 2);
    engine.finish().unwrap();
    assert_eq!(engine.consistent(&b).unwrap().valuation.env.count, 4);
}

#[test]
fn revised_globals_become_visible_at_the_next_tick() {
    let Fixture::ThreeLevel(def) = build_fixture("three-level", &FixtureParams::default()).unwrap() else {
        unreachable!()
    };
    let mut engine = Engine::<ThreeLevel>::new(def).unwrap();
    let a = AgentId(0);
    engine.step().unwrap();
    engine.step().unwrap(); // t = 1: only L1 opens a period
    let counts = |g: &BTreeMap<LevelId, i64>| g.values().copied().collect::<Vec<_>>();
    assert_eq!(counts(&engine.memory().globals[&a]), vec![1, 1, 1]);
    assert_eq!(counts(&engine.revised().globals[&a]), vec![2, 1, 1]);
    engine.finish().unwrap();
    assert_eq!(counts(&engine.memory().globals[&a]), vec![6, 3, 2]);
}

#[test]
fn agents_join_and_leave_across_levels() {
    fn script_a(ctx: &Context) -> Vec<Outgoing<Pop>> {
        let agent = ctx.agent.unwrap();
        match (agent.0, ctx.period.lower) {
            (0, t) if t == ts(1) => vec![Outgoing::system("A", SystemInfluence::RemoveAgentFromSimulation(agent))],
            (1, t) if t == ts(0) => vec![Outgoing::system(
                "A",
                SystemInfluence::AddAgentToSimulation(AgentSpec {
                    kind: "pop".into(),
                    global: 100,
                    locals: vec![("A".into(), 5), ("B".into(), 6)],
                }),
            )],
            _ => Vec::new(),
        }
    }
    let mut b = two_levels(script_a, silent);
    for _ in 0..2 {
        let a = b.agent("pop", 0);
        b.place(a, "A", 0).place(a, "B", 0);
    }
    let mut engine = Engine::new(b.build().unwrap()).unwrap();
    engine.step().unwrap();
    engine.step().unwrap(); // t = 1: agent 2 created in A, pending in B
    let (a, bl) = (LevelId::from("A"), LevelId::from("B"));
    let spawned = AgentId(2);
    assert!(engine.consistent(&a).unwrap().contains_agent(spawned));
    assert!(!engine.consistent(&bl).unwrap().contains_agent(spawned));
    assert_eq!(engine.memory().globals[&spawned], 100);
    assert!(engine
        .events()
        .iter()
        .any(|e| e.kind == EventKind::Perception && e.agent == Some(spawned) && e.time == ts(1)));

    engine.step().unwrap(); // t = 2: agent 0 leaves both levels, agent 2 reaches B
    let members = memberships([engine.consistent(&a).unwrap(), engine.consistent(&bl).unwrap()]);
    let both: BTreeSet<LevelId> = [a.clone(), bl.clone()].into();
    assert_eq!(members.get(&AgentId(0)), None);
    assert_eq!(members[&AgentId(1)], both);
    assert_eq!(members[&spawned], both);
    assert_eq!(engine.consistent(&bl).unwrap().valuation.agents[&spawned], 6);
    assert!(!engine.memory().is_live(AgentId(0)));

    engine.finish().unwrap();
    let report = check_trace(&engine.trace()).unwrap();
    assert!(report.is_clean(), "{:?}", report.violations);
}

#[test]
fn removed_agent_cannot_be_removed_twice() {
    fn script_a(ctx: &Context) -> Vec<Outgoing<Pop>> {
        vec![Outgoing::system("A", SystemInfluence::RemoveAgentFromSimulation(AgentId(7)))]
            .into_iter()
            .filter(|_| ctx.agent == Some(AgentId(0)))
            .collect()
    }
    let mut b = two_levels(script_a, silent);
    let a = b.agent("pop", 0);
    b.place(a, "A", 0);
    let err = levelsim::run(b.build().unwrap()).unwrap_err();
    assert!(matches!(err, EngineError::Behavior { phase: Phase::Reaction, .. }), "{err}");
}

#[test]
fn influence_graph_violations_abort_with_provenance() {
    let mut b2 = SimulationDefinition::<Pop>::builder();
    b2.level(LevelTimeModel::every("A", 1, 4).unwrap(), (), Sum, Inert)
        .level(LevelTimeModel::every("B", 2, 4).unwrap(), (), Sum, Inert)
        .perceives("A", "A")
        .influences("A", "A")
        .template("pop", AgentTemplate::new(Count).with_behavior("A", Scripted(|_| vec![Outgoing::regular("B", 1)])));
    let a = b2.agent("pop", 0);
    b2.place(a, "A", 0);
    let err = levelsim::run(b2.build().unwrap()).unwrap_err();
    match err {
        EngineError::Behavior {
            phase: Phase::Decision,
            level: Some(level),
            agent: Some(agent),
            source: BehaviorError::InfluenceGraphViolation { target, .. },
            ..
        } => {
            assert_eq!(level.as_str(), "A");
            assert_eq!(agent, a);
            assert_eq!(target.as_str(), "B");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn behavior_and_reaction_failures() {
    let mut b = SimulationDefinition::<Pop>::builder();
    b.level(LevelTimeModel::every("A", 1, 2).unwrap(), (), Sum, Inert)
        .complete_graphs()
        .template("pop", AgentTemplate::new(Count).with_behavior("A", Failing));
    let a = b.agent("pop", 0);
    b.place(a, "A", 0);
    let err = levelsim::run(b.build().unwrap()).unwrap_err();
    assert!(err.to_string().contains("out of ideas"));
    assert!(matches!(err, EngineError::Behavior { phase: Phase::Decision, agent: Some(x), .. } if x == a));

    let mut b = SimulationDefinition::<Pop>::builder();
    b.level(LevelTimeModel::every("A", 1, 2).unwrap(), (), Stuck, Inert).complete_graphs();
    let err = levelsim::run(b.build().unwrap()).unwrap_err();
    assert!(matches!(err, EngineError::ReactionContract { .. }), "{err}");
}

#[test]
fn empty_population_only_reacts() {
    let params = FixtureParams {
        agents: Some(0),
        ..Default::default()
    };
    let Fixture::TwoLevel(def) = build_fixture("two-level", &params).unwrap() else {
        unreachable!()
    };
    let report = levelsim::run(def).unwrap();
    let kinds: BTreeSet<EventKind> = report.trace.events.iter().map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        [
            EventKind::Natural,
            EventKind::ReactionStart,
            EventKind::ReactionEnd,
            EventKind::TickAdvance,
            EventKind::ConsistencyReport
        ]
        .into()
    );
    assert_eq!(report.reactions("A"), 4);
    assert_eq!(report.reactions("B"), 2);
}

#[test]
fn stepping_past_the_end_and_bad_dump_ticks() {
    let Fixture::TwoLevel(def) = build_fixture("two-level", &FixtureParams::default()).unwrap() else {
        unreachable!()
    };
    let mut engine = Engine::new(def).unwrap();
    assert!(matches!(
        engine.dump_at([levelsim::Timestamp::new(5, 2).unwrap()]),
        Err(EngineError::NotAUnionTick(_))
    ));
    engine.dump_at([ts(2)]).unwrap();
    engine.finish().unwrap();
    assert!(matches!(engine.step(), Err(EngineError::Finished)));
    assert!(engine.is_finished());
    let events = engine.events().iter().filter(|e| e.kind == EventKind::TickAdvance).count();
    assert_eq!(events, 4);
    let report = engine.run();
    assert!(matches!(report, Err(EngineError::Finished)));
}

#[test]
fn dumps_are_canonical_state_documents() {
    let Fixture::TwoLevel(def) = build_fixture("two-level", &FixtureParams::default()).unwrap() else {
        unreachable!()
    };
    let mut engine = Engine::new(def).unwrap();
    engine.dump_at([ts(2), ts(4)]).unwrap();
    let report = engine.run().unwrap();
    assert_eq!(report.dumps.len(), 2);
    let (t, doc) = &report.dumps[1];
    assert_eq!(*t, ts(4));
    assert_eq!(doc, &report.final_state.canonical_text());
    let value: serde_json::Value = serde_json::from_str(&report.dumps[0].1).unwrap();
    assert_eq!(value["levels"]["B"]["stamp"]["ConsistentAt"], "2/1");
}
