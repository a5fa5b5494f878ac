//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS line with the measured numbers.
//!
//! The oracles in here are deliberately independent re-implementations:
//! criterion 7 re-derives network semantics for a brute-force enumerator,
//! criterion 8 re-derives every requirement as a plain linear scan.

use std::collections::{BTreeSet, VecDeque};
use std::path::PathBuf;
use std::time::Instant;

use handover_cdv::campaign::{CampaignOutcome, RunSummary, run_campaign};
use handover_cdv::config::{CampaignConfig, GeneratorKind, TargetsSpec, parse_config};
use handover_cdv::coverage::{Reachability, merge, stmt_coverage, tuple_universe};
use handover_cdv::mbt::{
    self, ActorKind, Automaton, Channel, CheckConfig, CheckOutcome, Edge, GuardAtom, Network,
    NetworkState, PredAtom, Property, StatePredicate, Sync, UpdateAtom, check,
};
use handover_cdv::monitors::{
    GRIPPER_CLEARANCE, HUMAN_PROXIMITY, RequirementId, SPEED_LIMIT, VerdictState,
    verdicts_for_trace,
};
use handover_cdv::rng::SeededRng;
use handover_cdv::stimulus::{Profile, SimTrace, TraceEvent, TraceMeta, TraceRecord};
use handover_cdv::sut::{Location, RunOutcome, statement_count, statement_table};
use handover_cdv::world::{
    Body, Gripper, HeadAttitude, Holder, Pose, WorldConfig, WorldState, body_center, min_distance,
    sense_gpl,
};

/// The documented master seed of the acceptance campaigns.
const ACCEPTANCE_SEED: u64 = 42;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hcdv-accept-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn cleanup(dir: &PathBuf) {
    let _ = std::fs::remove_dir_all(dir);
}

fn base_config(text: &str, tag: &str) -> CampaignConfig {
    let mut cfg = parse_config(text).expect("inline config parses");
    cfg.out_dir = temp_dir(tag);
    cfg
}

fn requirement(outcome: &CampaignOutcome, req: RequirementId) -> (u32, u32, u32) {
    let c = outcome.report.requirement(req);
    (c.covered, c.passed, c.failed)
}

// --- criterion 1 -----------------------------------------------------------

#[test]
fn criterion_1_cross_product_reachability() {
    let started = Instant::now();
    let exe = env!("CARGO_BIN_EXE_handover-cdv");
    let output = std::process::Command::new(exe)
        .arg("check-model")
        .output()
        .expect("check-model runs");
    assert!(output.status.success(), "check-model exited nonzero");
    let stdout = String::from_utf8_lossy(&output.stdout);

    let mut got_reachable = Vec::new();
    for line in stdout.lines() {
        if let Some(rest) = line.strip_prefix("tuple:") {
            got_reachable.push(rest.contains(" REACHABLE"));
        }
    }
    assert_eq!(got_reachable.len(), 33, "expected 33 verdict lines");
    let expected: Vec<bool> = tuple_universe()
        .iter()
        .map(|(_, r)| *r == Reachability::Reachable)
        .collect();
    assert_eq!(got_reachable, expected, "reachable set mismatch:\n{stdout}");
    assert_eq!(got_reachable.iter().filter(|r| **r).count(), 20);

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "check-model took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 cross-product reachability: PASS (20 reachable / 13 not, {elapsed:?})"
    );
}

// --- criteria 2, 3, 6 share the model-based campaigns -----------------------

fn mb_campaign(profile: Profile, seed: u64, tag: &str) -> CampaignOutcome {
    let mut cfg = base_config(
        &format!(
            "generator = model-based\ntargets = all-reachable-tuples\nconcretizations = 20\nseed = {seed}\njobs = 4\nprofile = {}\n",
            match profile {
                Profile::Default => "default",
                Profile::ShortTimeouts => "short-timeouts",
            }
        ),
        tag,
    );
    cfg.targets = TargetsSpec::AllTuples;
    run_campaign(&cfg).expect("model-based campaign runs")
}

#[test]
fn criterion_2_model_based_tuple_coverage() {
    let started = Instant::now();
    let mb1 = mb_campaign(Profile::Default, ACCEPTANCE_SEED, "c2-mb1");
    let mb2 = mb_campaign(Profile::ShortTimeouts, ACCEPTANCE_SEED + 1, "c2-mb2");
    let total = merge(&[mb1.report.clone(), mb2.report.clone()]).unwrap();

    let universe = tuple_universe();
    for (i, (tuple, reach)) in universe.iter().enumerate() {
        match reach {
            Reachability::Reachable => {
                assert!(total.tuple_hits[i] > 0, "reachable tuple {tuple} never hit");
                if tuple.robot == RunOutcome::TimedOut {
                    assert!(
                        mb2.report.tuple_hits[i] > 0,
                        "timed-out tuple {tuple} not hit by the short-timeouts sub-campaign"
                    );
                }
            }
            Reachability::Unreachable => {
                assert_eq!(total.tuple_hits[i], 0, "unreachable tuple {tuple} was hit");
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 600, "campaign took {elapsed:?}");
    println!(
        "ACCEPTANCE 2 model-based tuple coverage: PASS ({} runs, all 20 reachable tuples hit, timed-out tuples via short profile, {elapsed:?})",
        total.runs_total
    );
    cleanup(&mb1.out_dir);
    cleanup(&mb2.out_dir);
}

#[test]
fn criterion_3_requirements_coverage_by_mb_tests() {
    // The four requirement-targeted tests, one concretization each.
    let cfg = base_config(
        &format!("generator = model-based\ntargets = reqs1-4\nconcretizations = 1\nseed = {ACCEPTANCE_SEED}\n"),
        "c3-reqs",
    );
    let reqs = run_campaign(&cfg).expect("requirements campaign runs");
    assert_eq!(reqs.runs.len(), 4, "expected 4 model-based tests");
    for r in [RequirementId::R1, RequirementId::R2, RequirementId::R3, RequirementId::R4] {
        let (covered, _, failed) = requirement(&reqs, r);
        assert!(covered >= 1, "{} not covered by the 4 tests", r.name());
        assert_eq!(failed, 0, "{} failed under the 4 tests", r.name());
    }

    // The full campaign covers all eleven monitors under the flawed profile.
    let mb1 = mb_campaign(Profile::Default, ACCEPTANCE_SEED, "c3-mb1");
    let mb2 = mb_campaign(Profile::ShortTimeouts, ACCEPTANCE_SEED + 1, "c3-mb2");
    let total = merge(&[mb1.report.clone(), mb2.report.clone()]).unwrap();
    for r in RequirementId::ALL {
        assert!(
            total.requirement(r).covered >= 1,
            "{} not covered across the full model-based campaign",
            r.name()
        );
    }
    println!(
        "ACCEPTANCE 3 requirements coverage by MB tests: PASS (R1-R4 covered with 0 failures by 4 tests; all 11 monitors covered in {} runs)",
        total.runs_total
    );
    cleanup(&cfg.out_dir);
    cleanup(&mb1.out_dir);
    cleanup(&mb2.out_dir);
}

// --- criteria 4, 5 share the pseudorandom campaigns -------------------------

fn pseudorandom_campaign(kind: GeneratorKind, seed: u64, safe: bool, tag: &str) -> CampaignOutcome {
    let cfg = base_config(
        &format!(
            "generator = {}\ncount = 100\nseed = {seed}\njobs = 4\n{}",
            kind.name(),
            if safe { "robot.speed_profile = safe\n" } else { "" }
        ),
        tag,
    );
    run_campaign(&cfg).expect("pseudorandom campaign runs")
}

fn per_run_state(run: &RunSummary, req: RequirementId) -> VerdictState {
    run.verdicts
        .iter()
        .find(|v| v.requirement == req)
        .map(|v| v.state)
        .unwrap_or(VerdictState::NotCovered)
}

#[test]
fn criterion_4_flawed_profile_failure_pattern() {
    let unconstrained =
        pseudorandom_campaign(GeneratorKind::Unconstrained, ACCEPTANCE_SEED, false, "c4-u");
    let constrained =
        pseudorandom_campaign(GeneratorKind::Constrained, ACCEPTANCE_SEED, false, "c4-c");
    let mb = mb_campaign(Profile::Default, ACCEPTANCE_SEED, "c4-mb");

    // Zero-exception check: whenever R6 or R8a is covered it failed.
    let mut checked_runs = 0;
    for outcome in [&unconstrained, &constrained, &mb] {
        for run in &outcome.runs {
            checked_runs += 1;
            for req in [RequirementId::R6, RequirementId::R8a] {
                match per_run_state(run, req) {
                    VerdictState::Passed => panic!(
                        "{} passed in run {} under the flawed profile",
                        req.name(),
                        run.index
                    ),
                    VerdictState::Failed | VerdictState::NotCovered => {}
                }
            }
        }
    }

    // Under the safe profile R8a passes in all 100 constrained runs.
    let safe = pseudorandom_campaign(GeneratorKind::Constrained, ACCEPTANCE_SEED, true, "c4-s");
    let (covered, passed, failed) = requirement(&safe, RequirementId::R8a);
    assert_eq!((covered, passed, failed), (100, 100, 0), "safe-profile R8a");

    println!(
        "ACCEPTANCE 4 flawed-profile failure pattern: PASS ({checked_runs} flawed runs with R6/R8a covered-implies-failed; safe profile R8a 100/100 passed)"
    );
    for o in [unconstrained, constrained, mb, safe] {
        cleanup(&o.out_dir);
    }
}

#[test]
fn criterion_5_unconstrained_vs_constrained_contrast() {
    let unconstrained =
        pseudorandom_campaign(GeneratorKind::Unconstrained, ACCEPTANCE_SEED, false, "c5-u");
    let constrained =
        pseudorandom_campaign(GeneratorKind::Constrained, ACCEPTANCE_SEED, false, "c5-c");

    let (u_r1, _, _) = requirement(&unconstrained, RequirementId::R1);
    let (u_r2, _, _) = requirement(&unconstrained, RequirementId::R2);
    let (u_r3, _, _) = requirement(&unconstrained, RequirementId::R3);
    let (u_r4, _, _) = requirement(&unconstrained, RequirementId::R4);
    let (c_r2, _, _) = requirement(&constrained, RequirementId::R2);
    let (c_r3, _, _) = requirement(&constrained, RequirementId::R3);
    let (c_r4, _, _) = requirement(&constrained, RequirementId::R4);

    assert!(c_r2 >= 80, "constrained R2 covered {c_r2}/100, need >= 80");
    assert!(c_r3 >= 80, "constrained R3 covered {c_r3}/100, need >= 80");
    assert!(u_r2 <= 50, "unconstrained R2 covered {u_r2}/100, need <= 50");
    assert!(u_r3 <= 50, "unconstrained R3 covered {u_r3}/100, need <= 50");
    assert!(u_r1 <= 2, "unconstrained R1 covered {u_r1}/100, need <= 2");
    assert_eq!(u_r4, 100, "unconstrained R4 covered {u_r4}/100");
    assert_eq!(c_r4, 100, "constrained R4 covered {c_r4}/100");

    println!(
        "ACCEPTANCE 5 unconstrained vs constrained contrast: PASS (seed {ACCEPTANCE_SEED}: R2 {u_r2} vs {c_r2}, R3 {u_r3} vs {c_r3}, R1 {u_r1}, R4 100/100 both)"
    );
    cleanup(&unconstrained.out_dir);
    cleanup(&constrained.out_dir);
}

// --- criterion 6 -------------------------------------------------------------

/// Statement blocks whose model analog is reachable: maps each FSM location
/// onto a reachability property of the protocol model and collects the
/// statement ids of the locations the checker can reach.
fn model_reachable_statement_ids() -> BTreeSet<u32> {
    let model = mbt::build_protocol_model();
    let rl = model.robot_locations;
    let reach = |locs: Vec<usize>| {
        let p = Property::reach(
            "block",
            StatePredicate {
                atoms: vec![PredAtom::AutomatonAtAny(model.robot, locs)],
            },
        );
        matches!(
            check(&model.network, &p, &CheckConfig::default()).unwrap().outcome,
            CheckOutcome::Reachable(_)
        )
    };
    let terminal = vec![rl.released, rl.not_released, rl.timed_out];
    let mut out = BTreeSet::new();
    for info in statement_table() {
        let model_reachable = match info.location {
            Location::WaitActivation => reach(vec![rl.wait_activation]),
            Location::AnnounceStart => reach(vec![rl.announce]),
            Location::PickObject => reach(vec![rl.pick]),
            Location::HoldOut => reach(vec![rl.hold_out]),
            Location::WaitHumanReady => reach(vec![rl.wait_ready]),
            Location::Sensing => reach(vec![rl.sensing]),
            Location::Deciding => reach(vec![rl.released, rl.not_released]),
            Location::Releasing => reach(vec![rl.released]),
            Location::NotReleasing => reach(vec![rl.not_released]),
            Location::TimedOutEnd => reach(vec![rl.timed_out]),
            Location::Done => reach(terminal.clone()),
        };
        if model_reachable {
            out.insert(info.statement_id);
        }
    }
    out
}

#[test]
fn criterion_6_statement_coverage_pattern() {
    // Unconstrained-only campaign leaves the releasing block untouched.
    let unconstrained =
        pseudorandom_campaign(GeneratorKind::Unconstrained, ACCEPTANCE_SEED, false, "c6-u");
    let table = statement_table();
    let cov = stmt_coverage(&table, &unconstrained.report.statements_hit).unwrap();
    let releasing = cov.blocks.get("releasing").expect("releasing block present");
    assert_eq!(
        releasing.percent, 0.0,
        "unconstrained campaign reached the releasing block"
    );

    // The model-based campaign reaches every statement the checker deems
    // reachable.
    let mb1 = mb_campaign(Profile::Default, ACCEPTANCE_SEED, "c6-mb1");
    let mb2 = mb_campaign(Profile::ShortTimeouts, ACCEPTANCE_SEED + 1, "c6-mb2");
    let total = merge(&[mb1.report.clone(), mb2.report.clone()]).unwrap();
    let reachable = model_reachable_statement_ids();
    assert_eq!(reachable.len() as u32, statement_count(), "model marks all blocks reachable");
    let missed: Vec<u32> = reachable
        .iter()
        .copied()
        .filter(|id| !total.statements_hit[*id as usize])
        .collect();
    assert!(missed.is_empty(), "model-based campaign missed statements {missed:?}");

    // Releasing-block hits occur only in traces whose outcome is Released
    // (oracle: scan the persisted trace files).
    let mut released_traces = 0;
    for outcome in [&unconstrained, &mb1, &mb2] {
        let dir = outcome.out_dir.join("traces");
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_none_or(|e| e != "jsonl") {
                continue;
            }
            let file = std::fs::File::open(&path).unwrap();
            let trace = SimTrace::read_jsonl(std::io::BufReader::new(file)).unwrap();
            let hit_releasing = trace.records.iter().any(|r| {
                matches!(
                    r.event,
                    TraceEvent::StatementHit { location: Location::Releasing, .. }
                )
            });
            if hit_releasing {
                released_traces += 1;
                assert_eq!(
                    trace.outcome().map(|(_, o)| o),
                    Some(RunOutcome::Released),
                    "{} hit the releasing block without releasing",
                    path.display()
                );
            }
        }
    }
    assert!(released_traces > 0, "no releasing traces found at all");

    println!(
        "ACCEPTANCE 6 statement coverage pattern: PASS (unconstrained releasing block 0%, model-based campaign hits {}/{} reachable statements, {released_traces} releasing traces all Released)",
        reachable.len(),
        statement_count()
    );
    cleanup(&unconstrained.out_dir);
    cleanup(&mb1.out_dir);
    cleanup(&mb2.out_dir);
}

// --- criterion 7: brute-force oracle over random networks -------------------

/// Independent semantics: enabledness, receiver resolution and firing coded
/// directly, plus plain breadth-first enumeration of the reachable set with
/// depths.
mod brute {
    use super::*;
    use std::collections::HashMap;

    fn guard_ok(_net: &Network, s: &NetworkState, guard: &[GuardAtom]) -> bool {
        guard.iter().all(|g| match g {
            GuardAtom::ClockAtLeast(c, k) => s.clocks[*c] >= *k,
            GuardAtom::ClockAtMost(c, k) => s.clocks[*c] <= *k,
            GuardAtom::VarEq(v, val) => s.vars[*v] == *val,
        })
    }

    fn enabled(net: &Network, s: &NetworkState, ai: usize, ei: usize) -> bool {
        let e = &net.automata[ai].edges[ei];
        s.locations[ai] as usize == e.source && guard_ok(net, s, &e.guard)
    }

    fn take(net: &Network, s: &mut NetworkState, ai: usize, ei: usize) {
        let e = &net.automata[ai].edges[ei];
        s.locations[ai] = e.target as u16;
        for u in &e.updates {
            match u {
                UpdateAtom::SetVar(v, val) => s.vars[*v] = *val,
                UpdateAtom::ResetClock(c) => s.clocks[*c] = 0,
            }
        }
    }

    /// Successor set computed from scratch.
    fn next_states(net: &Network, s: &NetworkState) -> Vec<NetworkState> {
        let mut out = Vec::new();
        for (ai, a) in net.automata.iter().enumerate() {
            for (ei, e) in a.edges.iter().enumerate() {
                match e.sync {
                    Sync::Receive(_) => continue,
                    Sync::Internal => {
                        if enabled(net, s, ai, ei) {
                            let mut n = s.clone();
                            take(net, &mut n, ai, ei);
                            out.push(n);
                        }
                    }
                    Sync::Emit(ch) => {
                        if !enabled(net, s, ai, ei) {
                            continue;
                        }
                        let mut receivers = Vec::new();
                        for (bi, b) in net.automata.iter().enumerate() {
                            if bi == ai {
                                continue;
                            }
                            for (fi, fe) in b.edges.iter().enumerate() {
                                if fe.sync == Sync::Receive(ch) && enabled(net, s, bi, fi) {
                                    receivers.push((bi, fi));
                                    break;
                                }
                            }
                        }
                        let fires = if net.channels[ch].broadcast {
                            true
                        } else {
                            receivers.len() == 1
                        };
                        if fires {
                            let mut n = s.clone();
                            take(net, &mut n, ai, ei);
                            for (bi, fi) in &receivers {
                                take(net, &mut n, *bi, *fi);
                            }
                            out.push(n);
                        }
                    }
                }
            }
        }
        // Delay: clocks advance and saturate at their caps.
        let mut d = s.clone();
        for (c, cap) in d.clocks.iter_mut().zip(net.clock_caps()) {
            *c = (*c + 1).min(*cap);
        }
        out.push(d);
        out
    }

    /// Reachable states with their breadth-first depths.
    pub fn explore(net: &Network, limit: usize) -> HashMap<NetworkState, usize> {
        let mut depths = HashMap::new();
        let init = net.initial_state();
        depths.insert(init.clone(), 0);
        let mut queue = VecDeque::from([init]);
        while let Some(s) = queue.pop_front() {
            let d = depths[&s];
            for n in next_states(net, &s) {
                if !depths.contains_key(&n) {
                    assert!(depths.len() < limit, "oracle exploration exceeded {limit}");
                    depths.insert(n.clone(), d + 1);
                    queue.push_back(n);
                }
            }
        }
        depths
    }
}

fn random_network(rng: &mut SeededRng) -> Network {
    let channels = vec![
        Channel { name: "c0".into(), broadcast: false },
        Channel { name: "c1".into(), broadcast: true },
    ];
    let n_vars = 2;
    let mut automata = Vec::new();
    for ai in 0..2 {
        let n_locs = rng.range_u64(2, 4) as usize;
        let n_edges = rng.range_u64(2, 5) as usize;
        let mut edges = Vec::new();
        for _ in 0..n_edges {
            let mut guard = Vec::new();
            if rng.bool() {
                guard.push(GuardAtom::ClockAtLeast(0, rng.range_u64(1, 3) as u32));
            }
            if rng.bool() {
                guard.push(GuardAtom::VarEq(rng.below(n_vars as u64) as usize, rng.below(2) as i8));
            }
            let sync = match rng.below(4) {
                0 => Sync::Internal,
                1 => Sync::Emit(rng.below(2) as usize),
                2 => Sync::Receive(rng.below(2) as usize),
                _ => Sync::Internal,
            };
            let mut updates = Vec::new();
            if rng.bool() {
                updates.push(UpdateAtom::SetVar(rng.below(n_vars as u64) as usize, rng.below(2) as i8));
            }
            if rng.bool() {
                updates.push(UpdateAtom::ResetClock(0));
            }
            edges.push(Edge {
                source: rng.below(n_locs as u64) as usize,
                guard,
                sync,
                weight: rng.range_u64(1, 3) as u32,
                updates,
                target: rng.below(n_locs as u64) as usize,
            });
        }
        automata.push(Automaton {
            name: format!("A{ai}"),
            actor: if ai == 0 { ActorKind::Human } else { ActorKind::Robot },
            locations: (0..n_locs).map(|i| format!("l{i}")).collect(),
            initial: 0,
            edges,
        });
    }
    Network::new(automata, channels, vec!["x".into()], vec!["v0".into(), "v1".into()]).unwrap()
}

fn random_predicate(rng: &mut SeededRng, net: &Network) -> StatePredicate {
    let mut atoms = Vec::new();
    let n = rng.range_u64(1, 2);
    for _ in 0..n {
        if rng.bool() {
            let aut = rng.below(2) as usize;
            let loc = rng.below(net.automata[aut].locations.len() as u64) as usize;
            atoms.push(PredAtom::AutomatonAt(aut, loc));
        } else {
            atoms.push(PredAtom::VarEq(rng.below(2) as usize, rng.below(2) as i8));
        }
    }
    StatePredicate { atoms }
}

#[test]
fn criterion_7_checker_oracle_equivalence() {
    let mut rng = SeededRng::new(0x5EED_0007);
    let budget = CheckConfig { state_budget: 100_000 };
    let mut reach_holds = 0;
    for instance in 0..50 {
        let net = random_network(&mut rng);
        let depths = brute::explore(&net, 10_000);
        assert!(depths.len() <= 10_000);

        let predicate = random_predicate(&mut rng, &net);

        // Reach: verdicts agree; witnesses replay and are shortest.
        let reach = Property::reach(format!("p{instance}"), predicate.clone());
        let oracle_depth = depths
            .iter()
            .filter(|(s, _)| predicate.eval(s))
            .map(|(_, d)| *d)
            .min();
        let report = check(&net, &reach, &budget).unwrap();
        match (report.outcome, oracle_depth) {
            (CheckOutcome::Reachable(w), Some(depth)) => {
                reach_holds += 1;
                let (end, _) = net.replay(&w.steps).expect("witness replays");
                assert!(predicate.eval(&end), "witness end state fails the predicate");
                assert_eq!(w.steps.len(), depth, "witness is not shortest (instance {instance})");
            }
            (CheckOutcome::NotReachable, None) => {}
            (outcome, oracle) => {
                panic!("instance {instance}: checker {outcome:?} vs oracle depth {oracle:?}")
            }
        }

        // Safe: verdicts agree; counterexamples replay into violations.
        let safe = Property::safe(format!("s{instance}"), predicate.clone());
        let oracle_violation = depths.keys().any(|s| !predicate.eval(s));
        let report = check(&net, &safe, &budget).unwrap();
        match (report.outcome, oracle_violation) {
            (CheckOutcome::SafeViolated(w), true) => {
                let (end, _) = net.replay(&w.steps).expect("counterexample replays");
                assert!(!predicate.eval(&end));
            }
            (CheckOutcome::SafeHolds, false) => {}
            (outcome, oracle) => {
                panic!("instance {instance}: safe checker {outcome:?} vs oracle violation {oracle}")
            }
        }

        // The checker's reachable-state count matches the oracle's.
        let absurd = Property::reach(
            "absurd",
            StatePredicate {
                atoms: vec![PredAtom::VarEq(0, 0), PredAtom::VarEq(0, 1)],
            },
        );
        let full = check(&net, &absurd, &budget).unwrap();
        assert_eq!(full.states_explored, depths.len(), "reachable set size differs");
    }
    assert!(reach_holds > 5, "degenerate sample: only {reach_holds}/50 reachable");
    println!(
        "ACCEPTANCE 7 checker oracle equivalence: PASS (50 random networks, reach+safe verdicts, witnesses valid and shortest; {reach_holds} reachable instances)"
    );
}

// --- criterion 8: linear-scan oracle over random traces ----------------------

/// Plain re-derivation of each requirement from a full trace, written as
/// independent scans rather than automata.
mod scans {
    use super::*;

    pub struct Facts {
        pub snapshots: Vec<(u64, WorldState)>,
        pub entered: Vec<(u64, Location)>,
        pub outcome: Option<(u64, RunOutcome)>,
        pub sensing_timeout: u32,
        pub world: WorldConfig,
    }

    impl Facts {
        pub fn from_trace(trace: &SimTrace, world: &WorldConfig) -> Self {
            let mut snapshots = Vec::new();
            let mut entered = Vec::new();
            let mut outcome = None;
            for r in &trace.records {
                match &r.event {
                    TraceEvent::Snapshot { state } => snapshots.push((r.tick, state.clone())),
                    TraceEvent::FsmEntered { location } => entered.push((r.tick, *location)),
                    TraceEvent::Outcome { outcome: o } => outcome = Some((r.tick, *o)),
                    _ => {}
                }
            }
            Self {
                snapshots,
                entered,
                outcome,
                sensing_timeout: trace.meta.sensing_timeout_ticks,
                world: world.clone(),
            }
        }

        fn gap(&self, s: &WorldState, a: Body, b: Body) -> f64 {
            min_distance(&self.world, s, a, b)
        }

        fn first_motion(&self) -> Option<u64> {
            self.snapshots
                .iter()
                .find(|(_, s)| s.robot_hand_speed > 0.0)
                .map(|(t, _)| *t)
        }

        fn expect(&self, covered: Option<u64>, ok: bool) -> (VerdictState, Option<u64>) {
            match covered {
                None => (VerdictState::NotCovered, None),
                Some(t) => (
                    if ok { VerdictState::Passed } else { VerdictState::Failed },
                    Some(t),
                ),
            }
        }

        pub fn expected(&self, req: RequirementId) -> (VerdictState, Option<u64>) {
            match req {
                RequirementId::R1 | RequirementId::R2 => {
                    let deciding = self
                        .entered
                        .iter()
                        .find(|(_, l)| *l == Location::Deciding)
                        .map(|(t, _)| *t);
                    let Some(t) = deciding else {
                        return (VerdictState::NotCovered, None);
                    };
                    let snap = self
                        .snapshots
                        .iter()
                        .rfind(|(st, _)| *st <= t)
                        .map(|(_, s)| s);
                    let Some(s) = snap else {
                        return (VerdictState::NotCovered, None);
                    };
                    let all_ok = sense_gpl(&self.world, s).all_ok();
                    let relevant = (req == RequirementId::R1) == all_ok;
                    if !relevant {
                        return (VerdictState::NotCovered, None);
                    }
                    let want = if req == RequirementId::R1 {
                        RunOutcome::Released
                    } else {
                        RunOutcome::NotReleased
                    };
                    self.expect(Some(t), self.outcome.map(|(_, o)| o) == Some(want))
                }
                RequirementId::R3 => {
                    let entry = self
                        .entered
                        .iter()
                        .find(|(_, l)| *l == Location::Sensing)
                        .map(|(t, _)| *t);
                    let Some(entry_tick) = entry else {
                        return (VerdictState::NotCovered, None);
                    };
                    let exit = self
                        .entered
                        .iter()
                        .find(|(t, l)| {
                            *t >= entry_tick
                                && matches!(l, Location::Deciding | Location::TimedOutEnd)
                        })
                        .map(|(t, _)| *t);
                    let ok = exit
                        .is_some_and(|x| x - entry_tick <= self.sensing_timeout as u64 + 1);
                    self.expect(Some(entry_tick), ok)
                }
                RequirementId::R4 => match self.outcome {
                    Some((t, _)) => (VerdictState::Passed, Some(t)),
                    None => (VerdictState::NotCovered, None),
                },
                RequirementId::R5 => {
                    let mut covered = None;
                    let mut ok = true;
                    let mut close_at = |t: u64, s: &WorldState| {
                        covered.get_or_insert(t);
                        let centers = body_center(&self.world, s, Body::RobotHand)
                            .distance(&body_center(&self.world, s, Body::HumanHand));
                        if centers < GRIPPER_CLEARANCE {
                            ok = false;
                        }
                    };
                    // A run that begins closed counts as a close at its
                    // first observation.
                    if let Some((t0, first)) = self.snapshots.first()
                        && first.gripper == Gripper::Closed
                    {
                        close_at(*t0, first);
                    }
                    for w in self.snapshots.windows(2) {
                        let (prev, (t, cur)) = (&w[0].1, &w[1]);
                        if prev.gripper == Gripper::Open && cur.gripper == Gripper::Closed {
                            close_at(*t, cur);
                        }
                    }
                    self.expect(covered, ok)
                }
                RequirementId::R6 => {
                    let Some(f) = self.first_motion() else {
                        return (VerdictState::NotCovered, None);
                    };
                    let window_end = self
                        .entered
                        .iter()
                        .find(|(t, _)| *t >= f)
                        .map(|(t, _)| *t)
                        .unwrap_or(u64::MAX);
                    let ok = self
                        .snapshots
                        .iter()
                        .filter(|(t, _)| *t >= f && *t <= window_end)
                        .all(|(_, s)| s.robot_hand_speed < SPEED_LIMIT);
                    self.expect(Some(f), ok)
                }
                RequirementId::R7 => {
                    let pairs = [
                        (Body::RobotHand, Body::TorsoLower),
                        (Body::RobotHand, Body::TorsoUpper),
                        (Body::TorsoLower, Body::TorsoUpper),
                    ];
                    let mut covered = None;
                    let mut ok = true;
                    for (t, s) in &self.snapshots {
                        if pairs.iter().any(|(a, b)| self.gap(s, *a, *b) == 0.0) {
                            covered.get_or_insert(*t);
                            if s.robot_hand_speed >= SPEED_LIMIT {
                                ok = false;
                            }
                        }
                    }
                    self.expect(covered, ok)
                }
                RequirementId::R8a => {
                    let Some(f) = self.first_motion() else {
                        return (VerdictState::NotCovered, None);
                    };
                    let ok = self
                        .snapshots
                        .iter()
                        .all(|(_, s)| s.robot_hand_speed < SPEED_LIMIT);
                    self.expect(Some(f), ok)
                }
                RequirementId::R8b => {
                    let mut covered = None;
                    let mut ok = true;
                    for (t, s) in &self.snapshots {
                        let near = Body::HUMAN
                            .iter()
                            .any(|h| self.gap(s, Body::RobotHand, *h) <= HUMAN_PROXIMITY);
                        if near {
                            covered.get_or_insert(*t);
                            if s.robot_hand_speed >= SPEED_LIMIT {
                                ok = false;
                            }
                        }
                    }
                    self.expect(covered, ok)
                }
                RequirementId::R8c | RequirementId::R8d => {
                    let mut covered = None;
                    let mut ok = true;
                    for (t, s) in &self.snapshots {
                        let mut contact = false;
                        for a in Body::ROBOT {
                            for b in Body::ALL {
                                if Body::ROBOT.contains(&b) && req == RequirementId::R8d {
                                    continue;
                                }
                                if a == b {
                                    continue;
                                }
                                if req == RequirementId::R8d && !Body::HUMAN.contains(&b) {
                                    continue;
                                }
                                if req == RequirementId::R8c && Body::ROBOT.contains(&b) {
                                    // Self contact counts for R8c via the pair scan.
                                }
                                if self.gap(s, a, b) == 0.0 {
                                    contact = true;
                                }
                            }
                        }
                        if contact {
                            covered.get_or_insert(*t);
                            if s.robot_hand_speed >= SPEED_LIMIT {
                                ok = false;
                            }
                        }
                    }
                    self.expect(covered, ok)
                }
            }
        }
    }
}

fn random_trace(rng: &mut SeededRng) -> SimTrace {
    let ticks = rng.range_u64(1, 60);
    let sensing_timeout = rng.range_u64(2, 20) as u32;
    let mut records = Vec::new();
    let mut hand = Pose::new(0.22, 0.0, 0.95);
    let mut gripper = Gripper::Open;
    let mut sensing_entered = false;
    let mut decided = false;
    let mut outcome = None;
    for tick in 0..ticks {
        // Random hand drift with occasional speeding.
        let speed = match rng.below(4) {
            0 => 0.0,
            1 => rng.range_f64(0.01, 0.24),
            2 => rng.range_f64(0.25, 0.5),
            _ => 0.2,
        };
        let step = speed * 0.05;
        hand = Pose::new(
            (hand.x + step * if rng.bool() { 1.0 } else { -1.0 }).clamp(0.10, 1.4),
            hand.y,
            hand.z,
        );
        if rng.below(12) == 0 {
            gripper = if gripper == Gripper::Open { Gripper::Closed } else { Gripper::Open };
        }
        let human_hand = Pose::new(rng.range_f64(0.15, 1.5), 0.0, 1.0);
        let state = WorldState {
            tick,
            robot_hand: hand,
            robot_hand_speed: speed,
            human_hand,
            head: HeadAttitude::new(
                rng.range_f64(0.0, 0.4),
                rng.range_f64(0.3, 1.4),
                rng.range_f64(0.0, 359.0),
            ),
            object: Pose::new(0.55, 0.25, 0.95),
            gripper,
            object_held_by: Holder::None,
            pressure_applied: rng.bool(),
        };
        records.push(TraceRecord { tick, event: TraceEvent::Snapshot { state } });

        if !sensing_entered && rng.below(10) == 0 {
            sensing_entered = true;
            records.push(TraceRecord {
                tick,
                event: TraceEvent::FsmEntered { location: Location::Sensing },
            });
        } else if sensing_entered && !decided && rng.below(8) == 0 {
            decided = true;
            let (loc, out) = if rng.bool() {
                (Location::Deciding, None)
            } else {
                (Location::TimedOutEnd, Some(RunOutcome::TimedOut))
            };
            records.push(TraceRecord { tick, event: TraceEvent::FsmEntered { location: loc } });
            outcome = out;
        } else if rng.below(15) == 0 {
            records.push(TraceRecord {
                tick,
                event: TraceEvent::FsmEntered { location: Location::HoldOut },
            });
        }

        if decided && outcome.is_none() && rng.below(4) == 0 {
            outcome = Some(if rng.bool() { RunOutcome::Released } else { RunOutcome::NotReleased });
        }
    }
    if let Some(o) = outcome {
        records.push(TraceRecord { tick: ticks - 1, event: TraceEvent::Outcome { outcome: o } });
    }
    SimTrace {
        meta: TraceMeta {
            test_id: "random".into(),
            seed: 0,
            profile: "default".into(),
            sensing_timeout_ticks: sensing_timeout,
        },
        records,
    }
}

#[test]
fn criterion_8_monitor_oracle_equivalence() {
    let world = WorldConfig::default();
    let mut rng = SeededRng::new(0x5EED_0008);
    let mut disagreements = 0;
    for i in 0..1000 {
        let trace = random_trace(&mut rng);
        let verdicts = verdicts_for_trace(&trace, &world).expect("well-formed trace");
        let facts = scans::Facts::from_trace(&trace, &world);
        for v in &verdicts {
            let (state, trigger) = facts.expected(v.requirement);
            if state != v.state || trigger != v.trigger_tick {
                disagreements += 1;
                eprintln!(
                    "trace {i} {}: monitor {:?}@{:?} oracle {:?}@{:?}",
                    v.requirement.name(),
                    v.state,
                    v.trigger_tick,
                    state,
                    trigger
                );
            }
        }
    }
    assert_eq!(disagreements, 0, "{disagreements} monitor verdicts disagree with the oracle");
    println!(
        "ACCEPTANCE 8 monitor oracle equivalence: PASS (1000 random traces x 11 monitors, 0 disagreements)"
    );
}

// --- criterion 9 -------------------------------------------------------------

#[test]
fn criterion_9_determinism() {
    // Same config and seed twice: byte-identical report.
    let cfg = base_config(
        &format!("generator = constrained\ncount = 30\nseed = {ACCEPTANCE_SEED}\n"),
        "c9-a",
    );
    run_campaign(&cfg).unwrap();
    let first = std::fs::read(cfg.out_dir.join("report.json")).unwrap();
    let first_trace = std::fs::read(cfg.out_dir.join("traces/run_0011.jsonl")).unwrap();
    cleanup(&cfg.out_dir);
    run_campaign(&cfg).unwrap();
    let second = std::fs::read(cfg.out_dir.join("report.json")).unwrap();
    let second_trace = std::fs::read(cfg.out_dir.join("traces/run_0011.jsonl")).unwrap();
    assert_eq!(first, second, "re-running the campaign changed report.json");
    assert_eq!(first_trace, second_trace, "re-running the campaign changed a trace");
    cleanup(&cfg.out_dir);

    // Parallel equals serial, model-based campaign included.
    let serial = base_config(
        &format!(
            "generator = model-based\ntargets = reqs1-4\nconcretizations = 5\nseed = {ACCEPTANCE_SEED}\njobs = 1\n"
        ),
        "c9-serial",
    );
    run_campaign(&serial).unwrap();
    let serial_report = std::fs::read(serial.out_dir.join("report.json")).unwrap();
    let serial_table = std::fs::read(serial.out_dir.join("table2.csv")).unwrap();

    let mut parallel = serial.clone();
    parallel.jobs = 8;
    parallel.out_dir = temp_dir("c9-parallel");
    run_campaign(&parallel).unwrap();
    let parallel_report = std::fs::read(parallel.out_dir.join("report.json")).unwrap();
    let parallel_table = std::fs::read(parallel.out_dir.join("table2.csv")).unwrap();

    assert_eq!(serial_report, parallel_report, "--jobs 8 changed report.json");
    assert_eq!(serial_table, parallel_table, "--jobs 8 changed table2.csv");

    // The only timestamp lives in the metadata sidecar, not the report.
    assert!(!String::from_utf8_lossy(&serial_report).contains("timestamp"));

    println!(
        "ACCEPTANCE 9 determinism: PASS (byte-identical reruns; parallel == serial byte-for-byte)"
    );
    cleanup(&serial.out_dir);
    cleanup(&parallel.out_dir);
}
