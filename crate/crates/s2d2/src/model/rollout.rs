//! Deterministic game playout.
//!
//! Per step, in order: both sides move (step 1 is placement), co-located
//! attackers are caught before anything else happens, surviving attackers
//! strike per their plan, struck nodes are destroyed (reward and penalty
//! nullified, credited once per node), and attackers whose payload hit zero
//! are eliminated. Observation snapshots are taken at the end of each step.

use super::{
    AttackerPureStrategy, CityGraph, DefensePolicy, GameConfig, MixedDefense, ModelError, Obs,
    Pos, StepObs, Visibility,
};

/// Full state after one step, for traces and debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub t: u32,
    pub defenders: Vec<u32>,
    pub attackers: Vec<Pos>,
    /// Remaining payload per attacker drone.
    pub payload: Vec<u32>,
    /// Destroyed nodes so far, sorted.
    pub destroyed: Vec<u32>,
    /// Cumulative utilities.
    pub u_a: i64,
    pub u_d: i64,
}

/// Outcome of a playout: final utilities, the per-step state trace, and the
/// observation stream the defender policies were fed.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub u_a: i64,
    pub u_d: i64,
    pub trace: Vec<GameState>,
    pub observations: Vec<StepObs>,
}

/// Plays one joint defender policy profile against one attacker pure
/// strategy under the given visibility mode.
pub fn rollout<P: DefensePolicy>(
    graph: &CityGraph,
    config: &GameConfig,
    defenders: &[P],
    attack: &AttackerPureStrategy,
    vis: Visibility,
) -> Result<Rollout, ModelError> {
    config.validate()?;
    if defenders.len() != config.defenders as usize {
        return Err(ModelError::InvalidStrategy(format!(
            "{} defender policies for {} defender drones",
            defenders.len(),
            config.defenders
        )));
    }
    attack.validate(graph, config)?;

    let b = config.battery;
    let n_att = attack.drones.len();
    let mut def_pos: Vec<u32> = Vec::with_capacity(defenders.len());
    let mut att: Vec<Pos> = Vec::with_capacity(n_att);
    let mut payload: Vec<u32> = vec![config.payload; n_att];
    let mut revealed: Vec<bool> = vec![false; n_att];
    let mut destroyed: Vec<u32> = Vec::new();
    let mut u_a: i64 = 0;
    let mut u_d: i64 = 0;
    let mut seen: Vec<StepObs> = Vec::with_capacity(b as usize);
    let mut trace: Vec<GameState> = Vec::with_capacity(b as usize);

    for t in 1..=b {
        // Moves. Placement at t=1, simultaneous single-edge moves after.
        if t == 1 {
            for (i, p) in defenders.iter().enumerate() {
                let s = p.start();
                if !graph.contains(s) {
                    return Err(ModelError::PolicyRejected { drone: i, t, from: s, to: s });
                }
                def_pos.push(s);
            }
            for plan in &attack.drones {
                att.push(Pos::At(plan.path[0]));
            }
        } else {
            for (i, p) in defenders.iter().enumerate() {
                let from = def_pos[i];
                let to = p.next_move(t, from, &seen);
                if !graph.contains(to) || !graph.step_ok(from, to) {
                    return Err(ModelError::PolicyRejected { drone: i, t, from, to });
                }
                def_pos[i] = to;
            }
            for (i, plan) in attack.drones.iter().enumerate() {
                if let Pos::At(_) = att[i] {
                    att[i] = Pos::At(plan.path[(t - 1) as usize]);
                }
            }
        }

        // Catches: co-location with any defender eliminates the attacker
        // before it can strike this step.
        for slot in att.iter_mut() {
            if let Pos::At(v) = *slot {
                if def_pos.contains(&v) {
                    *slot = Pos::Down;
                }
            }
        }

        // Strikes by the survivors. A strike on an already-destroyed node
        // still spends payload; a node's reward and penalty are credited at
        // most once, and the node is marked destroyed even when its reward
        // is zero.
        for (i, plan) in attack.drones.iter().enumerate() {
            if let Pos::At(v) = att[i] {
                if plan.strike_at(t).is_some() && payload[i] > 0 {
                    payload[i] -= 1;
                    revealed[i] = true;
                    if let Err(slot) = destroyed.binary_search(&v) {
                        u_a += graph.reward(v) as i64;
                        u_d += graph.penalty(v);
                        destroyed.insert(slot, v);
                    }
                }
            }
        }

        // Spent drones leave the board at the end of the step.
        for (i, slot) in att.iter_mut().enumerate() {
            if matches!(slot, Pos::At(_)) && payload[i] == 0 {
                *slot = Pos::Down;
            }
        }

        let obs = att
            .iter()
            .enumerate()
            .map(|(i, slot)| match *slot {
                Pos::Down => Obs::Down,
                Pos::At(v) => match vis {
                    Visibility::AlwaysVisible => Obs::At(v),
                    Visibility::FirstStrike => {
                        if revealed[i] {
                            Obs::At(v)
                        } else {
                            Obs::Hidden
                        }
                    }
                },
            })
            .collect();
        seen.push(StepObs { obs, destroyed: destroyed.clone() });
        trace.push(GameState {
            t,
            defenders: def_pos.clone(),
            attackers: att.clone(),
            payload: payload.clone(),
            destroyed: destroyed.clone(),
            u_a,
            u_d,
        });
    }

    Ok(Rollout { u_a, u_d, trace, observations: seen })
}

/// Utilities of one attacker plan played out with no defender on the board:
/// every listed strike executes, each node's reward and penalty count once.
pub fn greedy_playout(graph: &CityGraph, plan: &super::AttackPlan) -> (i64, i64) {
    let mut destroyed: Vec<u32> = Vec::new();
    let mut u_a = 0i64;
    let mut u_d = 0i64;
    for &t in &plan.attacks {
        let v = plan.path[(t - 1) as usize];
        if let Err(slot) = destroyed.binary_search(&v) {
            u_a += graph.reward(v) as i64;
            u_d += graph.penalty(v);
            destroyed.insert(slot, v);
        }
    }
    (u_a, u_d)
}

/// Expected utilities of a mixed defense against one attacker pure strategy.
pub fn mixed_utility<P: DefensePolicy>(
    graph: &CityGraph,
    config: &GameConfig,
    mixed: &MixedDefense<P>,
    attack: &AttackerPureStrategy,
    vis: Visibility,
) -> Result<(f64, f64), ModelError> {
    mixed.validate(config.defenders, config.lp_tolerance)?;
    let mut u_a = 0.0;
    let mut u_d = 0.0;
    for (policies, p) in &mixed.support {
        let r = rollout(graph, config, policies, attack, vis)?;
        u_a += p * r.u_a as f64;
        u_d += p * r.u_d as f64;
    }
    Ok((u_a, u_d))
}
