use serde::{Deserialize, Serialize};

use crate::sim::{Team, WorldState};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnershipState {
    pub owner_agent: Option<usize>,
    pub owner_team: Option<Team>,
}

impl OwnershipState {
    pub const NONE: OwnershipState = OwnershipState { owner_agent: None, owner_team: None };

    pub fn owned_by(agent: usize, team: Team) -> Self {
        Self { owner_agent: Some(agent), owner_team: Some(team) }
    }
}

/// An agent owns the ball when it is within the ownership radius, is the
/// closest such agent of its team, and no opponent is within the radius.
/// Equidistant candidates resolve to the lowest agent index.
pub fn assign_ownership(world: &WorldState) -> OwnershipState {
    let radius = world.field.ownership_radius;
    let mut closest: [Option<(usize, f64)>; 2] = [None, None];
    for id in world.active_ids() {
        let agent = &world.agents[id];
        let d = (agent.position - world.ball.position).norm();
        if d > radius {
            continue;
        }
        let slot = &mut closest[agent.team as usize];
        if slot.map_or(true, |(_, best)| d < best) {
            *slot = Some((id, d));
        }
    }
    match closest {
        [Some((id, _)), None] => OwnershipState::owned_by(id, Team::Blue),
        [None, Some((id, _))] => OwnershipState::owned_by(id, Team::Red),
        _ => OwnershipState::NONE,
    }
}
