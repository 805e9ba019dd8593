//! Shooter testbed: a patrolling bot player against pursuing robots.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ticks, Event, GameError, TickRow, TickedEvent, DT};
use crate::arena::{build_fps_scene, ArenaSpec, RobotEntities, WallBox, ROBOT_BODY_HEIGHT, ROBOT_HALF_WIDTH};
use crate::math::{wrap_angle, Pose, Vec3};
use crate::rng::SimRng;
use crate::scene::{query_ray, query_ray_filtered, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FpsParams {
    pub walk_speed: f64,
    pub eye_height: f64,
    pub engage_range: f64,
    pub fire_interval: f64,
    pub hit_prob: f64,
    pub magazine: u32,
    pub reload: f64,
    /// Hits that kill a robot.
    pub robot_hp: u32,
    pub robot_speed: f64,
    /// Robots stop pursuing at this distance from the player.
    pub robot_stop: f64,
    pub robot_fire_interval: f64,
    pub robot_hit_prob: f64,
    /// Player turn rate, rad/s.
    pub turn_rate: f64,
    /// The player only fires when aimed within this angle, rad.
    pub aim_tolerance: f64,
    /// Seeded offset applied to each patrol waypoint, meters per axis.
    pub patrol_jitter: f64,
}

impl Default for FpsParams {
    fn default() -> Self {
        FpsParams {
            walk_speed: 1.5,
            eye_height: 1.7,
            engage_range: 25.0,
            fire_interval: 0.5,
            hit_prob: 0.8,
            magazine: 5,
            reload: 2.0,
            robot_hp: 14,
            robot_speed: 2.0,
            robot_stop: 4.0,
            robot_fire_interval: 1.0,
            robot_hit_prob: 0.5,
            turn_rate: 3.0,
            aim_tolerance: 0.05,
            patrol_jitter: 2.0,
        }
    }
}

impl FpsParams {
    pub fn validate(&self) -> Result<(), GameError> {
        let positive = [
            (self.walk_speed, "fps.walk_speed must be positive"),
            (self.eye_height, "fps.eye_height must be positive"),
            (self.engage_range, "fps.engage_range must be positive"),
            (self.fire_interval, "fps.fire_interval must be positive"),
            (self.reload, "fps.reload must be positive"),
            (self.robot_fire_interval, "fps.robot_fire_interval must be positive"),
            (self.turn_rate, "fps.turn_rate must be positive"),
            (self.aim_tolerance, "fps.aim_tolerance must be positive"),
        ];
        for (v, msg) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GameError::InvalidParam(msg));
            }
        }
        if !(0.0..=1.0).contains(&self.hit_prob) || !(0.0..=1.0).contains(&self.robot_hit_prob) {
            return Err(GameError::InvalidParam("fps hit probabilities must lie in [0, 1]"));
        }
        if self.magazine == 0 || self.robot_hp == 0 {
            return Err(GameError::InvalidParam("fps.magazine and fps.robot_hp must be at least 1"));
        }
        if !(self.robot_speed >= 0.0 && self.robot_stop >= 0.0 && self.patrol_jitter >= 0.0) {
            return Err(GameError::InvalidParam(
                "fps.robot_speed, fps.robot_stop and fps.patrol_jitter must be non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotState {
    /// Ground-level pose.
    pub pose: Pose,
    pub hits_taken: u32,
    pub alive: bool,
    fire_cooldown: u32,
}

impl RobotState {
    pub fn new(pose: Pose) -> RobotState {
        RobotState { pose, hits_taken: 0, alive: true, fire_cooldown: 0 }
    }

    /// Registers one hit; returns true if it killed the robot.
    pub fn apply_hit(&mut self, hp: u32) -> bool {
        if !self.alive {
            return false;
        }
        self.hits_taken += 1;
        if self.hits_taken >= hp {
            self.alive = false;
            return true;
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FpsState {
    /// Player eye pose.
    pub player: Pose,
    pub distance: f64,
    pub shots_received: u32,
    pub magazine: u32,
    pub reload_ticks: u32,
    pub robots: Vec<RobotState>,
    pub tick: u64,
    /// Index of the patrol vertex the player walks toward.
    pub waypoint: usize,
    pub finished: bool,
}

impl FpsState {
    pub fn elapsed(&self) -> f64 {
        self.tick as f64 * DT
    }

    pub fn reload_remaining(&self) -> f64 {
        self.reload_ticks as f64 * DT
    }

    pub fn robots_alive(&self) -> u32 {
        self.robots.iter().filter(|r| r.alive).count() as u32
    }
}

pub struct FpsSim {
    pub scene: Scene,
    pub state: FpsState,
    params: FpsParams,
    walls: Vec<WallBox>,
    patrol: Vec<Vec3>,
    detection_radius: f64,
    entities: Vec<RobotEntities>,
    rng: SimRng,
    position: Vec3,
    yaw: f64,
    fire_cooldown: u32,
    goal: Vec3,
    events: Vec<TickedEvent>,
}

impl FpsSim {
    pub fn new(spec: &ArenaSpec, params: &FpsParams, seed: u64) -> Result<FpsSim, GameError> {
        params.validate()?;
        let (scene, entities) = build_fps_scene(spec, seed)?;
        let robots = entities.iter().map(|e| RobotState::new(scene.entities[e.body].pose)).collect();
        let start = spec.patrol[0];
        let next = spec.patrol[1];
        let yaw = libm::atan2(next.y - start.y, next.x - start.x);
        let position = Vec3::new(start.x, start.y, 0.0);
        let mut sim = FpsSim {
            scene,
            state: FpsState {
                player: Pose::IDENTITY,
                distance: 0.0,
                shots_received: 0,
                magazine: params.magazine,
                reload_ticks: 0,
                robots,
                tick: 0,
                waypoint: 1,
                finished: false,
            },
            params: params.clone(),
            walls: spec.walls.clone(),
            patrol: spec.patrol.clone(),
            detection_radius: spec.detection_radius,
            entities,
            rng: SimRng::stream(seed, 0x7368_6f6f),
            position,
            yaw,
            fire_cooldown: 0,
            goal: next,
            events: Vec::new(),
        };
        sim.goal = sim.jittered(1);
        sim.update_player();
        Ok(sim)
    }

    pub fn params(&self) -> &FpsParams {
        &self.params
    }

    pub fn take_events(&mut self) -> Vec<TickedEvent> {
        core::mem::take(&mut self.events)
    }

    fn emit(&mut self, event: Event) {
        self.events.push(TickedEvent { tick: self.state.tick, event });
    }

    fn update_player(&mut self) {
        let eye = Vec3::new(self.position.x, self.position.y, self.params.eye_height);
        self.state.player = Pose::new(eye, self.yaw, 0.0, 0.0);
    }

    fn sync_robot(&mut self, i: usize) {
        let r = &self.state.robots[i];
        let e = self.entities[i];
        for idx in [e.body, e.head] {
            self.scene.entities[idx].pose = r.pose;
            self.scene.entities[idx].alive = r.alive;
        }
    }

    /// Whether the player's eye sees robot `i` unobstructed.
    fn player_sees(&self, i: usize) -> bool {
        let eye = self.state.player.position;
        let aim = self.state.robots[i].pose.position + Vec3::new(0.0, 0.0, 0.5 * ROBOT_BODY_HEIGHT);
        let to = aim - eye;
        let dist = to.length();
        let e = self.entities[i];
        match query_ray(&self.scene, eye, to / dist, dist + 1.0) {
            Ok(Some(hit)) => hit.entity_index == e.body || hit.entity_index == e.head,
            _ => false,
        }
    }

    /// Whether robot `i` has line of sight to the player's eye.
    fn robot_sees_player(&self, i: usize) -> bool {
        let e = self.entities[i];
        let head = self.scene.entities[e.head].world_center();
        let to = self.state.player.position - head;
        let dist = to.length();
        if dist == 0.0 {
            return true;
        }
        let (body_id, head_id) = (self.scene.entities[e.body].id, self.scene.entities[e.head].id);
        matches!(
            query_ray_filtered(&self.scene, head, to / dist, dist, |ent| ent.id != body_id && ent.id != head_id),
            Ok(None)
        )
    }

    /// Patrol vertex `i` with a seeded offset, unless the offset path
    /// would cross a wall.
    fn jittered(&mut self, i: usize) -> Vec3 {
        let base = self.patrol[i];
        let j = self.params.patrol_jitter;
        if j == 0.0 {
            return base;
        }
        let dx = self.rng.range(-j, j);
        let dy = self.rng.range(-j, j);
        let goal = Vec3::new(base.x + dx, base.y + dy, 0.0);
        let from = self.position;
        if self.walls.iter().any(|w| w.contains_xy(goal, 0.5) || w.blocks_segment_xy(from, goal, 0.3)) {
            base
        } else {
            goal
        }
    }

    fn turn_toward(&mut self, desired: f64) -> f64 {
        let max = self.params.turn_rate * DT;
        let err = wrap_angle(desired - self.yaw);
        self.yaw = wrap_angle(self.yaw + err.clamp(-max, max));
        wrap_angle(desired - self.yaw)
    }

    fn blocked(&self, p: Vec3) -> bool {
        self.walls.iter().any(|w| w.contains_xy(p, ROBOT_HALF_WIDTH))
    }

    pub fn step(&mut self) {
        if self.state.finished {
            return;
        }
        self.state.tick += 1;
        let p = self.params.clone();
        self.fire_cooldown = self.fire_cooldown.saturating_sub(1);
        if self.state.reload_ticks > 0 {
            self.state.reload_ticks -= 1;
            if self.state.reload_ticks == 0 {
                self.state.magazine = p.magazine;
            }
        }

        // Player: engage the nearest visible robot in range, else patrol.
        let eye = self.state.player.position;
        let mut target: Option<(usize, f64)> = None;
        for i in 0..self.state.robots.len() {
            let r = &self.state.robots[i];
            if !r.alive {
                continue;
            }
            let d = r.pose.position.planar_distance(eye);
            if d <= p.engage_range && target.map_or(true, |t| d < t.1) && self.player_sees(i) {
                target = Some((i, d));
            }
        }
        if let Some((i, _)) = target {
            let rp = self.state.robots[i].pose.position;
            let aim_error = self.turn_toward(libm::atan2(rp.y - eye.y, rp.x - eye.x));
            if aim_error.abs() <= p.aim_tolerance
                && self.fire_cooldown == 0
                && self.state.reload_ticks == 0
                && self.state.magazine > 0
            {
                self.state.magazine -= 1;
                self.fire_cooldown = ticks(p.fire_interval);
                let hit = self.rng.chance(p.hit_prob);
                let killed = hit && self.state.robots[i].apply_hit(p.robot_hp);
                let hits_taken = self.state.robots[i].hits_taken;
                self.emit(Event::Shot { robot: i, hit, hits_taken });
                if killed {
                    self.emit(Event::Kill { robot: i });
                    self.sync_robot(i);
                }
                if self.state.magazine == 0 {
                    self.state.reload_ticks = ticks(p.reload);
                    self.emit(Event::Reload);
                }
            }
        } else {
            let goal = self.goal;
            let to = Vec3::new(goal.x - self.position.x, goal.y - self.position.y, 0.0);
            let remaining = to.length();
            let step = p.walk_speed * DT;
            if remaining > 0.0 {
                self.turn_toward(libm::atan2(to.y, to.x));
                let moved = step.min(remaining);
                self.position = self.position + to * (moved / remaining);
                self.state.distance += moved;
            }
            if step >= remaining {
                self.state.waypoint = (self.state.waypoint + 1) % self.patrol.len();
                if self.state.waypoint == 0 {
                    // The patrol is closed; its last vertex repeats the first.
                    self.state.waypoint = 1;
                }
                self.goal = self.jittered(self.state.waypoint);
            }
        }
        self.update_player();

        // Robots: pursue within detection range, then shoot on sight.
        let player_xy = Vec3::new(self.position.x, self.position.y, 0.0);
        for i in 0..self.state.robots.len() {
            if !self.state.robots[i].alive {
                continue;
            }
            let pos = self.state.robots[i].pose.position;
            let to = player_xy - Vec3::new(pos.x, pos.y, 0.0);
            let d = to.length();
            if d > self.detection_radius {
                continue;
            }
            let mut next = pos;
            if d > p.robot_stop {
                let step = (p.robot_speed * DT).min(d - p.robot_stop);
                let delta = to * (step / d);
                let try_x = Vec3::new(next.x + delta.x, next.y, 0.0);
                if !self.blocked(try_x) {
                    next = try_x;
                }
                let try_y = Vec3::new(next.x, next.y + delta.y, 0.0);
                if !self.blocked(try_y) {
                    next = try_y;
                }
            }
            let yaw = libm::atan2(to.y, to.x);
            self.state.robots[i].pose = Pose::new(next, yaw, 0.0, 0.0);
            self.sync_robot(i);
        }
        for i in 0..self.state.robots.len() {
            let r = &mut self.state.robots[i];
            if !r.alive {
                continue;
            }
            r.fire_cooldown = r.fire_cooldown.saturating_sub(1);
            let ready = r.fire_cooldown == 0 && r.pose.position.planar_distance(player_xy) <= self.detection_radius;
            if ready && self.robot_sees_player(i) {
                self.state.robots[i].fire_cooldown = ticks(p.robot_fire_interval);
                let hit = self.rng.chance(p.robot_hit_prob);
                if hit {
                    self.state.shots_received += 1;
                }
                self.emit(Event::RobotShot { robot: i, hit });
            }
        }

        if self.state.robots_alive() == 0 {
            self.state.finished = true;
        }
    }

    pub fn row(&self) -> TickRow {
        TickRow {
            tick: self.state.tick,
            time: self.state.elapsed(),
            body: self.state.player,
            head_yaw: 0.0,
            head_pitch: 0.0,
            speed: 0.0,
            coins: 0,
            crashes: 0,
            distance: self.state.distance,
            shots_received: self.state.shots_received,
            robots_alive: self.state.robots_alive(),
        }
    }

    pub fn head(&self) -> Pose {
        self.state.player
    }
}
