//! Racing testbed: a scripted pilot drives two laps collecting coins.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ticks, Event, GameError, TickRow, TickedEvent, DT};
use crate::math::{wrap_angle, Pose, Vec3};
use crate::rng::SimRng;
use crate::scene::{Role, Scene};
use crate::track::{build_racing_scene, RacingTrack, TrackSpec, SURFACE_LIFT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RacingParams {
    /// 70 km/h.
    pub v_max: f64,
    pub accel: f64,
    pub brake: f64,
    /// Horizontal distance at which a coin is collected.
    pub coin_radius: f64,
    /// Radius of the vehicle's collision disc.
    pub car_radius: f64,
    pub crash_pause: f64,
    pub eye_height: f64,
    /// Amplitude of the pilot's seeded lateral wander, meters.
    pub wander: f64,
    pub wander_period: f64,
    pub lookahead_min: f64,
    pub yaw_rate_max: f64,
    pub kp: f64,
    pub kd: f64,
}

impl Default for RacingParams {
    fn default() -> Self {
        RacingParams {
            v_max: 19.444,
            accel: 3.0,
            brake: 6.0,
            coin_radius: 1.2,
            car_radius: 1.0,
            crash_pause: 3.0,
            eye_height: 1.2,
            wander: 3.0,
            wander_period: 6.0,
            lookahead_min: 8.0,
            yaw_rate_max: 1.5,
            kp: 2.0,
            kd: 0.2,
        }
    }
}

impl RacingParams {
    pub fn validate(&self) -> Result<(), GameError> {
        let positive = [
            (self.v_max, "racing.v_max must be positive"),
            (self.accel, "racing.accel must be positive"),
            (self.brake, "racing.brake must be positive"),
            (self.coin_radius, "racing.coin_radius must be positive"),
            (self.car_radius, "racing.car_radius must be positive"),
            (self.eye_height, "racing.eye_height must be positive"),
            (self.wander_period, "racing.wander_period must be positive"),
            (self.lookahead_min, "racing.lookahead_min must be positive"),
            (self.yaw_rate_max, "racing.yaw_rate_max must be positive"),
        ];
        for (v, msg) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GameError::InvalidParam(msg));
            }
        }
        if !(self.crash_pause >= 0.0 && self.wander >= 0.0 && self.kp >= 0.0 && self.kd >= 0.0) {
            return Err(GameError::InvalidParam("racing.crash_pause, wander, kp and kd must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RacingState {
    pub body: Pose,
    pub heading: f64,
    pub speed: f64,
    pub lap: u32,
    /// Arc length driven along the centerline since the start, meters.
    pub progress: f64,
    pub coins: u32,
    pub crashes: u32,
    /// Remaining crash pause in ticks.
    pub pause_ticks: u32,
    pub tick: u64,
    pub coin_alive: Vec<bool>,
    /// Odometer, meters.
    pub distance: f64,
    pub finished: bool,
}

impl RacingState {
    pub fn elapsed(&self) -> f64 {
        self.tick as f64 * DT
    }

    pub fn pause_remaining(&self) -> f64 {
        self.pause_ticks as f64 * DT
    }
}

pub struct RacingSim {
    pub track: RacingTrack,
    pub scene: Scene,
    pub state: RacingState,
    params: RacingParams,
    coin_entities: Vec<usize>,
    rng: SimRng,
    position: Vec3,
    wander_target: f64,
    wander_left: u32,
    prev_error: Option<f64>,
    /// Progress each barrier is ignored until, after a crash into it.
    barrier_ignore: Vec<Option<f64>>,
    events: Vec<TickedEvent>,
}

impl RacingSim {
    pub fn new(spec: &TrackSpec, params: &RacingParams, seed: u64) -> Result<RacingSim, GameError> {
        params.validate()?;
        let track = RacingTrack::new(spec)?;
        let scene = build_racing_scene(spec, seed)?;
        let coin_entities: Vec<usize> = scene
            .entities
            .iter()
            .enumerate()
            .filter(|(_, e)| e.role == Role::Coin)
            .map(|(i, _)| i)
            .collect();
        let position = track.line.point_at(0.0);
        let heading = track.line.heading_at(0.0);
        let n_coins = track.coins.len();
        let n_barriers = track.barriers.len();
        let mut sim = RacingSim {
            state: RacingState {
                body: Pose::IDENTITY,
                heading,
                speed: 0.0,
                lap: 0,
                progress: 0.0,
                coins: 0,
                crashes: 0,
                pause_ticks: 0,
                tick: 0,
                coin_alive: alloc::vec![true; n_coins],
                distance: 0.0,
                finished: false,
            },
            track,
            scene,
            params: params.clone(),
            coin_entities,
            rng: SimRng::stream(seed, 0x6472_6976),
            position,
            wander_target: 0.0,
            wander_left: 0,
            prev_error: None,
            barrier_ignore: alloc::vec![None; n_barriers],
            events: Vec::new(),
        };
        sim.update_body();
        Ok(sim)
    }

    pub fn params(&self) -> &RacingParams {
        &self.params
    }

    pub fn take_events(&mut self) -> Vec<TickedEvent> {
        core::mem::take(&mut self.events)
    }

    fn emit(&mut self, event: Event) {
        self.events.push(TickedEvent { tick: self.state.tick, event });
    }

    fn update_body(&mut self) {
        let line = &self.track.line;
        let s = line.wrap(self.state.progress);
        let z = line.point_at(s).z + SURFACE_LIFT + self.params.eye_height;
        let eye = Vec3::new(self.position.x, self.position.y, z);
        self.state.body = Pose::new(eye, self.state.heading, line.slope_at(s), 0.0);
    }

    fn sync_coins(&mut self) {
        for (k, &i) in self.coin_entities.iter().enumerate() {
            self.scene.entities[i].alive = self.state.coin_alive[k];
        }
    }

    fn respawn(&mut self) {
        let line = &self.track.line;
        let s = line.wrap(self.state.progress);
        self.position = line.point_at(s);
        self.state.heading = line.heading_at(s);
        self.wander_target = 0.0;
        self.prev_error = None;
        self.emit(Event::Respawn);
    }

    /// Advances one tick. No-op once the session has finished.
    pub fn step(&mut self) {
        if self.state.finished {
            return;
        }
        self.state.tick += 1;
        if self.state.pause_ticks > 0 {
            self.state.pause_ticks -= 1;
            if self.state.pause_ticks == 0 {
                self.respawn();
            }
            self.update_body();
            return;
        }
        let p = self.params.clone();
        let line_len = self.track.line.length();

        if self.wander_left == 0 {
            self.wander_target = p.wander * self.rng.range(-1.0, 1.0);
            self.wander_left = ticks(p.wander_period);
        }
        self.wander_left -= 1;

        let line = &self.track.line;
        let s = line.wrap(self.state.progress);
        let ahead = p.lookahead_min.max(self.state.speed);
        let target = line.point_at(s + ahead) + line.left_at(s + ahead) * self.wander_target;
        let desired = libm::atan2(target.y - self.position.y, target.x - self.position.x);
        let error = wrap_angle(desired - self.state.heading);
        let d_error = self.prev_error.map_or(0.0, |e| wrap_angle(error - e) / DT);
        self.prev_error = Some(error);
        let limit = if self.state.speed > 0.0 {
            p.yaw_rate_max.min(8.0 / self.state.speed)
        } else {
            p.yaw_rate_max
        };
        let yaw_rate = (p.kp * error + p.kd * d_error).clamp(-limit, limit);
        self.state.heading = wrap_angle(self.state.heading + yaw_rate * DT);

        let turn = line.turn_ahead(s, 40.0) / core::f64::consts::FRAC_PI_4;
        let target_speed = p.v_max * (1.0 - 0.5 * turn.min(1.0));
        let v = self.state.speed;
        let v = if v < target_speed {
            (v + p.accel * DT).min(target_speed)
        } else {
            (v - p.brake * DT).max(target_speed)
        };
        self.state.speed = v.clamp(0.0, p.v_max);

        let step = self.state.speed * DT;
        self.position.x += libm::cos(self.state.heading) * step;
        self.position.y += libm::sin(self.state.heading) * step;
        self.state.distance += step;

        let (s_new, _, _) = line.project(self.position);
        let mut ds = s_new - s;
        if ds > 0.5 * line_len {
            ds -= line_len;
        } else if ds < -0.5 * line_len {
            ds += line_len;
        }
        self.state.progress += ds;

        for k in 0..self.track.coins.len() {
            if self.state.coin_alive[k] && self.track.coins[k].planar_distance(self.position) < p.coin_radius {
                self.state.coin_alive[k] = false;
                self.state.coins += 1;
                self.emit(Event::Coin { coin: k });
            }
        }

        if self.state.progress >= (self.state.lap + 1) as f64 * line_len {
            self.state.lap += 1;
            let lap = self.state.lap;
            self.emit(Event::Lap { lap });
            if lap >= self.track.laps {
                self.state.finished = true;
            } else {
                self.state.coin_alive.iter_mut().for_each(|a| *a = true);
            }
        }

        if !self.state.finished {
            for i in 0..self.track.barriers.len() {
                if let Some(until) = self.barrier_ignore[i] {
                    if self.state.progress < until {
                        continue;
                    }
                    self.barrier_ignore[i] = None;
                }
                let b = self.track.barriers[i];
                if b.overlaps_disc(self.position, p.car_radius) {
                    let mut ahead = b.s - s_new;
                    if ahead > 0.5 * line_len {
                        ahead -= line_len;
                    } else if ahead < -0.5 * line_len {
                        ahead += line_len;
                    }
                    self.barrier_ignore[i] = Some(self.state.progress + ahead.max(0.0) + 3.0);
                    self.state.speed = 0.0;
                    self.state.crashes += 1;
                    self.state.pause_ticks = libm::round(p.crash_pause / DT) as u32;
                    self.emit(Event::Crash { barrier: i });
                    if self.state.pause_ticks == 0 {
                        self.respawn();
                    }
                    break;
                }
            }
        }

        self.sync_coins();
        self.update_body();
    }

    pub fn row(&self) -> TickRow {
        TickRow {
            tick: self.state.tick,
            time: self.state.elapsed(),
            body: self.state.body,
            head_yaw: 0.0,
            head_pitch: 0.0,
            speed: self.state.speed,
            coins: self.state.coins,
            crashes: self.state.crashes,
            distance: self.state.distance,
            shots_received: 0,
            robots_alive: 0,
        }
    }

    /// Head pose in the world (aligned with the vehicle).
    pub fn head(&self) -> Pose {
        self.state.body
    }
}
