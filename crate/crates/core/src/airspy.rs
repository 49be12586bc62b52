//! AirSpy: a UAV eavesdropper that knows the receiver's lane and speed,
//! predicts the transmit beam sequence and plans a trajectory on a plane in
//! front of the array that maximizes its own accumulated rate.
//!
//! States are `(cell, t)` on a `G × G` grid of plane coordinates
//! `u, v ∈ {−1 + 2i/G}`. Finite-horizon backward induction gives
//! `H(s, t) = max_{s′} R(s′, t+1) + H(s′, t+1)` with `H(·, N−1) = 0`;
//! infeasible states carry `−∞`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::array::{beam_gain, ArrayConfig, Beamformer, GridIndex, Resolution};
use crate::channel::path_power;
use crate::error::{CsbError, Result};
use crate::geometry::{msph_of_plane_coord, rect_to_msph, RectPoint, SphPoint, UavPlaneCoord, UavPlaneSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub theta_tilt: f64,
    /// Height of the transmitter above the lane.
    pub h: f64,
    pub lane_x: f64,
    pub rx_speed: f64,
    pub y_start: f64,
    pub y_end: f64,
    pub t_s: f64,
    pub sigma2: f64,
    pub p0: f64,
    pub r0: f64,
    /// Path-loss exponent; 2 is free space, 0 makes power range-independent.
    pub path_loss_exponent: f64,
}

impl Scenario {
    /// 16×16 array tilted 15°, 8 m above a lane 3 m away, receiver at
    /// 20 m/s over y ∈ [−10, 10] sampled every 25 ms (41 steps).
    pub fn reference(resolution: Resolution) -> Self {
        Self {
            array: ArrayConfig::square(16, resolution).expect("16 is a valid array size"),
            theta_tilt: 15f64.to_radians(),
            h: 8.0,
            lane_x: 3.0,
            rx_speed: 20.0,
            y_start: -10.0,
            y_end: 10.0,
            t_s: 0.025,
            sigma2: 0.01,
            p0: 1.0,
            r0: 1.0,
            path_loss_exponent: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h", self.h),
            ("lane_x", self.lane_x),
            ("rx_speed", self.rx_speed),
            ("t_s", self.t_s),
            ("sigma2", self.sigma2),
            ("p0", self.p0),
            ("r0", self.r0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CsbError::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.path_loss_exponent >= 0.0 && self.path_loss_exponent.is_finite()) {
            return Err(CsbError::InvalidParameter(format!("path loss exponent {}", self.path_loss_exponent)));
        }
        if !(self.y_end >= self.y_start) {
            return Err(CsbError::InvalidParameter(format!("y range [{}, {}] is empty", self.y_start, self.y_end)));
        }
        Ok(())
    }

    /// Episode length `span / (speed·T_s) + 1`.
    pub fn num_steps(&self) -> usize {
        ((self.y_end - self.y_start) / (self.rx_speed * self.t_s)).round() as usize + 1
    }

    pub fn rx_position(&self, t: usize) -> RectPoint {
        RectPoint::new(self.lane_x, self.y_start + self.rx_speed * self.t_s * t as f64, -self.h)
    }

    /// `p0·(r0/r)^α`; free space when `α = 2`.
    pub fn received_power(&self, r: f64) -> Result<f64> {
        let free_space = path_power(r, self.p0, self.r0)?;
        if self.path_loss_exponent == 2.0 {
            Ok(free_space)
        } else {
            Ok(self.p0 * (self.r0 / r).powf(self.path_loss_exponent))
        }
    }

    fn snr_term(&self, r: f64) -> Result<f64> {
        Ok(self.received_power(r)? / self.sigma2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxState {
    /// Grid direction the transmitter steers to.
    pub grid: GridIndex,
    pub position: SphPoint,
}

pub fn rx_state_at(scenario: &Scenario, t: usize) -> Result<RxState> {
    if t >= scenario.num_steps() {
        return Err(CsbError::InvalidParameter(format!("step {t} outside episode of {}", scenario.num_steps())));
    }
    let position = rect_to_msph(scenario.rx_position(t), scenario.theta_tilt)?;
    Ok(RxState { grid: scenario.array.nearest_grid(position.theta, position.phi), position })
}

/// `log2(1 + ρ·|⟨V, F⟩|²)` toward `p`, with `ρ` from the path power at `p.r`.
pub fn link_rate(f: &Beamformer, p: SphPoint, scenario: &Scenario) -> Result<f64> {
    let g = beam_gain(&scenario.array.response(p.theta, p.phi), f)?;
    Ok((1.0 + scenario.snr_term(p.r)? * g.norm_sqr()).log2())
}

/// Unclamped `log2(1+ρ_R|g_R|²) − log2(1+ρ_E|g_E|²)`; negative when the
/// eavesdropper hears more than the receiver.
pub fn secrecy_rate(f: &Beamformer, rx: SphPoint, eve: SphPoint, scenario: &Scenario) -> Result<f64> {
    Ok(link_rate(f, rx, scenario)? - link_rate(f, eve, scenario)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConstraints {
    pub uav_plane: UavPlaneSpec,
    pub v_max: f64,
    /// Minimum combined angular separation from the receiver, radians.
    pub epsilon: f64,
    pub grid_g: usize,
}

impl AttackConstraints {
    /// Plane 1 m in front of the array spanning 160°, 17 m/s, ε = 3°, G = 64.
    pub fn reference(theta_tilt: f64) -> Self {
        Self {
            uav_plane: UavPlaneSpec::new(1.0, 160f64.to_radians(), theta_tilt).expect("valid plane"),
            v_max: 17.0,
            epsilon: 3f64.to_radians(),
            grid_g: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_max >= 0.0) || !(self.epsilon >= 0.0) || self.grid_g < 2 {
            return Err(CsbError::InvalidParameter(format!(
                "v_max={} epsilon={} G={} out of range",
                self.v_max, self.epsilon, self.grid_g
            )));
        }
        Ok(())
    }

    /// Largest admissible per-step move in plane units,
    /// `v_max·T_s / (2d·tan(β/2))`.
    pub fn step_radius(&self, t_s: f64) -> f64 {
        self.v_max * t_s / (2.0 * self.uav_plane.half_width())
    }

    pub fn coord(&self, c: Cell) -> UavPlaneCoord {
        let g = self.grid_g as f64;
        UavPlaneCoord::new(-1.0 + 2.0 * c.iu as f64 / g, -1.0 + 2.0 * c.iv as f64 / g)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.grid_g).flat_map(|iu| (0..self.grid_g).map(move |iv| Cell { iu, iv }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub iu: usize,
    pub iv: usize,
}

impl Cell {
    pub fn new(iu: usize, iv: usize) -> Self {
        Self { iu, iv }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub cells: Vec<Cell>,
    pub steps: Vec<UavPlaneCoord>,
    /// Sum of per-step rewards, start state excluded.
    pub total_reward: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub grid_g: usize,
    pub num_steps: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn get(&self, c: Cell, t: usize) -> f64 {
        self.values[(t * self.grid_g + c.iu) * self.grid_g + c.iv]
    }
}

/// Rewards and feasibility of every `(cell, t)`, fixed before planning.
#[derive(Debug, Clone)]
pub struct AttackProblem {
    pub grid_g: usize,
    pub num_steps: usize,
    rewards: Vec<f64>,
    feasible: Vec<bool>,
    offsets: Vec<(i64, i64)>,
    context: Option<Box<ProblemContext>>,
}

#[derive(Debug, Clone)]
struct ProblemContext {
    scenario: Scenario,
    constraints: AttackConstraints,
    rx: Vec<RxState>,
    beams: Vec<Beamformer>,
}

fn move_offsets(grid_g: usize, radius: f64) -> Vec<(i64, i64)> {
    let cell = 2.0 / grid_g as f64;
    let reach = ((radius / cell).floor() as i64).min(grid_g as i64);
    let mut out = Vec::new();
    for du in -reach..=reach {
        for dv in -reach..=reach {
            let d = cell * ((du * du + dv * dv) as f64).sqrt();
            if d <= radius * (1.0 + 1e-12) {
                out.push((du, dv));
            }
        }
    }
    out
}

impl AttackProblem {
    pub fn new(scenario: &Scenario, constraints: &AttackConstraints) -> Result<Self> {
        scenario.validate()?;
        constraints.validate()?;
        let n = scenario.num_steps();
        let rx = (0..n).map(|t| rx_state_at(scenario, t)).collect::<Result<Vec<_>>>()?;
        let beams: Vec<Beamformer> = rx.iter().map(|s| scenario.array.beam_toward(s.grid)).collect();
        let g = constraints.grid_g;
        let cells: Vec<Cell> = constraints.cells().collect();
        let plane = &constraints.uav_plane;
        let eps2 = constraints.epsilon * constraints.epsilon;
        let table: Vec<(f64, bool)> = (0..n)
            .into_par_iter()
            .flat_map_iter(|t| {
                let (rx, beam) = (&rx[t], &beams[t]);
                cells.iter().map(move |&c| {
                    let pc = constraints.coord(c);
                    if !plane.contains(pc) {
                        return (0.0, false);
                    }
                    let p = msph_of_plane_coord(pc, plane).expect("contained points are in front");
                    let sep = (p.theta - rx.position.theta).powi(2) + (p.phi - rx.position.phi).powi(2);
                    let reward = link_rate(beam, p, scenario).expect("finite plane point");
                    (reward, sep > eps2)
                })
            })
            .collect();
        let (rewards, feasible) = table.into_iter().unzip();
        Ok(Self {
            grid_g: g,
            num_steps: n,
            rewards,
            feasible,
            offsets: move_offsets(g, constraints.step_radius(scenario.t_s)),
            context: Some(Box::new(ProblemContext { scenario: *scenario, constraints: *constraints, rx, beams })),
        })
    }

    /// Problem from explicit tables indexed `[(t·G + iu)·G + iv]`, with moves
    /// limited to `radius` in plane units.
    pub fn from_tables(grid_g: usize, num_steps: usize, rewards: Vec<f64>, feasible: Vec<bool>, radius: f64) -> Result<Self> {
        let size = grid_g * grid_g * num_steps;
        if grid_g < 1 || num_steps < 1 || rewards.len() != size || feasible.len() != size {
            return Err(CsbError::InvalidParameter(format!("tables must hold G²·N = {size} entries")));
        }
        Ok(Self { grid_g, num_steps, rewards, feasible, offsets: move_offsets(grid_g, radius), context: None })
    }

    fn idx(&self, c: Cell, t: usize) -> usize {
        (t * self.grid_g + c.iu) * self.grid_g + c.iv
    }

    /// `R(s′)` for being at `c` at step `t`.
    pub fn reward(&self, c: Cell, t: usize) -> f64 {
        self.rewards[self.idx(c, t)]
    }

    /// Inside the plane and ε-separated from the receiver at step `t`.
    pub fn is_feasible(&self, c: Cell, t: usize) -> bool {
        self.feasible[self.idx(c, t)]
    }

    /// Successors of `(c, t)` at `t + 1`, in ascending `(iu, iv)` order.
    pub fn valid_actions(&self, c: Cell, t: usize) -> Vec<Cell> {
        if t + 1 >= self.num_steps {
            return Vec::new();
        }
        let g = self.grid_g as i64;
        self.offsets
            .iter()
            .filter_map(|&(du, dv)| {
                let (u, v) = (c.iu as i64 + du, c.iv as i64 + dv);
                ((0..g).contains(&u) && (0..g).contains(&v)).then(|| Cell::new(u as usize, v as usize))
            })
            .filter(|&n| self.is_feasible(n, t + 1))
            .collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let g = self.grid_g;
        (0..g).flat_map(move |iu| (0..g).map(move |iv| Cell { iu, iv }))
    }

    pub fn scenario(&self) -> Option<&Scenario> {
        self.context.as_ref().map(|c| &c.scenario)
    }

    pub fn constraints(&self) -> Option<&AttackConstraints> {
        self.context.as_ref().map(|c| &c.constraints)
    }

    pub fn rx_states(&self) -> &[RxState] {
        self.context.as_ref().map(|c| c.rx.as_slice()).unwrap_or(&[])
    }

    pub fn beams(&self) -> &[Beamformer] {
        self.context.as_ref().map(|c| c.beams.as_slice()).unwrap_or(&[])
    }

    fn best_successor(&self, c: Cell, t: usize, next: &[f64]) -> Option<(Cell, f64)> {
        let g = self.grid_g;
        let mut best: Option<(Cell, f64)> = None;
        for n in self.valid_actions(c, t) {
            let h = next[n.iu * g + n.iv];
            if h == f64::NEG_INFINITY {
                continue;
            }
            let q = self.reward(n, t + 1) + h;
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((n, q));
            }
        }
        best
    }

    pub fn value_iteration(&self) -> ValueTable {
        let (g, n) = (self.grid_g, self.num_steps);
        let layer = g * g;
        let mut values = vec![f64::NEG_INFINITY; layer * n];
        for c in self.cells() {
            if self.is_feasible(c, n - 1) {
                values[(n - 1) * layer + c.iu * g + c.iv] = 0.0;
            }
        }
        for t in (0..n - 1).rev() {
            let (head, tail) = values.split_at_mut((t + 1) * layer);
            let next = &tail[..layer];
            let cur = &mut head[t * layer..];
            cur.par_iter_mut().enumerate().for_each(|(k, h)| {
                let c = Cell::new(k / g, k % g);
                if self.is_feasible(c, t) {
                    if let Some((_, q)) = self.best_successor(c, t, next) {
                        *h = q;
                    }
                }
            });
        }
        ValueTable { grid_g: g, num_steps: n, values }
    }

    /// Best start cell, then greedy successors; ties go to the smallest cell.
    pub fn extract_trajectory(&self, table: &ValueTable) -> Result<Trajectory> {
        let g = self.grid_g;
        let layer = g * g;
        let mut start: Option<(Cell, f64)> = None;
        for c in self.cells() {
            let h = table.get(c, 0);
            if h > f64::NEG_INFINITY && start.is_none_or(|(_, b)| h > b) {
                start = Some((c, h));
            }
        }
        let (mut c, total) = start.ok_or_else(|| CsbError::Infeasible("no feasible start state".into()))?;
        let mut cells = vec![c];
        for t in 0..self.num_steps - 1 {
            let next = &table.values[(t + 1) * layer..(t + 2) * layer];
            let (n, _) = self
                .best_successor(c, t, next)
                .ok_or_else(|| CsbError::Infeasible(format!("dead end at step {t}")))?;
            cells.push(n);
            c = n;
        }
        Ok(self.trajectory_from_cells(cells, total))
    }

    fn trajectory_from_cells(&self, cells: Vec<Cell>, total_reward: f64) -> Trajectory {
        let g = self.grid_g as f64;
        let steps = cells
            .iter()
            .map(|c| UavPlaneCoord::new(-1.0 + 2.0 * c.iu as f64 / g, -1.0 + 2.0 * c.iv as f64 / g))
            .collect();
        Trajectory { cells, steps, total_reward }
    }

    /// Sum of rewards after the start state, accumulated from the last step
    /// backwards.
    pub fn path_reward(&self, cells: &[Cell]) -> f64 {
        cells.iter().enumerate().skip(1).rev().fold(0.0, |acc, (t, &c)| self.reward(c, t) + acc)
    }

    /// Whether consecutive cells are reachable and every state is feasible.
    pub fn is_permissible(&self, cells: &[Cell]) -> bool {
        cells.len() == self.num_steps
            && self.is_feasible(cells[0], 0)
            && cells.windows(2).enumerate().all(|(t, w)| self.valid_actions(w[0], t).contains(&w[1]))
    }
}

pub fn value_iteration(problem: &AttackProblem) -> ValueTable {
    problem.value_iteration()
}

pub fn extract_trajectory(problem: &AttackProblem, table: &ValueTable) -> Result<Trajectory> {
    problem.extract_trajectory(table)
}

/// Exhaustive search over every permissible path; the first path in
/// lexicographic order wins ties. Exponential, for small instances only.
pub fn brute_force_best_trajectory(problem: &AttackProblem) -> Result<Trajectory> {
    fn walk(p: &AttackProblem, path: &mut Vec<Cell>, best: &mut Option<(Vec<Cell>, f64)>) {
        let t = path.len() - 1;
        if path.len() == p.num_steps {
            let r = p.path_reward(path);
            if best.as_ref().is_none_or(|(_, b)| r > *b) {
                *best = Some((path.clone(), r));
            }
            return;
        }
        for n in p.valid_actions(path[t], t) {
            path.push(n);
            walk(p, path, best);
            path.pop();
        }
    }
    let mut best = None;
    for c in problem.cells() {
        if problem.is_feasible(c, 0) {
            let mut path = vec![c];
            walk(problem, &mut path, &mut best);
        }
    }
    let (cells, total) = best.ok_or_else(|| CsbError::Infeasible("no permissible path".into()))?;
    Ok(problem.trajectory_from_cells(cells, total))
}

/// One row per step of a planned trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackStep {
    pub time: f64,
    pub coord: UavPlaneCoord,
    pub eve: SphPoint,
    pub rx: SphPoint,
    pub reward: f64,
    pub secrecy_rate: f64,
}

/// Per-step secrecy rate along `trajectory` with each step's beam.
pub fn episode_secrecy_profile(problem: &AttackProblem, trajectory: &Trajectory) -> Result<Vec<AttackStep>> {
    let ctx = problem
        .context
        .as_ref()
        .ok_or_else(|| CsbError::InvalidParameter("problem has no scenario".into()))?;
    trajectory
        .steps
        .iter()
        .zip(&trajectory.cells)
        .enumerate()
        .map(|(t, (&coord, &cell))| {
            let eve = msph_of_plane_coord(coord, &ctx.constraints.uav_plane)?;
            let rx = ctx.rx[t].position;
            Ok(AttackStep {
                time: t as f64 * ctx.scenario.t_s,
                coord,
                eve,
                rx,
                reward: problem.reward(cell, t),
                secrecy_rate: secrecy_rate(&ctx.beams[t], rx, eve, &ctx.scenario)?,
            })
        })
        .collect()
}

pub fn trajectory_csv(steps: &[AttackStep]) -> String {
    let mut out = String::from("t_s,u,v,theta_deg,phi_deg,reward,secrecy_rate\n");
    for s in steps {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.time,
            s.coord.u,
            s.coord.v,
            s.eve.theta.to_degrees(),
            s.eve.phi.to_degrees(),
            s.reward,
            s.secrecy_rate
        )
        .unwrap();
    }
    out
}
