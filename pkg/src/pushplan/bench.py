"""Benchmark harness: closed-loop trials, seeded suites, CSV results.

A trial runs observe -> filter update -> recompute affordances -> plan ->
execute until the *estimated* pose reaches the goal region or the step budget
runs out.  Records keep both that stop condition and the true end-pose error,
since stopping on an estimate inflates the real error.  Suites derive one
seed per (cell, trial) from a master seed, so every record is exactly
reproducible and aggregates can always be recomputed from the raw records.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import product

import numpy as np

from . import estimation
from .affordance import compute_affordances
from .estimation import DEFAULT_FILTER_CONFIG, FilterConfig, init_belief
from .geometry import Pose2, load_shape, wrap_angle
from .planner import GoalSpec, PlannerConfig, plan_step
from .sim import WorldConfig, goal_reached, spawn

GOAL_SIZES = {
    "small": (0.0075, math.radians(5.0)),
    "medium": (0.025, math.radians(7.5)),
    "large": (0.05, math.radians(10.0)),
}

TASK_KINDS = ("translation", "rotation", "mixed")

N_ORIENTATIONS = 20  # initial orientations step the full circle in 18-degree increments


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    translation: float
    rotation: float
    tol_pos: float
    tol_theta: float
    max_steps: int = 30

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"task kind must be one of {TASK_KINDS}")
        if self.tol_pos <= 0 or self.tol_theta <= 0:
            raise ValueError("tolerances must be positive")


def make_task(kind: str, goal_size: str = "small", max_steps: int = 30) -> TaskSpec:
    """The three benchmark tasks: 20 cm translation, 0.5 rad rotation, or
    10 cm plus 0.35 rad combined."""
    tol_pos, tol_theta = GOAL_SIZES[goal_size]
    if kind == "translation":
        return TaskSpec(kind, 0.20, 0.0, tol_pos, tol_theta, max_steps)
    if kind == "rotation":
        return TaskSpec(kind, 0.0, 0.5, tol_pos, tol_theta, max_steps)
    if kind == "mixed":
        return TaskSpec(kind, 0.10, 0.35, tol_pos, tol_theta, max_steps)
    raise ValueError(f"unknown task kind {kind!r}")


@dataclass(frozen=True)
class StepRecord:
    step: int
    action: tuple            # (contact_index, angle, length)
    obs_pose: tuple          # (x, y, theta)
    true_pose: tuple
    est_state: tuple         # 7-vector (true state padded in ground-truth mode)


@dataclass(frozen=True)
class TrialRecord:
    """One closed-loop episode with everything needed to recompute metrics."""

    task_kind: str
    object_name: str
    sampler: str
    optimizer: str
    k: int
    seed: int
    initial_theta: float
    use_filter: bool
    goal_pose: tuple
    true_com: tuple
    true_l: float
    true_mu: float
    steps: tuple = field(default_factory=tuple)
    steps_taken: int = 0
    success: bool = False
    stopped_on_estimate: bool = False
    final_pos_err: float = math.inf
    final_theta_err: float = math.inf
    com_errors: tuple = field(default_factory=tuple)

    def jsonl_lines(self) -> list[str]:
        """Episode log: one JSON record per step."""
        lines = []
        for s in self.steps:
            lines.append(json.dumps({
                "step": s.step,
                "action": {"contact_index": s.action[0], "angle": s.action[1],
                           "length": s.action[2]},
                "obs_pose": list(s.obs_pose),
                "true_pose": list(s.true_pose),
                "est_state": list(s.est_state),
            }, sort_keys=True))
        return lines

    def write_jsonl(self, path) -> None:
        with open(path, "w") as f:
            for line in self.jsonl_lines():
                f.write(line + "\n")


def _derived_seed(*keys) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def run_trial(task: TaskSpec, world_config: WorldConfig,
              planner_config: PlannerConfig, seed: int,
              initial_theta: float = 0.0, use_filter: bool = True,
              filter_config: FilterConfig = DEFAULT_FILTER_CONFIG,
              l0: float = 0.04, mu0: float = 0.3) -> TrialRecord:
    """Run one closed-loop episode.

    With use_filter=False the planner sees the true state every step
    (ground-truth mode); otherwise an EKF tracks the full state from noisy
    pose observations.  All randomness derives from `seed`.
    """
    world_cfg = replace(world_config, rng_seed=_derived_seed(seed, 0))
    planner_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    world = spawn(world_cfg, initial_theta)
    contour = world.contour

    start = world.state.pose
    goal_pose = Pose2(start.position + np.array([task.translation, 0.0]),
                      start.theta + task.rotation)
    goal = GoalSpec(goal_pose, task.tol_pos, task.tol_theta)

    belief = None
    if use_filter:
        obs0 = world.observe()
        belief = init_belief(obs0, l0, mu0)
        sig_p = max(world_cfg.obs_noise_pos, 1e-6)
        sig_t = max(world_cfg.obs_noise_theta, 1e-6)
        R = np.diag([sig_p ** 2, sig_p ** 2, sig_t ** 2])

    steps: list[StepRecord] = []
    com_errors: list[float] = []
    stopped = False
    for step in range(task.max_steps):
        est = belief.object_state() if use_filter else world.state
        if goal_reached(est.pose, goal_pose, task.tol_pos, task.tol_theta):
            stopped = True
            break
        amap = compute_affordances(contour, est, "one-step")
        action = plan_step(est, contour, goal, planner_config, planner_rng, amap)
        obs = world.execute(action, believed_pose=est.pose)
        if use_filter:
            belief = estimation.predict(belief, action, contour, filter_config)
            belief = estimation.update(belief, obs, R)
            est_state = tuple(belief.mean)
        else:
            tw = world.state
            est_state = (tw.pose.position[0], tw.pose.position[1], tw.pose.theta,
                         tw.com[0], tw.com[1], tw.limit_param, tw.mu)
        com_errors.append(float(np.linalg.norm(np.array(est_state[3:5]) - world.state.com)))
        steps.append(StepRecord(
            step=step,
            action=(action.contact_index, action.angle, action.length),
            obs_pose=tuple(obs.pose.as_array()),
            true_pose=tuple(world.state.pose.as_array()),
            est_state=est_state,
        ))
    else:
        est = belief.object_state() if use_filter else world.state
        stopped = goal_reached(est.pose, goal_pose, task.tol_pos, task.tol_theta)

    true_pose = world.state.pose
    pos_err = float(np.linalg.norm(true_pose.position - goal_pose.position))
    theta_err = abs(wrap_angle(true_pose.theta - goal_pose.theta))
    return TrialRecord(
        task_kind=task.kind,
        object_name=world_cfg.object_name,
        sampler=planner_config.sampler,
        optimizer=planner_config.optimizer,
        k=planner_config.k,
        seed=seed,
        initial_theta=float(wrap_angle(initial_theta)),
        use_filter=use_filter,
        goal_pose=tuple(goal_pose.as_array()),
        true_com=tuple(world.state.com),
        true_l=world.state.limit_param,
        true_mu=world.state.mu,
        steps=tuple(steps),
        steps_taken=len(steps),
        success=goal_reached(true_pose, goal_pose, task.tol_pos, task.tol_theta),
        stopped_on_estimate=stopped,
        final_pos_err=pos_err,
        final_theta_err=theta_err,
        com_errors=tuple(com_errors),
    )


def trial_orientations(trials: int) -> np.ndarray:
    """Initial orientations: 18-degree grid, repeated for extra runs."""
    grid = np.arange(N_ORIENTATIONS) * (2.0 * math.pi / N_ORIENTATIONS)
    reps = math.ceil(trials / N_ORIENTATIONS)
    return np.tile(grid, reps)[:trials]


def _run_cell_trial(args):
    task, world_cfg, planner_cfg, seed, theta, use_filter = args
    return run_trial(task, world_cfg, planner_cfg, seed,
                     initial_theta=theta, use_filter=use_filter)


def run_cell(task: TaskSpec, world_config: WorldConfig,
             planner_config: PlannerConfig, trials: int, master_seed: int,
             cell_index: int = 0, use_filter: bool = True,
             n_jobs: int = 1) -> list[TrialRecord]:
    """All trials of one grid cell, deterministically seeded and ordered."""
    thetas = trial_orientations(trials)
    args = [
        (task, world_config, planner_config,
         _derived_seed(master_seed, cell_index, t), float(thetas[t]), use_filter)
        for t in range(trials)
    ]
    if n_jobs == 1:
        return [_run_cell_trial(a) for a in args]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_cell_trial, args))


def aggregate(records: list[TrialRecord]) -> dict:
    """Cell summary; recomputable from the raw records at any time."""
    n = len(records)
    succ = [r for r in records if r.success]
    stopped = [r for r in records if r.stopped_on_estimate]

    def mean_std(vals):
        if not vals:
            return float("nan"), float("nan")
        arr = np.asarray(vals, dtype=float)
        return float(arr.mean()), float(arr.std())

    steps_s = mean_std([r.steps_taken for r in succ])
    steps_a = mean_std([r.steps_taken for r in records])
    pos_err = mean_std([r.final_pos_err * 1000.0 for r in records])
    th_err = mean_std([math.degrees(r.final_theta_err) for r in records])
    com_err = mean_std([r.com_errors[-1] * 1000.0 for r in records if r.com_errors])
    return {
        "trials": n,
        "successes": len(succ),
        "success_rate": len(succ) / n if n else float("nan"),
        "stopped_on_estimate_rate": len(stopped) / n if n else float("nan"),
        "steps_mean_success": steps_s[0], "steps_std_success": steps_s[1],
        "steps_mean_all": steps_a[0], "steps_std_all": steps_a[1],
        "final_pos_err_mm_mean": pos_err[0], "final_pos_err_mm_std": pos_err[1],
        "final_theta_err_deg_mean": th_err[0], "final_theta_err_deg_std": th_err[1],
        "com_err_final_mm_mean": com_err[0],
    }


CSV_COLUMNS = [
    "task", "object", "sampler", "optimizer", "k", "seed", "use_filter",
    "tol_pos_m", "tol_theta_rad",
    "trials", "successes", "success_rate", "stopped_on_estimate_rate",
    "steps_mean_success", "steps_std_success", "steps_mean_all", "steps_std_all",
    "final_pos_err_mm_mean", "final_pos_err_mm_std",
    "final_theta_err_deg_mean", "final_theta_err_deg_std",
    "com_err_final_mm_mean",
]


def run_suite(tasks, objects, samplers, ks, optimizers=("rollout",),
              trials_per_cell: int = 60, master_seed: int = 0,
              goal_size: str = "small", use_filter: bool = True,
              com_mode: str = "centered",
              obs_noise_pos: float = 0.002,
              obs_noise_theta: float = math.radians(1.0),
              n_jobs: int = 1, keep_records: bool = False):
    """Run the full grid of cells and return one summary row per cell.

    Cells are ordered by the product (task, object, sampler, optimizer, k);
    each draws `trials_per_cell` trials over the orientation grid.  Returns
    (rows, records_by_cell) where records_by_cell is empty unless
    keep_records is set.
    """
    if isinstance(tasks, str):
        tasks = [tasks]
    rows = []
    records_by_cell = {}
    grid = list(product(tasks, objects, samplers, optimizers, ks))
    for cell_index, (task_kind, obj, sampler, optimizer, k) in enumerate(grid):
        task = make_task(task_kind, goal_size)
        world_cfg = WorldConfig(object_name=obj, com_mode=com_mode,
                                obs_noise_pos=obs_noise_pos,
                                obs_noise_theta=obs_noise_theta)
        planner_cfg = PlannerConfig(k=k, sampler=sampler, optimizer=optimizer)
        records = run_cell(task, world_cfg, planner_cfg, trials_per_cell,
                           master_seed, cell_index, use_filter, n_jobs)
        row = {
            "task": task_kind, "object": obj, "sampler": sampler,
            "optimizer": optimizer, "k": k, "seed": master_seed,
            "use_filter": int(use_filter),
            "tol_pos_m": task.tol_pos, "tol_theta_rad": task.tol_theta,
        }
        row.update(aggregate(records))
        rows.append(row)
        if keep_records:
            records_by_cell[(task_kind, obj, sampler, optimizer, k)] = records
    return rows, records_by_cell


def write_csv(rows: list[dict], path) -> None:
    """Write suite summary rows with the documented column set."""
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)
