"""Planar pushing toolkit.

Quasi-static point-contact pushing on the ellipsoidal limit surface, dense
contact affordance maps over object contours, EKF estimation of latent object
properties, a greedy contact-sampling push planner, and a seeded benchmark
harness with random and geometric baselines.
"""

from .geometry import (Pose2, RayHit, ShapeContour, contact_query, load_shape,
                       make_polygon_contour, point_in_polygon, world_contour,
                       wrap_angle)
from .dynamics import (Contact, MotionPrediction, ObjectState, PushAction,
                       contact_at, contact_at_sample, motion_cone,
                       predict_one_step, push_substep, rollout, stick_twist)
from .sim import Observation, World, WorldConfig, goal_reached, spawn
from .estimation import (BeliefState, FilterConfig, init_belief, predict,
                         process_jacobian, update)
from .affordance import (AffordanceMap, RepresentativePushSet,
                         compute_affordances, goal_motion, score_field)
from .planner import (GoalSpec, PlannerConfig, optimize_push,
                      optimize_push_direct, plan_step,
                      sample_contacts_affordance, sample_contacts_geo,
                      sample_contacts_rdn)
from .bench import (TaskSpec, TrialRecord, aggregate, make_task, run_cell,
                    run_suite, run_trial, write_csv)

__version__ = "0.1.0"
