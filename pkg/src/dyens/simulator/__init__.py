"""Closed-loop cursor-task simulator with a synthetic brain."""

from dyens.simulator.brain import (
    SpeedBands,
    SyntheticBrain,
    brain_observe,
    generate_switching_dataset,
    make_truth_encoders,
    random_walk_intents,
)
from dyens.simulator.session import (
    DECODER_KINDS,
    BlockRecord,
    BlockSpec,
    CalibratedDecoder,
    FitOptions,
    SessionLog,
    SessionPlan,
    fit_decoder,
    run_session,
)
from dyens.simulator.task import (
    TaskConfig,
    TrialRecord,
    integrate_cursor,
    ortho_impedance,
    planner_velocity,
    radial8_targets,
    rtp_target,
    run_trial,
)

__all__ = [
    "SpeedBands",
    "SyntheticBrain",
    "brain_observe",
    "generate_switching_dataset",
    "make_truth_encoders",
    "random_walk_intents",
    "DECODER_KINDS",
    "BlockRecord",
    "BlockSpec",
    "CalibratedDecoder",
    "FitOptions",
    "SessionLog",
    "SessionPlan",
    "fit_decoder",
    "run_session",
    "TaskConfig",
    "TrialRecord",
    "integrate_cursor",
    "ortho_impedance",
    "planner_velocity",
    "radial8_targets",
    "rtp_target",
    "run_trial",
]
