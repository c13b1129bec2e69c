"""docksim: software recreation of a robotics-based satellite docking
simulator at desk scale.

The package integrates the delayed nonlinear contact dynamics of a chaser
spacecraft probing a fixed target nozzle, linearizes the planar model about
the nominal contact state, analyzes the resulting delay system for stability
(critical delay / damping / stiffness envelopes) and evaluates restitution
and passivity cues against the analytical predictions.
"""

__version__ = "0.1.0"

from .core import (
    BodyParams,
    ChaserState2D,
    ChaserState3D,
    ContactParams,
    SimConfig,
    ValidationError,
    nominal_state_2d,
    validate,
)
from .contact import (
    Penetration,
    Wrench,
    contact_wrench_3d,
    effective_stiffness,
    hybrid_force,
    max_effective_stiffness,
    penetration_2d,
    penetration_3d,
    spring_dashpot_force,
    stiffness_tensor,
)
from .dynamics import (
    ContactEvent,
    DelayLine,
    DivergenceError,
    Trajectory,
    extract_events,
    integrate_dde,
    rhs_2d,
    rhs_3d,
    simulate,
    step,
)
from .linear import (
    LinearModel2D,
    characteristic_value,
    linearize_2d,
    penetration_dde_coeffs,
    reduced_mass,
)
from .stability import (
    FourthOrderVerdict,
    StabilityResult,
    analyze,
    approx_critical_delay,
    critical_damping,
    critical_delays,
    crossing_direction,
    crossing_frequency,
    stability_boundary,
    verdict_4th_order,
)
from .analysis import (
    EnergyRecord,
    PowerStreams,
    RestitutionResult,
    observed_energy,
    restitution,
)
