"""AoI / energy scheduling and twin migration for digital-twin edge networks."""

from .environment import Arena, ChannelSnapshot, DataRanges, generate_episode
from .matching import solve_assignment
from .model import Deployment, DeviceProfile, Profiles, SlotEnergy, SystemParams
from .schedulers import (
    OnlineState,
    SlotDecision,
    build_cyclic_policy,
    online_step,
    solve_p2_static,
    solve_p3_1,
    solve_p3_2,
)
from .simulator import Metrics, Policy, Trace, aggregate, run_episode, sweep

__version__ = "0.1.0"
