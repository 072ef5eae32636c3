"""agentgauge: simplicity-weighted benchmarking of interactive agents.

The engine enumerates environments as self-delimiting programs on a small
reference machine, estimates each agent's expected total reward per
environment by seeded Monte Carlo rollout, and aggregates the values under a
2^-length prior into a single score with uncertainty.
"""

__version__ = "0.1.0"

from .interaction import (  # noqa: F401
    Action,
    History,
    Percept,
    SpaceConfig,
    append_action,
    append_percept,
    history_key,
)
from .machine import (  # noqa: F401
    EnvProcess,
    EnvProgram,
    MachineConfig,
    behavior_signature,
    decode_program,
    encode_program,
    enumerate_programs,
    kt_cost,
    prior_weight,
)
from .environments import (  # noqa: F401
    compile_fixture,
    make_constant_env,
    make_copy_env,
    make_pattern_env,
    ProgramEnvironment,
)
from .agents import (  # noqa: F401
    AgentFactory,
    basic_agent,
    kback_agent,
    make_agent,
    random_agent,
    scripted_agents,
)
from .valuation import (  # noqa: F401
    ValuationParams,
    ValueEstimate,
    discounted_value,
    gamma_norm,
    harmonic_value,
    per_cycle_reward_profile,
    summable_value,
)
from .measure import (  # noqa: F401
    Ensemble,
    EnsembleSpec,
    build_ensemble,
    compare_agents,
    estimate_intelligence,
    machine_sensitivity,
)
