"""Cooperative tabular Q-learning for downlink power allocation in dense femtocell networks."""

__version__ = "0.1.0"

from .channel import (
    GainMatrix,
    build_gain_matrix,
    capacity_bps_hz,
    dbm_to_mw,
    evaluate_capacities,
    fue_sinr,
    gain_from_pathloss_db,
    indoor_to_outdoor_pathloss_db,
    mue_sinr,
    mw_to_dbm,
    residential_pathloss_db,
)
from .config import (
    ConfigError,
    ScenarioConfig,
    build_topology,
    config_from_dict,
    config_hash,
    config_to_dict,
    load_config,
    save_config,
    with_pinned_layout,
)
from .coordinator import (
    Agent,
    ConstraintReport,
    ConvergenceCriterion,
    DensityStep,
    DensitySummary,
    IterationRecord,
    RunTrace,
    Simulation,
    check_constraints,
    detect_convergence,
    jain_index,
    share_active_rows,
)
from .learning import (
    ActionSet,
    LearningParams,
    QTable,
    epsilon_at,
    make_action_set,
    q_update,
    select_action,
)
from .oracle import EnumerationCapExceeded, OracleResult, exhaustive_search
from .reward import (
    QosThresholds,
    RewardInputs,
    available_rewards,
    proposed_reward,
    register_reward,
    resolve_reward,
)
from .topology import (
    AgentState,
    Position,
    RingRadii,
    Topology,
    agent_state,
    distance,
    generate_layout,
    proximity_ratio,
    ring_index,
)
