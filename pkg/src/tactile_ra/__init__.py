"""Joint radio + NFV resource allocation for low-latency tactile services."""

from .scenario import (ConfigError, NfSpec, Scenario, ScenarioConfig,
                       ServiceSpec, dbm_to_watts, default_config, generate,
                       load_config, save_config, save_scenario)
from .radio import (ConstraintReport, DlAllocation, UlAllocation,
                    check_radio_constraints, dl_interference, dl_rate,
                    paired_dl_rate, ul_interference, ul_rate)
from .qos import (DelayBudget, check_e2e, effective_bandwidth,
                  min_q_delay_for_rate, min_rate_for_queue,
                  queue_violation_prob, transmission_delay)
from .nfv import (NfvSchedule, build_schedule, end_time, exec_cost, makespan,
                  nf_processing_time, schedule_heuristic, transfer_time)
from .power import (PowerProblem, convex_subsolver, group_rates,
                    interference_log_gradient, interference_log_value,
                    sca_power_allocation)
from .solver import (Allocation, RunResult, SolverSettings, adjust_delays,
                     allocate_power_sca, allocate_subcarriers, solve_joint,
                     solve_separate, total_cost)
from .constraints import check_allocation
from .sweep import (OracleReport, ResultRow, SweepSpec, emit, parse_table,
                    parse_structured, run_oracle_comparison, run_point,
                    run_sweep)

__version__ = "0.1.0"

__all__ = [
    "Allocation", "ConfigError", "ConstraintReport", "DelayBudget",
    "DlAllocation", "NfSpec", "NfvSchedule", "OracleReport", "PowerProblem",
    "ResultRow", "RunResult", "Scenario", "ScenarioConfig", "ServiceSpec",
    "SolverSettings", "SweepSpec", "UlAllocation", "adjust_delays",
    "allocate_power_sca", "allocate_subcarriers", "build_schedule",
    "check_allocation", "check_e2e", "check_radio_constraints",
    "convex_subsolver", "dbm_to_watts", "default_config", "dl_interference",
    "dl_rate", "effective_bandwidth", "emit", "end_time", "exec_cost",
    "generate", "group_rates", "interference_log_gradient",
    "interference_log_value", "load_config", "makespan",
    "min_q_delay_for_rate", "min_rate_for_queue", "nf_processing_time",
    "paired_dl_rate", "parse_structured", "parse_table",
    "queue_violation_prob", "run_oracle_comparison", "run_point", "run_sweep",
    "save_config", "save_scenario", "sca_power_allocation",
    "schedule_heuristic", "solve_joint", "solve_separate", "total_cost",
    "transfer_time", "transmission_delay", "ul_interference", "ul_rate",
]
