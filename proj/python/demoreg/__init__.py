"""Demonstration-regularized RL and RLHF on tabular and linear MDPs."""

from ._demoreg import (
    ConfigError,
    DomainError,
    PipelineError,
    Policy,
    TabularMdp,
    bc_tabular_kl_bound,
    behavior_clone,
    chain,
    demonstration_regularized_rl,
    expert_policy,
    kl_trajectory,
    policy_evaluation,
    random_tabular,
    regularized_value_iteration,
    river_swim,
    run_sweep,
    scaling_summary,
    select_lambda,
    ucbvi_ent_plus,
    value_iteration,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "PipelineError",
    "Policy",
    "TabularMdp",
    "bc_tabular_kl_bound",
    "behavior_clone",
    "chain",
    "demonstration_regularized_rl",
    "expert_policy",
    "kl_trajectory",
    "policy_evaluation",
    "random_tabular",
    "regularized_value_iteration",
    "river_swim",
    "run_sweep",
    "scaling_summary",
    "select_lambda",
    "ucbvi_ent_plus",
    "value_iteration",
]
