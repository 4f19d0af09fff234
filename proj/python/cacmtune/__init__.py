"""CIM-CACm simulator, Wishart planted instances and hyperparameter tuning."""

from ._core import (
    CacmParams,
    EvalResult,
    IsingInstance,
    RunResult,
    Sampler,
    Study,
    GROUND_REL_TOL,
    __version__,
    beta_schedule,
    brute_force_ground,
    cacm_run,
    conventional,
    default_tunables,
    derive_seed,
    energy,
    evaluate,
    generate_wishart,
    grid_points,
    is_ground_hit,
    load_instance,
    load_study,
    make_sampler,
    make_solver_objective,
    method_a,
    method_b,
    save_instance,
    save_study,
    speedup,
    tts,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
