from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):

    model_config = SettingsConfigDict(
        env_prefix="FINSLER_LAB_",
        env_file=".env",
        extra="ignore",
    )

    threads: int = 0

    seed: int = 0
    samples: int = 200_000
    mc_block_size: int = 16_384
    mc_wave_blocks: int = 8
    min_mc_samples: int = 1_000
    stall_trials: int = 1_000_000
    stall_acceptance: float = 1e-4

    exact_tol: float = 1e-9
    stat_sigmas: float = 3.0
    inclusion_tol: float = 1e-6
    bound_slack: float = 1e-6

    polytope_tol: float = 1e-8
    cutting_plane_tol: float = 1e-6
    newton_max_iter: int = 200
    max_cuts: int = 500
    multistart_per_dim: int = 8
    cut_seed_directions: int = 4096
    violation_samples: int = 2048
    max_new_cuts: int = 256
    fd_rel_step: float = 1e-6

    bisection_tol: float = 1e-12
    boundary_margin: float = 1e-9

    box_directions_per_dim: int = 64
    box_inflation: float = 0.1

    ratio_dirs_2d: int = 1024
    ratio_dirs_3d: int = 4096

    singular_rel_tol: float = 1e-12
    sqrt_clamp_rel: float = 1e-14
    aspect_ratio_flag: float = 1e3

    quadrature_order: int = 16
    quadrature_rel_tol: float = 1e-6
    quadrature_max_depth: int = 20

    counterexample_k_max: int = 3

    log_level: str = "INFO"
    output_dir: str = "reports"


settings = Settings()


def project_root() -> Path:
    return Path(__file__).resolve().parents[2]


def ensure_dirs() -> None:
    root = project_root()

    (root / settings.output_dir).mkdir(parents=True, exist_ok=True)
