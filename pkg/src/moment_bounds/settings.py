from __future__ import annotations
import json
import os
from pathlib import Path
from typing import Dict


SETTINGS_PATH: Path | None = None

# env var -> (settings key, parser)
ENV_OVERRIDES = {
    "MOMENT_TOL": ("tol", float),
    "MOMENT_RANK_TOL": ("rank_tol", float),
    "MOMENT_GRID_DIVISIONS": ("grid_divisions", int),
    "MOMENT_ENUM_CAP": ("enumeration_cap", int),
    "MOMENT_MAX_SWEEPS": ("max_sweeps", int),
    "MOMENT_DUAL_TOL": ("dual_tol", float),
    "MOMENT_FEAS_TOL": ("feas_tol", float),
}


def init_settings(path: Path) -> None:
    global SETTINGS_PATH
    SETTINGS_PATH = path
    path.parent.mkdir(parents=True, exist_ok=True)
    if not path.exists():
        save_settings(default_settings())


def default_settings() -> Dict:
    return {
        # Feasibility of LP rows and enumerated solutions
        "tol": 1e-9,
        # Singular values below rank_tol * largest count as zero
        "rank_tol": 1e-9,
        "grid_divisions": 2000,
        "enumeration_cap": 20,
        # Refinement
        "max_sweeps": 200,
        "sweep_gain": 1e-10,
        "scan_points": 64,
        "golden_iterations": 60,
        # Certificates
        "feas_tol": 1e-8,
        "dual_tol": 1e-7,
    }


def get_settings() -> Dict:
    base = default_settings()
    path = SETTINGS_PATH
    if path is None and os.getenv("MOMENT_SETTINGS"):
        path = Path(os.environ["MOMENT_SETTINGS"])
    if path is not None:
        try:
            data = json.loads(path.read_text())
            base.update(data or {})
        except Exception:
            pass
    for env_key, (key, parse) in ENV_OVERRIDES.items():
        raw = os.getenv(env_key, "").strip()
        if raw:
            try:
                base[key] = parse(raw)
            except ValueError:
                pass
    return base


def save_settings(data: Dict) -> None:
    assert SETTINGS_PATH is not None
    SETTINGS_PATH.write_text(json.dumps(data, indent=2))
